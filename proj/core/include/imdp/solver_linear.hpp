#pragma once

#include "imdp/cmp.hpp"
#include "imdp/model.hpp"

#include <cstdint>

namespace imdp {

/// One null-space direction of the per-state policy constraints: a d-vector
/// attached to a single state s. Assembled as a d x d matrix it is zero
/// outside row s.
struct NullDirection {
    int state = -1;
    Vector row;  // length d, zero on masked columns
};

/// The affine family of forward models consistent with a 1-step inverse
/// model and a policy: W(z) = B . (J + sum_r Gamma^r z_r).
struct SolutionSet {
    enum class Status { unique, affine, inconsistent };
    Status status = Status::inconsistent;
    MaskedInverseModel b;              // the inverse model that was solved
    Matrix j;                          // particular J (min-norm least squares)
    std::vector<Matrix> particular_w;  // W[a] = B[a] . J
    std::vector<NullDirection> nullspace;
    std::vector<int> dims_per_state;   // d_{Js}
    double residual = 0.0;             // max |[B^a . J]_{s+} - pi(a|s)|

    int total_dim() const;
    Matrix gamma_matrix(int r) const;  // Gamma^r as a d x d matrix

    /// W(z) for a coefficient vector z of length total_dim().
    std::vector<Matrix> w_at(const Vector& z) const;
};

struct LinearSolverOptions {
    /// Singular values below max(abs_threshold, rel_threshold * sigma_max)
    /// count as zero. rel_threshold <= 0 uses max(d,k)*eps.
    double abs_threshold = 1e-13;
    double rel_threshold = 0.0;
    double residual_threshold = 1e-8;
    /// Replace masked entries by a random normalized vector instead of the
    /// zero-out-then-restore treatment (cross-validation variant).
    bool random_fill_masked = false;
    std::uint64_t seed = 0;
};

/// Per-state least-squares solve of [B^a . J]_{s+} = pi(a|s); masked
/// columns are forced to J = 0.
SolutionSet infer_forward(const MaskedInverseModel& b1, const Policy& pi,
                          const LinearSolverOptions& opts = {});

struct UniquenessReport {
    std::vector<int> ranks;  // per-state rank of B^._{s.} on defined columns
    bool unique = false;     // every rank equals the defined-column count
};

UniquenessReport uniqueness_check(const MaskedInverseModel& b1,
                                  const LinearSolverOptions& opts = {});

/// Order-2 inverse model of the particular solution,
/// B^{aa'} = W^a W^{a'} / (W^+)^2. Throws on inconsistent input.
MaskedInverseModel two_step_from_solution(const SolutionSet& sol);

}  // namespace imdp
