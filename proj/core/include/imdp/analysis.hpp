#pragma once

#include "imdp/cmp.hpp"
#include "imdp/model.hpp"
#include "imdp/solver_linear.hpp"

#include <cstdint>

namespace imdp {

/// Per-state basis of the homogeneous constraint sum_{s'} M[a](s,s') D(s,s') = 0,
/// restricted to columns with M+ > 0 (D pinned to 0 elsewhere).
struct DeltaFamily {
    int d = 0;
    std::vector<NullDirection> basis;
    std::vector<int> dims_per_state;

    int total_dim() const { return static_cast<int>(basis.size()); }
    Matrix member(const Vector& z) const;  // sum_r z_r * basis[r], as d x d
    Matrix basis_matrix(int r) const;
};

struct AnalysisOptions {
    double abs_threshold = 1e-13;
    double rank_rel_threshold = 1e-10;  // for A' and small SVD ranks
    double c_rel_threshold = 1e-7;      // Gram-based rank of the tangent matrix
};

DeltaFamily delta_family(const ControlledMP& m,
                         const AnalysisOptions& opts = {});

/// The stacked first-order system of the 2-step consistency equation around
/// M: k blocks A^a (d^2 x d^2 each) over the C^a constraint rows (k*d x d^2).
struct AprimeResult {
    std::vector<Matrix> a_blocks;  // k matrices, d^2 x d^2, rows (s,s''), cols (k,l)
    Matrix aprime;                 // (k*d^2 + k*d) x d^2
    int rank = 0;
    Vector spectrum;
};

AprimeResult build_Aprime(const ControlledMP& m,
                          const AnalysisOptions& opts = {});

/// True iff rank(A') = d^2: EqIM(1) and EqIM(2) pin W = M locally.
bool local_uniqueness(const ControlledMP& m, const AnalysisOptions& opts = {});

/// R^a(D) = (M^a.D)(M^+.D).(M^+)^2 - M^aM^+.(M^+.D)^2, stacked over a with
/// zero rows for the C^a constraints.
Vector rprime(const ControlledMP& m, const Matrix& delta);

/// Builds M[a] = L[a]*R globally normalized to a valid CMP (rank <= r kept).
ControlledMP lowrank_cmp(const std::vector<Matrix>& l_factors,
                         const Matrix& r_factor);

struct LowrankResult {
    enum class Status { not_applicable, converged, not_converged };
    Status status = Status::not_applicable;
    int aprime_rank = 0;
    Matrix delta;
    double residual = 0.0;  // |A' vec(D) - R'(D)|_inf at exit
    int iterations = 0;
    bool w_valid = false;   // W = M.(1+D) passes CMP invariants
    bool eqim3_fails = false;
    ControlledMP w;
};

/// Appendix-style counter-example search: seed epsilon * (null vector of A'),
/// iterate D <- D0 + pinv(A') R'(D).
LowrankResult lowrank_search(const ControlledMP& m, double epsilon,
                             int max_iters = 100,
                             const AnalysisOptions& opts = {});

struct DimReport {
    int d_j = 0, d_w = 0, d_b = 0;
    std::vector<int> d_js, d_ws;
    std::vector<Vector> j_spectra;  // per state, singular values of B^._{s.}
    Vector c_spectrum;              // singular values of the tangent matrix
    double threshold = 0.0;
};

/// d_J from per-state SVDs of B^._{s.}; d_W from the Lambda^{ar} = B^a . Gamma^r
/// ranks; d_B as the rank of the Appendix tangent matrix C^{aa'rt} around the
/// minimum-norm particular solution.
DimReport solution_dims(const MaskedInverseModel& b1, const Policy& pi,
                        const AnalysisOptions& opts = {});

/// PCA estimate of d_B from sampled order-2 inverse models W(z) at |z| ~ z_scale.
int sampling_dim_estimate(const MaskedInverseModel& b1, const Policy& pi,
                          int n_samples, double z_scale, std::uint64_t seed,
                          double pca_rel_threshold = 1e-3);

}  // namespace imdp
