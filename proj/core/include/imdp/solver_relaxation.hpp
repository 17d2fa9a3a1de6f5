#pragma once

#include "imdp/cmp.hpp"
#include "imdp/model.hpp"

#include <cstdint>
#include <set>
#include <string>

namespace imdp {

/// Inputs of the order-i relaxation: the 1-step, (i-1)-step and i-step
/// inverse models of the same process, plus the policy.
struct RelaxationInputs {
    MaskedInverseModel b1;      // order 1
    MaskedInverseModel b_prev;  // order i-1, sequence-indexed
    MaskedInverseModel b_cur;   // order i, sequence-indexed
    Policy pi;
    int i = 2;

    void validate() const;
};

/// Coefficient slice for one (s, s_j): rows are the k^i action sequences,
/// columns the intermediate state s_i. Entries with any undefined factor
/// are stored as 0 and excluded via the definedness markers.
struct ASlice {
    Matrix a;                       // k^i x d
    bool defined = false;           // b_cur defined at (s, s_j)
    std::vector<char> col_defined;  // per s_i
};

struct RelaxationTensor {
    int k = 0, d = 0, i = 2;
    std::vector<ASlice> slices;  // index s * d + s_j

    const ASlice& at(int s, int s_j) const { return slices[s * d + s_j]; }
};

/// A^{a^{:i}}_{s,s_i,s_j} = B^{a^{:i}}(s,s_j) - B^{a^{<i}}(s,s_i) B^{a^i}(s_i,s_j).
RelaxationTensor build_A(const RelaxationInputs& inputs);

enum class RelaxationStates { one, all, random_projections };

struct RelaxationOptions {
    RelaxationStates states_to_use = RelaxationStates::all;
    /// A null vector of an A-slice is accepted when sigma_min <= this factor
    /// times sigma_max; set to 1 for noisy inputs (always take the
    /// least-squares direction, never declare the slice full-rank).
    double null_accept_rel = 1e-6;
    double nonunique_rel = 1e-8;   // second singular value vs largest
    double cross_check_tol = 1e-6; // relative, V vs (W+)^{i-1}
    double k_residual_tol = 1e-6;  // feasibility of the K-system
    int num_random_states = 8;     // for random_projections
    std::uint64_t seed = 0;
};

struct RelaxationVerdict {
    bool has_w = false;
    ControlledMP w;
    std::set<std::string> flags;  // "inconsistent", "may_not_be_unique"

    struct Diagnostics {
        bool k_power_insufficient = false;  // k^i < d
        std::vector<int> a_slice_ranks;     // index s*d+s_j; -1 = skipped
        std::vector<int> c_ranks;           // per processed source state
        std::vector<double> null_residuals; // per source: max |A Uhat|
        std::vector<double> k_residuals;    // per source
        double cross_check_error = 0.0;     // V vs (W+)^{i-1}
        double cross_source_spread = 0.0;   // disagreement between sources
    } diagnostics;

    bool inconsistent() const { return flags.count("inconsistent") > 0; }
    bool may_not_be_unique() const {
        return flags.count("may_not_be_unique") > 0;
    }
};

RelaxationVerdict solve_relaxation(const RelaxationInputs& inputs,
                                   const RelaxationOptions& opts = {});

enum class ConsistencyVerdict { consistent_so_far, inconsistent };

/// Semi-decision of "do these inverse models come from some M":
/// inconsistent is definitive, consistent_so_far is not.
ConsistencyVerdict consistency_semidecide(const RelaxationInputs& inputs,
                                          const RelaxationOptions& opts = {});

}  // namespace imdp
