#pragma once

#include "imdp/cmp.hpp"

#include <optional>

namespace imdp {

/// Builds the joint tensor M[a](s,s') = pi(a|s) * p[a](s,s') from a
/// transition tensor and a policy.
ControlledMP build_cmp(const std::vector<Matrix>& p, const Policy& pi,
                       double tol = 1e-12);

/// Probability of a trace (a, s', a', s'', ...) starting in s0; the trace
/// alternates action and next state, flat-encoded. Empty trace -> 1.
double dynamics_prob(const ControlledMP& m, int s0,
                     const std::vector<int>& trace);

/// Distribution over the final state after executing `actions` from s0,
/// i.e. row s0 of M^a ... M^{a^{n-1}}, normalized. Throws ModelError when
/// the conditioning event has probability zero.
Vector action_conditional_forward(const ControlledMP& m, int s0,
                                  const ActionSeq& actions);

/// One-step inverse model B^a = M^a / M^+ elementwise, masked where
/// M^+ <= zero_threshold.
MaskedInverseModel one_step_inverse(const ControlledMP& m,
                                    double zero_threshold = 0.0);

/// Single slice of the order-n inverse model for one action sequence:
/// (M^a ... M^{a^{n-1}}) / (M^+)^n elementwise, with its mask.
struct MaskedMatrix {
    Matrix value;
    BoolMatrix defined;
};
MaskedMatrix multi_step_inverse(const ControlledMP& m, const ActionSeq& actions,
                                double zero_threshold = 0.0);

/// Full order-n sequence inverse model (k^n slices).
MaskedInverseModel sequence_inverse_model(const ControlledMP& m, int n,
                                          double zero_threshold = 0.0);

/// First-action inverse model at the given horizon:
/// B^{a+^{i-1}} = M^a (M^+)^{i-1} / (M^+)^i.
MaskedInverseModel first_action_inverse(const ControlledMP& m, int horizon,
                                        double zero_threshold = 0.0);

/// Product of one-step inverse entries along a state path; nullopt when
/// any factor is undefined.
std::optional<double> path_conditional_inverse(const ControlledMP& m,
                                               const std::vector<int>& states,
                                               const ActionSeq& actions);

enum class EqimMode { sequence, first_action };

struct EqimResult {
    enum class Status { holds, fails, mask_mismatch };
    Status status = Status::holds;
    // First violating index: slice (sequence or action index), s, s_end.
    int witness_slice = -1;
    int witness_s = -1;
    int witness_s_end = -1;
    double max_violation = 0.0;

    bool holds() const { return status == Status::holds; }
};

/// Compares the order-i inverse models of m and w entrywise on jointly
/// defined entries; value disagreement beyond tol wins over a mask
/// mismatch.
EqimResult verify_eqim(const ControlledMP& m, const ControlledMP& w, int i,
                       EqimMode mode, double tol = 1e-9);

struct CompactResidual {
    double equation = 0.0;  // max |A.(W W) - (B.W) W|
    double row_sum = 0.0;   // max |W_{s+} - 1|
    double max() const { return equation > row_sum ? equation : row_sum; }
};

/// Residuals of the compact 2-step consistency equation
/// A.(W W) = (B.W) W with stochastic W.
CompactResidual verify_compact(const Matrix& a_mat, const Matrix& b_mat,
                               const Matrix& w_mat);

/// True iff all pairwise elementwise products of distinct action matrices
/// vanish, i.e. the one-step inverse model is {0,1,undefined}-valued.
bool inverse_is_deterministic(const ControlledMP& m, double tol = 0.0);

}  // namespace imdp
