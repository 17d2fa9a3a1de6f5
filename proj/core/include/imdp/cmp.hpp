#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace imdp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using BoolMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Sequence of action indices in {0..k-1}, earliest action first.
using ActionSeq = std::vector<int>;

class ModelError : public std::runtime_error {
  public: using std::runtime_error::runtime_error;
};

/// Policy table pi(a|s), stored as a k x d matrix (rows = actions).
struct Policy {
    Matrix table;

    int actions() const { return static_cast<int>(table.rows()); }
    int states() const { return static_cast<int>(table.cols()); }

    /// Throws ModelError unless each column is a distribution over actions.
    void validate(double tol = 1e-12) const;

    static Policy uniform(int k, int d) {
        return Policy{Matrix::Constant(k, d, 1.0 / k)};
    }
};

/// Controlled Markov process stored as the joint tensor
/// M[a](s,s') = pi(a|s) * p(s'|s,a).
///
/// The defining invariant is full normalization: sum_{a,s'} M[a](s,s') = 1
/// for every s. The policy and the action-marginal transition matrix are
/// derived quantities.
struct ControlledMP {
    int k = 0;
    int d = 0;
    std::vector<Matrix> M;  // k matrices, each d x d

    /// M^+ = sum_a M[a]; rows sum to 1.
    Matrix forward_marginal() const;

    /// pi(a|s) = sum_{s'} M[a](s,s').
    Policy policy() const;

    /// Throws ModelError on shape mismatch, negative entries, or
    /// normalization violation beyond tol.
    void validate(double tol = 1e-12) const;
};

/// Inverse-model values plus a definedness mask for the 0/0 entries.
///
/// Sequence models (first_action == false) hold k^order slices, one per
/// action sequence, indexed by seq_index(). First-action models hold k
/// slices and record the horizon they were computed at. The mask is shared
/// across slices: where an entry is undefined, it is undefined for every
/// action simultaneously.
struct MaskedInverseModel {
    int k = 0;
    int d = 0;
    int order = 1;          // number of conditioned actions
    int horizon = 1;        // steps between s and s_end
    bool first_action = false;
    std::vector<Matrix> values;  // masked entries stored as 0
    BoolMatrix defined;          // d x d, indexed (s, s_end)

    int num_slices() const { return static_cast<int>(values.size()); }
    void validate(double tol = 1e-10) const;
};

/// Base-k index of an action sequence, first action most significant.
int seq_index(const ActionSeq& seq, int k);

/// Inverse of seq_index for a sequence of length n.
ActionSeq seq_from_index(int index, int n, int k);

void check_actions(const ActionSeq& actions, int k);

}  // namespace imdp
