#include "imdp/model.hpp"

#include <cmath>

namespace imdp {
namespace {

Matrix matrix_power(const Matrix& m, int n) {
    Matrix p = Matrix::Identity(m.rows(), m.cols());
    for (int t = 0; t < n; ++t) p = p * m;
    return p;
}

// Mask is exact: products and sums of nonnegative entries cannot cancel.
BoolMatrix mask_of(const Matrix& denom, double zero_threshold) {
    return denom.array() > zero_threshold;
}

Matrix masked_ratio(const Matrix& num, const Matrix& denom,
                    const BoolMatrix& defined) {
    Matrix out = Matrix::Zero(num.rows(), num.cols());
    for (int s = 0; s < num.rows(); ++s)
        for (int t = 0; t < num.cols(); ++t)
            if (defined(s, t)) out(s, t) = num(s, t) / denom(s, t);
    return out;
}

}  // namespace

ControlledMP build_cmp(const std::vector<Matrix>& p, const Policy& pi,
                       double tol) {
    pi.validate(tol);
    const int k = pi.actions();
    const int d = pi.states();
    if (static_cast<int>(p.size()) != k)
        throw ModelError("build_cmp: action count mismatch");
    for (const Matrix& pa : p) {
        if (pa.rows() != d || pa.cols() != d)
            throw ModelError("build_cmp: transition shape mismatch");
        if ((pa.array() < 0.0).any())
            throw ModelError("build_cmp: negative transition probability");
        for (int s = 0; s < d; ++s)
            if (std::abs(pa.row(s).sum() - 1.0) > tol)
                throw ModelError("build_cmp: transition row does not sum to 1");
    }
    ControlledMP m;
    m.k = k;
    m.d = d;
    m.M.reserve(k);
    for (int a = 0; a < k; ++a)
        m.M.push_back(pi.table.row(a).transpose().asDiagonal() * p[a]);
    m.validate(tol);
    return m;
}

double dynamics_prob(const ControlledMP& m, int s0,
                     const std::vector<int>& trace) {
    if (trace.size() % 2 != 0)
        throw ModelError("dynamics_prob: trace must alternate action,state");
    if (s0 < 0 || s0 >= m.d) throw ModelError("dynamics_prob: state out of range");
    double prob = 1.0;
    int s = s0;
    for (size_t t = 0; t < trace.size(); t += 2) {
        int a = trace[t];
        int next = trace[t + 1];
        if (a < 0 || a >= m.k || next < 0 || next >= m.d)
            throw ModelError("dynamics_prob: index out of range");
        prob *= m.M[a](s, next);
        s = next;
    }
    return prob;
}

Vector action_conditional_forward(const ControlledMP& m, int s0,
                                  const ActionSeq& actions) {
    if (actions.empty())
        throw ModelError("action_conditional_forward: empty action sequence");
    check_actions(actions, m.k);
    if (s0 < 0 || s0 >= m.d)
        throw ModelError("action_conditional_forward: state out of range");
    Eigen::RowVectorXd row = m.M[actions[0]].row(s0);
    for (size_t t = 1; t < actions.size(); ++t) row = row * m.M[actions[t]];
    double total = row.sum();
    if (total <= 0.0)
        throw ModelError("action_conditional_forward: conditioning event has "
                         "probability zero");
    return (row / total).transpose();
}

MaskedInverseModel one_step_inverse(const ControlledMP& m,
                                    double zero_threshold) {
    Matrix mp = m.forward_marginal();
    MaskedInverseModel b;
    b.k = m.k;
    b.d = m.d;
    b.order = 1;
    b.horizon = 1;
    b.first_action = false;
    b.defined = mask_of(mp, zero_threshold);
    b.values.reserve(m.k);
    for (int a = 0; a < m.k; ++a)
        b.values.push_back(masked_ratio(m.M[a], mp, b.defined));
    return b;
}

MaskedMatrix multi_step_inverse(const ControlledMP& m, const ActionSeq& actions,
                                double zero_threshold) {
    if (actions.empty())
        throw ModelError("multi_step_inverse: empty action sequence");
    check_actions(actions, m.k);
    Matrix num = m.M[actions[0]];
    for (size_t t = 1; t < actions.size(); ++t) num = num * m.M[actions[t]];
    Matrix denom = matrix_power(m.forward_marginal(),
                                static_cast<int>(actions.size()));
    BoolMatrix defined = mask_of(denom, zero_threshold);
    return MaskedMatrix{masked_ratio(num, denom, defined), defined};
}

MaskedInverseModel sequence_inverse_model(const ControlledMP& m, int n,
                                          double zero_threshold) {
    if (n < 1) throw ModelError("sequence_inverse_model: order must be >= 1");
    Matrix denom = matrix_power(m.forward_marginal(), n);
    MaskedInverseModel b;
    b.k = m.k;
    b.d = m.d;
    b.order = n;
    b.horizon = n;
    b.first_action = false;
    b.defined = mask_of(denom, zero_threshold);

    // Products for all k^n sequences, sharing length-(n-1) prefixes.
    std::vector<Matrix> products{Matrix::Identity(m.d, m.d)};
    for (int t = 0; t < n; ++t) {
        std::vector<Matrix> next;
        next.reserve(products.size() * m.k);
        for (const Matrix& p : products)
            for (int a = 0; a < m.k; ++a) next.push_back(p * m.M[a]);
        products = std::move(next);
    }
    b.values.reserve(products.size());
    for (const Matrix& p : products)
        b.values.push_back(masked_ratio(p, denom, b.defined));
    return b;
}

MaskedInverseModel first_action_inverse(const ControlledMP& m, int horizon,
                                        double zero_threshold) {
    if (horizon < 1) throw ModelError("first_action_inverse: horizon must be >= 1");
    Matrix mp = m.forward_marginal();
    Matrix tail = matrix_power(mp, horizon - 1);
    Matrix denom = tail * mp;
    MaskedInverseModel b;
    b.k = m.k;
    b.d = m.d;
    b.order = 1;
    b.horizon = horizon;
    b.first_action = true;
    b.defined = mask_of(denom, zero_threshold);
    b.values.reserve(m.k);
    for (int a = 0; a < m.k; ++a)
        b.values.push_back(masked_ratio(m.M[a] * tail, denom, b.defined));
    return b;
}

std::optional<double> path_conditional_inverse(const ControlledMP& m,
                                               const std::vector<int>& states,
                                               const ActionSeq& actions) {
    if (states.size() != actions.size() + 1)
        throw ModelError("path_conditional_inverse: need one more state than "
                         "actions");
    check_actions(actions, m.k);
    MaskedInverseModel b1 = one_step_inverse(m);
    double prob = 1.0;
    for (size_t t = 0; t < actions.size(); ++t) {
        int s = states[t];
        int next = states[t + 1];
        if (s < 0 || s >= m.d || next < 0 || next >= m.d)
            throw ModelError("path_conditional_inverse: state out of range");
        if (!b1.defined(s, next)) return std::nullopt;
        prob *= b1.values[actions[t]](s, next);
    }
    return prob;
}

EqimResult verify_eqim(const ControlledMP& m, const ControlledMP& w, int i,
                       EqimMode mode, double tol) {
    if (m.k != w.k || m.d != w.d)
        throw ModelError("verify_eqim: dimension mismatch");
    MaskedInverseModel bm, bw;
    if (mode == EqimMode::sequence) {
        bm = sequence_inverse_model(m, i);
        bw = sequence_inverse_model(w, i);
    } else {
        bm = first_action_inverse(m, i);
        bw = first_action_inverse(w, i);
    }
    EqimResult result;
    // A value disagreement on jointly defined entries dominates; a mask
    // mismatch is only reported when all comparable values agree.
    int mismatch_s = -1, mismatch_t = -1;
    for (int s = 0; s < m.d; ++s) {
        for (int t = 0; t < m.d; ++t) {
            if (bm.defined(s, t) != bw.defined(s, t)) {
                if (mismatch_s < 0) { mismatch_s = s; mismatch_t = t; }
                continue;
            }
            if (!bm.defined(s, t)) continue;
            for (int q = 0; q < bm.num_slices(); ++q) {
                double diff = std::abs(bm.values[q](s, t) - bw.values[q](s, t));
                if (diff > result.max_violation) result.max_violation = diff;
                if (diff > tol && result.status != EqimResult::Status::fails) {
                    // Witness is the first violating index in scan order.
                    result.status = EqimResult::Status::fails;
                    result.witness_slice = q;
                    result.witness_s = s;
                    result.witness_s_end = t;
                }
            }
        }
    }
    if (result.status != EqimResult::Status::fails && mismatch_s >= 0) {
        result.status = EqimResult::Status::mask_mismatch;
        result.witness_slice = -1;
        result.witness_s = mismatch_s;
        result.witness_s_end = mismatch_t;
    }
    return result;
}

CompactResidual verify_compact(const Matrix& a_mat, const Matrix& b_mat,
                               const Matrix& w_mat) {
    const auto n = w_mat.rows();
    if (a_mat.rows() != n || a_mat.cols() != w_mat.cols() ||
        b_mat.rows() != n || b_mat.cols() != w_mat.cols() ||
        w_mat.rows() != w_mat.cols())
        throw ModelError("verify_compact: dimension mismatch");
    Matrix lhs = a_mat.cwiseProduct(w_mat * w_mat);
    Matrix rhs = b_mat.cwiseProduct(w_mat) * w_mat;
    CompactResidual r;
    r.equation = (lhs - rhs).cwiseAbs().maxCoeff();
    r.row_sum = (w_mat.rowwise().sum().array() - 1.0).abs().maxCoeff();
    return r;
}

bool inverse_is_deterministic(const ControlledMP& m, double tol) {
    for (int a = 0; a < m.k; ++a)
        for (int b = a + 1; b < m.k; ++b)
            if ((m.M[a].cwiseProduct(m.M[b])).cwiseAbs().maxCoeff() > tol)
                return false;
    return true;
}

}  // namespace imdp
