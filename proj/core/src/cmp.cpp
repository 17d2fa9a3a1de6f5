#include "imdp/cmp.hpp"

namespace imdp {

void Policy::validate(double tol) const {
    if (table.rows() < 1 || table.cols() < 1)
        throw ModelError("policy: empty table");
    if ((table.array() < 0.0).any())
        throw ModelError("policy: negative entry");
    for (int s = 0; s < states(); ++s) {
        double sum = table.col(s).sum();
        if (std::abs(sum - 1.0) > tol)
            throw ModelError("policy: column " + std::to_string(s) +
                             " sums to " + std::to_string(sum));
    }
}

Matrix ControlledMP::forward_marginal() const {
    Matrix mp = Matrix::Zero(d, d);
    for (const Matrix& ma : M) mp += ma;
    return mp;
}

Policy ControlledMP::policy() const {
    Matrix table(k, d);
    for (int a = 0; a < k; ++a) table.row(a) = M[a].rowwise().sum().transpose();
    return Policy{std::move(table)};
}

void ControlledMP::validate(double tol) const {
    if (k < 1 || d < 1) throw ModelError("cmp: non-positive dimensions");
    if (static_cast<int>(M.size()) != k)
        throw ModelError("cmp: expected " + std::to_string(k) + " action slices");
    for (const Matrix& ma : M) {
        if (ma.rows() != d || ma.cols() != d)
            throw ModelError("cmp: slice shape mismatch");
        if ((ma.array() < -tol).any()) throw ModelError("cmp: negative entry");
    }
    for (int s = 0; s < d; ++s) {
        double total = 0.0;
        for (const Matrix& ma : M) total += ma.row(s).sum();
        if (std::abs(total - 1.0) > tol)
            throw ModelError("cmp: state " + std::to_string(s) +
                             " normalizes to " + std::to_string(total));
    }
}

void MaskedInverseModel::validate(double tol) const {
    if (k < 1 || d < 1 || order < 1) throw ModelError("inverse model: bad shape");
    for (const Matrix& v : values)
        if (v.rows() != d || v.cols() != d)
            throw ModelError("inverse model: slice shape mismatch");
    if (defined.rows() != d || defined.cols() != d)
        throw ModelError("inverse model: mask shape mismatch");
    for (int s = 0; s < d; ++s) {
        for (int t = 0; t < d; ++t) {
            double sum = 0.0;
            for (const Matrix& v : values) sum += v(s, t);
            if (defined(s, t)) {
                if (std::abs(sum - 1.0) > tol)
                    throw ModelError("inverse model: defined entry not normalized");
            } else if (sum != 0.0) {
                throw ModelError("inverse model: masked entry not zeroed");
            }
        }
    }
}

int seq_index(const ActionSeq& seq, int k) {
    int idx = 0;
    for (int a : seq) idx = idx * k + a;
    return idx;
}

ActionSeq seq_from_index(int index, int n, int k) {
    ActionSeq seq(n);
    for (int t = n - 1; t >= 0; --t) {
        seq[t] = index % k;
        index /= k;
    }
    return seq;
}

void check_actions(const ActionSeq& actions, int k) {
    for (int a : actions)
        if (a < 0 || a >= k) throw ModelError("action index out of range");
}

}  // namespace imdp
