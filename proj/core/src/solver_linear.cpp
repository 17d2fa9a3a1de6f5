#include "imdp/solver_linear.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <limits>
#include <random>

namespace imdp {
namespace {

double sigma_cut(const Eigen::JacobiSVD<Matrix>& svd,
                 const LinearSolverOptions& opts) {
    double rel = opts.rel_threshold;
    if (rel <= 0.0)
        rel = std::max(svd.rows(), svd.cols()) *
              std::numeric_limits<double>::epsilon();
    double smax =
        svd.singularValues().size() > 0 ? svd.singularValues()(0) : 0.0;
    return std::max(opts.abs_threshold, rel * smax);
}

// The k x d_s system for one state, restricted to defined columns
// (zero-out-then-restore), or with masked columns filled in by a random
// distribution over actions when requested.
Matrix state_system(const MaskedInverseModel& b1, int s,
                    const std::vector<int>& cols,
                    const LinearSolverOptions& opts, std::mt19937_64& rng) {
    Matrix sys(b1.k, static_cast<int>(cols.size()));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (size_t c = 0; c < cols.size(); ++c) {
        int t = cols[c];
        if (b1.defined(s, t)) {
            for (int a = 0; a < b1.k; ++a) sys(a, c) = b1.values[a](s, t);
        } else {
            Vector fill(b1.k);
            for (int a = 0; a < b1.k; ++a) fill(a) = unif(rng);
            fill /= fill.sum();
            sys.col(c) = fill;
        }
    }
    return sys;
}

}  // namespace

int SolutionSet::total_dim() const { return static_cast<int>(nullspace.size()); }

Matrix SolutionSet::gamma_matrix(int r) const {
    const auto& dir = nullspace.at(r);
    Matrix g = Matrix::Zero(j.rows(), j.cols());
    g.row(dir.state) = dir.row.transpose();
    return g;
}

std::vector<Matrix> SolutionSet::w_at(const Vector& z) const {
    if (z.size() != total_dim())
        throw ModelError("w_at: coefficient vector has wrong length");
    Matrix jz = j;
    for (int r = 0; r < total_dim(); ++r)
        jz.row(nullspace[r].state) += z(r) * nullspace[r].row.transpose();
    std::vector<Matrix> w;
    w.reserve(b.values.size());
    for (const Matrix& ba : b.values) w.push_back(ba.cwiseProduct(jz));
    return w;
}

SolutionSet infer_forward(const MaskedInverseModel& b1, const Policy& pi,
                          const LinearSolverOptions& opts) {
    if (b1.order != 1 || b1.first_action)
        throw ModelError("infer_forward: expected a 1-step inverse model");
    if (pi.actions() != b1.k || pi.states() != b1.d)
        throw ModelError("infer_forward: policy shape mismatch");
    const int d = b1.d;
    std::mt19937_64 rng(opts.seed);

    SolutionSet sol;
    sol.b = b1;
    sol.j = Matrix::Zero(d, d);
    sol.dims_per_state.assign(d, 0);
    sol.residual = 0.0;

    for (int s = 0; s < d; ++s) {
        std::vector<int> cols;
        for (int t = 0; t < d; ++t)
            if (opts.random_fill_masked || b1.defined(s, t)) cols.push_back(t);
        if (cols.empty()) continue;  // isolated state: J row stays zero

        Matrix sys = state_system(b1, s, cols, opts, rng);
        Vector rhs = pi.table.col(s);
        Eigen::JacobiSVD<Matrix> svd(
            sys, Eigen::ComputeFullU | Eigen::ComputeFullV);
        const double cut = sigma_cut(svd, opts);
        const int nsv = static_cast<int>(svd.singularValues().size());
        int rank = 0;
        while (rank < nsv && svd.singularValues()(rank) > cut) ++rank;

        // Min-norm least squares on the restricted columns.
        Vector coeff = svd.matrixU().transpose() * rhs;
        Vector x = Vector::Zero(cols.size());
        for (int i = 0; i < rank; ++i)
            x += (coeff(i) / svd.singularValues()(i)) * svd.matrixV().col(i);
        for (size_t c = 0; c < cols.size(); ++c) sol.j(s, cols[c]) = x(c);

        double res = (sys * x - rhs).cwiseAbs().maxCoeff();
        if (res > sol.residual) sol.residual = res;

        sol.dims_per_state[s] = static_cast<int>(cols.size()) - rank;
        for (int r = rank; r < static_cast<int>(cols.size()); ++r) {
            NullDirection dir;
            dir.state = s;
            dir.row = Vector::Zero(d);
            for (size_t c = 0; c < cols.size(); ++c)
                dir.row(cols[c]) = svd.matrixV()(c, r);
            sol.nullspace.push_back(std::move(dir));
        }
    }

    sol.particular_w.reserve(b1.k);
    for (int a = 0; a < b1.k; ++a)
        sol.particular_w.push_back(b1.values[a].cwiseProduct(sol.j));

    if (sol.residual > opts.residual_threshold)
        sol.status = SolutionSet::Status::inconsistent;
    else if (sol.nullspace.empty())
        sol.status = SolutionSet::Status::unique;
    else
        sol.status = SolutionSet::Status::affine;
    return sol;
}

UniquenessReport uniqueness_check(const MaskedInverseModel& b1,
                                  const LinearSolverOptions& opts) {
    if (b1.order != 1 || b1.first_action)
        throw ModelError("uniqueness_check: expected a 1-step inverse model");
    UniquenessReport report;
    report.unique = true;
    std::mt19937_64 rng(opts.seed);
    for (int s = 0; s < b1.d; ++s) {
        std::vector<int> cols;
        for (int t = 0; t < b1.d; ++t)
            if (b1.defined(s, t)) cols.push_back(t);
        if (cols.empty()) {
            report.ranks.push_back(0);
            continue;
        }
        Matrix sys = state_system(b1, s, cols, opts, rng);
        Eigen::JacobiSVD<Matrix> svd(sys);
        const double cut = sigma_cut(svd, opts);
        int rank = 0;
        for (int i = 0; i < svd.singularValues().size(); ++i)
            if (svd.singularValues()(i) > cut) ++rank;
        report.ranks.push_back(rank);
        if (rank < static_cast<int>(cols.size())) report.unique = false;
    }
    return report;
}

MaskedInverseModel two_step_from_solution(const SolutionSet& sol) {
    if (sol.status == SolutionSet::Status::inconsistent)
        throw ModelError("two_step_from_solution: solution is inconsistent");
    ControlledMP m;
    m.k = sol.b.k;
    m.d = sol.b.d;
    m.M.reserve(m.k);
    for (const Matrix& wa : sol.particular_w)
        m.M.push_back(wa.cwiseMax(0.0));  // clamp least-squares round-off
    return sequence_inverse_model(m, 2);
}

}  // namespace imdp
