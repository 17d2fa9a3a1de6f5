#include "imdp/solver_relaxation.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace imdp {
namespace {

constexpr double kZeroSum = 1e-12;

int ipow(int base, int exp) {
    int r = 1;
    for (int t = 0; t < exp; ++t) r *= base;
    return r;
}

struct SourceResult {
    bool processed = false;
    bool empty = false;        // Uhat vanished entirely: inconsistency witness
    bool k_infeasible = false;
    Matrix uhat;               // d x d, (s_i, s_j)
    Vector k_scale;            // d, per s_j
    Vector v;                  // d, per s_i
    Matrix wplus_rows;         // d x d row estimates, valid where weight > 0
    Vector weight;             // d, per s_i
};

}  // namespace

void RelaxationInputs::validate() const {
    if (i < 2) throw ModelError("relaxation: horizon must be >= 2");
    b1.validate();
    b_prev.validate();
    b_cur.validate();
    pi.validate(1e-8);
    const int k = b1.k, d = b1.d;
    if (b1.order != 1 || b1.first_action)
        throw ModelError("relaxation: b1 must be a 1-step model");
    if (b_prev.k != k || b_prev.d != d || b_prev.order != i - 1 ||
        b_prev.first_action)
        throw ModelError("relaxation: b_prev must be the order i-1 sequence model");
    if (b_cur.k != k || b_cur.d != d || b_cur.order != i || b_cur.first_action)
        throw ModelError("relaxation: b_cur must be the order i sequence model");
    if (pi.actions() != k || pi.states() != d)
        throw ModelError("relaxation: policy shape mismatch");
}

RelaxationTensor build_A(const RelaxationInputs& inputs) {
    inputs.validate();
    const int k = inputs.b1.k, d = inputs.b1.d, i = inputs.i;
    const int nseq = ipow(k, i);
    RelaxationTensor t;
    t.k = k;
    t.d = d;
    t.i = i;
    t.slices.resize(d * d);
    for (int s = 0; s < d; ++s) {
        for (int sj = 0; sj < d; ++sj) {
            ASlice& slice = t.slices[s * d + sj];
            slice.defined = inputs.b_cur.defined(s, sj);
            slice.a = Matrix::Zero(nseq, d);
            slice.col_defined.assign(d, 0);
            if (!slice.defined) continue;
            for (int si = 0; si < d; ++si)
                slice.col_defined[si] =
                    inputs.b_prev.defined(s, si) && inputs.b1.defined(si, sj);
            for (int q = 0; q < nseq; ++q) {
                const int prefix = q / k;
                const int last = q % k;
                for (int si = 0; si < d; ++si) {
                    if (!slice.col_defined[si]) continue;
                    slice.a(q, si) =
                        inputs.b_cur.values[q](s, sj) -
                        inputs.b_prev.values[prefix](s, si) *
                            inputs.b1.values[last](si, sj);
                }
            }
        }
    }
    return t;
}

namespace {

// Null-space step for one source state: per (s, s_j), the accepted null
// vector of the A-slice, rescaled to unit column sum.
void solve_uhat(const RelaxationTensor& t, int s, const RelaxationOptions& opts,
                SourceResult& out, RelaxationVerdict::Diagnostics& diag,
                bool& nonunique) {
    const int d = t.d;
    out.uhat = Matrix::Zero(d, d);
    double max_residual = 0.0;
    for (int sj = 0; sj < d; ++sj) {
        const ASlice& slice = t.at(s, sj);
        if (!slice.defined) continue;
        std::vector<int> cols;
        for (int si = 0; si < d; ++si)
            if (slice.col_defined[si]) cols.push_back(si);
        if (cols.empty()) continue;

        Matrix sub(slice.a.rows(), static_cast<int>(cols.size()));
        for (size_t c = 0; c < cols.size(); ++c) sub.col(c) = slice.a.col(cols[c]);
        Eigen::JacobiSVD<Matrix> svd(sub, Eigen::ComputeFullV);
        const Vector& sv = svd.singularValues();
        const int nsv = static_cast<int>(sv.size());
        const int ncols = static_cast<int>(cols.size());
        const double smax = nsv > 0 ? sv(0) : 0.0;

        const double rank_cut = std::max(1e-13, opts.nonunique_rel * smax);
        int rank = 0;
        while (rank < nsv && sv(rank) > rank_cut) ++rank;
        diag.a_slice_ranks[s * d + sj] = rank;
        // Ambiguous only if the restricted null space has dimension >= 2;
        // a single-column zero slice is pinned by the normalization alone.
        if (ncols - rank >= 2) nonunique = true;

        // Accept the last right singular vector as a null direction only if
        // its singular value is (relatively) negligible; otherwise the slice
        // has full column rank and U = 0 is the only solution.
        bool has_null = ncols > nsv || smax <= 1e-300 ||
                        sv(nsv - 1) <= opts.null_accept_rel * smax;
        if (!has_null) continue;

        Vector u = svd.matrixV().col(ncols - 1);
        int arg = 0;
        u.cwiseAbs().maxCoeff(&arg);
        if (u(arg) < 0.0) u = -u;
        double sum = u.sum();
        if (std::abs(sum) < kZeroSum) continue;  // zero-solution branch
        u /= sum;
        max_residual = std::max(max_residual, (sub * u).cwiseAbs().maxCoeff());
        for (size_t c = 0; c < cols.size(); ++c) out.uhat(cols[c], sj) = u(c);
    }
    diag.null_residuals.push_back(max_residual);
    out.empty = out.uhat.cwiseAbs().sum() < kZeroSum;
}

// Lifted-constraint solve: sum_{s_j} C^a_{s s_i s_j} K_{s_j} = 0, K_{s+} = 1.
void solve_k(const MaskedInverseModel& b1, const Policy& pi, int s,
             const RelaxationOptions& opts, SourceResult& out,
             RelaxationVerdict::Diagnostics& diag, bool& nonunique) {
    const int k = b1.k, d = b1.d;
    // K entries multiplying an all-zero Uhat column are irrelevant: pin them
    // to 0 and solve (and judge uniqueness) on the active columns only.
    std::vector<int> active;
    for (int sj = 0; sj < d; ++sj)
        if (out.uhat.col(sj).cwiseAbs().sum() > 0.0) active.push_back(sj);
    const int na = static_cast<int>(active.size());

    Matrix sys = Matrix::Zero(k * d + 1, na);
    Vector rhs = Vector::Zero(k * d + 1);
    for (int a = 0; a < k; ++a)
        for (int si = 0; si < d; ++si)
            for (int c = 0; c < na; ++c)
                sys(a * d + si, c) = (b1.values[a](si, active[c]) -
                                      pi.table(a, si)) *
                                     out.uhat(si, active[c]);
    sys.row(k * d).setOnes();
    rhs(k * d) = 1.0;

    Eigen::JacobiSVD<Matrix> svd(sys, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& sv = svd.singularValues();
    const double smax = sv.size() > 0 ? sv(0) : 0.0;
    const double cut = std::max(1e-13, 1e-10 * smax);
    int rank = 0;
    while (rank < sv.size() && sv(rank) > cut) ++rank;
    diag.c_ranks.push_back(rank);
    if (rank < na &&
        (rank < sv.size() ? sv(rank) : 0.0) <= opts.nonunique_rel * smax)
        nonunique = true;

    Vector coeff = svd.matrixU().transpose() * rhs;
    Vector x = Vector::Zero(na);
    for (int r = 0; r < rank; ++r)
        x += (coeff(r) / sv(r)) * svd.matrixV().col(r);
    out.k_scale = Vector::Zero(d);
    for (int c = 0; c < na; ++c) out.k_scale(active[c]) = x(c);
    double residual = (sys * x - rhs).cwiseAbs().maxCoeff();
    diag.k_residuals.push_back(residual);
    if (residual > opts.k_residual_tol) out.k_infeasible = true;
}

}  // namespace

RelaxationVerdict solve_relaxation(const RelaxationInputs& inputs,
                                   const RelaxationOptions& opts) {
    inputs.validate();
    const int k = inputs.b1.k, d = inputs.b1.d, i = inputs.i;
    RelaxationTensor t = build_A(inputs);

    RelaxationVerdict verdict;
    verdict.diagnostics.k_power_insufficient = ipow(k, i) < d;
    verdict.diagnostics.a_slice_ranks.assign(d * d, -1);

    std::vector<int> sources;
    switch (opts.states_to_use) {
        case RelaxationStates::one:
            sources.push_back(0);
            break;
        case RelaxationStates::all:
            sources.resize(d);
            std::iota(sources.begin(), sources.end(), 0);
            break;
        case RelaxationStates::random_projections: {
            sources.resize(d);
            std::iota(sources.begin(), sources.end(), 0);
            std::mt19937_64 rng(opts.seed);
            std::shuffle(sources.begin(), sources.end(), rng);
            sources.resize(std::min<int>(d, std::max(1, opts.num_random_states)));
            std::sort(sources.begin(), sources.end());
            break;
        }
    }

    bool nonunique = false;
    bool inconsistent = false;
    std::vector<SourceResult> results(sources.size());
    for (size_t n = 0; n < sources.size(); ++n) {
        const int s = sources[n];
        SourceResult& r = results[n];
        r.processed = true;
        solve_uhat(t, s, opts, r, verdict.diagnostics, nonunique);
        if (r.empty) {
            inconsistent = true;  // Uhat_{s++} = 0: no M explains the slices
            continue;
        }
        solve_k(inputs.b1, inputs.pi, s, opts, r, verdict.diagnostics, nonunique);
        if (r.k_infeasible) {
            inconsistent = true;
            continue;
        }
        Matrix tilde = (r.uhat.array().rowwise() *
                        r.k_scale.transpose().array()).matrix();
        double total = tilde.sum();
        if (total < kZeroSum) {
            inconsistent = true;
            continue;
        }
        Matrix u = tilde / total;
        r.v = u.rowwise().sum();
        r.wplus_rows = Matrix::Zero(d, d);
        r.weight = Vector::Zero(d);
        for (int si = 0; si < d; ++si) {
            if (r.v(si) < kZeroSum) continue;
            r.wplus_rows.row(si) = u.row(si) / r.v(si);
            r.weight(si) = r.v(si);
        }
    }

    if (inconsistent) {
        verdict.flags.insert("inconsistent");
        if (nonunique) verdict.flags.insert("may_not_be_unique");
        return verdict;
    }

    // Weighted average of per-source W+ row estimates.
    Matrix wplus = Matrix::Zero(d, d);
    Vector total_weight = Vector::Zero(d);
    for (const SourceResult& r : results) {
        if (!r.processed || r.weight.size() == 0) continue;
        for (int si = 0; si < d; ++si) {
            wplus.row(si) += r.weight(si) * r.wplus_rows.row(si);
            total_weight(si) += r.weight(si);
        }
    }
    for (int si = 0; si < d; ++si) {
        if (total_weight(si) > kZeroSum) {
            wplus.row(si) /= total_weight(si);
        } else {
            // No source reaches s_i in i-1 steps: fall back to uniform over
            // the columns where B1 is defined, and report the ambiguity.
            nonunique = true;
            int cnt = 0;
            for (int sj = 0; sj < d; ++sj)
                if (inputs.b1.defined(si, sj)) ++cnt;
            if (cnt > 0)
                for (int sj = 0; sj < d; ++sj)
                    if (inputs.b1.defined(si, sj)) wplus(si, sj) = 1.0 / cnt;
        }
    }

    // Disagreement between sources on rows both estimated.
    double spread = 0.0;
    for (const SourceResult& r : results) {
        if (!r.processed || r.weight.size() == 0) continue;
        for (int si = 0; si < d; ++si)
            if (r.weight(si) > kZeroSum)
                spread = std::max(
                    spread,
                    (r.wplus_rows.row(si) - wplus.row(si)).cwiseAbs().maxCoeff());
    }
    verdict.diagnostics.cross_source_spread = spread;
    if (spread > opts.cross_check_tol) nonunique = true;

    // Clamp and renormalize over defined columns, then W[a] = B1[a] . W+.
    for (int si = 0; si < d; ++si) {
        double sum = 0.0;
        for (int sj = 0; sj < d; ++sj) {
            if (!inputs.b1.defined(si, sj) || wplus(si, sj) < 0.0)
                wplus(si, sj) = 0.0;
            sum += wplus(si, sj);
        }
        if (sum < kZeroSum) {
            verdict.flags.insert("inconsistent");
            if (nonunique) verdict.flags.insert("may_not_be_unique");
            return verdict;
        }
        wplus.row(si) /= sum;
    }

    // Cross-check V against (W+)^{i-1}.
    Matrix wp_pow = Matrix::Identity(d, d);
    for (int t2 = 0; t2 < i - 1; ++t2) wp_pow = wp_pow * wplus;
    double cross = 0.0;
    for (size_t n = 0; n < sources.size(); ++n) {
        const SourceResult& r = results[n];
        if (!r.processed || r.v.size() == 0) continue;
        cross = std::max(
            cross, (r.v.transpose() - wp_pow.row(sources[n])).cwiseAbs().maxCoeff());
    }
    verdict.diagnostics.cross_check_error = cross;
    if (cross > opts.cross_check_tol) nonunique = true;

    ControlledMP w;
    w.k = k;
    w.d = d;
    w.M.reserve(k);
    for (int a = 0; a < k; ++a)
        w.M.push_back(inputs.b1.values[a].cwiseProduct(wplus));
    try {
        w.validate(1e-8);
    } catch (const ModelError&) {
        verdict.flags.insert("inconsistent");
        if (nonunique) verdict.flags.insert("may_not_be_unique");
        return verdict;
    }
    verdict.w = std::move(w);
    verdict.has_w = true;
    if (nonunique) verdict.flags.insert("may_not_be_unique");
    return verdict;
}

ConsistencyVerdict consistency_semidecide(const RelaxationInputs& inputs,
                                          const RelaxationOptions& opts) {
    RelaxationVerdict v = solve_relaxation(inputs, opts);
    return v.inconsistent() ? ConsistencyVerdict::inconsistent
                            : ConsistencyVerdict::consistent_so_far;
}

}  // namespace imdp
