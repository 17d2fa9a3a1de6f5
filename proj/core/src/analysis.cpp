#include "imdp/analysis.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <random>

namespace imdp {
namespace {

double cut_of(double abs_th, double rel_th, double smax) {
    return std::max(abs_th, rel_th * smax);
}

int rank_at(const Vector& sv, double cut) {
    int r = 0;
    while (r < sv.size() && sv(r) > cut) ++r;
    return r;
}

}  // namespace

Matrix DeltaFamily::member(const Vector& z) const {
    if (z.size() != total_dim())
        throw ModelError("delta member: coefficient length mismatch");
    Matrix delta = Matrix::Zero(d, d);
    for (int r = 0; r < total_dim(); ++r)
        delta.row(basis[r].state) += z(r) * basis[r].row.transpose();
    return delta;
}

Matrix DeltaFamily::basis_matrix(int r) const {
    Matrix delta = Matrix::Zero(d, d);
    delta.row(basis.at(r).state) = basis[r].row.transpose();
    return delta;
}

DeltaFamily delta_family(const ControlledMP& m, const AnalysisOptions& opts) {
    m.validate();
    DeltaFamily fam;
    fam.d = m.d;
    fam.dims_per_state.assign(m.d, 0);
    Matrix mp = m.forward_marginal();
    for (int s = 0; s < m.d; ++s) {
        std::vector<int> cols;
        for (int t = 0; t < m.d; ++t)
            if (mp(s, t) > 0.0) cols.push_back(t);
        if (cols.empty()) continue;
        Matrix sys(m.k, static_cast<int>(cols.size()));
        for (size_t c = 0; c < cols.size(); ++c)
            for (int a = 0; a < m.k; ++a) sys(a, c) = m.M[a](s, cols[c]);
        Eigen::JacobiSVD<Matrix> svd(sys, Eigen::ComputeFullV);
        const Vector& sv = svd.singularValues();
        const double cut =
            cut_of(opts.abs_threshold, opts.rank_rel_threshold,
                   sv.size() > 0 ? sv(0) : 0.0);
        int rank = rank_at(sv, cut);
        fam.dims_per_state[s] = static_cast<int>(cols.size()) - rank;
        for (int r = rank; r < static_cast<int>(cols.size()); ++r) {
            NullDirection dir;
            dir.state = s;
            dir.row = Vector::Zero(m.d);
            for (size_t c = 0; c < cols.size(); ++c)
                dir.row(cols[c]) = svd.matrixV()(c, r);
            fam.basis.push_back(std::move(dir));
        }
    }
    return fam;
}

AprimeResult build_Aprime(const ControlledMP& m, const AnalysisOptions& opts) {
    m.validate();
    const int d = m.d, k = m.k;
    Matrix mp = m.forward_marginal();
    Matrix p2 = mp * mp;

    AprimeResult res;
    res.a_blocks.reserve(k);
    for (int a = 0; a < k; ++a) {
        Matrix map = m.M[a] * mp;
        Matrix block = Matrix::Zero(d * d, d * d);
        for (int s = 0; s < d; ++s) {
            for (int s2 = 0; s2 < d; ++s2) {
                const int row = s * d + s2;
                // delta_{l s''} family: column (c, s'') for every c.
                for (int c = 0; c < d; ++c)
                    block(row, c * d + s2) +=
                        map(s, s2) * mp(s, c) * mp(c, s2) -
                        p2(s, s2) * m.M[a](s, c) * mp(c, s2);
                // delta_{s k} family: column (s, l) for every l.
                for (int l = 0; l < d; ++l)
                    block(row, s * d + l) +=
                        map(s, s2) * mp(s, l) * mp(l, s2) -
                        p2(s, s2) * m.M[a](s, l) * mp(l, s2);
            }
        }
        res.a_blocks.push_back(std::move(block));
    }

    res.aprime = Matrix::Zero(k * d * d + k * d, d * d);
    for (int a = 0; a < k; ++a)
        res.aprime.middleRows(a * d * d, d * d) = res.a_blocks[a];
    for (int a = 0; a < k; ++a)
        for (int s = 0; s < d; ++s)
            for (int l = 0; l < d; ++l)
                res.aprime(k * d * d + a * d + s, s * d + l) = m.M[a](s, l);

    // Equilibrate before the rank decision: the raw entries are products of
    // four model entries, and the resulting row/column imbalance pushes the
    // smallest structural singular values into the noise floor.
    Matrix eq = res.aprime;
    for (int i = 0; i < eq.rows(); ++i) {
        double n = eq.row(i).norm();
        if (n > 0.0) eq.row(i) /= n;
    }
    for (int j = 0; j < eq.cols(); ++j) {
        double n = eq.col(j).norm();
        if (n > 0.0) eq.col(j) /= n;
    }
    Eigen::BDCSVD<Matrix> svd(eq);
    res.spectrum = svd.singularValues();
    const double smax = res.spectrum.size() > 0 ? res.spectrum(0) : 0.0;
    res.rank = rank_at(res.spectrum,
                       cut_of(opts.abs_threshold, opts.rank_rel_threshold, smax));
    return res;
}

bool local_uniqueness(const ControlledMP& m, const AnalysisOptions& opts) {
    return build_Aprime(m, opts).rank == m.d * m.d;
}

Vector rprime(const ControlledMP& m, const Matrix& delta) {
    const int d = m.d, k = m.k;
    Matrix mp = m.forward_marginal();
    Matrix p2 = mp * mp;
    Matrix mpd = mp.cwiseProduct(delta);
    Matrix mpd2 = mpd * mpd;
    Vector out = Vector::Zero(k * d * d + k * d);
    for (int a = 0; a < k; ++a) {
        Matrix r = (m.M[a].cwiseProduct(delta) * mpd).cwiseProduct(p2) -
                   (m.M[a] * mp).cwiseProduct(mpd2);
        for (int s = 0; s < d; ++s)
            for (int s2 = 0; s2 < d; ++s2) out(a * d * d + s * d + s2) = r(s, s2);
    }
    return out;  // C-constraint rows stay zero
}

ControlledMP lowrank_cmp(const std::vector<Matrix>& l_factors,
                         const Matrix& r_factor) {
    if (l_factors.empty()) throw ModelError("lowrank_cmp: no factors");
    ControlledMP m;
    m.k = static_cast<int>(l_factors.size());
    m.d = static_cast<int>(l_factors[0].rows());
    for (const Matrix& l : l_factors) {
        if (l.rows() != m.d || l.cols() != r_factor.rows())
            throw ModelError("lowrank_cmp: factor shape mismatch");
        if ((l.array() < 0.0).any())
            throw ModelError("lowrank_cmp: negative factor entry");
    }
    if ((r_factor.array() < 0.0).any() || r_factor.cols() != m.d)
        throw ModelError("lowrank_cmp: bad right factor");
    m.M.reserve(m.k);
    for (const Matrix& l : l_factors) m.M.push_back(l * r_factor);
    // Per-state rescaling preserves the shared row space.
    for (int s = 0; s < m.d; ++s) {
        double total = 0.0;
        for (const Matrix& ma : m.M) total += ma.row(s).sum();
        if (total <= 0.0) throw ModelError("lowrank_cmp: empty state row");
        for (Matrix& ma : m.M) ma.row(s) /= total;
    }
    m.validate();
    return m;
}

LowrankResult lowrank_search(const ControlledMP& m, double epsilon,
                             int max_iters, const AnalysisOptions& opts) {
    const int d = m.d;
    LowrankResult res;
    AprimeResult ap = build_Aprime(m, opts);
    res.aprime_rank = ap.rank;
    if (ap.rank == d * d) {
        res.status = LowrankResult::Status::not_applicable;
        return res;
    }

    Eigen::BDCSVD<Matrix> svd(ap.aprime,
                              Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vector& sv = svd.singularValues();
    const double cut = cut_of(opts.abs_threshold, opts.rank_rel_threshold,
                              sv.size() > 0 ? sv(0) : 0.0);
    Vector null_dir = svd.matrixV().col(d * d - 1);

    auto pinv_apply = [&](const Vector& y) {
        Vector x = Vector::Zero(d * d);
        Vector c = svd.matrixU().transpose() * y;
        for (int i = 0; i < sv.size(); ++i)
            if (sv(i) > cut) x += (c(i) / sv(i)) * svd.matrixV().col(i);
        return x;
    };
    auto unvec = [&](const Vector& v) {
        Matrix delta(d, d);
        for (int r = 0; r < d; ++r) delta.row(r) = v.segment(r * d, d).transpose();
        return delta;
    };
    auto vec = [&](const Matrix& delta) {
        Vector v(d * d);
        for (int r = 0; r < d; ++r) v.segment(r * d, d) = delta.row(r).transpose();
        return v;
    };

    Vector delta0 = epsilon * null_dir;
    Vector x = delta0;
    double residual = 0.0;
    int it = 0;
    for (; it < max_iters; ++it) {
        Vector rp = rprime(m, unvec(x));
        residual = (ap.aprime * x - rp).cwiseAbs().maxCoeff();
        if (residual <= 1e-12) break;
        x = delta0 + pinv_apply(rp);
    }
    res.iterations = it;
    res.status = residual <= 1e-12 ? LowrankResult::Status::converged
                                   : LowrankResult::Status::not_converged;
    res.delta = unvec(x);
    res.residual = residual;

    ControlledMP w;
    w.k = m.k;
    w.d = d;
    for (int a = 0; a < m.k; ++a)
        w.M.push_back(m.M[a].cwiseProduct(Matrix::Ones(d, d) + res.delta));
    try {
        w.validate(1e-6);
        res.w_valid = true;
        res.w = w;
        res.eqim3_fails = !verify_eqim(m, w, 3, EqimMode::sequence).holds();
    } catch (const ModelError&) {
        res.w_valid = false;
    }
    return res;
}

DimReport solution_dims(const MaskedInverseModel& b1, const Policy& pi,
                        const AnalysisOptions& opts) {
    LinearSolverOptions lopts;
    lopts.abs_threshold = opts.abs_threshold;
    SolutionSet sol = infer_forward(b1, pi, lopts);
    if (sol.status == SolutionSet::Status::inconsistent)
        throw ModelError("solution_dims: no particular solution exists");
    const int d = b1.d, k = b1.k;

    DimReport rep;
    rep.threshold = opts.abs_threshold;
    rep.d_js = sol.dims_per_state;
    rep.d_j = sol.total_dim();

    // Audit spectra of B^._{s.} on defined columns.
    for (int s = 0; s < d; ++s) {
        std::vector<int> cols;
        for (int t = 0; t < d; ++t)
            if (b1.defined(s, t)) cols.push_back(t);
        Matrix sys(k, static_cast<int>(cols.size()));
        for (size_t c = 0; c < cols.size(); ++c)
            for (int a = 0; a < k; ++a) sys(a, c) = b1.values[a](s, cols[c]);
        rep.j_spectra.push_back(
            cols.empty() ? Vector() : Eigen::JacobiSVD<Matrix>(sys).singularValues());
    }

    // Group the null directions by owning state (they are emitted in state
    // order by infer_forward).
    std::vector<std::vector<int>> by_state(d);
    for (int r = 0; r < sol.total_dim(); ++r)
        by_state[sol.nullspace[r].state].push_back(r);

    rep.d_ws.assign(d, 0);
    for (int s = 0; s < d; ++s) {
        const auto& idx = by_state[s];
        if (idx.empty()) continue;
        Matrix lam(k * d, static_cast<int>(idx.size()));
        for (size_t c = 0; c < idx.size(); ++c)
            for (int a = 0; a < k; ++a)
                for (int t = 0; t < d; ++t)
                    lam(a * d + t, c) =
                        b1.values[a](s, t) * sol.nullspace[idx[c]].row(t);
        Eigen::JacobiSVD<Matrix> svd(lam);
        const Vector& sv = svd.singularValues();
        const double cut = cut_of(opts.abs_threshold, opts.rank_rel_threshold,
                                  sv.size() > 0 ? sv(0) : 0.0);
        rep.d_ws[s] = rank_at(sv, cut);
        rep.d_w += rep.d_ws[s];
    }

    if (rep.d_j == 0) return rep;  // unique: (0, 0, 0)

    // Tangent matrix of the order-2 inverse variety around M = B . J,
    // accumulated as a Gram matrix block-by-block over the (a, a') pairs.
    const std::vector<Matrix>& mm = sol.particular_w;
    Matrix mp = Matrix::Zero(d, d);
    for (const Matrix& ma : mm) mp += ma;
    Matrix p2 = mp * mp;

    const int dj = rep.d_j;
    // Per null direction: gamma row, per-action lambda rows, and the
    // products lambda^a M^{a'}, gamma^T M^+.
    std::vector<int> owner(dj);
    std::vector<Eigen::RowVectorXd> gamma(dj), gmp(dj);
    std::vector<std::vector<Eigen::RowVectorXd>> lam_rows(dj);
    for (int r = 0; r < dj; ++r) {
        owner[r] = sol.nullspace[r].state;
        gamma[r] = sol.nullspace[r].row.transpose();
        gmp[r] = gamma[r] * mp;
        lam_rows[r].resize(k);
        for (int a = 0; a < k; ++a)
            lam_rows[r][a] =
                b1.values[a].row(owner[r]).cwiseProduct(gamma[r]);
    }

    Matrix gram = Matrix::Zero(dj, dj);
    Matrix block(d * d, dj);
    for (int a = 0; a < k; ++a) {
        for (int a2 = 0; a2 < k; ++a2) {
            Matrix prod = mm[a] * mm[a2];
            std::vector<Eigen::RowVectorXd> lam_m(dj);
            for (int r = 0; r < dj; ++r) lam_m[r] = lam_rows[r][a] * mm[a2];
            block.setZero();
            for (int r = 0; r < dj; ++r) {
                const int t = owner[r];
                for (int s = 0; s < d; ++s) {
                    for (int s2 = 0; s2 < d; ++s2) {
                        double v = mm[a](s, t) * lam_rows[r][a2](s2) * p2(s, s2) -
                                   prod(s, s2) * mp(s, t) * gamma[r](s2);
                        if (s == t)
                            v += lam_m[r](s2) * p2(s, s2) -
                                 prod(s, s2) * gmp[r](s2);
                        block(s * d + s2, r) = v;
                    }
                }
            }
            gram.noalias() += block.transpose() * block;
        }
    }

    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
    Vector sigma(dj);
    for (int i = 0; i < dj; ++i)
        sigma(i) = std::sqrt(std::max(0.0, eig.eigenvalues()(dj - 1 - i)));
    rep.c_spectrum = sigma;
    const double cut =
        cut_of(opts.abs_threshold, opts.c_rel_threshold, sigma(0));
    rep.d_b = rank_at(sigma, cut);
    return rep;
}

int sampling_dim_estimate(const MaskedInverseModel& b1, const Policy& pi,
                          int n_samples, double z_scale, std::uint64_t seed,
                          double pca_rel_threshold) {
    SolutionSet sol = infer_forward(b1, pi);
    if (sol.status == SolutionSet::Status::inconsistent)
        throw ModelError("sampling_dim_estimate: inconsistent inverse model");
    const int dj = sol.total_dim();
    if (dj == 0) return 0;
    if (n_samples < dj + 2) n_samples = dj + 2;

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(-z_scale, z_scale);

    Matrix samples;
    for (int n = 0; n < n_samples; ++n) {
        Vector z(dj);
        for (int r = 0; r < dj; ++r) z(r) = unif(rng);
        ControlledMP w;
        w.k = b1.k;
        w.d = b1.d;
        w.M = sol.w_at(z);
        for (Matrix& wa : w.M) wa = wa.cwiseMax(0.0);
        MaskedInverseModel b2 = sequence_inverse_model(w, 2);
        std::vector<double> flat;
        for (const Matrix& v : b2.values)
            for (int s = 0; s < b2.d; ++s)
                for (int t = 0; t < b2.d; ++t)
                    if (b2.defined(s, t)) flat.push_back(v(s, t));
        if (samples.size() == 0)
            samples.resize(n_samples, static_cast<int>(flat.size()));
        for (size_t c = 0; c < flat.size(); ++c) samples(n, c) = flat[c];
    }
    Eigen::RowVectorXd mean = samples.colwise().mean();
    samples.rowwise() -= mean;
    Eigen::BDCSVD<Matrix> svd(samples);
    const Vector& sv = svd.singularValues();
    if (sv.size() == 0 || sv(0) <= 0.0) return 0;
    return rank_at(sv, pca_rel_threshold * sv(0));
}

}  // namespace imdp
