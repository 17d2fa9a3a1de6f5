#include "imdp/sat_reduction.hpp"

#include <cmath>
#include <cstdlib>
#include <sstream>

namespace imdp {

void Cnf1in3::validate() const {
    if (n < 1 || clauses.empty())
        throw ModelError("cnf: need at least one variable and one clause");
    for (const auto& cl : clauses)
        for (const Literal& l : cl)
            if (l.var < 1 || l.var > n)
                throw ModelError("cnf: variable index out of range");
}

void Cnf1in3::check_encodable() const {
    for (const auto& cl : clauses)
        for (int a = 0; a < 3; ++a)
            for (int b = a + 1; b < 3; ++b)
                if (cl[a].var == cl[b].var && cl[a].negated == cl[b].negated)
                    throw ModelError(
                        "cnf: clause repeats a literal (no 0/1 encoding)");
}

Cnf1in3 Cnf1in3::parse(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    Cnf1in3 cnf;
    bool have_header = false;
    int expect_m = -1;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string tok;
        if (!(ls >> tok)) continue;
        if (tok == "c") continue;
        if (tok == "p") {
            std::string kind;
            if (!(ls >> kind >> cnf.n >> expect_m) || kind != "1in3")
                throw ModelError("cnf parse: bad header, want 'p 1in3 n m'");
            have_header = true;
            continue;
        }
        if (!have_header) throw ModelError("cnf parse: clause before header");
        std::array<Literal, 3> cl;
        int v = std::atoi(tok.c_str());
        for (int i = 0;; ++i) {
            if (v == 0) throw ModelError("cnf parse: zero literal in clause");
            if (i >= 3) throw ModelError("cnf parse: more than 3 literals");
            cl[i] = Literal{std::abs(v), v < 0};
            if (!(ls >> v)) {
                if (i != 2) throw ModelError("cnf parse: clause needs 3 literals");
                break;
            }
            if (i == 2) {
                if (v != 0 || (ls >> v))
                    throw ModelError("cnf parse: trailing tokens after clause");
                break;
            }
        }
        cnf.clauses.push_back(cl);
    }
    if (!have_header) throw ModelError("cnf parse: missing header");
    if (expect_m != cnf.m())
        throw ModelError("cnf parse: clause count differs from header");
    cnf.validate();
    cnf.check_encodable();
    return cnf;
}

std::string Cnf1in3::to_text() const {
    std::ostringstream out;
    out << "p 1in3 " << n << ' ' << m() << '\n';
    for (const auto& cl : clauses) {
        for (const Literal& l : cl) out << (l.negated ? -l.var : l.var) << ' ';
        out << "0\n";
    }
    return out.str();
}

Cnf1in3 pad_clauses(const Cnf1in3& cnf) {
    cnf.validate();
    Cnf1in3 out = cnf;
    while (out.m() < out.n - 1) out.clauses.push_back(out.clauses.front());
    return out;
}

SatEncoding encode(const Cnf1in3& cnf) {
    cnf.validate();
    cnf.check_encodable();
    const int n = cnf.n, m = cnf.m();
    if (n > m + 1)
        throw ModelError(
            "encode: d = 2n+1 exceeds the n+m+2 constraint rows, leaving "
            "all-zero B rows; pad the formula to m >= n-1 first");
    SatEncoding enc;
    enc.n = n;
    enc.d = std::max(m + n + 2, 2 * n + 1);
    enc.dummies = std::max(1, m - n + 2);
    const int d = enc.d;

    enc.a = Matrix::Identity(d, d) / static_cast<double>(n + 1);
    enc.c = Matrix::Identity(d, d);
    enc.pi = Matrix::Zero(d, d);
    for (int s = 0; s < d; ++s) enc.pi(s, (s + 1) % d) = 1.0;

    enc.b = Matrix::Zero(d, d);
    for (int s = 1; s <= n; ++s) {
        enc.b(s - 1, 2 * s - 2) = 1.0;  // x_s
        enc.b(s - 1, 2 * s - 1) = 1.0;  // !x_s
    }
    for (int i = 1; i <= m; ++i)
        for (const Literal& l : cnf.clauses[i - 1])
            enc.b(i + n - 1, 2 * l.var - 2 + (l.negated ? 1 : 0)) = 1.0;
    for (int col = 2 * n; col < d; ++col) enc.b(d - 2, col) = 1.0;  // sum y = 1
    enc.b(d - 1, 2 * n) = 1.0;                                      // y_0 = 1

    for (int j = 1; j <= n; ++j) {
        enc.column_roles.push_back("x" + std::to_string(j));
        enc.column_roles.push_back("!x" + std::to_string(j));
    }
    for (int j = 0; j < enc.dummies; ++j)
        enc.column_roles.push_back("y" + std::to_string(j));
    return enc;
}

Matrix assignment_to_W(const SatEncoding& enc,
                       const std::vector<bool>& assignment) {
    if (static_cast<int>(assignment.size()) != enc.n)
        throw ModelError("assignment_to_W: length mismatch");
    Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(enc.d);
    for (int j = 0; j < enc.n; ++j) {
        row(2 * j) = assignment[j] ? 1.0 : 0.0;
        row(2 * j + 1) = assignment[j] ? 0.0 : 1.0;
    }
    row(2 * enc.n) = 1.0;  // y_0
    Matrix w = row.replicate(enc.d, 1);
    return w;
}

SatVerifyResult verify(const SatEncoding& enc, const Matrix& w, double tol) {
    if (w.rows() != enc.d || w.cols() != enc.d)
        throw ModelError("verify: dimension mismatch");
    SatVerifyResult res;
    Matrix ww = w * w;                       // O(d^3)
    Matrix cw = enc.c.cwiseProduct(w);
    Matrix rhs = cw * cw;                    // O(d^3)
    res.quad_residual =
        (enc.a.cwiseProduct(ww) - rhs).cwiseAbs().maxCoeff();
    Vector rowsum = enc.b.cwiseProduct(w).rowwise().sum();
    (rowsum.array() - 1.0).abs().maxCoeff(&res.worst_row);
    res.row_residual = std::abs(rowsum(res.worst_row) - 1.0);
    res.perm_residual = (enc.pi * w - w).cwiseAbs().maxCoeff();
    res.ok = res.quad_residual <= tol && res.row_residual <= tol &&
             res.perm_residual <= tol;
    return res;
}

bool verify_boolean_exact(const SatEncoding& enc, const Matrix& w) {
    const int d = enc.d;
    Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic> wi(d, d);
    for (int s = 0; s < d; ++s)
        for (int t = 0; t < d; ++t) {
            double v = w(s, t);
            if (v != 0.0 && v != 1.0) return false;
            wi(s, t) = static_cast<long long>(v);
        }
    const long long np1 = enc.n + 1;
    // A = Id/(n+1), C = Id: off-diagonals vanish on both sides, so the
    // quadratic family reduces to (WW)_{ss} = (n+1) W_{ss}^2.
    auto wwi = (wi * wi).eval();
    for (int s = 0; s < d; ++s) {
        if (wwi(s, s) != np1 * wi(s, s) * wi(s, s)) return false;
        long long sum = 0;
        for (int t = 0; t < d; ++t)
            if (enc.b(s, t) != 0.0) sum += wi(s, t);
        if (sum != 1) return false;
        if (wi.row(s) != wi.row((s + 1) % d)) return false;  // Pi W = W
    }
    return true;
}

SatDecodeResult decode_if_boolean(const SatEncoding& enc, const Matrix& w,
                                  double round_tol) {
    SatDecodeResult res;
    Matrix rounded(enc.d, enc.d);
    for (int s = 0; s < enc.d; ++s)
        for (int t = 0; t < enc.d; ++t) {
            double v = w(s, t);
            if (std::abs(v) <= round_tol) rounded(s, t) = 0.0;
            else if (std::abs(v - 1.0) <= round_tol) rounded(s, t) = 1.0;
            else return res;  // non-boolean: reported, not decoded
        }
    res.boolean = true;
    res.verified = verify_boolean_exact(enc, rounded);
    if (res.verified)
        for (int j = 0; j < enc.n; ++j)
            res.assignment.push_back(rounded(0, 2 * j) == 1.0);
    return res;
}

std::optional<std::vector<bool>> brute_force(const Cnf1in3& cnf) {
    cnf.validate();
    if (cnf.n > 24) throw ModelError("brute_force: n > 24");
    for (std::uint32_t mask = 0; mask < (1u << cnf.n); ++mask) {
        bool ok = true;
        for (const auto& cl : cnf.clauses) {
            int truths = 0;
            for (const Literal& l : cl) {
                bool val = (mask >> (l.var - 1)) & 1u;
                truths += (val != l.negated) ? 1 : 0;
            }
            if (truths != 1) { ok = false; break; }
        }
        if (ok) {
            std::vector<bool> assignment(cnf.n);
            for (int j = 0; j < cnf.n; ++j) assignment[j] = (mask >> j) & 1u;
            return assignment;
        }
    }
    return std::nullopt;
}

}  // namespace imdp
