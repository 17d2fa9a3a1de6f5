#pragma once

#include "imdp/cmp.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>

namespace imdp {

struct Literal {
    int var = 0;       // 1-based
    bool negated = false;
};

/// 1-in-3 SAT formula: each clause requires exactly one true literal.
struct Cnf1in3 {
    int n = 0;  // variable count
    std::vector<std::array<Literal, 3>> clauses;

    int m() const { return static_cast<int>(clauses.size()); }
    /// Throws ModelError on out-of-range variables.
    void validate() const;
    /// Throws when a clause contains the same literal twice: such clauses
    /// have no 0/1 row encoding (brute_force still handles them).
    void check_encodable() const;

    /// DIMACS-like format: header "p 1in3 n m", one clause per line as three
    /// signed integers (optional trailing 0), "c" comment lines.
    static Cnf1in3 parse(const std::string& text);
    std::string to_text() const;
};

/// The quadratic-matrix-problem encoding of a formula:
/// A.(W W) = (C.W)(C.W), [B.W]_{s+} = 1, Pi W = W.
struct SatEncoding {
    int d = 0;
    int n = 0;
    int dummies = 0;  // k+1 = max{1, m-n+2}
    Matrix a, b, c, pi;
    std::vector<std::string> column_roles;  // "x1", "!x1", ..., "y0", ...
};

/// Builds (A,B,C,Pi) per the row recipe. Throws ModelError when n > m+1:
/// there d = 2n+1 exceeds the constraint-row count n+m+2 and B acquires
/// all-zero rows, making [B.W]_{s+}=1 unsatisfiable regardless of the
/// formula. Use pad_clauses first for such formulas.
SatEncoding encode(const Cnf1in3& cnf);

/// Repeats the first clause until m >= n-1; preserves satisfiability.
Cnf1in3 pad_clauses(const Cnf1in3& cnf);

Matrix assignment_to_W(const SatEncoding& enc,
                       const std::vector<bool>& assignment);

struct SatVerifyResult {
    bool ok = false;
    double quad_residual = 0.0;  // |A.(WW) - (C.W)(C.W)|_inf
    double row_residual = 0.0;   // max_s |[B.W]_{s+} - 1|
    double perm_residual = 0.0;  // |Pi W - W|_inf
    int worst_row = -1;          // argmax of the B-constraint violation
};

/// Checks the three equation families to tolerance; O(d^3).
SatVerifyResult verify(const SatEncoding& enc, const Matrix& w,
                       double tol = 1e-9);

/// Exact integer-arithmetic verification for 0/1-valued W.
bool verify_boolean_exact(const SatEncoding& enc, const Matrix& w);

struct SatDecodeResult {
    bool boolean = false;        // all entries within 1e-6 of {0,1}
    bool verified = false;       // rounded W re-passes the exact check
    std::vector<bool> assignment;
};

SatDecodeResult decode_if_boolean(const SatEncoding& enc, const Matrix& w,
                                  double round_tol = 1e-6);

/// Exhaustive 2^n search; n <= 24.
std::optional<std::vector<bool>> brute_force(const Cnf1in3& cnf);

}  // namespace imdp
