#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "imdp/generators.hpp"
#include "imdp/model.hpp"
#include "oracles.hpp"

using namespace imdp;

namespace {

// The two-state counter-example pair: identical one-step inverse models up to
// a single 0/0 entry, different dynamics.
ControlledMP example_m() {
    ControlledMP m;
    m.k = 2;
    m.d = 2;
    m.M = {Matrix(2, 2), Matrix(2, 2)};
    m.M[0] << 0.0, 0.5, 0.25, 0.25;
    m.M[1] << 0.5, 0.0, 0.25, 0.25;
    return m;
}

ControlledMP example_w() {
    ControlledMP w;
    w.k = 2;
    w.d = 2;
    w.M = {Matrix(2, 2), Matrix(2, 2)};
    w.M[0] << 0.0, 0.5, 0.5, 0.0;
    w.M[1] << 0.5, 0.0, 0.5, 0.0;
    return w;
}

ControlledMP mix_uniform(const ControlledMP& m, double lambda) {
    ControlledMP out = m;
    const double u = lambda / (m.k * m.d);
    for (int a = 0; a < m.k; ++a)
        out.M[a] = (1.0 - lambda) * m.M[a] + Matrix::Constant(m.d, m.d, u);
    out.validate();
    return out;
}

}  // namespace

TEST_CASE("seq_index roundtrip, first action most significant") {
    CHECK(seq_index({1, 0, 2}, 3) == 1 * 9 + 0 * 3 + 2);
    for (int idx = 0; idx < 27; ++idx)
        CHECK(seq_index(seq_from_index(idx, 3, 3), 3) == idx);
    CHECK_THROWS_AS(check_actions({3}, 3), ModelError);
}

TEST_CASE("build_cmp joint tensor and derived quantities") {
    // hand-checkable 2x2 instance
    std::vector<Matrix> p(2, Matrix(2, 2));
    p[0] << 1.0, 0.0, 0.5, 0.5;
    p[1] << 0.25, 0.75, 0.0, 1.0;
    Policy pi{Matrix(2, 2)};
    pi.table << 0.5, 0.25, 0.5, 0.75;
    ControlledMP m = build_cmp(p, pi);
    CHECK(m.M[0](0, 0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(m.M[1](1, 1) == doctest::Approx(0.75).epsilon(1e-14));
    CHECK(m.policy().table.isApprox(pi.table, 1e-12));

    Matrix mp = m.forward_marginal();
    for (int s = 0; s < 2; ++s)
        CHECK(mp.row(s).sum() == doctest::Approx(1.0).epsilon(1e-12));

    // invalid policy rejected
    Policy bad{Matrix::Constant(2, 2, 0.6)};
    CHECK_THROWS_AS(build_cmp(p, bad), ModelError);
}

TEST_CASE("validate rejects broken tensors") {
    ControlledMP m = example_m();
    CHECK_NOTHROW(m.validate());
    m.M[0](0, 1) = -0.5;
    CHECK_THROWS_AS(m.validate(), ModelError);
    m = example_m();
    m.M[1](1, 1) += 0.01;  // breaks full normalization
    CHECK_THROWS_AS(m.validate(), ModelError);
}

TEST_CASE("forward marginal row sums on random models") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        ControlledMP m = random_cmp(4, 3, seed);
        Matrix mp = m.forward_marginal();
        for (int s = 0; s < m.d; ++s)
            CHECK(std::abs(mp.row(s).sum() - 1.0) <= 1e-12);
        Matrix col_sums = m.policy().table.colwise().sum();
        for (int s = 0; s < m.d; ++s)
            CHECK(col_sums(0, s) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("dynamics_prob matches step-by-step product") {
    ControlledMP m = random_cmp(3, 2, 7);
    std::vector<int> trace = {1, 2, 0, 0, 1, 2};  // a,s',a,s'',a,s'''
    double prod = m.M[1](0, 2) * m.M[0](2, 0) * m.M[1](0, 2);
    CHECK(dynamics_prob(m, 0, trace) == doctest::Approx(prod).epsilon(1e-13));
    CHECK(dynamics_prob(m, 0, {}) == 1.0);
}

TEST_CASE("action_conditional_forward equals path enumeration") {
    ControlledMP m = random_cmp(4, 2, 11);
    ActionSeq seq = {1, 0, 1};
    for (int s = 0; s < m.d; ++s) {
        Vector dist = action_conditional_forward(m, s, seq);
        double norm = 0.0;
        for (int t = 0; t < m.d; ++t)
            norm += testutil::seq_end_prob(m, s, seq, t);
        for (int t = 0; t < m.d; ++t)
            CHECK(dist(t) == doctest::Approx(
                                 testutil::seq_end_prob(m, s, seq, t) / norm)
                                 .epsilon(1e-12));
    }
}

TEST_CASE("one_step_inverse on the two-state example") {
    MaskedInverseModel b = one_step_inverse(example_m());
    CHECK(b.defined.all());
    Matrix b0(2, 2), b1(2, 2);
    b0 << 0.0, 1.0, 0.5, 0.5;
    b1 << 1.0, 0.0, 0.5, 0.5;
    CHECK(testutil::max_abs_diff(b.values[0], b0) <= 1e-14);
    CHECK(testutil::max_abs_diff(b.values[1], b1) <= 1e-14);

    MaskedInverseModel bw = one_step_inverse(example_w());
    CHECK_FALSE(bw.defined(1, 1));
    CHECK(bw.values[0](1, 1) == 0.0);  // masked entries stored as 0
    CHECK_NOTHROW(bw.validate());
}

TEST_CASE("inverse models sum to 1 over actions on defined entries") {
    ControlledMP m = gridworld(fourrooms24());
    for (int n : {1, 2}) {
        MaskedInverseModel b = sequence_inverse_model(m, n);
        Matrix total = Matrix::Zero(m.d, m.d);
        for (const Matrix& slice : b.values) total += slice;
        for (int s = 0; s < m.d; ++s)
            for (int t = 0; t < m.d; ++t)
                if (b.defined(s, t))
                    CHECK(total(s, t) == doctest::Approx(1.0).epsilon(1e-10));
                else
                    CHECK(total(s, t) == 0.0);
    }
}

TEST_CASE("sequence inverse equals path-enumeration conditionals") {
    ControlledMP m = random_cmp(4, 2, 5);
    for (int n : {1, 2, 3}) {
        MaskedInverseModel b = sequence_inverse_model(m, n);
        REQUIRE(b.num_slices() == 1 << n);
        for (int idx = 0; idx < b.num_slices(); ++idx) {
            ActionSeq seq = seq_from_index(idx, n, m.k);
            for (int s = 0; s < m.d; ++s)
                for (int t = 0; t < m.d; ++t) {
                    double joint = testutil::seq_end_prob(m, s, seq, t);
                    double denom = testutil::any_seq_end_prob(m, s, n, t);
                    REQUIRE(b.defined(s, t) == (denom > 0.0));
                    if (denom > 0.0)
                        CHECK(std::abs(b.values[idx](s, t) - joint / denom) <=
                              1e-10);
                }
        }
    }
}

TEST_CASE("multi_step_inverse agrees with the full sequence model") {
    ControlledMP m = random_cmp(3, 3, 13);
    ActionSeq seq = {2, 0};
    MaskedMatrix slice = multi_step_inverse(m, seq);
    MaskedInverseModel full = sequence_inverse_model(m, 2);
    CHECK(testutil::max_abs_diff(slice.value,
                                 full.values[seq_index(seq, 3)]) <= 1e-14);
    CHECK((slice.defined == full.defined).all());
}

TEST_CASE("first_action_inverse marginalizes the sequence model") {
    ControlledMP m = random_cmp(4, 2, 17);
    int i = 2;
    MaskedInverseModel fa = first_action_inverse(m, i);
    MaskedInverseModel seq = sequence_inverse_model(m, i);
    for (int a = 0; a < m.k; ++a) {
        Matrix marg = Matrix::Zero(m.d, m.d);
        for (int a2 = 0; a2 < m.k; ++a2)
            marg += seq.values[seq_index({a, a2}, m.k)];
        for (int s = 0; s < m.d; ++s)
            for (int t = 0; t < m.d; ++t)
                if (fa.defined(s, t))
                    CHECK(std::abs(fa.values[a](s, t) - marg(s, t)) <= 1e-12);
    }
    CHECK(fa.first_action);
    CHECK(fa.order == 1);
    CHECK(fa.horizon == i);

    // horizon 1 reduces to the one-step model
    MaskedInverseModel fa1 = first_action_inverse(m, 1);
    MaskedInverseModel b1 = one_step_inverse(m);
    for (int a = 0; a < m.k; ++a)
        CHECK(testutil::max_abs_diff(fa1.values[a], b1.values[a]) <= 1e-14);
}

TEST_CASE("first_action_inverse sums to 1 over actions") {
    ControlledMP m = random_cmp(5, 3, 23);
    MaskedInverseModel fa = first_action_inverse(m, 3);
    Matrix total = Matrix::Zero(m.d, m.d);
    for (const Matrix& slice : fa.values) total += slice;
    for (int s = 0; s < m.d; ++s)
        for (int t = 0; t < m.d; ++t)
            if (fa.defined(s, t))
                CHECK(total(s, t) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("path_conditional_inverse equals joint-distribution conditional") {
    ControlledMP m = random_cmp(3, 2, 29);
    std::vector<int> states = {0, 2, 1};
    ActionSeq actions = {1, 0};
    auto got = path_conditional_inverse(m, states, actions);
    REQUIRE(got.has_value());
    // p(a a'|s s' s'') from the joint: product of per-step conditionals
    Matrix mp = m.forward_marginal();
    double expect = (m.M[1](0, 2) / mp(0, 2)) * (m.M[0](2, 1) / mp(2, 1));
    CHECK(*got == doctest::Approx(expect).epsilon(1e-12));

    ControlledMP w = example_w();
    CHECK_FALSE(path_conditional_inverse(w, {1, 1}, {0}).has_value());
}

TEST_CASE("verify_eqim on the two-state pair") {
    ControlledMP m = example_m();
    ControlledMP w = example_w();

    EqimResult r1 = verify_eqim(m, w, 1, EqimMode::sequence);
    CHECK(r1.status == EqimResult::Status::mask_mismatch);
    CHECK(r1.witness_s == 1);
    CHECK(r1.witness_s_end == 1);

    EqimResult r2 = verify_eqim(m, w, 2, EqimMode::first_action);
    CHECK(r2.status == EqimResult::Status::fails);
    CHECK(r2.max_violation > 0.05);
    // hand value: B_M(a0|0,1) = 1/2 while B_W(a0|0,1) = 0
    CHECK(r2.max_violation == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("mixing in a uniform component removes the 0/0 but keeps the "
          "EqIM(2+) violation") {
    ControlledMP m = mix_uniform(example_m(), 0.1);
    ControlledMP w = mix_uniform(example_w(), 0.1);
    CHECK(one_step_inverse(w).defined.all());
    EqimResult r1 = verify_eqim(m, w, 1, EqimMode::sequence, 1e-12);
    CHECK(r1.holds());
    EqimResult r2 = verify_eqim(m, w, 2, EqimMode::first_action);
    CHECK(r2.status == EqimResult::Status::fails);
    CHECK(r2.max_violation > 0.01);
}

TEST_CASE("verify_eqim holds for a model against itself") {
    ControlledMP m = random_cmp(4, 3, 31);
    for (int i : {1, 2, 3}) {
        CHECK(verify_eqim(m, m, i, EqimMode::sequence, 1e-10).holds());
        CHECK(verify_eqim(m, m, i, EqimMode::first_action, 1e-10).holds());
    }
}

TEST_CASE("value failure wins over mask mismatch") {
    // w differs in values on defined entries AND has extra masked entries
    ControlledMP m = example_m();
    ControlledMP w = random_cmp(2, 2, 3);
    EqimResult r = verify_eqim(example_w(), w, 1, EqimMode::sequence);
    CHECK(r.status == EqimResult::Status::fails);
    (void)m;
}

TEST_CASE("verify_compact residuals vanish on a consistent pair") {
    ControlledMP m = random_cmp(3, 2, 41);
    Matrix mp = m.forward_marginal();
    // the compact equation with A = B = first action slice ratios and W = M+
    // reduces to (M^a M^+) / (M^+)^2 structure; here only smoke-check the
    // residual API on an exact fixed point: W row-stochastic, A = B.W W / (WW)
    Matrix w_mat = mp;
    Matrix ww = w_mat * w_mat;
    Matrix b_mat = Matrix::Constant(3, 3, 1.0);
    Matrix a_mat = (b_mat.cwiseProduct(w_mat) * w_mat).cwiseQuotient(ww);
    CompactResidual res = verify_compact(a_mat, b_mat, w_mat);
    CHECK(res.max() <= 1e-12);
}

TEST_CASE("inverse_is_deterministic") {
    CHECK(inverse_is_deterministic(perm_cmp(perm_pair_six())));
    CHECK_FALSE(inverse_is_deterministic(random_cmp(3, 2, 1)));
}
