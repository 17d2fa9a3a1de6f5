#include "imdp/generators.hpp"
#include "imdp/model.hpp"
#include "imdp/planner.hpp"
#include "imdp/sat_reduction.hpp"
#include "imdp/solver_relaxation.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace imdp;

namespace {

Cnf1in3 random_formula(int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> var(1, n);
    std::uniform_int_distribution<int> coin(0, 1);
    Cnf1in3 cnf;
    cnf.n = n;
    for (int i = 0; i < n; ++i) {  // m = n keeps d = 2n+2
        std::array<Literal, 3> cl;
        while (true) {
            for (int j = 0; j < 3; ++j) cl[j] = Literal{var(rng), coin(rng) == 1};
            bool dup = false;
            for (int a = 0; a < 3; ++a)
                for (int b = a + 1; b < 3; ++b)
                    if (cl[a].var == cl[b].var && cl[a].negated == cl[b].negated)
                        dup = true;
            if (!dup) break;
        }
        cnf.clauses.push_back(cl);
    }
    return cnf;
}

void BM_sat_verify(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    SatEncoding enc = encode(random_formula(n, 17));
    std::vector<bool> assign(n);
    for (int j = 0; j < n; ++j) assign[j] = (j % 2) == 0;
    Matrix w = assignment_to_W(enc, assign);
    for (auto _ : state) benchmark::DoNotOptimize(verify(enc, w));
    state.SetComplexityN(enc.d);
}
BENCHMARK(BM_sat_verify)->RangeMultiplier(2)->Range(8, 128)->Complexity();

void BM_inverse_models(benchmark::State& state) {
    ControlledMP m = gridworld(fourrooms24());
    const int order = static_cast<int>(state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(sequence_inverse_model(m, order));
}
BENCHMARK(BM_inverse_models)->Arg(1)->Arg(2)->Arg(3);

void BM_relaxation_fourrooms(benchmark::State& state) {
    ControlledMP m = gridworld(fourrooms24());
    RelaxationInputs in;
    in.i = 2;
    in.b1 = one_step_inverse(m);
    in.b_prev = in.b1;
    in.b_cur = sequence_inverse_model(m, 2);
    in.pi = m.policy();
    for (auto _ : state) benchmark::DoNotOptimize(solve_relaxation(in));
}
BENCHMARK(BM_relaxation_fourrooms);

void BM_relaxation_random(benchmark::State& state) {
    const int d = static_cast<int>(state.range(0));
    ControlledMP m = random_cmp(d, 4, 3);
    RelaxationInputs in;
    in.i = 2;
    in.b1 = one_step_inverse(m);
    in.b_prev = in.b1;
    in.b_cur = sequence_inverse_model(m, 2);
    in.pi = m.policy();
    for (auto _ : state) benchmark::DoNotOptimize(solve_relaxation(in));
}
BENCHMARK(BM_relaxation_random)->Arg(8)->Arg(12)->Arg(16);

void BM_planner(benchmark::State& state) {
    ControlledMP m = gridworld(fourrooms24());
    SupportGraph g = support_graph(one_step_inverse(m));
    for (auto _ : state)
        benchmark::DoNotOptimize(shortest_plan(g, 0, m.d - 1, 16));
}
BENCHMARK(BM_planner);

}  // namespace

BENCHMARK_MAIN();
