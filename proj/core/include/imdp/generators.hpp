#pragma once

#include "imdp/cmp.hpp"
#include "imdp/model.hpp"

#include <cstdint>
#include <set>
#include <string>
#include <utility>

namespace imdp {

/// Rectangular grid with walls. Cells are addressed (x, y) with y growing
/// downward; free cells are enumerated row-major to obtain state indices.
struct GridSpec {
    int width = 0;
    int height = 0;
    std::set<std::pair<int, int>> walls;  // (x, y)
    double noise = 0.0;                   // eta in [0, 1)

    bool is_wall(int x, int y) const {
        return x < 0 || y < 0 || x >= width || y >= height ||
               walls.count({x, y}) > 0;
    }
    int free_cells() const;

    /// Parses the plain-text map format: '#' wall, '.' free, one row per line.
    static GridSpec parse(const std::string& text, double noise = 0.0);
    std::string to_text() const;
};

/// The pinned four-rooms preset: 24 free cells, 5 actions.
GridSpec fourrooms24(double noise = 0.0);

/// Pair of permutations of {0..d-1} in one-line notation (0-based).
struct PermPair {
    std::vector<int> perm0;
    std::vector<int> perm1;

    int size() const { return static_cast<int>(perm0.size()); }
    void validate() const;
};

/// Entries i.i.d. uniform on (0,1), then normalized per state s so that
/// sum_{a,s'} M[a](s,s') = 1. Deterministic given the seed.
ControlledMP random_cmp(int d, int k, std::uint64_t seed);

/// Grid-world CMP with k=5 actions (up, down, left, right, stay).
/// Blocked moves become stay; with probability eta the outcome is replaced
/// by a uniformly random admissible neighbor (including stay). The policy
/// defaults to uniform.
ControlledMP gridworld(const GridSpec& spec);
ControlledMP gridworld(const GridSpec& spec, const Policy& pi);

/// Samples a connected grid with the given interior size: i.i.d. wall
/// probability 0.25 per interior cell, resampled until the free-cell count
/// matches `target_free` (pass 0 to accept any count) and the free cells
/// are connected.
GridSpec random_grid(int width, int height, int target_free, double noise,
                     std::uint64_t seed);

/// Tensor product with an action-independent stochastic factor:
/// d = d1*d2, state (s1, s2) -> s1*d2 + s2, and
/// M[a](s,s') = M1[a](s1,s1') * M2(s2,s2').
ControlledMP tensor_product(const ControlledMP& mdot, const Matrix& mddot,
                            double tol = 1e-12);

/// Concatenates the state spaces; cross-block transitions are zero.
ControlledMP block_diagonal(const std::vector<ControlledMP>& parts);

/// Two distinct random action-independent CMPs M[a] = (1/k) M^+ with
/// uniform policy; they share all inverse models (k^-i) yet differ.
std::pair<ControlledMP, ControlledMP> degenerate_action_independent(
    int d, int k, std::uint64_t seed);

/// Two-action CMP from a permutation pair: M[a](s, perm_a(s)) = pi(a|s).
ControlledMP perm_cmp(const PermPair& pair, const Policy& pi);
ControlledMP perm_cmp(const PermPair& pair);  // uniform policy

/// The eq-counter-example permutation pairs: order-2 family on 6 states and
/// order-3 family on 15 states.
PermPair perm_pair_six();
PermPair perm_pair_fifteen();

struct CycleCondition {
    bool ok = false;
    int fails_at = 0;  // first j in 1..i+1 with an entry > 1; 0 when none
};

/// Checks over the integers that (P0+P1)^j stays 0/1-valued for j <= i and
/// reports the first power up to i+1 where it does not.
CycleCondition cycle_condition(const PermPair& pair, int i);

/// State-splitting counter-example with identical supports: every state is
/// doubled and each permutation 1-entry becomes a strictly positive 2x2
/// stochastic block, sampled independently for M and W. The returned pair
/// satisfies EqIM(1..i) in sequence mode and violates EqIM(i+1).
std::pair<ControlledMP, ControlledMP> split_counterexample(
    const PermPair& pair, int i, std::uint64_t seed);

/// Adds eps*10^c noise (fresh uniform eps per entry) on defined entries and
/// renormalizes over the action index. Pass c = -infinity for a no-op.
MaskedInverseModel add_noise(const MaskedInverseModel& b, double c,
                             std::uint64_t seed);

/// Mean over jointly defined (s, s_end) of KL(p_true || p_est) across the
/// action index, with 0 log 0 = 0 and p_est floored at 1e-300.
double kl_divergence(const MaskedInverseModel& b_true,
                     const MaskedInverseModel& b_est);

}  // namespace imdp
