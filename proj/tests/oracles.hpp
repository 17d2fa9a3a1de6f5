#pragma once

// Independent reference implementations used as test oracles. Everything here
// is deliberately written with scalar loops and explicit path enumeration so
// that it shares no code path with the library routines under test.

#include "imdp/cmp.hpp"
#include "imdp/model.hpp"

#include <cmath>
#include <vector>

namespace testutil {

// P(s_end, seq | s0) summed over all intermediate state paths, by recursion.
inline double seq_end_prob(const imdp::ControlledMP& m, int s0,
                           const imdp::ActionSeq& seq, std::size_t pos,
                           int s_end) {
    if (pos == seq.size()) return s0 == s_end ? 1.0 : 0.0;
    double total = 0.0;
    for (int s1 = 0; s1 < m.d; ++s1) {
        double p = m.M[seq[pos]](s0, s1);
        if (p > 0.0) total += p * seq_end_prob(m, s1, seq, pos + 1, s_end);
    }
    return total;
}

inline double seq_end_prob(const imdp::ControlledMP& m, int s0,
                           const imdp::ActionSeq& seq, int s_end) {
    return seq_end_prob(m, s0, seq, 0, s_end);
}

// P(s_end after n steps | s0), enumerating all k^n action sequences.
inline double any_seq_end_prob(const imdp::ControlledMP& m, int s0, int n,
                               int s_end) {
    int total_seqs = 1;
    for (int t = 0; t < n; ++t) total_seqs *= m.k;
    double total = 0.0;
    for (int idx = 0; idx < total_seqs; ++idx) {
        imdp::ActionSeq seq = imdp::seq_from_index(idx, n, m.k);
        total += seq_end_prob(m, s0, seq, s_end);
    }
    return total;
}

// P(first action = a, s_end after n steps | s0).
inline double first_action_end_prob(const imdp::ControlledMP& m, int s0, int a,
                                    int n, int s_end) {
    int tail_seqs = 1;
    for (int t = 0; t < n - 1; ++t) tail_seqs *= m.k;
    double total = 0.0;
    for (int idx = 0; idx < tail_seqs; ++idx) {
        imdp::ActionSeq seq = imdp::seq_from_index(idx, n - 1, m.k);
        seq.insert(seq.begin(), a);
        total += seq_end_prob(m, s0, seq, s_end);
    }
    return total;
}

// Exact-step reachability sets by forward dynamic programming on the
// positive-probability transition structure.
inline std::vector<std::vector<bool>> exact_step_reach(
    const imdp::ControlledMP& m, int s0, int max_i) {
    std::vector<std::vector<bool>> reach(max_i + 1,
                                         std::vector<bool>(m.d, false));
    reach[0][s0] = true;
    for (int t = 1; t <= max_i; ++t)
        for (int s = 0; s < m.d; ++s) {
            if (!reach[t - 1][s]) continue;
            for (int a = 0; a < m.k; ++a)
                for (int s1 = 0; s1 < m.d; ++s1)
                    if (m.M[a](s, s1) > 0.0) reach[t][s1] = true;
        }
    return reach;
}

// Smallest step count in {1..max_i} reaching s_goal, or -1.
inline int bfs_distance(const imdp::ControlledMP& m, int s0, int s_goal,
                        int max_i) {
    auto reach = exact_step_reach(m, s0, max_i);
    for (int t = 1; t <= max_i; ++t)
        if (reach[t][s_goal]) return t;
    return -1;
}

inline double max_abs_diff(const imdp::Matrix& a, const imdp::Matrix& b) {
    return (a - b).cwiseAbs().maxCoeff();
}

inline double max_abs_diff(const imdp::ControlledMP& a,
                           const imdp::ControlledMP& b) {
    double worst = 0.0;
    for (int i = 0; i < a.k; ++i)
        worst = std::max(worst, max_abs_diff(a.M[i], b.M[i]));
    return worst;
}

}  // namespace testutil
