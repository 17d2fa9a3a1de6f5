#include "imdp/planner.hpp"

namespace imdp {
namespace {

void check_state(int s, int d, const char* what) {
    if (s < 0 || s >= d) throw ModelError(std::string(what) + " out of range");
}

// Backward reachability sets: out[j](s') == goal reachable from s' in j steps.
std::vector<std::vector<char>> backward(const SupportGraph& g, int s_goal,
                                        int i) {
    std::vector<std::vector<char>> v(i + 1, std::vector<char>(g.d, 0));
    v[0][s_goal] = 1;
    for (int j = 1; j <= i; ++j)
        for (int s = 0; s < g.d; ++s)
            for (int t = 0; t < g.d; ++t)
                if (g.gplus(s, t) && v[j - 1][t]) { v[j][s] = 1; break; }
    return v;
}

}  // namespace

SupportGraph support_graph(const MaskedInverseModel& b1) {
    if (b1.order != 1) throw ModelError("support_graph: order-1 model required");
    SupportGraph sg;
    sg.k = b1.k;
    sg.d = b1.d;
    sg.gplus = BoolMatrix::Constant(b1.d, b1.d, false);
    for (int a = 0; a < b1.k; ++a) {
        sg.g.push_back(b1.defined && (b1.values[a].array() > 0.0));
        sg.gplus = sg.gplus || sg.g.back();
    }
    return sg;
}

SupportGraph support_graph(const ControlledMP& m) {
    SupportGraph sg;
    sg.k = m.k;
    sg.d = m.d;
    sg.gplus = BoolMatrix::Constant(m.d, m.d, false);
    for (int a = 0; a < m.k; ++a) {
        sg.g.push_back(m.M[a].array() > 0.0);
        sg.gplus = sg.gplus || sg.g.back();
    }
    return sg;
}

bool reachable(const SupportGraph& g, int s, int s_goal, int i) {
    check_state(s, g.d, "reachable: state");
    check_state(s_goal, g.d, "reachable: goal");
    if (i < 0) throw ModelError("reachable: negative horizon");
    if (i == 0) return s == s_goal;
    return backward(g, s_goal, i)[i][s];
}

std::optional<ActionSeq> plan(const SupportGraph& g, int s, int s_goal, int i) {
    check_state(s, g.d, "plan: state");
    check_state(s_goal, g.d, "plan: goal");
    if (i < 1) throw ModelError("plan: horizon must be >= 1");
    auto v = backward(g, s_goal, i);
    if (!v[i][s]) return std::nullopt;
    ActionSeq seq;
    int cur = s;
    for (int j = i; j >= 1; --j) {
        bool advanced = false;
        for (int a = 0; a < g.k && !advanced; ++a) {
            for (int t = 0; t < g.d; ++t) {
                if (g.g[a](cur, t) && v[j - 1][t]) {
                    seq.push_back(a);
                    cur = t;
                    advanced = true;
                    break;
                }
            }
        }
        if (!advanced) return std::nullopt;  // unreachable under v-invariant
    }
    return seq;
}

std::optional<ActionSeq> shortest_plan(const SupportGraph& g, int s, int s_goal,
                                       int max_i) {
    for (int i = 1; i <= max_i; ++i)
        if (auto p = plan(g, s, s_goal, i)) return p;
    return std::nullopt;
}

}  // namespace imdp
