#pragma once

#include "imdp/cmp.hpp"
#include "imdp/model.hpp"

#include <optional>

namespace imdp {

/// Boolean skeleton of a 1-step inverse (or forward) model.
struct SupportGraph {
    int k = 0, d = 0;
    std::vector<BoolMatrix> g;  // per action
    BoolMatrix gplus;           // OR over actions
};

SupportGraph support_graph(const MaskedInverseModel& b1);
SupportGraph support_graph(const ControlledMP& m);

/// Whether s_goal is reachable from s in exactly i steps (boolean semiring).
bool reachable(const SupportGraph& g, int s, int s_goal, int i);

/// Length-i action sequence connecting s to s_goal on the support graph, or
/// nullopt. Ties broken by ascending action index, then smallest next state.
/// O(i*d*(d+k)) via backward reachability vectors from the goal.
std::optional<ActionSeq> plan(const SupportGraph& g, int s, int s_goal, int i);

/// Smallest i in {1..max_i} admitting a plan, with that plan.
std::optional<ActionSeq> shortest_plan(const SupportGraph& g, int s, int s_goal,
                                       int max_i);

}  // namespace imdp
