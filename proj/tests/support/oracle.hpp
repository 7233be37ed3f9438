#pragma once

#include "persuasion/belief.hpp"
#include "persuasion/instance.hpp"

#include <cstddef>

namespace persuasion::oracle {

/// Best expected terminal utility over every strategy tree of depth <= n,
/// found by listing the trees one by one. Only explicit experiments are used.
struct BruteForce {
    Rational best;
    std::size_t trees = 0;
};

BruteForce best_tree_value(const Instance& inst, const Belief& p, int n);

} // namespace persuasion::oracle
