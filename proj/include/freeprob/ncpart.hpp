#pragma once

#include "freeprob/errors.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace freeprob {

inline constexpr int kDefaultNcCeiling = 16;

// Blocks hold 1-based elements in increasing order; blocks are ordered by
// their minimum so enumeration output is deterministic.
struct NonCrossingPartition {
    int n = 0;
    std::vector<std::vector<int>> blocks;
};

std::uint64_t catalan(int n);

// Streams every non-crossing partition of {1..n} exactly once, built by the
// first-block-through-nested-intervals construction (Catalan growth, never
// touches crossing candidates).
void for_each_nc(int n, const std::function<void(const NonCrossingPartition&)>& visit,
                 int ceiling = kDefaultNcCeiling);

std::vector<NonCrossingPartition> enumerate_nc(int n, int ceiling = kDefaultNcCeiling);

// Validates that `blocks` partitions {1..n} (throws NotAPartition otherwise),
// then reports whether no crossing quadruple i1<j1<i2<j2 exists.
bool is_noncrossing(const std::vector<std::vector<int>>& blocks, int n);

} // namespace freeprob
