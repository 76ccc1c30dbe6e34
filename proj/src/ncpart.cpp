#include "freeprob/ncpart.hpp"

#include <algorithm>
#include <string>

namespace freeprob {

std::uint64_t catalan(int n) {
    // C(n) = binom(2n, n) / (n+1); exact in 64 bits up to n = 33.
    std::uint64_t c = 1;
    for (int k = 0; k < n; ++k) c = c * 2 * (2 * k + 1) / (k + 2);
    return c;
}

namespace {

struct NcWalker {
    NonCrossingPartition part;

    // Partition the ground segment [lo, hi] (1-based, inclusive); `done`
    // continues with the remaining segments once this one is fully covered.
    void segment(int lo, int hi, const std::function<void()>& done) {
        if (lo > hi) {
            done();
            return;
        }
        part.blocks.emplace_back(1, lo);
        firstBlock(part.blocks.size() - 1, hi, lo, done);
        part.blocks.pop_back();
    }

    // The block at `blockIdx` (owning the segment minimum) is being extended;
    // `prev` is its last element so far. Each extension choice leaves a gap
    // (prev, next) partitioned independently; the non-crossing property is
    // exactly that every other block lives inside one such gap.
    void firstBlock(size_t blockIdx, int hi, int prev, const std::function<void()>& done) {
        // Close the block here: the tail (prev, hi] is a free segment.
        segment(prev + 1, hi, done);
        for (int next = prev + 1; next <= hi; ++next) {
            part.blocks[blockIdx].push_back(next);
            // Gap strictly between prev and next, then continue the block.
            segment(prev + 1, next - 1, [&, next] { firstBlock(blockIdx, hi, next, done); });
            part.blocks[blockIdx].pop_back();
        }
    }
};

} // namespace

void for_each_nc(int n, const std::function<void(const NonCrossingPartition&)>& visit, int ceiling) {
    if (n < 1 || n > ceiling)
        throw SizeLimitExceeded("non-crossing enumeration for n=" + std::to_string(n) +
                                " (ceiling " + std::to_string(ceiling) + ")");
    NcWalker w;
    w.part.n = n;
    const std::function<void()> emit = [&] {
        // Blocks appear ordered by minimum because segments are consumed
        // left to right; emit a stable copy.
        NonCrossingPartition out = w.part;
        std::sort(out.blocks.begin(), out.blocks.end(),
                  [](const auto& a, const auto& b) { return a.front() < b.front(); });
        visit(out);
    };
    w.segment(1, n, emit);
}

std::vector<NonCrossingPartition> enumerate_nc(int n, int ceiling) {
    std::vector<NonCrossingPartition> out;
    out.reserve(n <= 14 ? static_cast<size_t>(catalan(n)) : 0);
    for_each_nc(n, [&](const NonCrossingPartition& p) { out.push_back(p); }, ceiling);
    return out;
}

bool is_noncrossing(const std::vector<std::vector<int>>& blocks, int n) {
    std::vector<int> owner(static_cast<size_t>(n) + 1, -1);
    int covered = 0;
    for (size_t b = 0; b < blocks.size(); ++b) {
        if (blocks[b].empty()) throw NotAPartition("empty block");
        for (int x : blocks[b]) {
            if (x < 1 || x > n) throw NotAPartition("element " + std::to_string(x) + " outside {1.." + std::to_string(n) + "}");
            if (owner[static_cast<size_t>(x)] != -1) throw NotAPartition("element " + std::to_string(x) + " repeated");
            owner[static_cast<size_t>(x)] = static_cast<int>(b);
            ++covered;
        }
    }
    if (covered != n) throw NotAPartition("elements missing from the ground set");

    // Blocks r and s admit a crossing quadruple iff the scan over 1..n meets
    // their labels in at least 4 alternating runs (pattern r s r s).
    for (size_t r = 0; r < blocks.size(); ++r) {
        for (size_t s = r + 1; s < blocks.size(); ++s) {
            int runs = 0, last = -1;
            for (int x = 1; x <= n; ++x) {
                int o = owner[static_cast<size_t>(x)];
                if (o != static_cast<int>(r) && o != static_cast<int>(s)) continue;
                if (o != last) { ++runs; last = o; }
            }
            if (runs >= 4) return false;
        }
    }
    return true;
}

} // namespace freeprob
