#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace freeprob {

// Deterministic RNG with explicit stream derivation: stream(seed, k) yields
// the k-th independent stream of a run. Conversions to uniform/normal are
// implemented here (not via std::*_distribution) so results are identical
// across standard libraries.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    static std::uint64_t splitmix(std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    static Rng stream(std::uint64_t seed, std::uint64_t stream_id) {
        return Rng(splitmix(splitmix(seed) ^ splitmix(stream_id + 0x632be59bd9b4e019ULL)));
    }

    std::uint64_t next_u64() { return eng_(); }

    double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    // Marsaglia polar method with one cached spare.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform01() - 1.0;
            v = 2.0 * uniform01() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

  private:
    std::mt19937_64 eng_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace freeprob
