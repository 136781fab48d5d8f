#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace sevkit {

// Deterministic across platforms and standard libraries; the split/shuffle
// contracts require byte-identical results everywhere, so no <random>.
struct Rng {
    std::uint64_t state;

    explicit Rng(std::uint64_t seed) : state(seed) {}

    // splitmix64
    std::uint64_t next_u64() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // uniform in [lo, hi)
    double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // unbiased integer in [0, n)
    std::uint64_t next_below(std::uint64_t n) {
        std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            std::uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

    // standard normal, Box-Muller (no cached spare: keeps the stream position
    // a pure function of the draw count)
    double next_normal() {
        double u1 = next_double();
        double u2 = next_double();
        while (u1 <= 1e-300) u1 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(next_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // independent child stream; used to give each Monte-Carlo chunk its own
    // generator so serial and parallel sweeps see identical draws
    Rng fork(std::uint64_t stream) const {
        Rng r(state ^ 0x5851f42d4c957f2dULL);
        r.state += stream * 0x14057b7ef767814fULL;
        r.next_u64();
        return r;
    }
};

} // namespace sevkit
