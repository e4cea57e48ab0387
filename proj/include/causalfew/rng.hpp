#pragma once

#include <cstdint>
#include <cmath>
#include <string>
#include <vector>

namespace causalfew {

// Deterministic RNG utilities. std::*_distribution is implementation-defined,
// so every sampler here is hand-rolled on top of a fixed-algorithm generator;
// identical seeds give identical streams on any compiler.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ull) {}

    // splitmix64 core step
    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // uniform in [0, n), unbiased via rejection
    std::uint64_t next_below(std::uint64_t n) {
        if (n == 0) return 0;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x = next_u64();
        while (x >= limit) x = next_u64();
        return x % n;
    }

    // uniform in [0,1) with 53 bits
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

    // Box-Muller, one value per call (the pair's second half is discarded so
    // the stream position is input-independent)
    double normal() {
        double u1 = next_unit();
        while (u1 <= 1e-300) u1 = next_unit();
        const double u2 = next_unit();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    }

    // Fisher-Yates
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(next_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // k distinct indices from [0, n), order randomized
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k) {
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        shuffle(idx);
        idx.resize(k);
        return idx;
    }

private:
    std::uint64_t state_;
};

// Stable 64-bit FNV-1a over a label; used to derive independent substreams
// from one run seed (seed ^ hash(tag, indices...)).
inline std::uint64_t hash_tag(const std::string& tag) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : tag) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::uint64_t substream_seed(std::uint64_t seed, const std::string& tag,
                                    std::uint64_t a = 0, std::uint64_t b = 0) {
    std::uint64_t h = hash_tag(tag);
    h ^= 0x9e3779b97f4a7c15ull + a + (h << 6) + (h >> 2);
    h ^= 0x9e3779b97f4a7c15ull + b + (h << 6) + (h >> 2);
    return seed ^ h;
}

}  // namespace causalfew
