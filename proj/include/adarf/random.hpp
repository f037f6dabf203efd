#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace adarf {

using Rng = std::mt19937_64;

// Mixes a master seed with a sequence of stream indices (repetition, fold,
// tree, ...) into an independent seed. Pure function, so jobs can run in any
// order and still draw identical numbers.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> stream) {
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    std::uint64_t h = mix(master);
    for (std::uint64_t s : stream) h = mix(h ^ mix(s + 0x632be59bd9b4e019ULL));
    return h;
}

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

inline double uniform_unit(Rng& rng) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

// Fisher-Yates shuffle with our own index draws (std::shuffle's draw
// sequence is unspecified across standard libraries).
template <typename T>
void shuffle_in_place(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = uniform_index(rng, i);
        std::swap(v[i - 1], v[j]);
    }
}

}  // namespace adarf
