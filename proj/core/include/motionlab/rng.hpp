#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace motionlab {

// Derives a child seed from a root seed and a named stream. All randomness
// in a run flows from the single root seed in the config through this
// splitter, so distinct streams (corpus, weights, features, dropout, ...)
// never share state. splitmix64 over FNV-1a of the stream name.
std::uint64_t seed_for(std::uint64_t root_seed, const std::string& stream);

// Deterministic RNG with portable distributions. std::normal_distribution
// is implementation-defined, so uniform and normal draws are generated from
// raw mt19937_64 bits directly; sequences are identical across compilers.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // uniform in [0, 1)
    double uniform();
    // uniform in [lo, hi)
    double uniform(double lo, double hi);
    // standard normal via Box-Muller
    double normal();
    double normal(double mean, double stddev);
    // integer in [0, n)
    std::uint64_t index(std::uint64_t n);

    // Fisher-Yates permutation of {0, ..., n-1}
    std::vector<std::size_t> permutation(std::size_t n);

  private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace motionlab
