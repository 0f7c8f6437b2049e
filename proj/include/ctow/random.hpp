#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace ctow {

std::uint64_t splitmix64(std::uint64_t& state);

// Stable seed derivation for independent substreams (per learner, per round).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t step = 0);

// Deterministic generator with explicit sampling rules. std::mt19937_64 has a
// standard-mandated sequence; the samplers below avoid std distributions,
// whose outputs vary across standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next() { return gen_(); }

    std::size_t below(std::size_t n);  // uniform in [0, n)
    double uniform();                  // [0, 1)
    double normal();                   // standard normal

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = below(i);
            std::swap(v[i - 1], v[j]);
        }
    }

    // k distinct values from [0, n), returned sorted ascending.
    std::vector<int> sample_without_replacement(int n, int k);

private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace ctow
