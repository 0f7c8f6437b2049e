#include "ctow/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ctow {

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t step) {
    std::uint64_t s = base;
    splitmix64(s);
    s ^= 0x5851f42d4c957f2dULL * (stream + 1);
    splitmix64(s);
    s ^= 0x14057b7ef767814fULL * (step + 1);
    return splitmix64(s);
}

std::size_t Rng::below(std::size_t n) {
    return n == 0 ? 0 : static_cast<std::size_t>(next() % n);
}

double Rng::uniform() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    double u1 = 0.0;
    while (u1 <= 0.0) u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
}

std::vector<int> Rng::sample_without_replacement(int n, int k) {
    std::vector<int> pool(static_cast<std::size_t>(n));
    std::iota(pool.begin(), pool.end(), 0);
    k = std::min(k, n);
    // partial Fisher-Yates: the first k slots end up with the sample
    for (int i = 0; i < k; ++i) {
        std::size_t j = i + below(static_cast<std::size_t>(n - i));
        std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
    }
    pool.resize(static_cast<std::size_t>(k));
    std::sort(pool.begin(), pool.end());
    return pool;
}

} // namespace ctow
