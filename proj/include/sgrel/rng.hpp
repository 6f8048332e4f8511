#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace sgrel {

// splitmix64 finalizer; used to derive independent stream seeds from a root
// seed plus stream coordinates (scene index, epoch, ...).
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    return mix64(mix64(seed ^ 0x5851f42d4c957f2dULL) + a * 0x9e3779b97f4a7c15ULL + b);
}

// Deterministic RNG. mt19937_64 has a standard-pinned sequence; the
// distributions below are implemented explicitly so that draws are
// reproducible across standard libraries (std::uniform_*_distribution is
// implementation-defined).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t u64() { return engine_(); }

    // uniform in [0, n), n > 0
    std::uint64_t bounded(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(u64()) * n) >> 64);
    }

    int uniform_int(int lo, int hi) {  // inclusive bounds
        return lo + static_cast<int>(bounded(static_cast<std::uint64_t>(hi - lo) + 1));
    }

    double real01() { return static_cast<double>(u64() >> 11) * 0x1.0p-53; }

    double range(double a, double b) { return a + (b - a) * real01(); }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        while (u1 <= 1e-300) u1 = real01();
        double u2 = real01();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    bool bernoulli(double p) { return real01() < p; }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(bounded(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // k distinct values from [0, n), in draw order (partial Fisher-Yates).
    std::vector<int> sample_without_replacement(int n, int k) {
        k = std::min(k, n);
        std::vector<int> idx(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
        std::vector<int> out;
        out.reserve(static_cast<std::size_t>(k));
        for (int i = 0; i < k; ++i) {
            std::size_t j = static_cast<std::size_t>(i) +
                            static_cast<std::size_t>(bounded(static_cast<std::uint64_t>(n - i)));
            std::swap(idx[static_cast<std::size_t>(i)], idx[j]);
            out.push_back(idx[static_cast<std::size_t>(i)]);
        }
        return out;
    }

private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace sgrel
