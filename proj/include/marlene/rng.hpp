#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>

namespace marlene {

// Deterministic random source shared by the whole toolkit. All draws are
// derived from mt19937_64 with fixed mapping code below, so a seed produces
// the same stream on every platform (std::*_distribution is not portable).
class rng {
public:
    rng() : rng(1) {}
    explicit rng(std::uint64_t seed) : engine_(seed) {}

    // uniform in [0, 1), 53-bit resolution
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform01();
    }

    // Box-Muller, second value cached
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform01();
        double u2 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    double normal(double mean, double stddev) {
        return mean + stddev * normal();
    }

    // Poisson draw via Knuth's product-of-uniforms; large rates are split
    // using Poisson additivity so exp(-rate) never underflows.
    std::uint64_t poisson(double rate) {
        std::uint64_t total = 0;
        while (rate > 30.0) {
            total += poisson_knuth(30.0);
            rate -= 30.0;
        }
        return total + poisson_knuth(rate);
    }

    std::uint64_t uniform_index(std::uint64_t n) {
        // n assumed small relative to 2^64; modulo bias negligible
        return engine_() % n;
    }

    // Derives an independent sub-stream seed (for e.g. a PW ensemble that
    // must not perturb the BR draw sequence).
    std::uint64_t derive(std::uint64_t salt) {
        std::uint64_t x = salt * 0x9e3779b97f4a7c15ull + 0xbf58476d1ce4e5b9ull;
        x ^= x >> 31;
        return x;
    }

    std::string save_state() const {
        std::ostringstream os;
        os << engine_ << ' ' << (has_spare_ ? 1 : 0) << ' ';
        os.precision(17);
        os << spare_;
        return os.str();
    }

    void load_state(const std::string& s) {
        std::istringstream is(s);
        int flag = 0;
        is >> engine_ >> flag >> spare_;
        has_spare_ = flag != 0;
    }

private:
    std::uint64_t poisson_knuth(double rate) {
        if (rate <= 0.0) return 0;
        const double limit = std::exp(-rate);
        double prod = 1.0;
        std::uint64_t k = 0;
        do {
            ++k;
            prod *= uniform01();
        } while (prod > limit);
        return k - 1;
    }

    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t x = seed ^ (salt * 0x9e3779b97f4a7c15ull);
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ull;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebull;
    x ^= x >> 31;
    return x;
}

} // namespace marlene
