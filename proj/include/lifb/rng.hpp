#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>

#include "lifb/tensor.hpp"

namespace lifb {

/// Deterministic RNG. All randomness in the engine flows through this class so
/// that a (seed, call sequence) pair fully determines every draw on every
/// platform. Gaussian draws never cache a spare: each call consumes exactly
/// two uniforms.
class Rng {
public:
    explicit Rng(uint64_t seed = 0) : gen_(seed) {}

    uint64_t next_u64() { return gen_(); }

    /// Uniform in [0, 1) with 53 significant bits.
    double uniform() { return double(gen_() >> 11) * 0x1.0p-53; }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller. Rejects u1 == 0 to keep log finite.
    double normal() {
        double u1 = uniform();
        while (u1 == 0.0) u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        return r * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    /// Integer in [0, n). n must be positive.
    size_t index(size_t n) {
        if (n == 0) throw std::invalid_argument("Rng::index: n must be positive");
        return size_t(uniform() * double(n)) % n;
    }

    void fill_normal(Tensor& t, double mean, double stddev) {
        for (size_t i = 0; i < t.size(); ++i) t.data()[i] = real(normal(mean, stddev));
    }

    void fill_uniform(Tensor& t, double lo, double hi) {
        for (size_t i = 0; i < t.size(); ++i) t.data()[i] = real(uniform(lo, hi));
    }

    /// Fisher-Yates shuffle, descending pivot. Deterministic for a fixed state.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = index(i);
            std::swap(v[i - 1], v[j]);
        }
    }

    /// Engine state as a text blob, restorable with load_state.
    std::string save_state() const {
        std::ostringstream os;
        os << gen_;
        return os.str();
    }

    void load_state(const std::string& s) {
        std::istringstream is(s);
        is >> gen_;
        if (is.fail()) throw std::invalid_argument("Rng::load_state: malformed state string");
    }

private:
    std::mt19937_64 gen_;
};

} // namespace lifb
