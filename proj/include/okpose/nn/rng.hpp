#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>

namespace okpose::nn {

/// Counter-based deterministic random generator.
///
/// Each draw hashes (key, counter); identical seeds give identical sequences
/// on every platform. Substreams derive a new key from a name, so draws for
/// one purpose (weights, noise, augmentation) never shift another stream.
class Rng {
public:
    explicit Rng(uint64_t seed, std::string_view stream = "root")
        : seed_(seed), key_(mix(seed, hash_name(stream))), stream_(stream) {}

    /// Derived generator with an independent draw sequence.
    Rng substream(std::string_view name) const {
        Rng r(seed_, name);
        r.key_ = mix(key_, hash_name(name));
        return r;
    }

    uint64_t seed() const { return seed_; }
    const std::string& algorithm() const { return algorithm_; }
    const std::string& stream() const { return stream_; }

    uint64_t next_u64() { return mix(key_, ++counter_); }

    /// Uniform double in [0, 1).
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    float uniform(float lo, float hi) {
        return lo + (hi - lo) * static_cast<float>(next_double());
    }

    /// Integer in [lo, hi] inclusive.
    int uniform_int(int lo, int hi) {
        const uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
        return lo + static_cast<int>(next_u64() % span);
    }

    bool bernoulli(double p) { return next_double() < p; }

    /// Gaussian draw via Box-Muller; always consumes exactly two uniforms.
    float normal(float mean, float stddev) {
        const double u1 = 1.0 - next_double();  // (0, 1]
        const double u2 = next_double();
        const double r = std::sqrt(-2.0 * std::log(u1));
        return mean + stddev * static_cast<float>(r * std::cos(2.0 * kPi * u2));
    }

private:
    static constexpr double kPi = 3.14159265358979323846;

    // splitmix64 finalizer over key + golden-ratio-stepped counter
    static uint64_t mix(uint64_t key, uint64_t n) {
        uint64_t z = key + n * 0x9E3779B97F4A7C15ull;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    static uint64_t hash_name(std::string_view name) {
        uint64_t h = 1469598103934665603ull;  // FNV-1a
        for (const char c : name) {
            h ^= static_cast<uint8_t>(c);
            h *= 1099511628211ull;
        }
        return h;
    }

    uint64_t seed_;
    uint64_t key_;
    uint64_t counter_ = 0;
    std::string algorithm_ = "splitmix64-counter";
    std::string stream_;
};

}  // namespace okpose::nn
