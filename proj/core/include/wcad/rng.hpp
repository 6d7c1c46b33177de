#pragma once

#include <cmath>
#include <cstdint>

namespace wcad {

// SplitMix64 (Steele/Lea/Vigna). All randomness in the project flows through
// this generator so that datasets, initializations and noise draws are
// bit-reproducible across platforms. Constants:
//   state += 0x9E3779B97F4A7C15
//   z = state; z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//   return z ^ (z >> 31)
class Rng {
  public:
    explicit Rng(uint64_t seed = 0) : state_(seed) {}

    uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1), 53-bit resolution
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    float uniform(float lo, float hi) {
        return lo + static_cast<float>(next_double()) * (hi - lo);
    }

    // integer in [0, n)
    uint64_t next_below(uint64_t n) { return next_u64() % n; }

    int range_int(int lo, int hi) {  // inclusive bounds
        return lo + static_cast<int>(next_below(static_cast<uint64_t>(hi - lo + 1)));
    }

    // standard normal via Box-Muller; pairs are cached so draws stay cheap
    float normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        double u1 = 1.0 - next_double();  // (0, 1]
        double u2 = next_double();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        cached_ = static_cast<float>(r * std::sin(a));
        have_cached_ = true;
        return static_cast<float>(r * std::cos(a));
    }

    uint64_t state() const { return state_; }
    void set_state(uint64_t s) {
        state_ = s;
        have_cached_ = false;
    }

  private:
    uint64_t state_ = 0;
    float cached_ = 0.0f;
    bool have_cached_ = false;
};

}  // namespace wcad
