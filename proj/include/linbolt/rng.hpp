#pragma once

#include <cmath>
#include <cstdint>

namespace linbolt {

// Counter-based random streams: every stream is keyed by (seed, sample,
// interval) so that renewal intervals and Monte-Carlo samples draw from
// structurally independent generators.  Output is identical across
// platforms because the Gaussian transform is done by hand (no
// std::normal_distribution).
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

class RngStream {
  public:
    RngStream(std::uint64_t seed, std::uint64_t sample = 0,
              std::uint64_t interval = 0) {
        std::uint64_t k = splitmix64(seed);
        k = splitmix64(k ^ (0x517cc1b727220a95ULL + sample));
        k = splitmix64(k ^ (0x2545f4914f6cdd1dULL + interval));
        state_ = k ? k : 0x9e3779b97f4a7c15ULL;
    }

    std::uint64_t next_u64() {
        // xorshift64* on a splitmix-derived state
        std::uint64_t x = state_;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        state_ = x;
        return x * 0x2545f4914f6cdd1dULL;
    }

    // uniform in (0,1); never returns 0 so log() below is safe
    double next_uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    // standard normal via Box-Muller; pairs are cached
    double next_gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = next_uniform();
        const double u2 = next_uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

  private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace linbolt
