#pragma once

#include <cmath>
#include <cstdint>

namespace qdm {

// Counter-based generator. Draw n of stream k is mix64(k + (n+1)*golden),
// which is exactly SplitMix64 started at state k, so streams are cheap to
// derive and every value is addressable without sequential state.
inline constexpr std::uint64_t splitmix_golden = 0x9E3779B97F4A7C15ull;

constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

constexpr std::uint64_t stream_key(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t k = mix64(seed + splitmix_golden);
    k = mix64(k ^ (a + 0x632BE59BD9B4E019ull));
    k = mix64(k ^ (b + 0x8CB92BA72F3D8DD7ull));
    k = mix64(k ^ (c + 0xD1B54A32D192ED03ull));
    return k;
}

class CounterRng {
public:
    explicit constexpr CounterRng(std::uint64_t key) : key_(key) {}

    constexpr std::uint64_t at(std::uint64_t n) const { return mix64(key_ + (n + 1) * splitmix_golden); }
    std::uint64_t next_u64() { return at(counter_++); }

    // 53-bit uniform in (0, 1)
    double uniform() { return ((next_u64() >> 11) + 0.5) * 0x1.0p-53; }

    // Box-Muller, one variate per pair of draws so each value depends on
    // a fixed pair of counters
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

// purpose tags keep streams for different noise sources disjoint
enum class StreamTag : std::uint64_t { dc_map = 1, ac_cube = 2, odmr = 3, rabi = 4, sweep = 5 };

inline CounterRng pixel_stream(std::uint64_t seed, StreamTag tag, std::uint64_t index, std::uint64_t x, std::uint64_t y) {
    return CounterRng(stream_key(seed ^ (static_cast<std::uint64_t>(tag) << 56), index, x, y));
}

}  // namespace qdm
