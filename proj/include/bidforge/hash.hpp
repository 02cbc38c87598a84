#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace bidforge {

// FNV-1a over length-prefixed fields, finished with the splitmix64 mixer.
// Platform-independent: integers are fed little-endian byte by byte.
class StableHasher {
public:
    StableHasher& add(std::uint64_t value) noexcept {
        for (int i = 0; i < 8; ++i) byte(static_cast<unsigned char>(value >> (8 * i)));
        return *this;
    }

    StableHasher& add(std::string_view text) noexcept {
        add(static_cast<std::uint64_t>(text.size()));
        for (char c : text) byte(static_cast<unsigned char>(c));
        return *this;
    }

    std::uint64_t digest() const noexcept {
        std::uint64_t z = state_ + 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    void byte(unsigned char b) noexcept {
        state_ ^= b;
        state_ *= 0x100000001b3ULL;
    }

    std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

// std::mt19937_64 output is fully specified by the standard, but the
// standard distributions are not; draws are mapped by hand so sequences are
// identical across standard libraries.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

    // Uniform integer in [0, bound), bound > 0, by rejection sampling.
    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound + 1) % bound;
        std::uint64_t draw = engine_();
        while (draw > limit) draw = engine_();
        return draw % bound;
    }

    // Uniform real in [0, 1) with 53 random bits.
    double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    std::uint64_t next() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

// Fixed-width lowercase hex, 16 characters.
std::string to_hex(std::uint64_t value);

}  // namespace bidforge
