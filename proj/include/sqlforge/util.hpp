#pragma once
// Small shared helpers: stable hashing, a portable PRNG, UTF-8 and URL codecs.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace sqlforge {

/// 64-bit FNV-1a. Stable across platforms, unlike std::hash.
constexpr std::uint64_t fnv1a64(std::string_view data,
                                std::uint64_t seed = 0xcbf29ce484222325ULL) noexcept {
    std::uint64_t h = seed;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::string hex64(std::uint64_t value);

/// SplitMix64 generator with portable bounded sampling. The standard
/// distributions are implementation-defined, so sampling helpers live here.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() noexcept {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform integer in [0, bound). bound must be > 0.
    std::uint64_t below(std::uint64_t bound) noexcept {
        const std::uint64_t limit = bound * (UINT64_MAX / bound);
        std::uint64_t r;
        do {
            r = next();
        } while (r >= limit);
        return r % bound;
    }

    /// Uniform real in [0, 1).
    double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

private:
    std::uint64_t state_;
};

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);
std::vector<std::string> split_lines(std::string_view s);
bool starts_with_ci(std::string_view s, std::string_view prefix);

std::u32string utf8_decode(std::string_view s);
std::string utf8_encode(std::u32string_view s);

std::string url_decode(std::string_view s);
std::string url_encode(std::string_view s);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

/// Quote a CSV field when needed (RFC 4180).
std::string csv_field(std::string_view s);
std::vector<std::string> parse_csv_line(std::string_view line);

/// Fixed-precision decimal formatting ("%.*f").
std::string fixed(double value, int decimals);

}  // namespace sqlforge
