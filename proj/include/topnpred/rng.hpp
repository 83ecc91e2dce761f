#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace topnpred {

// Seeded generator with platform-independent derived draws. The standard
// distribution adaptors are implementation-defined, so uniform reals and
// bounded integers are derived here from the raw 64-bit stream.
class rng64 {
public:
    // Recorded in generated metadata; bump the suffix if draws ever change.
    static constexpr std::string_view algorithm = "mt19937_64/v1";

    explicit rng64(std::uint64_t seed) : engine_(seed) {}

    // Uniform on the open interval (0, 1).
    double uniform01() {
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    }

    // Uniform on [0, n), unbiased by rejection.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v;
        do {
            v = engine_();
        } while (v >= limit);
        return v % n;
    }

private:
    std::mt19937_64 engine_;
};

} // namespace topnpred
