#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace rsgbm {

/// Raw Philox4x32-10 block function (counter-based, bijective per key).
inline std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                                  std::array<std::uint32_t, 2> key) {
    constexpr std::uint32_t M0 = 0xD2511F53u;
    constexpr std::uint32_t M1 = 0xCD9E8D57u;
    constexpr std::uint32_t W0 = 0x9E3779B9u;
    constexpr std::uint32_t W1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        if (round) {
            key[0] += W0;
            key[1] += W1;
        }
        std::uint64_t p0 = static_cast<std::uint64_t>(M0) * ctr[0];
        std::uint64_t p1 = static_cast<std::uint64_t>(M1) * ctr[2];
        ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
               static_cast<std::uint32_t>(p1),
               static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
               static_cast<std::uint32_t>(p0)};
    }
    return ctr;
}

// Counter-based random stream keyed by the master seed, with the 64-bit
// substream index in the counter. A given (seed, substream) pair yields the
// same draw sequence on every platform, thread count, and run — which is what
// makes parallel Monte Carlo results independent of scheduling. The
// std::random distributions make no such cross-implementation guarantee, so
// uniforms, Box-Muller normals and exponentials are produced here directly.
class PhiloxStream {
public:
    PhiloxStream(std::uint64_t master_seed, std::uint64_t substream)
        : key_{static_cast<std::uint32_t>(master_seed),
               static_cast<std::uint32_t>(master_seed >> 32)},
          base_{static_cast<std::uint32_t>(substream),
                static_cast<std::uint32_t>(substream >> 32)} {}

    std::uint32_t next_u32() {
        if (pos_ == 4) {
            buf_ = philox4x32_10({base_[0], base_[1], block_++, 0u}, key_);
            pos_ = 0;
        }
        return buf_[pos_++];
    }

    std::uint64_t next_u64() {
        std::uint64_t hi = next_u32();
        return (hi << 32) | next_u32();
    }

    /// Uniform on the open interval (0,1): never returns 0 or 1, so logs and
    /// inverse-CDF transforms stay finite.
    double uniform_open() {
        return (static_cast<double>(next_u64() >> 12) + 0.5) * 0x1p-52;
    }

    /// Standard normal via Box-Muller; the second draw of each pair is cached.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform_open();
        double u2 = uniform_open();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    double exponential(double rate) { return -std::log(uniform_open()) / rate; }

private:
    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 2> base_;
    std::uint32_t block_ = 0;
    std::array<std::uint32_t, 4> buf_ = {};
    int pos_ = 4;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace rsgbm
