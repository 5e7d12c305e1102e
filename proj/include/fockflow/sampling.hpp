#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace fockflow {

// Philox4x32-10 counter-based block cipher (Salmon et al., SC'11).
// Pure function of (counter, key): any partitioning of work that preserves
// the counter/key assignment reproduces the exact same random values.
struct Philox4x32 {
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter block(Counter ctr, Key key) {
        constexpr std::uint64_t M0 = 0xD2511F53ull;
        constexpr std::uint64_t M1 = 0xCD9E8D57ull;
        constexpr std::uint32_t W0 = 0x9E3779B9u;
        constexpr std::uint32_t W1 = 0xBB67AE85u;
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = M0 * ctr[0];
            const std::uint64_t p1 = M1 * ctr[2];
            const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const auto lo0 = static_cast<std::uint32_t>(p0);
            const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
            const auto lo1 = static_cast<std::uint32_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
            key[0] += W0;
            key[1] += W1;
        }
        return ctr;
    }
};

// A deterministic random substream addressed by (seed, lane, tag).
// lane is typically a pulse or slot index; tag separates purposes within the
// lane (emission, routing, detection, ...). Each substream owns a 32-bit
// block counter, i.e. 16 uint32 draws per block times 2^32 blocks.
class RandomStream {
   public:
    RandomStream(std::uint64_t seed, std::uint64_t lane, std::uint32_t tag = 0)
        : key_{static_cast<std::uint32_t>(seed),
               static_cast<std::uint32_t>(seed >> 32)},
          lane_lo_(static_cast<std::uint32_t>(lane)),
          lane_hi_(static_cast<std::uint32_t>(lane >> 32)),
          tag_(tag) {}

    std::uint32_t bits32() {
        if (word_ == 4) refill();
        return buffer_[word_++];
    }

    std::uint64_t bits64() {
        const std::uint64_t lo = bits32();
        const std::uint64_t hi = bits32();
        return lo | (hi << 32);
    }

    // uniform in [0,1), 53 significant bits
    double uniform() { return static_cast<double>(bits64() >> 11) * 0x1.0p-53; }

    // uniform in (0,1]
    double uniform_pos() { return 1.0 - uniform(); }

    // standard normal via Box-Muller; consumes exactly two uniforms
    double normal() {
        const double r = std::sqrt(-2.0 * std::log(uniform_pos()));
        const double a = 6.28318530717958647693 * uniform();
        return r * std::cos(a);
    }

    // exponential with the given mean
    double exponential(double mean) { return -mean * std::log(uniform_pos()); }

   private:
    void refill() {
        buffer_ = Philox4x32::block({block_++, tag_, lane_lo_, lane_hi_}, key_);
        word_ = 0;
    }

    Philox4x32::Key key_;
    std::uint32_t lane_lo_, lane_hi_, tag_;
    std::uint32_t block_ = 0;
    Philox4x32::Counter buffer_{};
    int word_ = 4;
};

// Normal quantile function (inverse CDF), Wichura's AS241 PPND16 rational
// approximations; absolute error below 1e-15 over (0,1).
inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw std::domain_error("normal_quantile: p must lie in (0,1)");
    const double q = p - 0.5;
    if (std::abs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        const double num =
            (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
                  6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
                1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
              1.3314166789178437745e+2) * r + 3.3871328727963666080e+0);
        const double den =
            (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
                  3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
                5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
              4.2313330701600911252e+1) * r + 1.0);
        return q * num / den;
    }
    double r = (q < 0.0) ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double val;
    if (r <= 5.0) {
        r -= 1.6;
        const double num =
            (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                  2.41780725177450611770e-1) * r + 1.27045825245236838258e+0) * r +
                3.64784832476320460504e+0) * r + 5.76949722146069140550e+0) * r +
              4.63033784615654529590e+0) * r + 1.42343711074968357734e+0);
        const double den =
            (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                  1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                6.89767334985100004550e-1) * r + 1.67638483018380384940e+0) * r +
              2.05319162663775882187e+0) * r + 1.0);
        val = num / den;
    } else {
        r -= 5.0;
        const double num =
            (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                  1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                2.96560571828504891230e-1) * r + 1.78482653991729133580e+0) * r +
              5.46378491116411436990e+0) * r + 6.65790464350110377720e+0);
        const double den =
            (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                  1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
              5.99832206555887937690e-1) * r + 1.0);
        val = num / den;
    }
    return (q < 0.0) ? -val : val;
}

}  // namespace fockflow
