#pragma once

#include <cstdint>

namespace bconcord {

// Deterministic generator addressed by (seed, stream): xoshiro256++ state
// filled from a splitmix64 run over the combined id. Identical (seed, stream)
// gives a bit-identical draw sequence regardless of host or thread count, so
// chains, replicates and the data generator each get their own stream.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed, std::uint64_t stream = 0);

    std::uint64_t next_u64();

    // Uniform on [0,1) with 53 random bits.
    double uniform();
    // Uniform on (0,1], safe for log().
    double uniform_pos();
    // Uniform integer in [0, n), modulo-rejection (unbiased).
    std::uint64_t uniform_int(std::uint64_t n);

    // Standard normal via the Marsaglia polar method (cached spare).
    double normal();
    double normal(double mean, double sd) { return mean + sd * normal(); }

    double exponential(double rate);

    // Gamma(shape, rate) by Marsaglia-Tsang; valid for any shape > 0
    // (shape < 1 via the boost trick).
    double gamma(double shape, double rate);

    // InvGamma(shape, scale beta): reciprocal of Gamma(shape, rate=beta).
    double inv_gamma(double shape, double beta) { return 1.0 / gamma(shape, beta); }

    // Normal(mean, sd^2) conditioned on x > lower. Inverse-CDF when the
    // bound is within 5 sd of the mean, Robert rejection in the far tail.
    double trunc_normal_lower(double mean, double sd, double lower);

private:
    std::uint64_t s_[4];
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Standard normal CDF and its inverse (Wichura's AS 241, double precision).
double norm_cdf(double x);
double norm_quantile(double prob);

}  // namespace bconcord
