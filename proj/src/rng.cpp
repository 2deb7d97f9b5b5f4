#include "bconcord/rng.hpp"

#include <cmath>
#include <limits>

#include "bconcord/errors.hpp"

namespace bconcord {

namespace {

inline std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace

SeededRng::SeededRng(std::uint64_t seed, std::uint64_t stream) {
    // distinct streams land far apart in splitmix64's sequence space
    std::uint64_t sm = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    for (auto& w : s_) w = splitmix64(sm);
}

std::uint64_t SeededRng::next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double SeededRng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double SeededRng::uniform_pos() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
}

std::uint64_t SeededRng::uniform_int(std::uint64_t n) {
    if (n == 0) throw InvalidInput("uniform_int needs n > 0");
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t r;
    do {
        r = next_u64();
    } while (r >= limit);
    return r % n;
}

double SeededRng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u, v, s;
    do {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
}

double SeededRng::exponential(double rate) {
    return -std::log(uniform_pos()) / rate;
}

double SeededRng::gamma(double shape, double rate) {
    if (!(shape > 0.0) || !(rate > 0.0))
        throw InvalidInput("gamma requires positive shape and rate");
    if (shape < 1.0) {
        // boost: X ~ Gamma(shape+1), X * U^(1/shape) ~ Gamma(shape)
        const double g = gamma(shape + 1.0, 1.0);
        const double u = uniform_pos();
        return g * std::pow(u, 1.0 / shape) / rate;
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = uniform_pos();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / rate;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v / rate;
    }
}

double norm_cdf(double x) {
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

// AS 241 algorithm PPND16 (Wichura 1988): inverse normal CDF to ~1e-16.
double norm_quantile(double prob) {
    if (!(prob > 0.0 && prob < 1.0))
        throw InvalidInput("norm_quantile needs prob in (0,1)");
    const double q = prob - 0.5;
    if (std::abs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q *
               (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                     6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
                   1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
                 1.3314166789178437745e2) * r + 3.3871328727963666080e0) /
               (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                     3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
                   5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
                 4.2313330701600911252e1) * r + 1.0);
    }
    double r = (q < 0.0) ? prob : 1.0 - prob;
    r = std::sqrt(-std::log(r));
    double val;
    if (r <= 5.0) {
        r -= 1.6;
        val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                    2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
                  3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
                4.63033784615654529590e0) * r + 1.42343711074968357734e0) /
              (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                    1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                  6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
                2.05319162663775882187e0) * r + 1.0);
    } else {
        r -= 5.0;
        val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                    1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                  2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
                5.46378491116411436990e0) * r + 6.65790464350110377720e0) /
              (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                    1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                  1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
                5.99832206555887937690e-1) * r + 1.0);
    }
    return (q < 0.0) ? -val : val;
}

double SeededRng::trunc_normal_lower(double mean, double sd, double lower) {
    if (!(sd > 0.0)) throw InvalidInput("trunc_normal_lower needs sd > 0");
    const double alpha = (lower - mean) / sd;
    if (alpha < 5.0) {
        const double p_lo = norm_cdf(alpha);
        const double u = uniform();
        double prob = p_lo + u * (1.0 - p_lo);
        if (prob >= 1.0) prob = std::nextafter(1.0, 0.0);
        if (prob <= p_lo) prob = std::nextafter(p_lo, 1.0);
        double x = mean + sd * norm_quantile(prob);
        if (x <= lower) x = std::nextafter(lower, std::numeric_limits<double>::infinity());
        return x;
    }
    // Robert (1995) exponential rejection for a far-tail bound.
    const double astar = (alpha + std::sqrt(alpha * alpha + 4.0)) / 2.0;
    for (;;) {
        const double z = alpha + exponential(astar);
        const double d = z - astar;
        if (uniform() <= std::exp(-0.5 * d * d)) return mean + sd * z;
    }
}

}  // namespace bconcord
