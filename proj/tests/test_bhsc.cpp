#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"

#include "bconcord/bhsc.hpp"
#include "bconcord/bssc.hpp"
#include "bconcord/errors.hpp"
#include "bconcord/rng.hpp"
#include "bconcord/simulate.hpp"
#include "bconcord/types.hpp"

using namespace bconcord;

namespace {

SampleCovariance random_gram(int p, int n, std::uint64_t seed) {
    SeededRng rng(seed, 0);
    Matrix y(n, p);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < p; ++j) y(i, j) = rng.normal();
    return sample_covariance(y);
}

double ks_distance_sorted(const std::vector<double>& xs, double (*cdf)(double)) {
    const double nd = static_cast<double>(xs.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double F = cdf(xs[i]);
        const double above = static_cast<double>(i + 1) / nd - F;
        const double below = F - static_cast<double>(i) / nd;
        worst = std::max({worst, above, below});
    }
    return worst;
}

double half_cauchy_cdf(double x) { return (2.0 / M_PI) * std::atan(x); }

}  // namespace

TEST_SUITE("bhsc") {

TEST_CASE("inverse-gamma composition reproduces the half-Cauchy scale") {
    // lambda^2 | a ~ InvGamma(1/2, 1/a), a ~ InvGamma(1/2, 1)  =>  lambda ~ C+(0,1)
    SeededRng rng(911, 0);
    const std::size_t N = 100000;
    std::vector<double> draws(N);
    for (auto& x : draws) {
        const double a = rng.inv_gamma(0.5, 1.0);
        const double lam2 = rng.inv_gamma(0.5, 1.0 / a);
        x = std::sqrt(lam2);
    }
    std::sort(draws.begin(), draws.end());
    CHECK(ks_distance_sorted(draws, half_cauchy_cdf) < 0.01);
}

TEST_CASE("auxiliary conditional has the right median") {
    // nu | lambda^2 = 1 is InvGamma(1, 2); its mean diverges, so check the
    // median 2/ln 2 instead (3.5 standard errors of the sample median).
    SeededRng rng(912, 0);
    const std::size_t N = 100000;
    std::vector<double> draws(N);
    for (auto& x : draws) x = rng.inv_gamma(1.0, 2.0);
    std::nth_element(draws.begin(), draws.begin() + N / 2, draws.end());
    const double med = draws[N / 2];
    CHECK(med == doctest::Approx(2.0 / std::log(2.0)).epsilon(0.016));
}

TEST_CASE("one sweep follows the documented update order and conditionals") {
    // p = 2 keeps a single pair, so every conditional in the sweep can be
    // mirrored draw by draw with a second generator on the same stream.
    const int p = 2;
    const int n = 60;
    const double nd = static_cast<double>(n);
    const SampleCovariance S = random_gram(p, n, 7100);

    PrecisionState st(p);
    st.diag << 1.3, 0.8;
    st.offdiag << 0.25;
    HorseshoeState hs(p);
    hs.lambda2[0] = 0.7;
    hs.nu[0] = 1.9;
    hs.tau2 = 0.5;
    hs.eps = 1.4;

    HorseshoeConfig cfg;
    cfg.diag_mode = DiagMode::PointMass;

    SeededRng subject(77, 3);
    SeededRng mirror(77, 3);

    PrecisionState out = st;
    HorseshoeState hs_out = hs;
    bhsc_sweep(out, hs_out, S, n, cfg, subject);

    // pair (0,1)
    const Matrix omega0 = st.dense();
    Matrix C = S.m * omega0;
    const double a = S(0, 0) + S(1, 1) + 1.0 / (nd * hs.lambda2[0] * hs.tau2);
    const double b = C(1, 0) + C(0, 1) - st.offdiag[0] * (S(0, 0) + S(1, 1));
    const double value = -b / a + mirror.normal() / std::sqrt(nd * a);
    CHECK(out.offdiag[0] == doctest::Approx(value).epsilon(1e-12));

    const double lam2 = 1.0 / mirror.gamma(1.0, 1.0 / hs.nu[0] + value * value / (2.0 * hs.tau2));
    CHECK(hs_out.lambda2[0] == doctest::Approx(lam2).epsilon(1e-12));
    const double nu = 1.0 / mirror.gamma(1.0, 1.0 + 1.0 / lam2);
    CHECK(hs_out.nu[0] == doctest::Approx(nu).epsilon(1e-12));

    // global scale drawn once, after the pair loop, with a log-space rate
    const double log_sum = 2.0 * std::log(std::abs(value)) - std::log(2.0) - std::log(lam2);
    const double log_inv_eps = -std::log(hs.eps);
    const double hi = std::max(log_inv_eps, log_sum);
    const double lo = std::min(log_inv_eps, log_sum);
    const double log_beta = hi + std::log1p(std::exp(lo - hi));
    const double shape = 0.5 + 1.0 / 2.0;
    const double tau2 = std::exp(log_beta - std::log(mirror.gamma(shape, 1.0)));
    CHECK(hs_out.tau2 == doctest::Approx(tau2).epsilon(1e-12));
    const double eps = 1.0 / mirror.gamma(1.0, 1.0 + 1.0 / tau2);
    CHECK(hs_out.eps == doctest::Approx(eps).epsilon(1e-12));

    // diagonals last, closed-form mode with the exponential rate gamma0
    Matrix omega_mid = omega0;
    omega_mid(0, 1) = omega_mid(1, 0) = value;
    const Matrix C_mid = S.m * omega_mid;
    for (int j = 0; j < p; ++j) {
        const double sjj = S(j, j);
        const double bj = C_mid(j, j) - st.diag[j] * sjj;
        const double c1 = cfg.gamma0 + nd * bj;
        const double mode = 2.0 * nd / (c1 + std::sqrt(c1 * c1 + 4.0 * nd * nd * sjj));
        CHECK(out.diag[j] == doctest::Approx(mode).epsilon(1e-12));
    }
}

TEST_CASE("huge local-global scales recover the flat-slab conditional") {
    const int p = 4;
    const int n = 50;
    const SampleCovariance S = random_gram(p, n, 7200);

    PrecisionState st(p);
    SeededRng noise(7201, 0);
    for (int j = 0; j < p; ++j) st.diag[j] = 0.6 + noise.uniform();
    for (Eigen::Index f = 0; f < st.offdiag.size(); ++f) st.offdiag[f] = 0.3 * noise.normal();

    HorseshoeState hs(p);
    hs.lambda2.setConstant(1e12);
    hs.tau2 = 1e6;

    SpikeSlabConfig flat;
    flat.lambda0 = 1e-12;  // the spike-and-slab "a" with a vanishing slab precision
    const double nd = static_cast<double>(n);

    HorseshoeConfig cfg;
    cfg.update_diagonals = false;

    // mirror only the pair normals; lambda2/nu/tau2/eps consume gammas in between
    SeededRng subject(78, 9);
    SeededRng mirror(78, 9);
    PrecisionState out = st;
    HorseshoeState hs_out = hs;
    bhsc_sweep(out, hs_out, S, n, cfg, subject);

    PrecisionState track = st;
    std::size_t f = 0;
    for (int j = 0; j < p - 1; ++j)
        for (int k = j + 1; k < p; ++k, ++f) {
            const auto cond = offdiag_conditional(track, S, flat, PairIndex{j, k, f}, n);
            const double quad = S(j, j) + S(k, k);
            CHECK(cond.a == doctest::Approx(quad).epsilon(1e-9));
            const double drawn = cond.mean + mirror.normal() / std::sqrt(nd * quad);
            CHECK(out.offdiag[f] == doctest::Approx(drawn).epsilon(1e-6));
            track.offdiag[f] = out.offdiag[f];
            mirror.gamma(1.0, 1.0);  // discard: lambda2 update
            mirror.gamma(1.0, 1.0);  // discard: nu update
        }
}

TEST_CASE("a strong edge is selected across seeds") {
    const int p = 3;
    const int n = 500;
    PrecisionState truth(p);
    truth.diag << 1.2, 1.2, 1.0;
    truth.offdiag[flat_index(0, 1, p)] = 0.5;

    HorseshoeConfig cfg;
    cfg.burn_in = 400;
    cfg.keep = 800;

    int hits = 0;
    for (int seed = 0; seed < 20; ++seed) {
        SeededRng data_rng(4000 + seed, 1);
        const Matrix y = sample_mvn(truth, n, data_rng);
        const SampleCovariance S = sample_covariance(y);
        const auto summ = run_chain_bhsc(S, n, cfg, SeededRng(4000 + seed, 2));

        for (Eigen::Index f = 0; f < summ.offdiag_ci_lo.size(); ++f) {
            CHECK(summ.offdiag_ci_lo[f] < summ.offdiag_ci_hi[f]);
            const bool outside =
                summ.offdiag_ci_lo[f] > 0.0 || summ.offdiag_ci_hi[f] < 0.0;
            CHECK(summ.selected.test(static_cast<std::size_t>(f)) == outside);
        }
        if (summ.selected.test(0, 1)) ++hits;
    }
    CHECK(hits >= 18);
}

TEST_CASE("null data leaves the intervals straddling zero") {
    const int p = 5;
    const int n = 400;
    PrecisionState truth(p);  // identity
    SeededRng data_rng(4100, 1);
    const Matrix y = sample_mvn(truth, n, data_rng);
    const SampleCovariance S = sample_covariance(y);

    HorseshoeConfig cfg;
    cfg.burn_in = 500;
    cfg.keep = 1500;
    const auto summ = run_chain_bhsc(S, n, cfg, SeededRng(4100, 2));
    CHECK(summ.selected.count() <= 1);
    // shrinkage pulls the posterior means well inside the empirical scatter
    CHECK(summ.offdiag_mean.cwiseAbs().maxCoeff() < 0.1);
}

TEST_CASE("hyper state stays positive and finite along the chain") {
    const int p = 30;
    const int n = 90;
    PrecisionState truth(p);
    SeededRng data_rng(4200, 1);
    const Matrix y = sample_mvn(truth, n, data_rng);
    const SampleCovariance S = sample_covariance(y);

    HorseshoeConfig cfg;
    PrecisionState st(p);
    HorseshoeState hs(p);
    SeededRng rng(4200, 2);
    for (int t = 0; t < 50; ++t) {
        bhsc_sweep(st, hs, S, n, cfg, rng);
        for (Eigen::Index f = 0; f < hs.lambda2.size(); ++f) {
            REQUIRE(std::isfinite(hs.lambda2[f]));
            REQUIRE(hs.lambda2[f] > 0.0);
            REQUIRE(std::isfinite(hs.nu[f]));
            REQUIRE(hs.nu[f] > 0.0);
            REQUIRE(std::isfinite(st.offdiag[f]));
        }
        REQUIRE(std::isfinite(hs.tau2));
        REQUIRE(hs.tau2 > 0.0);
        REQUIRE(std::isfinite(hs.eps));
        REQUIRE(hs.eps > 0.0);
        for (int j = 0; j < p; ++j) {
            REQUIRE(std::isfinite(st.diag[j]));
            REQUIRE(st.diag[j] > 0.0);
        }
    }
}

TEST_CASE("thinning keeps the expected number of stored draws") {
    const SampleCovariance S = random_gram(2, 40, 7300);
    HorseshoeConfig cfg;
    cfg.burn_in = 5;
    cfg.keep = 10;
    cfg.thin = 3;
    const auto summ = run_chain_bhsc(S, 40, cfg, SeededRng(1, 1));
    CHECK(summ.T == 4);  // retained sweeps 0,3,6,9
}

TEST_CASE("chains replay exactly under a fixed seed") {
    const SampleCovariance S = random_gram(4, 60, 7400);
    HorseshoeConfig cfg;
    cfg.burn_in = 50;
    cfg.keep = 200;

    const auto first = run_chain_bhsc(S, 60, cfg, SeededRng(5, 2));
    const auto second = run_chain_bhsc(S, 60, cfg, SeededRng(5, 2));
    CHECK((first.offdiag_mean - second.offdiag_mean).cwiseAbs().maxCoeff() == 0.0);
    CHECK((first.diag_mean - second.diag_mean).cwiseAbs().maxCoeff() == 0.0);
    CHECK((first.offdiag_ci_lo - second.offdiag_ci_lo).cwiseAbs().maxCoeff() == 0.0);
    CHECK((first.offdiag_ci_hi - second.offdiag_ci_hi).cwiseAbs().maxCoeff() == 0.0);

    const auto other = run_chain_bhsc(S, 60, cfg, SeededRng(5, 3));
    CHECK((first.offdiag_mean - other.offdiag_mean).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("config validation") {
    const SampleCovariance S = random_gram(2, 30, 7500);
    HorseshoeConfig cfg;
    cfg.burn_in = 0;
    CHECK_THROWS_AS(run_chain_bhsc(S, 30, cfg, SeededRng(1, 1)), InvalidInput);
    cfg = {};
    cfg.thin = 0;
    CHECK_THROWS_AS(run_chain_bhsc(S, 30, cfg, SeededRng(1, 1)), InvalidInput);
    cfg = {};
    cfg.ci_level = 1.0;
    CHECK_THROWS_AS(run_chain_bhsc(S, 30, cfg, SeededRng(1, 1)), InvalidInput);
    cfg = {};
    cfg.gamma0 = 0.0;
    CHECK_THROWS_AS(run_chain_bhsc(S, 30, cfg, SeededRng(1, 1)), InvalidInput);
}

}  // TEST_SUITE
