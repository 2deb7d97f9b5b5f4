#include <cmath>
#include <vector>

#include "doctest.h"

#include "bconcord/bssc.hpp"
#include "bconcord/errors.hpp"
#include "bconcord/exact.hpp"
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

PrecisionState random_state(int p, std::uint64_t seed) {
    SeededRng rng(seed, 1);
    PrecisionState st(p);
    for (int j = 0; j < p; ++j) st.diag[j] = 0.3 + rng.uniform();
    for (Eigen::Index f = 0; f < st.offdiag.size(); ++f) st.offdiag[f] = 0.4 * rng.normal();
    return st;
}

// argmax of a smooth unimodal f by bisecting the sign of a central-difference
// derivative; value-based searches bottom out near sqrt(eps), this does not
template <class F>
double numeric_argmax(F f, double lo, double hi) {
    auto slope = [&f](double w) {
        const double h = w * 1e-5;
        return (f(w + h) - f(w - h)) / (2.0 * h);
    };
    for (int it = 0; it < 120; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (slope(mid) > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

TEST_SUITE("bssc") {

TEST_CASE("conditional coefficients match a brute-force quadratic expansion") {
    for (int trial = 0; trial < 40; ++trial) {
        const int p = 3 + trial % 4;
        const int n = 25;
        const SampleCovariance S = random_gram(p, n, 200 + trial);
        const PrecisionState st = random_state(p, 300 + trial);
        SpikeSlabConfig cfg;
        cfg.lambda0 = 1.7;

        for (int j = 0; j < p - 1; ++j)
            for (int k = j + 1; k < p; ++k) {
                const auto cond =
                    offdiag_conditional(st, S, cfg, make_pair_index(j, k, p), n);

                // tr(Omega^2 S) as a function of the single entry omega_jk is
                // a parabola; read its coefficients off three evaluations.
                auto trace_at = [&](double w) {
                    PrecisionState t = st;
                    t.set_off(j, k, w);
                    const Matrix m = t.dense();
                    return (m * m * S.m).trace();
                };
                const double g0 = trace_at(0.0), gp = trace_at(1.0), gm = trace_at(-1.0);
                const double a_quad = 0.5 * (gp + gm - 2.0 * g0);
                const double b_lin = 0.25 * (gp - gm);

                CHECK_LT(std::abs(cond.a - (a_quad + cfg.lambda0 / n)), 1e-10);
                CHECK_LT(std::abs(cond.b - b_lin), 1e-10);
                CHECK_LT(std::abs(cond.mean - (-cond.b / cond.a)), 1e-15);
                CHECK_LT(std::abs(cond.var - 1.0 / (n * cond.a)), 1e-15);
            }
    }
}

TEST_CASE("inclusion odds match numerical integration") {
    const int p = 4, n = 30;
    const SampleCovariance S = random_gram(p, n, 250);
    const PrecisionState st = random_state(p, 251);
    SpikeSlabConfig cfg;
    cfg.q = 0.3;
    cfg.lambda0 = 2.5;

    const auto cond = offdiag_conditional(st, S, cfg, make_pair_index(1, 3, p), n);
    // slab mass against the spike, integrating the joint over omega_13
    const double a_quad = cond.a - cfg.lambda0 / n;
    const double center = -cond.b / cond.a;
    const double width = 12.0 / std::sqrt(n * cond.a);
    const int grid = 200001;
    const double step = 2.0 * width / (grid - 1);
    double integral = 0.0;
    for (int i = 0; i < grid; ++i) {
        const double x = center - width + i * step;
        const double logf = -0.5 * n * (a_quad * x * x + 2.0 * cond.b * x) -
                            0.5 * cfg.lambda0 * x * x;
        const double w = (i == 0 || i == grid - 1) ? 0.5 : 1.0;
        integral += w * std::exp(logf);
    }
    integral *= step;
    const double odds =
        cfg.q / (1.0 - cfg.q) * std::sqrt(cfg.lambda0 / (2.0 * M_PI)) * integral;
    const double expected = odds / (1.0 + odds);
    CHECK_LT(std::abs(cond.p_incl - expected) / expected, 1e-7);
}

TEST_CASE("diagonal mode maximizes the conditional and solves its root equation") {
    SeededRng rng(42, 0);
    for (int trial = 0; trial < 100; ++trial) {
        const int p = 3 + trial % 3;
        const int n = 10 + static_cast<int>(rng.uniform_int(90));
        const SampleCovariance S = random_gram(p, n, 400 + trial);
        const PrecisionState st = random_state(p, 500 + trial);
        SpikeSlabConfig cfg;
        cfg.gamma0 = 0.1 + rng.uniform() * 3.0;
        const int j = static_cast<int>(rng.uniform_int(p));

        const double mode = diag_update(st, S, cfg, j, n);
        REQUIRE_GT(mode, 0.0);

        // root identity with c1 assembled from scratch
        const double sjj = S(j, j);
        double bj = 0.0;
        for (int k = 0; k < p; ++k)
            if (k != j) bj += S(j, k) * st.off(j, k);
        const double c1 = cfg.gamma0 + n * bj;
        CHECK_LT(std::abs(n * sjj * mode * mode + c1 * mode - n), 1e-9);

        // and the mode really is the argmax of the full conditional profile
        auto full = [&](double w) {
            PrecisionState t = st;
            t.diag[j] = w;
            const Matrix m = t.dense();
            return n * std::log(w) - 0.5 * n * (m * m * S.m).trace() - cfg.gamma0 * w;
        };
        const double argmax = numeric_argmax(full, mode / 64.0, mode * 64.0);
        CHECK_LT(std::abs(argmax - mode) / mode, 1e-8);
    }
}

TEST_CASE("vanishing mixture weight empties the pattern, and the reverse fills it") {
    const int p = 4, n = 50;
    const SampleCovariance S = random_gram(p, n, 600);
    SpikeSlabConfig cfg;
    cfg.burn_in = 50;
    cfg.keep = 100;
    cfg.store_draws = true;

    cfg.q = 1e-300;
    const ChainTrace empty = run_chain(S, n, cfg, SeededRng(1, 1));
    CHECK_EQ(empty.inclusion().maxCoeff(), 0.0);
    for (const auto& draw : empty.draws) CHECK_EQ(pattern_of(draw).count(), 0u);

    cfg.q = 1.0 - 1e-16;
    const ChainTrace full = run_chain(S, n, cfg, SeededRng(1, 1));
    CHECK_EQ(full.inclusion().minCoeff(), 1.0);
}

TEST_CASE("density cap holds along the whole trajectory") {
    const int p = 5, n = 40;
    const SampleCovariance S = random_gram(p, n, 700);
    SpikeSlabConfig cfg;
    cfg.burn_in = 100;
    cfg.keep = 300;
    cfg.tau = 3;
    cfg.store_draws = true;
    cfg.q = 0.9;  // pressure toward dense patterns
    const ChainTrace trace = run_chain(S, n, cfg, SeededRng(2, 1));
    REQUIRE_FALSE(trace.draws.empty());
    for (const auto& draw : trace.draws) CHECK_LE(pattern_of(draw).count(), 3u);
}

TEST_CASE("hyperparameter resampling has the conjugate means") {
    const int p = 3;
    PrecisionState st(p);
    st.set_off(0, 1, 1.0);   // lambda posterior rate 0.5 + s
    st.set_off(0, 2, 0.0);   // lambda posterior rate s: the runaway direction
    st.diag << 2.0, 1.0, 1.0;

    SpikeSlabConfig cfg;
    cfg.hyper = GammaHyper{1e-4, 1e-8};
    SeededRng rng(31, 0);

    const int draws = 20000;
    double lam_edge = 0.0, lam_null = 0.0, gam0 = 0.0;
    for (int i = 0; i < draws; ++i) {
        update_hyperparameters(st, cfg, rng);
        lam_edge += cfg.lambda[0];
        lam_null += cfg.lambda[1];
        gam0 += cfg.gamma[0];
    }
    lam_edge /= draws;
    lam_null /= draws;
    gam0 /= draws;

    const double r = 1e-4, s = 1e-8;
    CHECK_LT(std::abs(lam_edge - (r + 0.5) / (0.5 + s)) / ((r + 0.5) / (0.5 + s)), 0.05);
    // with omega = 0 the rate collapses to s and the draw explodes to ~5e7
    CHECK_LT(std::abs(lam_null - (r + 0.5) / s) / ((r + 0.5) / s), 0.05);
    CHECK_LT(std::abs(gam0 - (r + 1.0) / (2.0 + s)) / ((r + 1.0) / (2.0 + s)), 0.05);
}

TEST_CASE("sampler inclusion agrees with exact enumeration at fixed diagonals") {
    const int p = 3, n = 40;
    const SampleCovariance S = random_gram(p, n, 800);
    Vector diag(3);
    diag << 1.1, 0.9, 1.4;

    SpikeSlabConfig cfg;
    cfg.q = 0.4;
    cfg.lambda0 = 1.2;
    cfg.update_diagonals = false;
    cfg.burn_in = 2000;
    cfg.keep = 40000;

    PrecisionState init(p);
    init.diag = diag;
    const ChainTrace trace = run_chain(S, n, cfg, init, SeededRng(5, 1));
    const Vector mcmc = trace.inclusion();
    const Vector oracle = marginal_inclusion(enumerate_patterns(S, n, diag, cfg));
    for (Eigen::Index f = 0; f < mcmc.size(); ++f)
        CHECK_LT(std::abs(mcmc[f] - oracle[f]), 0.02);
}

TEST_CASE("null model keeps the median pattern empty") {
    const int p = 5, n = 400;
    SeededRng data_rng(9, 1);
    const Matrix y = sample_mvn(PrecisionState::identity(p), n, data_rng);
    const SampleCovariance S = sample_covariance(y);
    SpikeSlabConfig cfg;
    cfg.q = 0.2;
    cfg.burn_in = 500;
    cfg.keep = 2000;
    const ChainTrace trace = run_chain(S, n, cfg, SeededRng(9, 2));
    const PosteriorSummary summ = summarize(trace, trace.diag_mean(), 0.5);
    CHECK_EQ(summ.selected.count(), 0u);
}

TEST_CASE("summaries reduce the trace the documented way") {
    ChainTrace trace(3);
    trace.T = 4;
    trace.include_count = {4, 2, 0};
    trace.value_sum[0] = 2.0;   // mean over included draws = 0.5
    trace.value_sum[1] = -3.0;  // included half the time, mean -1.5
    trace.value_sum[2] = 0.0;
    Vector diag_mean(3);
    diag_mean << 1.0, 2.0, 3.0;

    const PosteriorSummary summ = summarize(trace, diag_mean, 0.5);
    CHECK_EQ(summ.inclusion[0], 1.0);
    CHECK_EQ(summ.inclusion[1], 0.5);
    CHECK_EQ(summ.inclusion[2], 0.0);
    CHECK(summ.selected.test(0));
    CHECK_FALSE(summ.selected.test(1));  // threshold is strict
    CHECK_FALSE(summ.selected.test(2));
    CHECK_EQ(summ.estimate.off(0, 1), 0.5);
    CHECK_EQ(summ.estimate.off(0, 2), 0.0);  // unselected entries are zeroed
    CHECK_EQ(summ.estimate.off(1, 2), 0.0);
    CHECK_EQ(summ.estimate.diag, diag_mean);
}

TEST_CASE("thinning stores the expected number of draws") {
    const int p = 3, n = 30;
    const SampleCovariance S = random_gram(p, n, 900);
    SpikeSlabConfig cfg;
    cfg.burn_in = 10;
    cfg.keep = 10;
    cfg.thin = 3;
    cfg.store_draws = true;
    const ChainTrace trace = run_chain(S, n, cfg, SeededRng(3, 1));
    CHECK_EQ(trace.T, 10);
    CHECK_EQ(trace.draws.size(), 4u);  // kept sweeps 0,3,6,9
}

TEST_CASE("chains replay exactly and merge independently of thread count") {
    const int p = 6, n = 60;
    const SampleCovariance S = random_gram(p, n, 1000);
    SpikeSlabConfig cfg;
    cfg.burn_in = 100;
    cfg.keep = 200;

    const ChainTrace once = run_chains(S, n, cfg, 4, 1, 77);
    const ChainTrace again = run_chains(S, n, cfg, 4, 1, 77);
    const ChainTrace wide = run_chains(S, n, cfg, 4, 4, 77);

    CHECK_EQ(once.T, 800);
    CHECK(once.include_count == again.include_count);
    CHECK_EQ(once.value_sum, again.value_sum);
    CHECK_EQ(once.diag_sum, again.diag_sum);
    CHECK(once.include_count == wide.include_count);
    CHECK_EQ(once.value_sum, wide.value_sum);
    CHECK_EQ(once.diag_sum, wide.diag_sum);

    const ChainTrace reseeded = run_chains(S, n, cfg, 4, 1, 78);
    CHECK(once.include_count != reseeded.include_count);
}

TEST_CASE("config validation") {
    SpikeSlabConfig cfg;
    cfg.q = 0.0;
    CHECK_THROWS_AS(cfg.validate(4), InvalidInput);
    cfg = SpikeSlabConfig{};
    cfg.burn_in = 0;
    CHECK_THROWS_AS(cfg.validate(4), InvalidInput);
    cfg = SpikeSlabConfig{};
    cfg.tau = 0;
    CHECK_THROWS_AS(cfg.validate(4), InvalidInput);
    cfg = SpikeSlabConfig{};
    cfg.tau = pair_count(4) + 1;
    CHECK_THROWS_AS(cfg.validate(4), InvalidInput);
    cfg = SpikeSlabConfig{};
    cfg.lambda0 = -1.0;
    CHECK_THROWS_AS(cfg.validate(4), InvalidInput);
}

}  // TEST_SUITE
