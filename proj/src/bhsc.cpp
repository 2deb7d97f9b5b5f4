#include "bconcord/bhsc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "bconcord/errors.hpp"
#include "diag_draw.hpp"

namespace bconcord {

namespace {

// log-sum-exp accumulator for sum of omega^2 / (2 lambda^2): individual
// terms can overflow double when lambda2 underflows, the log-space total
// stays representable.
struct LogSumAcc {
    double mx = -std::numeric_limits<double>::infinity();
    double sum = 0.0;

    void add(double log_term) {
        if (log_term == -std::numeric_limits<double>::infinity()) return;
        if (log_term <= mx) {
            sum += std::exp(log_term - mx);
        } else {
            sum = sum * std::exp(mx - log_term) + 1.0;
            mx = log_term;
        }
    }
    double log_total() const {
        if (sum == 0.0) return -std::numeric_limits<double>::infinity();
        return mx + std::log(sum);
    }
};

// X ~ InvGamma(shape, beta) with beta given in log space: X = beta / G,
// G ~ Gamma(shape, 1), computed as exp(log beta - log G).
double inv_gamma_logbeta(SeededRng& rng, double shape, double log_beta) {
    const double g = rng.gamma(shape, 1.0);
    return std::exp(log_beta - std::log(g));
}

double quantile_sorted(const std::vector<double>& xs, double prob) {
    const double pos = prob * static_cast<double>(xs.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= xs.size()) return xs.back();
    const double frac = pos - static_cast<double>(lo);
    return xs[lo] * (1.0 - frac) + xs[lo + 1] * frac;
}

}  // namespace

void HorseshoeConfig::validate() const {
    if (burn_in < 1 || keep < 1) throw InvalidInput("burn_in and keep must be at least 1");
    if (thin < 1) throw InvalidInput("thin must be at least 1");
    if (!(ci_level > 0.0 && ci_level < 1.0))
        throw InvalidInput("credible level must lie strictly in (0,1)");
    if (!(gamma0 > 0.0)) throw InvalidInput("gamma must be positive");
}

PrecisionState HorseshoeSummary::mean_state() const {
    PrecisionState st(p);
    st.diag = diag_mean;
    st.offdiag = offdiag_mean;
    return st;
}

namespace {

void bhsc_sweep_dense(Matrix& omega, Matrix& C, HorseshoeState& hs,
                      const SampleCovariance& S, int n, const HorseshoeConfig& cfg,
                      SeededRng& rng) {
    const int p = static_cast<int>(omega.rows());
    const double nd = static_cast<double>(n);

    std::size_t f = 0;
    for (int j = 0; j < p - 1; ++j) {
        const double sjj = S(j, j);
        for (int k = j + 1; k < p; ++k, ++f) {
            const auto fi = static_cast<Eigen::Index>(f);
            const double skk = S(k, k);
            const double a = sjj + skk + 1.0 / (nd * hs.lambda2[fi] * hs.tau2);
            const double old = omega(j, k);
            const double b = C(k, j) + C(j, k) - old * (sjj + skk);
            const double value = -b / a + rng.normal() / std::sqrt(nd * a);
            const double delta = value - old;
            omega(j, k) = value;
            omega(k, j) = value;
            C.col(k) += delta * S.m.col(j);
            C.col(j) += delta * S.m.col(k);
            hs.lambda2[fi] =
                1.0 / rng.gamma(1.0, 1.0 / hs.nu[fi] + value * value / (2.0 * hs.tau2));
            hs.nu[fi] = 1.0 / rng.gamma(1.0, 1.0 + 1.0 / hs.lambda2[fi]);
        }
    }

    // global scale once per sweep, after the pair loop
    LogSumAcc acc;
    f = 0;
    for (int j = 0; j < p - 1; ++j)
        for (int k = j + 1; k < p; ++k, ++f) {
            const auto fi = static_cast<Eigen::Index>(f);
            const double w = omega(j, k);
            if (w != 0.0)
                acc.add(2.0 * std::log(std::abs(w)) - std::log(2.0) -
                        std::log(hs.lambda2[fi]));
        }
    const std::size_t m = pair_count(p);
    const double shape = 0.5 + static_cast<double>(m) / 2.0;
    double log_beta;
    const double log_inv_eps = -std::log(hs.eps);
    const double log_sum = acc.log_total();
    // log(1/eps + sum) via pairwise log-sum-exp
    if (log_sum == -std::numeric_limits<double>::infinity()) {
        log_beta = log_inv_eps;
    } else if (log_inv_eps > log_sum) {
        log_beta = log_inv_eps + std::log1p(std::exp(log_sum - log_inv_eps));
    } else {
        log_beta = log_sum + std::log1p(std::exp(log_inv_eps - log_sum));
    }
    hs.tau2 = inv_gamma_logbeta(rng, shape, log_beta);
    hs.eps = 1.0 / rng.gamma(1.0, 1.0 + 1.0 / hs.tau2);

    if (!cfg.update_diagonals) return;
    for (int j = 0; j < p; ++j) {
        const double sjj = S(j, j);
        const double bj = C(j, j) - omega(j, j) * sjj;
        const double c1 = cfg.gamma0 + nd * bj;
        const double mode = detail::diag_mode_root(c1, sjj, nd);
        const double value = cfg.diag_mode == DiagMode::PointMass
                                 ? mode
                                 : detail::draw_diag_discretized(c1, sjj, n, mode, rng);
        const double delta = value - omega(j, j);
        if (delta != 0.0) {
            omega(j, j) = value;
            C.col(j) += delta * S.m.col(j);
        }
    }
}

}  // namespace

void bhsc_sweep(PrecisionState& state, HorseshoeState& hs, const SampleCovariance& S,
                int n, const HorseshoeConfig& cfg, SeededRng& rng) {
    cfg.validate();
    Matrix omega = state.dense();
    Matrix C = S.m * omega;
    bhsc_sweep_dense(omega, C, hs, S, n, cfg, rng);
    state = PrecisionState::from_dense(omega);
}

HorseshoeSummary run_chain_bhsc(const SampleCovariance& S, int n,
                                const HorseshoeConfig& cfg, SeededRng rng,
                                const PrecisionState* init) {
    cfg.validate();
    const int p = S.p;
    const auto m = pair_count(p);

    Matrix omega = init ? init->dense() : Matrix::Identity(p, p).eval();
    Matrix C = S.m * omega;
    HorseshoeState hs(p);

    const int total = cfg.burn_in + cfg.keep;
    const auto stored = static_cast<std::size_t>((cfg.keep + cfg.thin - 1) / cfg.thin);
    std::vector<std::vector<double>> off_draws(m);
    std::vector<std::vector<double>> diag_draws(p);
    for (auto& v : off_draws) v.reserve(stored);
    for (auto& v : diag_draws) v.reserve(stored);

    int kept = 0;
    for (int t = 0; t < total; ++t) {
        if (t % 64 == 0) C.noalias() = S.m * omega;
        bhsc_sweep_dense(omega, C, hs, S, n, cfg, rng);
        if (t >= cfg.burn_in) {
            if (kept % cfg.thin == 0) {
                std::size_t f = 0;
                for (int j = 0; j < p - 1; ++j)
                    for (int k = j + 1; k < p; ++k, ++f) {
                        const double w = omega(j, k);
                        if (w == 0.0)
                            throw InternalInvariant("horseshoe draw produced an exact zero");
                        off_draws[f].push_back(w);
                    }
                for (int j = 0; j < p; ++j) diag_draws[j].push_back(omega(j, j));
            }
            ++kept;
        }
    }

    HorseshoeSummary out;
    out.p = p;
    out.T = static_cast<long long>(off_draws.empty() ? stored : off_draws[0].size());
    out.offdiag_mean = Vector::Zero(static_cast<Eigen::Index>(m));
    out.offdiag_ci_lo = Vector::Zero(static_cast<Eigen::Index>(m));
    out.offdiag_ci_hi = Vector::Zero(static_cast<Eigen::Index>(m));
    out.diag_mean = Vector::Zero(p);
    out.diag_ci_lo = Vector::Zero(p);
    out.diag_ci_hi = Vector::Zero(p);
    out.selected = SparsityPattern(p);
    const double alpha = 1.0 - cfg.ci_level;
    for (std::size_t f = 0; f < m; ++f) {
        auto& xs = off_draws[f];
        const auto fi = static_cast<Eigen::Index>(f);
        double sum = 0.0;
        for (double v : xs) sum += v;
        out.offdiag_mean[fi] = sum / static_cast<double>(xs.size());
        std::sort(xs.begin(), xs.end());
        out.offdiag_ci_lo[fi] = quantile_sorted(xs, alpha / 2.0);
        out.offdiag_ci_hi[fi] = quantile_sorted(xs, 1.0 - alpha / 2.0);
        out.selected.set(f, out.offdiag_ci_lo[fi] > 0.0 || out.offdiag_ci_hi[fi] < 0.0);
    }
    for (int j = 0; j < p; ++j) {
        auto& xs = diag_draws[j];
        double sum = 0.0;
        for (double v : xs) sum += v;
        out.diag_mean[j] = sum / static_cast<double>(xs.size());
        std::sort(xs.begin(), xs.end());
        out.diag_ci_lo[j] = quantile_sorted(xs, alpha / 2.0);
        out.diag_ci_hi[j] = quantile_sorted(xs, 1.0 - alpha / 2.0);
    }
    return out;
}

}  // namespace bconcord
