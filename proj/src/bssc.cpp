#include "bconcord/bssc.hpp"

#include <chrono>
#include <cmath>
#include <thread>

#include "bconcord/errors.hpp"
#include "diag_draw.hpp"

namespace bconcord {

using detail::diag_mode_root;
using detail::draw_diag_discretized;

namespace {

constexpr int kRecomputeEvery = 64;  // full C = S*Omega refresh cadence

inline double prob_from_logit(double logc) {
    if (logc >= 0.0) return 1.0 / (1.0 + std::exp(-logc));
    const double t = std::exp(logc);
    return t / (1.0 + t);
}

// Dense working set for one chain: symmetric Omega plus C = S * Omega,
// maintained incrementally (O(p) per accepted change) and refreshed on a
// fixed schedule to bound float drift deterministically.
struct Workspace {
    int p;
    Matrix omega;
    Matrix C;
    std::size_t nnz = 0;

    Workspace(const PrecisionState& init, const SampleCovariance& S)
        : p(init.p), omega(init.dense()) {
        recompute(S);
        count_nnz();
    }

    void recompute(const SampleCovariance& S) { C.noalias() = S.m * omega; }

    void count_nnz() {
        nnz = 0;
        for (int j = 0; j < p - 1; ++j)
            for (int k = j + 1; k < p; ++k) nnz += (omega(j, k) != 0.0);
    }

    void write_back(PrecisionState& state) const {
        std::size_t f = 0;
        for (int j = 0; j < p - 1; ++j)
            for (int k = j + 1; k < p; ++k, ++f) state.offdiag[f] = omega(j, k);
        for (int j = 0; j < p; ++j) state.diag[j] = omega(j, j);
    }
};

void sweep_dense(Workspace& ws, const SampleCovariance& S, const SpikeSlabConfig& cfg,
                 int n, SeededRng& rng) {
    const int p = ws.p;
    const double nd = static_cast<double>(n);
    const double log_odds = std::log(cfg.q) - std::log1p(-cfg.q);
    const std::size_t tau = cfg.effective_tau(p);
    const bool per_pair_lambda = cfg.lambda.size() != 0;
    const double lam0 = cfg.lambda0;
    const double log_lam0 = std::log(lam0);
    Matrix& omega = ws.omega;
    Matrix& C = ws.C;

    std::size_t f = 0;
    for (int j = 0; j < p - 1; ++j) {
        const double sjj = S(j, j);
        for (int k = j + 1; k < p; ++k, ++f) {
            const double skk = S(k, k);
            const double lam = per_pair_lambda ? cfg.lambda[f] : lam0;
            const double log_lam = per_pair_lambda ? std::log(lam) : log_lam0;
            const double a = sjj + skk + lam / nd;
            if (!(a > 0.0)) throw InternalInvariant("nonpositive quadratic coefficient a_jk");
            const double old = omega(j, k);
            const double b = C(k, j) + C(j, k) - old * (sjj + skk);
            const double logc = log_odds + 0.5 * (log_lam - std::log(nd * a)) +
                                nd * b * b / (2.0 * a);
            const double p_incl = prob_from_logit(logc);
            double value = 0.0;
            if (rng.uniform() < p_incl) {
                if (old != 0.0 || ws.nnz < tau)
                    value = -b / a + rng.normal() / std::sqrt(nd * a);
            }
            if (value != old) {
                const double delta = value - old;
                omega(j, k) = value;
                omega(k, j) = value;
                C.col(k) += delta * S.m.col(j);
                C.col(j) += delta * S.m.col(k);
                ws.nnz += (value != 0.0 ? 1 : 0) - (old != 0.0 ? 1 : 0);
            }
        }
    }

    if (!cfg.update_diagonals) return;
    for (int j = 0; j < p; ++j) {
        const double sjj = S(j, j);
        const double bj = C(j, j) - omega(j, j) * sjj;
        const double c1 = cfg.gamma_at(j) + nd * bj;
        const double mode = diag_mode_root(c1, sjj, nd);
        const double value = cfg.diag_mode == DiagMode::PointMass
                                 ? mode
                                 : draw_diag_discretized(c1, sjj, n, mode, rng);
        const double delta = value - omega(j, j);
        if (delta != 0.0) {
            omega(j, j) = value;
            C.col(j) += delta * S.m.col(j);
        }
    }
}

void update_hyper_dense(const Matrix& omega, SpikeSlabConfig& cfg, SeededRng& rng) {
    const GammaHyper& h = *cfg.hyper;
    const int p = static_cast<int>(omega.rows());
    if (cfg.lambda.size() == 0)
        cfg.lambda = Vector::Constant(static_cast<Eigen::Index>(pair_count(p)), cfg.lambda0);
    if (cfg.gamma.size() == 0) cfg.gamma = Vector::Constant(p, cfg.gamma0);
    std::size_t f = 0;
    for (int j = 0; j < p - 1; ++j)
        for (int k = j + 1; k < p; ++k, ++f) {
            const double w = omega(j, k);
            cfg.lambda[f] = rng.gamma(h.r + 0.5, 0.5 * w * w + h.s);
        }
    for (int j = 0; j < p; ++j) cfg.gamma[j] = rng.gamma(h.r + 1.0, omega(j, j) + h.s);
}

}  // namespace

void SpikeSlabConfig::validate(int p) const {
    const auto m = pair_count(p);
    if (!(q > 0.0 && q < 1.0)) throw InvalidInput("q must lie strictly in (0,1)");
    if (!(lambda0 > 0.0)) throw InvalidInput("lambda must be positive");
    if (lambda.size() != 0 && static_cast<std::size_t>(lambda.size()) != m)
        throw InvalidInput("per-pair lambda has wrong length");
    for (Eigen::Index i = 0; i < lambda.size(); ++i)
        if (!(lambda[i] > 0.0)) throw InvalidInput("lambda entries must be positive");
    if (!(gamma0 > 0.0)) throw InvalidInput("gamma must be positive");
    if (gamma.size() != 0 && gamma.size() != p)
        throw InvalidInput("per-diagonal gamma has wrong length");
    for (Eigen::Index i = 0; i < gamma.size(); ++i)
        if (!(gamma[i] > 0.0)) throw InvalidInput("gamma entries must be positive");
    if (hyper && (!(hyper->r > 0.0) || !(hyper->s > 0.0)))
        throw InvalidInput("hyper r and s must be positive");
    if (burn_in < 1 || keep < 1) throw InvalidInput("burn_in and keep must be at least 1");
    if (thin < 1) throw InvalidInput("thin must be at least 1");
    if (tau != kNoDensityCap && (tau < 1 || tau > m))
        throw InvalidInput("tau must lie in [1, p(p-1)/2]");
}

void ChainTrace::merge(const ChainTrace& other) {
    if (p != other.p) throw InvalidInput("cannot merge traces of different dimension");
    T += other.T;
    for (std::size_t f = 0; f < include_count.size(); ++f)
        include_count[f] += other.include_count[f];
    value_sum += other.value_sum;
    diag_sum += other.diag_sum;
    draws.insert(draws.end(), other.draws.begin(), other.draws.end());
    sweep_seconds.insert(sweep_seconds.end(), other.sweep_seconds.begin(),
                         other.sweep_seconds.end());
}

Vector ChainTrace::inclusion() const {
    Vector v(static_cast<Eigen::Index>(include_count.size()));
    for (std::size_t f = 0; f < include_count.size(); ++f)
        v[static_cast<Eigen::Index>(f)] =
            static_cast<double>(include_count[f]) / static_cast<double>(T);
    return v;
}

Vector ChainTrace::diag_mean() const { return diag_sum / static_cast<double>(T); }

OffdiagConditional offdiag_conditional(const PrecisionState& state, const SampleCovariance& S,
                                       const SpikeSlabConfig& cfg, const PairIndex& pair, int n) {
    const int p = state.p;
    const int j = pair.j, k = pair.k;
    const double nd = static_cast<double>(n);
    const double lam = cfg.lambda_at(pair.flat);
    const double a = S(j, j) + S(k, k) + lam / nd;
    if (!(a > 0.0)) throw InternalInvariant("nonpositive quadratic coefficient a_jk");
    double b = 0.0;
    for (int t = 0; t < p; ++t) {
        if (t != k) b += (t == j ? state.diag[j] : state.off(j, t)) * S(k, t);
        if (t != j) b += (t == k ? state.diag[k] : state.off(t, k)) * S(j, t);
    }
    const double logc = std::log(cfg.q) - std::log1p(-cfg.q) +
                        0.5 * (std::log(lam) - std::log(nd * a)) + nd * b * b / (2.0 * a);
    return OffdiagConditional{prob_from_logit(logc), -b / a, 1.0 / (nd * a), a, b};
}

double diag_update(const PrecisionState& state, const SampleCovariance& S,
                   const SpikeSlabConfig& cfg, int j, int n, SeededRng* rng) {
    if (!(S(j, j) > 0.0)) throw InvalidInput("covariance diagonal must be positive");
    double bj = 0.0;
    for (int t = 0; t < state.p; ++t)
        if (t != j) bj += state.off(j, t) * S(j, t);
    const double c1 = cfg.gamma_at(j) + static_cast<double>(n) * bj;
    const double mode = diag_mode_root(c1, S(j, j), static_cast<double>(n));
    if (cfg.diag_mode == DiagMode::PointMass) return mode;
    if (!rng) throw InvalidInput("discretized diagonal mode needs an rng");
    return draw_diag_discretized(c1, S(j, j), n, mode, *rng);
}

void sweep(PrecisionState& state, const SampleCovariance& S, const SpikeSlabConfig& cfg,
           int n, SeededRng& rng) {
    Workspace ws(state, S);
    sweep_dense(ws, S, cfg, n, rng);
    ws.write_back(state);
}

void update_hyperparameters(const PrecisionState& state, SpikeSlabConfig& cfg, SeededRng& rng) {
    if (!cfg.hyper) throw InvalidInput("hyperparameter updates are not enabled");
    update_hyper_dense(state.dense(), cfg, rng);
}

ChainTrace run_chain(const SampleCovariance& S, int n, const SpikeSlabConfig& cfg,
                     const PrecisionState& init, SeededRng rng, RunOptions opts) {
    const int p = S.p;
    cfg.validate(p);
    if (init.p != p) throw InvalidInput("init state dimension mismatch");
    SpikeSlabConfig local = cfg;  // hyper updates mutate lambda/gamma
    Workspace ws(init, S);
    ChainTrace trace(p);
    const int total = local.burn_in + local.keep;
    if (opts.collect_timing) trace.sweep_seconds.reserve(total);
    int kept = 0;
    for (int t = 0; t < total; ++t) {
        const auto t0 = opts.collect_timing ? std::chrono::steady_clock::now()
                                            : std::chrono::steady_clock::time_point{};
        if (t % kRecomputeEvery == 0) ws.recompute(S);
        sweep_dense(ws, S, local, n, rng);
        if (local.hyper) update_hyper_dense(ws.omega, local, rng);
        if (t >= local.burn_in) {
            std::size_t f = 0;
            for (int j = 0; j < p - 1; ++j)
                for (int k = j + 1; k < p; ++k, ++f) {
                    const double w = ws.omega(j, k);
                    if (w != 0.0) {
                        ++trace.include_count[f];
                        trace.value_sum[static_cast<Eigen::Index>(f)] += w;
                    }
                }
            for (int j = 0; j < p; ++j) trace.diag_sum[j] += ws.omega(j, j);
            if (local.store_draws && kept % local.thin == 0) {
                PrecisionState snap(p);
                ws.write_back(snap);
                trace.draws.push_back(std::move(snap));
            }
            ++kept;
        }
        if (opts.collect_timing) {
            const auto t1 = std::chrono::steady_clock::now();
            trace.sweep_seconds.push_back(std::chrono::duration<double>(t1 - t0).count());
        }
    }
    trace.T = kept;
    return trace;
}

ChainTrace run_chain(const SampleCovariance& S, int n, const SpikeSlabConfig& cfg,
                     SeededRng rng, RunOptions opts) {
    return run_chain(S, n, cfg, PrecisionState::identity(S.p), std::move(rng), opts);
}

PosteriorSummary summarize(const ChainTrace& trace, const Vector& diag_mean, double threshold) {
    if (!(threshold > 0.0 && threshold < 1.0))
        throw InvalidInput("selection threshold must lie strictly in (0,1)");
    if (diag_mean.size() != trace.p) throw InvalidInput("diagonal mean has wrong length");
    PosteriorSummary out;
    out.inclusion = trace.inclusion();
    out.selected = SparsityPattern(trace.p);
    out.estimate = PrecisionState(trace.p);
    out.estimate.diag = diag_mean;
    for (std::size_t f = 0; f < trace.include_count.size(); ++f) {
        const auto fi = static_cast<Eigen::Index>(f);
        if (out.inclusion[fi] > threshold) {
            out.selected.set(f, true);
            out.estimate.offdiag[fi] =
                trace.value_sum[fi] / static_cast<double>(trace.include_count[f]);
        }
    }
    return out;
}

ChainTrace run_chains(const SampleCovariance& S, int n, const SpikeSlabConfig& cfg,
                      int chains, int threads, std::uint64_t seed,
                      std::uint64_t base_stream, RunOptions opts) {
    if (chains < 1) throw InvalidInput("need at least one chain");
    if (threads < 1) threads = 1;
    std::vector<ChainTrace> traces(chains);
    std::vector<std::exception_ptr> errors(chains);
    const int workers = std::min(threads, chains);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&, w]() {
            for (int c = w; c < chains; c += workers) {
                try {
                    traces[c] = run_chain(S, n, cfg, SeededRng(seed, base_stream + c), opts);
                } catch (...) {
                    errors[c] = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    ChainTrace merged = std::move(traces[0]);
    for (int c = 1; c < chains; ++c) merged.merge(traces[c]);
    return merged;
}

}  // namespace bconcord
