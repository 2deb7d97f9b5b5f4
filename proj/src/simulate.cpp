#include "bconcord/simulate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <thread>

#include "bconcord/errors.hpp"
#include "bconcord/refit.hpp"

namespace bconcord {

void TruthSpec::validate() const {
    if (p < 2) throw InvalidInput("truth dimension must be at least 2");
    if (!(density > 0.0 && density < 1.0))
        throw InvalidInput("density must lie strictly in (0,1)");
    if (!(mag_lo > 0.0) || !(mag_hi >= mag_lo))
        throw InvalidInput("magnitude range must be positive and ordered");
    if (!(diag_slack > 0.0)) throw InvalidInput("diagonal slack must be positive");
}

PrecisionState generate_truth(const TruthSpec& spec, SeededRng& rng) {
    spec.validate();
    const std::size_t m = pair_count(spec.p);
    auto edges = static_cast<long long>(
        std::ceil(spec.density * static_cast<double>(m) - 1e-9));
    edges = std::clamp<long long>(edges, 0, static_cast<long long>(m));

    // partial Fisher-Yates over the flat pair indices
    std::vector<std::size_t> idx(m);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (long long i = 0; i < edges; ++i) {
        const auto swap_with =
            static_cast<std::size_t>(i) +
            static_cast<std::size_t>(rng.uniform_int(static_cast<std::uint64_t>(m - i)));
        std::swap(idx[static_cast<std::size_t>(i)], idx[swap_with]);
    }
    std::sort(idx.begin(), idx.begin() + edges);

    PrecisionState omega(spec.p);
    for (long long i = 0; i < edges; ++i) {
        const double mag = spec.mag_lo + rng.uniform() * (spec.mag_hi - spec.mag_lo);
        const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
        omega.offdiag[static_cast<Eigen::Index>(idx[static_cast<std::size_t>(i)])] =
            sign * mag;
    }
    // diagonal dominance keeps every draw positive definite
    Vector rowsum = Vector::Zero(spec.p);
    std::size_t f = 0;
    for (int j = 0; j < spec.p - 1; ++j)
        for (int k = j + 1; k < spec.p; ++k, ++f) {
            const double a = std::abs(omega.offdiag[static_cast<Eigen::Index>(f)]);
            rowsum[j] += a;
            rowsum[k] += a;
        }
    omega.diag = rowsum.array() + spec.diag_slack;
    return omega;
}

Matrix sample_mvn(const PrecisionState& omega0, int n, SeededRng& rng) {
    if (n < 1) throw InvalidInput("sample size must be positive");
    const Matrix dense = omega0.dense();
    Eigen::LLT<Matrix> llt(dense);
    if (llt.info() != Eigen::Success)
        throw InvalidInput("precision matrix is not positive definite");
    const int p = omega0.p;
    Matrix data(n, p);
    Vector x(p);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < p; ++j) x[j] = rng.normal();
        // z = U^{-1} x has covariance (U'U)^{-1} = Omega^{-1}
        data.row(i) = llt.matrixU().solve(x).transpose();
    }
    return data;
}

AccuracyReport accuracy(const SparsityPattern& selected, const SparsityPattern& truth) {
    if (selected.p != truth.p)
        throw InvalidInput("selected and truth patterns have different dimensions");
    AccuracyReport r;
    const std::size_t m = pair_count(truth.p);
    for (std::size_t f = 0; f < m; ++f) {
        const bool s = selected.test(f);
        const bool t = truth.test(f);
        if (s && t)
            ++r.tp;
        else if (s && !t)
            ++r.fp;
        else if (!s && t)
            ++r.fn;
        else
            ++r.tn;
    }
    const auto tp = static_cast<double>(r.tp), tn = static_cast<double>(r.tn);
    const auto fp = static_cast<double>(r.fp), fn = static_cast<double>(r.fn);
    r.sp = (tn + fp) == 0.0 ? 1.0 : tn / (tn + fp);
    r.se = (tp + fn) == 0.0 ? 1.0 : tp / (tp + fn);
    const double f1 = tp + fp, f2 = tp + fn, f3 = tn + fp, f4 = tn + fn;
    if (f1 == 0.0 || f2 == 0.0 || f3 == 0.0 || f4 == 0.0)
        r.mcc = 0.0;
    else
        r.mcc = (tp * tn - fp * fn) / (std::sqrt(f1 * f2) * std::sqrt(f3 * f4));
    return r;
}

double relative_frobenius(const PrecisionState& est, const PrecisionState& truth) {
    if (est.p != truth.p)
        throw InvalidInput("estimate and truth have different dimensions");
    const double denom = truth.dense().norm();
    if (denom == 0.0) throw InvalidInput("truth matrix has zero Frobenius norm");
    return (est.dense() - truth.dense()).norm() / denom;
}

std::string method_name(Method m) {
    switch (m) {
        case Method::SpikeSlab: return "spikeslab";
        case Method::SpikeSlabRefit: return "spikeslab+refit";
        case Method::Horseshoe: return "horseshoe";
    }
    throw InternalInvariant("unknown method");
}

Method method_from_name(const std::string& name) {
    if (name == "spikeslab") return Method::SpikeSlab;
    if (name == "spikeslab+refit" || name == "refit") return Method::SpikeSlabRefit;
    if (name == "horseshoe") return Method::Horseshoe;
    throw InvalidInput("unknown method '" + name +
                       "' (expected spikeslab, spikeslab+refit, or horseshoe)");
}

void BenchSpec::validate() const {
    TruthSpec ts;
    ts.p = p;
    ts.density = density;
    ts.validate();
    if (n < 2) throw InvalidInput("sample size must be at least 2");
    if (reps < 1) throw InvalidInput("replicate count must be positive");
    if (chains < 1) throw InvalidInput("chain count must be positive");
    if (threads < 1) throw InvalidInput("thread count must be positive");
    if (!(threshold > 0.0 && threshold < 1.0))
        throw InvalidInput("inclusion threshold must lie strictly in (0,1)");
    if (refit_sweeps < 4) throw InvalidInput("refit sweeps must be at least 4");
    fit.validate(p);
    hs.validate();
}

namespace {

RepResult run_one_rep(const BenchSpec& spec, const PrecisionState& truth,
                      const SparsityPattern& truth_pattern, int rep,
                      bool collect_timing) {
    RepResult out;
    out.rep = rep;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        // stream block per replicate: data, then one per chain, then refit
        const std::uint64_t stride = static_cast<std::uint64_t>(spec.chains) + 2;
        const std::uint64_t data_stream = 1 + static_cast<std::uint64_t>(rep) * stride;
        SeededRng data_rng(spec.seed, data_stream);
        const Matrix Y = sample_mvn(truth, spec.n, data_rng);
        const SampleCovariance S = sample_covariance(Y);

        if (spec.method == Method::Horseshoe) {
            const HorseshoeSummary hsum =
                run_chain_bhsc(S, spec.n, spec.hs, SeededRng(spec.seed, data_stream + 1));
            out.acc = accuracy(hsum.selected, truth_pattern);
            out.acc.rel_frobenius = relative_frobenius(hsum.mean_state(), truth);
        } else {
            const ChainTrace trace = run_chains(S, spec.n, spec.fit, spec.chains,
                                                /*threads=*/1, spec.seed, data_stream + 1);
            const PosteriorSummary summ =
                summarize(trace, trace.diag_mean(), spec.threshold);
            out.acc = accuracy(summ.selected, truth_pattern);
            out.acc.rel_frobenius = relative_frobenius(summ.estimate, truth);
            if (spec.method == Method::SpikeSlabRefit) {
                const GraphConstraint G(summ.selected);
                const RefitResult rr = refit_gibbs(
                    S, G, spec.n, spec.refit_sweeps,
                    SeededRng(spec.seed, data_stream + 1 + static_cast<std::uint64_t>(spec.chains)));
                out.refit_rel_frobenius = relative_frobenius(rr.mean, truth);
            }
        }
        out.ok = true;
    } catch (const std::exception& e) {
        out.ok = false;
        out.error = e.what();
    }
    if (collect_timing) {
        out.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
    return out;
}

}  // namespace

BenchReport replicate(const BenchSpec& spec, bool collect_timing) {
    spec.validate();

    BenchReport report;
    report.truth_spec.p = spec.p;
    report.truth_spec.density = spec.density;

    SeededRng truth_rng(spec.seed, 0);
    const PrecisionState truth = generate_truth(report.truth_spec, truth_rng);
    report.truth_pattern = pattern_of(truth);
    report.per_rep.resize(static_cast<std::size_t>(spec.reps));

    const int workers = std::min(spec.threads, spec.reps);
    if (workers <= 1) {
        for (int i = 0; i < spec.reps; ++i)
            report.per_rep[static_cast<std::size_t>(i)] =
                run_one_rep(spec, truth, report.truth_pattern, i, collect_timing);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                for (int i = w; i < spec.reps; i += workers)
                    report.per_rep[static_cast<std::size_t>(i)] =
                        run_one_rep(spec, truth, report.truth_pattern, i, collect_timing);
            });
        }
        for (auto& t : pool) t.join();
    }

    double refit_sum = 0.0;
    int refit_n = 0;
    for (const RepResult& r : report.per_rep) {
        if (!r.ok) continue;
        ++report.n_ok;
        report.sp += r.acc.sp;
        report.se += r.acc.se;
        report.mcc += r.acc.mcc;
        report.rel_frobenius += r.acc.rel_frobenius.value_or(0.0);
        if (r.refit_rel_frobenius) {
            refit_sum += *r.refit_rel_frobenius;
            ++refit_n;
        }
    }
    if (report.n_ok > 0) {
        const double d = report.n_ok;
        report.sp /= d;
        report.se /= d;
        report.mcc /= d;
        report.rel_frobenius /= d;
    }
    if (refit_n > 0) report.refit_rel_frobenius = refit_sum / refit_n;
    return report;
}

}  // namespace bconcord
