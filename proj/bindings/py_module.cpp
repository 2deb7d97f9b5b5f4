#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <optional>
#include <vector>

#include "bconcord/bhsc.hpp"
#include "bconcord/bssc.hpp"
#include "bconcord/errors.hpp"
#include "bconcord/exact.hpp"
#include "bconcord/refit.hpp"
#include "bconcord/rng.hpp"
#include "bconcord/simulate.hpp"
#include "bconcord/types.hpp"
#include "bconcord/version.hpp"

namespace py = pybind11;
using namespace bconcord;

namespace {

SparsityPattern pattern_from_bits(const std::vector<int>& bits, int p) {
    if (bits.size() != pair_count(p))
        throw InvalidInput("pattern bit vector has the wrong length for p");
    SparsityPattern pat(p);
    for (std::size_t f = 0; f < bits.size(); ++f) pat.set(f, bits[f] != 0);
    return pat;
}

std::vector<int> bits_of(const SparsityPattern& pat) {
    std::vector<int> out(pair_count(pat.p));
    for (std::size_t f = 0; f < out.size(); ++f) out[f] = pat.test(f) ? 1 : 0;
    return out;
}

py::dict fit_spikeslab(const Matrix& S_dense, int n, double q, double lambda,
                       double gamma, int burnin, int keep, int thin, bool hyper,
                       double r, double s, double threshold, int chains, int threads,
                       std::uint64_t seed) {
    const SampleCovariance S{S_dense};
    SpikeSlabConfig cfg;
    cfg.q = q;
    cfg.lambda0 = lambda;
    cfg.gamma0 = gamma;
    cfg.burn_in = burnin;
    cfg.keep = keep;
    cfg.thin = thin;
    if (hyper) cfg.hyper = GammaHyper{r, s};
    cfg.validate(S.p);
    const ChainTrace trace = run_chains(S, n, cfg, chains, threads, seed);
    const PosteriorSummary summ = summarize(trace, trace.diag_mean(), threshold);
    py::dict out;
    out["inclusion"] = Vector(summ.inclusion);
    out["estimate"] = summ.estimate.dense();
    out["selected"] = bits_of(summ.selected);
    return out;
}

py::dict fit_horseshoe(const Matrix& S_dense, int n, int burnin, int keep, int thin,
                       double ci, double gamma, std::uint64_t seed) {
    const SampleCovariance S{S_dense};
    HorseshoeConfig cfg;
    cfg.burn_in = burnin;
    cfg.keep = keep;
    cfg.thin = thin;
    cfg.ci_level = ci;
    cfg.gamma0 = gamma;
    const HorseshoeSummary summ = run_chain_bhsc(S, n, cfg, SeededRng(seed, 1));
    py::dict out;
    out["mean"] = summ.mean_state().dense();
    out["offdiag_mean"] = Vector(summ.offdiag_mean);
    out["ci_lo"] = Vector(summ.offdiag_ci_lo);
    out["ci_hi"] = Vector(summ.offdiag_ci_hi);
    out["diag_mean"] = Vector(summ.diag_mean);
    out["selected"] = bits_of(summ.selected);
    return out;
}

py::dict refit_py(const Matrix& S_dense, int n, const std::vector<int>& pattern_bits,
                  int sweeps, double eps, double ci, std::uint64_t seed) {
    const SampleCovariance S{S_dense};
    const GraphConstraint G(pattern_from_bits(pattern_bits, S.p));
    const RefitResult res = refit_gibbs(S, G, n, sweeps, SeededRng(seed, 1), ci);
    py::dict out;
    out["mode"] = res.mode.dense();
    out["mean"] = res.mean.dense();
    out["offdiag_ci_lo"] = Vector(res.offdiag_ci_lo);
    out["offdiag_ci_hi"] = Vector(res.offdiag_ci_hi);
    out["diag_ci_lo"] = Vector(res.diag_ci_lo);
    out["diag_ci_hi"] = Vector(res.diag_ci_hi);
    out["min_eigenvalue"] = res.min_eigenvalue;
    if (res.min_eigenvalue <= 0.0)
        out["projected"] = project_pd(res.mean, eps).dense();
    else
        out["projected"] = py::none();
    return out;
}

py::dict enumerate_py(const Matrix& S_dense, int n, const Vector& diag, double q,
                      double lambda, long long tau) {
    const SampleCovariance S{S_dense};
    SpikeSlabConfig cfg;
    cfg.q = q;
    cfg.lambda0 = lambda;
    if (tau >= 0) cfg.tau = static_cast<std::size_t>(tau);
    cfg.validate(S.p);
    const PatternPosterior post = enumerate_patterns(S, n, diag, cfg);
    py::dict out;
    out["n_pairs"] = post.n_pairs;
    out["prob"] = post.prob;
    out["marginal"] = Vector(marginal_inclusion(post));
    return out;
}

py::dict accuracy_py(const std::vector<int>& selected, const std::vector<int>& truth,
                     int p) {
    const AccuracyReport rep =
        accuracy(pattern_from_bits(selected, p), pattern_from_bits(truth, p));
    py::dict out;
    out["tp"] = rep.tp;
    out["tn"] = rep.tn;
    out["fp"] = rep.fp;
    out["fn"] = rep.fn;
    out["sp"] = rep.sp;
    out["se"] = rep.se;
    out["mcc"] = rep.mcc;
    return out;
}

}  // namespace

PYBIND11_MODULE(_bconcord, m) {
    m.doc() = "Bayesian sparse precision-matrix selection (CONCORD pseudo-likelihood)";
    m.attr("__version__") = kVersion;

    py::register_exception<Error>(m, "BconcordError");
    py::register_exception<NumericalError>(m, "BconcordNumericalError", PyExc_RuntimeError);
    py::register_exception<InvalidInput>(m, "BconcordInvalidInput", PyExc_ValueError);

    m.def("pair_count", &pair_count, py::arg("p"),
          "Number of unordered off-diagonal pairs.");
    m.def("flat_index", &flat_index, py::arg("j"), py::arg("k"), py::arg("p"),
          "Canonical position of pair (j,k), 0-based, j<k.");

    m.def(
        "sample_covariance",
        [](const Matrix& data, bool center) { return sample_covariance(data, center).m; },
        py::arg("data"), py::arg("center") = false,
        "S = (1/n) Y'Y with optional column centering.");

    m.def(
        "generate_truth",
        [](int p, double density, std::uint64_t seed, double mag_lo, double mag_hi) {
            TruthSpec ts;
            ts.p = p;
            ts.density = density;
            ts.mag_lo = mag_lo;
            ts.mag_hi = mag_hi;
            SeededRng rng(seed, 0);
            return generate_truth(ts, rng).dense();
        },
        py::arg("p"), py::arg("density"), py::arg("seed") = 0,
        py::arg("mag_lo") = 0.4, py::arg("mag_hi") = 0.6,
        "Diagonally dominant sparse truth matrix.");

    m.def(
        "sample_mvn",
        [](const Matrix& omega, int n, std::uint64_t seed) {
            SeededRng rng(seed, 1);
            return sample_mvn(PrecisionState::from_dense(omega), n, rng);
        },
        py::arg("omega"), py::arg("n"), py::arg("seed") = 0,
        "n rows from N(0, omega^{-1}).");

    m.def("fit_spikeslab", &fit_spikeslab, py::arg("S"), py::arg("n"),
          py::arg("q") = 0.5, py::arg("lam") = 1.0, py::arg("gamma") = 1.0,
          py::arg("burnin") = 2000, py::arg("keep") = 2000, py::arg("thin") = 1,
          py::arg("hyper") = false, py::arg("r") = 1e-4, py::arg("s") = 1e-8,
          py::arg("threshold") = 0.5, py::arg("chains") = 1, py::arg("threads") = 1,
          py::arg("seed") = 0, "Spike-and-slab Gibbs fit on a sample covariance.");

    m.def("fit_horseshoe", &fit_horseshoe, py::arg("S"), py::arg("n"),
          py::arg("burnin") = 2000, py::arg("keep") = 2000, py::arg("thin") = 1,
          py::arg("ci") = 0.95, py::arg("gamma") = 1.0, py::arg("seed") = 0,
          "Horseshoe Gibbs fit; selection by credible interval.");

    m.def("refit", &refit_py, py::arg("S"), py::arg("n"), py::arg("pattern"),
          py::arg("sweeps") = 4000, py::arg("eps") = 1e-6, py::arg("ci") = 0.95,
          py::arg("seed") = 0, "Graph-constrained refit (mode + Gibbs mean).");

    m.def("enumerate_patterns", &enumerate_py, py::arg("S"), py::arg("n"),
          py::arg("diag"), py::arg("q") = 0.5, py::arg("lam") = 1.0,
          py::arg("tau") = -1, "Exact pattern posterior at fixed diagonals.");

    m.def("accuracy", &accuracy_py, py::arg("selected"), py::arg("truth"), py::arg("p"),
          "Specificity / sensitivity / Matthews correlation for flat 0-1 patterns.");

    m.def(
        "relative_frobenius",
        [](const Matrix& est, const Matrix& truth) {
            return relative_frobenius(PrecisionState::from_dense(est),
                                      PrecisionState::from_dense(truth));
        },
        py::arg("est"), py::arg("truth"), "||est - truth||_F / ||truth||_F.");

    m.def(
        "project_pd",
        [](const Matrix& state, double eps) {
            return project_pd(PrecisionState::from_dense(state), eps).dense();
        },
        py::arg("omega"), py::arg("eps") = 1e-6,
        "Diagonal bump to the positive-definite cone (identity when already PD).");
}
