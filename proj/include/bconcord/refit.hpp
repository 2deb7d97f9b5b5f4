#pragma once

#include <optional>

#include "bconcord/rng.hpp"
#include "bconcord/types.hpp"

namespace bconcord {

struct GraphConstraint {
    int p = 0;
    SparsityPattern edges;

    GraphConstraint() = default;
    explicit GraphConstraint(SparsityPattern e) : p(e.p), edges(std::move(e)) {}

    int max_degree() const { return edges.max_degree(); }
    std::size_t edge_count() const { return edges.count(); }
};

struct RefitResult {
    PrecisionState mode;
    PrecisionState mean;
    // Central credible intervals per canonical position; constrained-to-zero
    // entries get the degenerate interval [0,0].
    Vector offdiag_ci_lo, offdiag_ci_hi;
    Vector diag_ci_lo, diag_ci_hi;
    double min_eigenvalue = 0.0;               // of the mean estimate
    std::optional<PrecisionState> projected;   // present iff min_eigenvalue <= 0
};

// Closed-form mode of the graph-constrained refit density: minimizes
// (n/2) tr(Omega^2 S) - n tr(Omega) over symmetric matrices supported on the
// graph, via one symmetric solve on the (|E| + p) free coordinates.
PrecisionState refit_mode(const SampleCovariance& S, const GraphConstraint& G, int n);

// Gibbs sampler on the constrained space; the first quarter of the sweeps is
// discarded as burn-in. Initialized at the closed-form mode.
RefitResult refit_gibbs(const SampleCovariance& S, const GraphConstraint& G, int n,
                        int sweeps, SeededRng rng, double ci_level = 0.95);

// Minimum-eigenvalue diagonal bump: identity on PD inputs, otherwise adds
// (-lambda_min + eps) to every diagonal entry.
PrecisionState project_pd(const PrecisionState& state, double eps = 1e-6);

// n tr(Omega) - (n/2) tr(Omega^2 S); state must respect the graph.
double log_refit_density(const PrecisionState& state, const SampleCovariance& S,
                         const GraphConstraint& G, int n);

}  // namespace bconcord
