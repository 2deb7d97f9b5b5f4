#include "bconcord/refit.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <vector>

#include "bconcord/errors.hpp"
#include "bconcord/exact.hpp"

namespace bconcord {

namespace {

void check_proper(const GraphConstraint& G, int n) {
    if (G.max_degree() >= n)
        throw ImproperPosterior("graph degree " + std::to_string(G.max_degree()) +
                                " >= n = " + std::to_string(n) +
                                ": refit posterior is improper");
}

std::vector<PairIndex> edge_list(const GraphConstraint& G) {
    std::vector<PairIndex> edges;
    edges.reserve(G.edge_count());
    std::size_t f = 0;
    for (int j = 0; j < G.p - 1; ++j)
        for (int k = j + 1; k < G.p; ++k, ++f)
            if (G.edges.bits[f]) edges.push_back(PairIndex{j, k, f});
    return edges;
}

// Empirical quantile with linear interpolation (numpy/R type 7).
double quantile(std::vector<double>& xs, double prob) {
    std::sort(xs.begin(), xs.end());
    const double pos = prob * static_cast<double>(xs.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= xs.size()) return xs.back();
    const double frac = pos - static_cast<double>(lo);
    return xs[lo] * (1.0 - frac) + xs[lo + 1] * frac;
}

}  // namespace

PrecisionState refit_mode(const SampleCovariance& S, const GraphConstraint& G, int n) {
    const int p = S.p;
    if (G.p != p) throw InvalidInput("graph dimension mismatch");
    check_proper(G, n);
    const auto edges = edge_list(G);
    const auto m = static_cast<Eigen::Index>(edges.size());
    const Eigen::Index dim = m + p;

    // quadratic form over (xi_E, delta): [[Phi_EE, A_E], [A_E', D]]
    Matrix K(dim, dim);
    K.setZero();
    for (Eigen::Index r = 0; r < m; ++r) {
        for (Eigen::Index c = 0; c <= r; ++c) {
            const double v = phi_entry(S, edges[r].j, edges[r].k, edges[c].j, edges[c].k);
            K(r, c) = v;
            K(c, r) = v;
        }
        const double sjk = S(edges[r].j, edges[r].k);
        K(r, m + edges[r].j) = sjk;
        K(m + edges[r].j, r) = sjk;
        K(r, m + edges[r].k) = sjk;
        K(m + edges[r].k, r) = sjk;
    }
    for (int j = 0; j < p; ++j) K(m + j, m + j) = S(j, j);

    Vector u = Vector::Zero(dim);
    u.tail(p).setOnes();

    Eigen::LLT<Matrix> llt(K);
    if (llt.info() != Eigen::Success) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(K, Eigen::EigenvaluesOnly);
        const double lo = es.eigenvalues().minCoeff();
        const double hi = es.eigenvalues().maxCoeff();
        throw SingularSystem(
            "constrained quadratic form is not positive definite "
            "(eigenvalue range [" + std::to_string(lo) + ", " + std::to_string(hi) + "])");
    }
    const Vector sol = llt.solve(u);

    PrecisionState mode(p);
    mode.offdiag.setZero();
    for (Eigen::Index r = 0; r < m; ++r)
        mode.offdiag[static_cast<Eigen::Index>(edges[r].flat)] = sol[r];
    for (int j = 0; j < p; ++j) {
        if (!(sol[m + j] > 0.0))
            throw NumericalError("refit mode leaves the positive-diagonal domain");
        mode.diag[j] = sol[m + j];
    }
    return mode;
}

RefitResult refit_gibbs(const SampleCovariance& S, const GraphConstraint& G, int n,
                        int sweeps, SeededRng rng, double ci_level) {
    const int p = S.p;
    if (G.p != p) throw InvalidInput("graph dimension mismatch");
    if (sweeps < 4) throw InvalidInput("need at least 4 sweeps");
    if (!(ci_level > 0.0 && ci_level < 1.0)) throw InvalidInput("ci level must be in (0,1)");
    check_proper(G, n);
    const double nd = static_cast<double>(n);
    const auto edges = edge_list(G);
    const std::size_t m = edges.size();

    RefitResult out;
    out.mode = refit_mode(S, G, n);

    Matrix omega = out.mode.dense();
    Matrix C = S.m * omega;  // C = S * Omega, maintained incrementally
    const int burn = sweeps / 4;
    const int kept_total = sweeps - burn;
    std::vector<std::vector<double>> edge_draws(m);
    std::vector<std::vector<double>> diag_draws(p);
    for (auto& v : edge_draws) v.reserve(kept_total);
    for (auto& v : diag_draws) v.reserve(kept_total);

    for (int t = 0; t < sweeps; ++t) {
        if (t % 64 == 0) C.noalias() = S.m * omega;
        for (const auto& e : edges) {
            const int j = e.j, k = e.k;
            const double a = S(j, j) + S(k, k);
            const double old = omega(j, k);
            const double b = C(k, j) + C(j, k) - old * a;
            const double value = -b / a + rng.normal() / std::sqrt(nd * a);
            const double delta = value - old;
            omega(j, k) = value;
            omega(k, j) = value;
            C.col(k) += delta * S.m.col(j);
            C.col(j) += delta * S.m.col(k);
        }
        for (int j = 0; j < p; ++j) {
            const double sjj = S(j, j);
            const double bj = C(j, j) - omega(j, j) * sjj;
            const double value =
                rng.trunc_normal_lower((1.0 - bj) / sjj, 1.0 / std::sqrt(nd * sjj), 0.0);
            const double delta = value - omega(j, j);
            omega(j, j) = value;
            C.col(j) += delta * S.m.col(j);
        }
        if (t >= burn) {
            for (std::size_t e = 0; e < m; ++e)
                edge_draws[e].push_back(omega(edges[e].j, edges[e].k));
            for (int j = 0; j < p; ++j) diag_draws[j].push_back(omega(j, j));
        }
    }

    const auto n_pairs = pair_count(p);
    out.mean = PrecisionState(p);
    out.mean.offdiag.setZero();
    out.offdiag_ci_lo = Vector::Zero(static_cast<Eigen::Index>(n_pairs));
    out.offdiag_ci_hi = Vector::Zero(static_cast<Eigen::Index>(n_pairs));
    out.diag_ci_lo = Vector::Zero(p);
    out.diag_ci_hi = Vector::Zero(p);
    const double alpha = 1.0 - ci_level;
    for (std::size_t e = 0; e < m; ++e) {
        const auto fi = static_cast<Eigen::Index>(edges[e].flat);
        double sum = 0.0;
        for (double v : edge_draws[e]) sum += v;
        out.mean.offdiag[fi] = sum / static_cast<double>(kept_total);
        out.offdiag_ci_lo[fi] = quantile(edge_draws[e], alpha / 2.0);
        out.offdiag_ci_hi[fi] = quantile(edge_draws[e], 1.0 - alpha / 2.0);
    }
    for (int j = 0; j < p; ++j) {
        double sum = 0.0;
        for (double v : diag_draws[j]) sum += v;
        out.mean.diag[j] = sum / static_cast<double>(kept_total);
        out.diag_ci_lo[j] = quantile(diag_draws[j], alpha / 2.0);
        out.diag_ci_hi[j] = quantile(diag_draws[j], 1.0 - alpha / 2.0);
    }

    Eigen::SelfAdjointEigenSolver<Matrix> es(out.mean.dense(), Eigen::EigenvaluesOnly);
    out.min_eigenvalue = es.eigenvalues().minCoeff();
    if (out.min_eigenvalue <= 0.0) out.projected = project_pd(out.mean);
    return out;
}

PrecisionState project_pd(const PrecisionState& state, double eps) {
    if (!(eps > 0.0)) throw InvalidInput("projection eps must be positive");
    Eigen::SelfAdjointEigenSolver<Matrix> es(state.dense(), Eigen::EigenvaluesOnly);
    const double lmin = es.eigenvalues().minCoeff();
    if (lmin > 0.0) return state;
    PrecisionState out = state;
    out.diag.array() += -lmin + eps;
    return out;
}

double log_refit_density(const PrecisionState& state, const SampleCovariance& S,
                         const GraphConstraint& G, int n) {
    if (state.p != G.p || state.p != S.p) throw InvalidInput("dimension mismatch");
    for (std::size_t f = 0; f < G.edges.bits.size(); ++f)
        if (!G.edges.bits[f] && state.offdiag[static_cast<Eigen::Index>(f)] != 0.0)
            throw InvalidInput("state has support outside the graph");
    const Matrix omega = state.dense();
    const double tr = state.diag.sum();
    const double tr2 = (omega * omega * S.m).trace();
    return n * tr - 0.5 * n * tr2;
}

}  // namespace bconcord
