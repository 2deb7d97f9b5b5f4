#include "bconcord/exact.hpp"

#include <Eigen/Cholesky>
#include <bit>
#include <cmath>

#include "bconcord/errors.hpp"

namespace bconcord {

double phi_entry(const SampleCovariance& S, int a, int b, int c, int d) {
    if (a == c && b == d) return S(a, a) + S(b, b);
    if (b == d) return S(a, c);
    if (a == c) return S(b, d);
    if (b == c) return S(a, d);
    if (a == d) return S(b, c);
    return 0.0;
}

Matrix build_phi(const SampleCovariance& S) {
    const int p = S.p;
    if (p < 2) throw InvalidInput("build_phi needs p >= 2");
    const auto m = pair_count(p);
    Matrix phi(m, m);
    std::size_t f1 = 0;
    for (int a = 0; a < p - 1; ++a)
        for (int b = a + 1; b < p; ++b, ++f1) {
            std::size_t f2 = 0;
            for (int c = 0; c < p - 1; ++c)
                for (int d = c + 1; d < p; ++d, ++f2)
                    phi(static_cast<Eigen::Index>(f1), static_cast<Eigen::Index>(f2)) =
                        phi_entry(S, a, b, c, d);
        }
    return phi;
}

Vector build_a(const SampleCovariance& S, const Vector& diag) {
    const int p = S.p;
    if (diag.size() != p) throw InvalidInput("diagonal vector has wrong length");
    Vector a(pair_count(p));
    std::size_t f = 0;
    for (int j = 0; j < p - 1; ++j)
        for (int k = j + 1; k < p; ++k, ++f) a[f] = S(j, k) * (diag[j] + diag[k]);
    return a;
}

PatternPosterior enumerate_patterns(const SampleCovariance& S, int n,
                                    const Vector& diag, const SpikeSlabConfig& cfg) {
    const int p = S.p;
    const std::size_t m = pair_count(p);
    if (m > 20) throw InvalidInput("pattern enumeration supports at most 20 pairs");
    cfg.validate(p);
    for (int j = 0; j < p; ++j)
        if (!(diag[j] > 0.0)) throw InvalidInput("diagonal estimates must be positive");

    const Matrix phi = build_phi(S);
    const Vector a_hat = build_a(S, diag);
    const std::size_t tau = cfg.effective_tau(p);
    const double log_q = std::log(cfg.q);
    const double log_1mq = std::log1p(-cfg.q);

    PatternPosterior post;
    post.p = p;
    post.n_pairs = m;
    const std::size_t n_masks = std::size_t(1) << m;
    std::vector<double> logp(n_masks, -std::numeric_limits<double>::infinity());

    std::vector<int> active;
    active.reserve(m);
    for (std::size_t mask = 0; mask < n_masks; ++mask) {
        const unsigned d_l = static_cast<unsigned>(std::popcount(mask));
        if (d_l > tau) continue;
        double lp = d_l * log_q + (m - d_l) * log_1mq;
        if (d_l > 0) {
            active.clear();
            for (std::size_t f = 0; f < m; ++f)
                if (mask & (std::size_t(1) << f)) active.push_back(static_cast<int>(f));
            Matrix sub(d_l, d_l);
            Vector av(d_l);
            double log_det_lambda = 0.0;
            for (unsigned r = 0; r < d_l; ++r) {
                const double lam = cfg.lambda_at(active[r]);
                log_det_lambda += std::log(lam);
                av[r] = a_hat[active[r]];
                for (unsigned c = 0; c <= r; ++c) {
                    double v = n * phi(active[r], active[c]);
                    if (r == c) v += lam;
                    sub(r, c) = v;
                    sub(c, r) = v;
                }
            }
            Eigen::LLT<Matrix> llt(sub);
            if (llt.info() != Eigen::Success)
                throw OracleDegenerate("pattern submatrix (n Phi + Lambda) is not positive definite");
            const Matrix& L = llt.matrixLLT();
            double log_det = 0.0;
            for (unsigned r = 0; r < d_l; ++r) log_det += 2.0 * std::log(L(r, r));
            const Vector x = llt.solve(av);
            lp += 0.5 * log_det_lambda - 0.5 * log_det +
                  0.5 * static_cast<double>(n) * static_cast<double>(n) * av.dot(x);
        }
        logp[mask] = lp;
    }

    double max_lp = -std::numeric_limits<double>::infinity();
    for (double v : logp) max_lp = std::max(max_lp, v);
    if (!std::isfinite(max_lp)) throw OracleDegenerate("no admissible sparsity pattern");
    double total = 0.0;
    for (double v : logp) total += std::isfinite(v) ? std::exp(v - max_lp) : 0.0;
    post.log_norm = max_lp + std::log(total);
    post.prob.assign(n_masks, 0.0);
    for (std::size_t mask = 0; mask < n_masks; ++mask)
        if (std::isfinite(logp[mask])) post.prob[mask] = std::exp(logp[mask] - post.log_norm);
    return post;
}

Vector marginal_inclusion(const PatternPosterior& post) {
    Vector marg = Vector::Zero(static_cast<Eigen::Index>(post.n_pairs));
    for (std::size_t mask = 0; mask < post.prob.size(); ++mask) {
        const double pr = post.prob[mask];
        if (pr == 0.0) continue;
        for (std::size_t f = 0; f < post.n_pairs; ++f)
            if (mask & (std::size_t(1) << f)) marg[static_cast<Eigen::Index>(f)] += pr;
    }
    // round-off in the pattern-probability sums can spill a hair past 1
    return marg.cwiseMax(0.0).cwiseMin(1.0);
}

}  // namespace bconcord
