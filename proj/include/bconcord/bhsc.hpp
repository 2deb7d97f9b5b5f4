#pragma once

#include "bconcord/bssc.hpp"
#include "bconcord/rng.hpp"
#include "bconcord/types.hpp"

namespace bconcord {

// Auxiliary-variable representation of the horseshoe scales.
struct HorseshoeState {
    Vector lambda2;  // per-pair local variances
    Vector nu;       // per-pair auxiliaries
    double tau2 = 1.0;
    double eps = 1.0;

    HorseshoeState() = default;
    explicit HorseshoeState(int p)
        : lambda2(Vector::Ones(static_cast<Eigen::Index>(pair_count(p)))),
          nu(Vector::Ones(static_cast<Eigen::Index>(pair_count(p)))) {}
};

struct HorseshoeConfig {
    int burn_in = 2000;
    int keep = 2000;
    int thin = 1;               // stride between stored draws
    double ci_level = 0.95;     // central credible-interval mass
    double gamma0 = 1.0;        // diagonal rate
    DiagMode diag_mode = DiagMode::PointMass;
    bool update_diagonals = true;

    void validate() const;
};

struct HorseshoeSummary {
    int p = 0;
    long long T = 0;  // stored draws behind the interval estimates
    Vector offdiag_mean, diag_mean;
    Vector offdiag_ci_lo, offdiag_ci_hi;
    Vector diag_ci_lo, diag_ci_hi;
    SparsityPattern selected;  // zero outside the credible interval

    PrecisionState mean_state() const;
};

// One full pass: every pair (normal conditional, then lambda2/nu), then the
// global tau2/eps once, then the diagonals.
void bhsc_sweep(PrecisionState& state, HorseshoeState& hs, const SampleCovariance& S,
                int n, const HorseshoeConfig& cfg, SeededRng& rng);

HorseshoeSummary run_chain_bhsc(const SampleCovariance& S, int n,
                                const HorseshoeConfig& cfg, SeededRng rng,
                                const PrecisionState* init = nullptr);

}  // namespace bconcord
