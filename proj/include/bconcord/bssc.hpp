#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "bconcord/rng.hpp"
#include "bconcord/types.hpp"

namespace bconcord {

struct GammaHyper {
    double r = 1e-4;
    double s = 1e-8;
};

enum class DiagMode { PointMass, Discretized };

constexpr std::size_t kNoDensityCap = std::numeric_limits<std::size_t>::max();

struct SpikeSlabConfig {
    double q = 0.5;           // mixture weight on the slab
    double lambda0 = 1.0;     // scalar slab precision, broadcast per pair
    Vector lambda;            // optional per-pair override (filled by hyper updates)
    double gamma0 = 1.0;      // scalar diagonal exponential rate
    Vector gamma;             // optional per-diagonal override
    std::optional<GammaHyper> hyper;  // enables per-sweep lambda/gamma resampling
    std::size_t tau = kNoDensityCap;  // pattern-density cap
    int burn_in = 2000;
    int keep = 2000;
    int thin = 1;
    DiagMode diag_mode = DiagMode::PointMass;
    bool update_diagonals = true;  // false pins diagonals at their init values
    bool store_draws = false;      // keep thinned full states in the trace

    double lambda_at(std::size_t f) const { return lambda.size() ? lambda[f] : lambda0; }
    double gamma_at(int j) const { return gamma.size() ? gamma[j] : gamma0; }
    std::size_t effective_tau(int p) const {
        return tau == kNoDensityCap ? pair_count(p) : tau;
    }
    void validate(int p) const;
};

struct ChainTrace {
    int p = 0;
    long long T = 0;  // retained sweeps accumulated
    std::vector<long long> include_count;
    Vector value_sum;
    Vector diag_sum;
    std::vector<PrecisionState> draws;        // thinned, only if store_draws
    std::vector<double> sweep_seconds;        // only if collect_timing

    ChainTrace() = default;
    explicit ChainTrace(int p_)
        : p(p_), include_count(pair_count(p_), 0),
          value_sum(Vector::Zero(pair_count(p_))), diag_sum(Vector::Zero(p_)) {}

    void merge(const ChainTrace& other);
    Vector inclusion() const;  // include_count / T
    Vector diag_mean() const;
};

struct PosteriorSummary {
    Vector inclusion;
    PrecisionState estimate;
    SparsityPattern selected;
};

// Conditional mixture for one off-diagonal entry given the rest.
struct OffdiagConditional {
    double p_incl;  // slab probability
    double mean;    // slab mean  -b/a
    double var;     // slab variance 1/(n a)
    double a;
    double b;
};

OffdiagConditional offdiag_conditional(const PrecisionState& state, const SampleCovariance& S,
                                       const SpikeSlabConfig& cfg, const PairIndex& pair, int n);

// Diagonal conditional update. Point-mass mode returns the closed-form mode
// and needs no rng; discretized mode draws from a 512-point log-spaced grid.
double diag_update(const PrecisionState& state, const SampleCovariance& S,
                   const SpikeSlabConfig& cfg, int j, int n, SeededRng* rng = nullptr);

// One full Gibbs pass: all pairs in canonical order, then all diagonals.
void sweep(PrecisionState& state, const SampleCovariance& S, const SpikeSlabConfig& cfg,
           int n, SeededRng& rng);

// Remark-style conjugate resampling of lambda/gamma given the current state.
void update_hyperparameters(const PrecisionState& state, SpikeSlabConfig& cfg, SeededRng& rng);

struct RunOptions {
    bool collect_timing = false;
};

ChainTrace run_chain(const SampleCovariance& S, int n, const SpikeSlabConfig& cfg,
                     const PrecisionState& init, SeededRng rng, RunOptions opts = {});
ChainTrace run_chain(const SampleCovariance& S, int n, const SpikeSlabConfig& cfg,
                     SeededRng rng, RunOptions opts = {});

PosteriorSummary summarize(const ChainTrace& trace, const Vector& diag_mean, double threshold);

// Multi-chain driver: chain c uses stream base_stream + c; traces merged by
// chain index, so results do not depend on the number of worker threads.
ChainTrace run_chains(const SampleCovariance& S, int n, const SpikeSlabConfig& cfg,
                      int chains, int threads, std::uint64_t seed,
                      std::uint64_t base_stream = 1, RunOptions opts = {});

}  // namespace bconcord
