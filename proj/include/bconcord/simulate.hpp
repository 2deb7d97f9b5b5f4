#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bconcord/bhsc.hpp"
#include "bconcord/bssc.hpp"
#include "bconcord/rng.hpp"
#include "bconcord/types.hpp"

namespace bconcord {

struct TruthSpec {
    int p = 0;
    double density = 0.04;   // fraction of active off-diagonal pairs
    double mag_lo = 0.4;     // nonzero magnitudes, sign drawn at random
    double mag_hi = 0.6;
    double diag_slack = 0.5; // omega_jj = sum_k |omega_jk| + diag_slack

    void validate() const;
};

// Diagonally dominant ground truth with ceil(density * p(p-1)/2) active
// pairs chosen uniformly without replacement.
PrecisionState generate_truth(const TruthSpec& spec, SeededRng& rng);

// n i.i.d. rows from N(0, Omega^{-1}).
Matrix sample_mvn(const PrecisionState& omega0, int n, SeededRng& rng);

struct AccuracyReport {
    long long tp = 0, tn = 0, fp = 0, fn = 0;
    double sp = 1.0;   // TN / (TN+FP); vacuous denominator -> 1
    double se = 1.0;   // TP / (TP+FN); vacuous denominator -> 1
    double mcc = 0.0;  // 0 whenever a denominator factor vanishes
    std::optional<double> rel_frobenius;  // filled when an estimate is scored
};

AccuracyReport accuracy(const SparsityPattern& selected, const SparsityPattern& truth);

// ||est - truth||_F / ||truth||_F over the full symmetric matrices.
double relative_frobenius(const PrecisionState& est, const PrecisionState& truth);

enum class Method { SpikeSlab, SpikeSlabRefit, Horseshoe };

std::string method_name(Method m);
Method method_from_name(const std::string& name);

struct BenchSpec {
    int p = 50;
    int n = 100;
    double density = 0.04;
    int reps = 10;
    Method method = Method::SpikeSlab;
    std::uint64_t seed = 0;
    int chains = 1;
    int threads = 1;          // worker threads across replicates
    double threshold = 0.5;   // inclusion cutoff for spike-and-slab selection
    int refit_sweeps = 4000;
    SpikeSlabConfig fit;
    HorseshoeConfig hs;

    void validate() const;
};

struct RepResult {
    int rep = 0;
    bool ok = false;
    std::string error;                          // set when ok == false
    AccuracyReport acc;                         // selection vs truth + rel Frobenius
    std::optional<double> refit_rel_frobenius;  // SpikeSlabRefit only
    double seconds = 0.0;                       // wall time, timing runs only
};

struct BenchReport {
    TruthSpec truth_spec;
    SparsityPattern truth_pattern;
    std::vector<RepResult> per_rep;
    int n_ok = 0;
    // Means over successful replicates.
    double sp = 0.0, se = 0.0, mcc = 0.0, rel_frobenius = 0.0;
    std::optional<double> refit_rel_frobenius;
};

// One ground truth per bench; each replicate draws fresh data from it, fits,
// and scores. Replicates run on spec.threads workers with one RNG stream
// block per replicate index, so the report is thread-count invariant.
BenchReport replicate(const BenchSpec& spec, bool collect_timing = false);

}  // namespace bconcord
