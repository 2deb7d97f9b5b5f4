#pragma once

#include <cstdint>
#include <vector>

#include "bconcord/bssc.hpp"
#include "bconcord/types.hpp"

namespace bconcord {

// One entry of the quadratic-form matrix over off-diagonal coordinates:
// pairs (a,b) and (c,d), 0-based, a<b and c<d.
//   same pair        -> s_aa + s_bb
//   b=d, a!=c        -> s_ac
//   a=c, b!=d        -> s_bd
//   b=c              -> s_ad
//   a=d              -> s_bc
//   disjoint         -> 0
double phi_entry(const SampleCovariance& S, int a, int b, int c, int d);

// Dense p(p-1)/2 square matrix in canonical pair order.
Matrix build_phi(const SampleCovariance& S);

// a[(j,k)] = s_jk (omega_jj + omega_kk) for fixed diagonals.
Vector build_a(const SampleCovariance& S, const Vector& diag);

// Exact posterior over sparsity patterns at fixed diagonals. Patterns are
// bitmasks over canonical pair positions; prob[mask] sums to 1 over the
// admissible patterns (d_l <= tau), zero elsewhere.
struct PatternPosterior {
    int p = 0;
    std::size_t n_pairs = 0;
    std::vector<double> prob;  // size 2^n_pairs
    double log_norm = 0.0;     // log of the unnormalized total
};

PatternPosterior enumerate_patterns(const SampleCovariance& S, int n,
                                    const Vector& diag, const SpikeSlabConfig& cfg);

// Per-pair inclusion probability: sum of prob over patterns with the bit set.
Vector marginal_inclusion(const PatternPosterior& post);

}  // namespace bconcord
