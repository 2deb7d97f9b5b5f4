#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "bconcord/errors.hpp"

namespace bconcord {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Number of unordered off-diagonal pairs.
inline std::size_t pair_count(int p) {
    return static_cast<std::size_t>(p) * (p - 1) / 2;
}

// Canonical pair order: (0,1),(0,2),...,(p-2,p-1), row-major over j<k.
// (Rendered 1-based as (1,2),(1,3),...,(p-1,p) in file formats.)
inline std::size_t flat_index(int j, int k, int p) {
    return static_cast<std::size_t>(j) * (2 * p - j - 1) / 2 + (k - j - 1);
}

struct PairIndex {
    int j;             // 0-based, j < k
    int k;
    std::size_t flat;  // position in canonical order
};

PairIndex pair_from_flat(std::size_t flat, int p);

inline PairIndex make_pair_index(int j, int k, int p) {
    return PairIndex{j, k, flat_index(j, k, p)};
}

// Bitset over the p(p-1)/2 off-diagonal positions in canonical order.
struct SparsityPattern {
    int p = 0;
    std::vector<char> bits;

    SparsityPattern() = default;
    explicit SparsityPattern(int p_) : p(p_), bits(pair_count(p_), 0) {}

    bool test(std::size_t f) const { return bits[f] != 0; }
    bool test(int j, int k) const { return bits[flat_index(j, k, p)] != 0; }
    void set(std::size_t f, bool v = true) { bits[f] = v ? 1 : 0; }
    void set(int j, int k, bool v = true) { set(flat_index(j, k, p), v); }

    // d_l, the number of active positions.
    std::size_t count() const {
        std::size_t c = 0;
        for (char b : bits) c += (b != 0);
        return c;
    }

    bool operator==(const SparsityPattern& o) const {
        return p == o.p && bits == o.bits;
    }

    // Per-vertex degrees in the graph the pattern encodes.
    std::vector<int> vertex_degrees() const;
    int max_degree() const;
};

// Symmetric matrix with positive diagonal: one storage slot per unordered
// pair, so (j,k) and (k,j) always read the same value.
struct PrecisionState {
    int p = 0;
    Vector diag;     // length p, all > 0
    Vector offdiag;  // length p(p-1)/2, canonical order

    PrecisionState() = default;
    explicit PrecisionState(int p_)
        : p(p_), diag(Vector::Ones(p_)), offdiag(Vector::Zero(pair_count(p_))) {}

    static PrecisionState identity(int p_) { return PrecisionState(p_); }

    double off(int j, int k) const { return offdiag[flat_index(std::min(j, k), std::max(j, k), p)]; }
    void set_off(int j, int k, double v) { offdiag[flat_index(std::min(j, k), std::max(j, k), p)] = v; }

    Matrix dense() const;
    static PrecisionState from_dense(const Matrix& m, double sym_tol = 1e-12);
};

// Sparsity pattern of a state: bit set iff |offdiag| > tol (default exact).
SparsityPattern pattern_of(const PrecisionState& state, double tol = 0.0);

struct SampleCovariance {
    int p = 0;
    Matrix m;

    SampleCovariance() = default;
    explicit SampleCovariance(Matrix mat) : p(static_cast<int>(mat.rows())), m(std::move(mat)) {}

    double operator()(int j, int k) const { return m(j, k); }
};

// S = (1/n) Y'Y; optional column centering first (divisor stays n).
SampleCovariance sample_covariance(const Matrix& data, bool center = false);

}  // namespace bconcord
