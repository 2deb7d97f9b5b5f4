#include "bconcord/types.hpp"

#include <cmath>

namespace bconcord {

PairIndex pair_from_flat(std::size_t flat, int p) {
    std::size_t offset = 0;
    for (int j = 0; j < p - 1; ++j) {
        std::size_t row = static_cast<std::size_t>(p - 1 - j);
        if (flat < offset + row) {
            int k = j + 1 + static_cast<int>(flat - offset);
            return PairIndex{j, k, flat};
        }
        offset += row;
    }
    throw InvalidInput("pair index out of range");
}

std::vector<int> SparsityPattern::vertex_degrees() const {
    std::vector<int> deg(p, 0);
    std::size_t f = 0;
    for (int j = 0; j < p - 1; ++j)
        for (int k = j + 1; k < p; ++k, ++f)
            if (bits[f]) {
                ++deg[j];
                ++deg[k];
            }
    return deg;
}

int SparsityPattern::max_degree() const {
    int m = 0;
    for (int d : vertex_degrees()) m = std::max(m, d);
    return m;
}

Matrix PrecisionState::dense() const {
    Matrix m = Matrix::Zero(p, p);
    for (int j = 0; j < p; ++j) m(j, j) = diag[j];
    std::size_t f = 0;
    for (int j = 0; j < p - 1; ++j)
        for (int k = j + 1; k < p; ++k, ++f) {
            m(j, k) = offdiag[f];
            m(k, j) = offdiag[f];
        }
    return m;
}

PrecisionState PrecisionState::from_dense(const Matrix& m, double sym_tol) {
    if (m.rows() != m.cols()) throw InvalidInput("matrix is not square");
    int p = static_cast<int>(m.rows());
    PrecisionState st(p);
    for (int j = 0; j < p; ++j) {
        if (!(m(j, j) > 0.0)) throw InvalidInput("diagonal entries must be positive");
        st.diag[j] = m(j, j);
    }
    std::size_t f = 0;
    for (int j = 0; j < p - 1; ++j)
        for (int k = j + 1; k < p; ++k, ++f) {
            if (std::abs(m(j, k) - m(k, j)) > sym_tol)
                throw InvalidInput("matrix is not symmetric");
            st.offdiag[f] = m(j, k);
        }
    return st;
}

SparsityPattern pattern_of(const PrecisionState& state, double tol) {
    SparsityPattern pat(state.p);
    for (std::size_t f = 0; f < pat.bits.size(); ++f)
        pat.bits[f] = std::abs(state.offdiag[f]) > tol ? 1 : 0;
    return pat;
}

SampleCovariance sample_covariance(const Matrix& data, bool center) {
    const auto n = data.rows();
    const auto p = data.cols();
    if (n < 2) throw InvalidInput("need at least two observations");
    if (p < 2) throw InvalidInput("need at least two variables");
    if (!data.allFinite()) throw InvalidInput("data contains non-finite values");
    Matrix y = data;
    if (center) y.rowwise() -= data.colwise().mean();
    Matrix s = (y.transpose() * y) / static_cast<double>(n);
    // force exact symmetry against accumulation-order asymmetry
    s = ((s + s.transpose()) / 2.0).eval();
    return SampleCovariance(std::move(s));
}

}  // namespace bconcord
