#pragma once

#include "cavityq/fock.hpp"

#include <cmath>
#include <random>

namespace testutil {

using cavityq::cplx;
using cavityq::Matrix;
using cavityq::Vector;

inline Matrix random_matrix(std::mt19937_64& rng, Eigen::Index n) {
    std::normal_distribution<double> g(0.0, 1.0);
    Matrix m(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) m(i, j) = cplx(g(rng), g(rng));
    return m;
}

inline Matrix random_hermitian(std::mt19937_64& rng, Eigen::Index n) {
    Matrix m = random_matrix(rng, n);
    return 0.5 * (m + m.adjoint());
}

inline Vector random_vector(std::mt19937_64& rng, Eigen::Index n) {
    std::normal_distribution<double> g(0.0, 1.0);
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = cplx(g(rng), g(rng));
    return v;
}

// Haar-distributed pure state.
inline cavityq::StateVector random_state(std::mt19937_64& rng, const cavityq::HilbertShape& shape) {
    Vector v = random_vector(rng, static_cast<Eigen::Index>(shape.total()));
    return cavityq::StateVector(shape, v / v.norm());
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) { return (a - b).cwiseAbs().maxCoeff(); }
inline double max_abs_diff(const Vector& a, const Vector& b) { return (a - b).cwiseAbs().maxCoeff(); }

} // namespace testutil
