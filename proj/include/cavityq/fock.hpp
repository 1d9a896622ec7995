#pragma once

// Dense linear algebra over truncated multi-mode Fock spaces.
//
// Flattening convention: row-major over subsystems, the first listed
// subsystem is the most significant index. For shape {2, N} (qubit then
// cavity) the basis state |q>|n> sits at flat index q*N + n.

#include "cavityq/error.hpp"

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace cavityq {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

inline constexpr std::size_t kDefaultDimCap = std::size_t{1} << 20;

// Largest total Hilbert dimension any constructor will accept. Reads
// CAVITYQ_DIM_CAP from the environment, otherwise kDefaultDimCap.
std::size_t dimension_cap();

// Above this much truncated probability mass a state or operator is
// flagged with a truncation warning.
inline constexpr double kLeakageWarn = 1e-6;

class HilbertShape {
public:
    HilbertShape() = default;
    explicit HilbertShape(std::vector<std::size_t> dims);
    HilbertShape(std::initializer_list<std::size_t> dims)
        : HilbertShape(std::vector<std::size_t>(dims)) {}

    const std::vector<std::size_t>& dims() const { return dims_; }
    std::size_t subsystems() const { return dims_.size(); }
    std::size_t dim(std::size_t k) const { return dims_.at(k); }
    std::size_t total() const { return total_; }

    // Stride of subsystem k in the flat index.
    std::size_t stride(std::size_t k) const;
    std::vector<std::size_t> unflatten(std::size_t flat) const;
    std::size_t flatten(std::span<const std::size_t> digits) const;

    HilbertShape concat(const HilbertShape& other) const;

    bool operator==(const HilbertShape&) const = default;

private:
    std::vector<std::size_t> dims_;
    std::size_t total_ = 1;
};

std::string to_string(const HilbertShape& shape);

class StateVector {
public:
    StateVector() = default;
    StateVector(HilbertShape shape, Vector amplitudes, double leakage = 0.0);

    static StateVector basis(const HilbertShape& shape, std::size_t flat_index);
    static StateVector basis(const HilbertShape& shape, std::span<const std::size_t> levels);

    const HilbertShape& shape() const { return shape_; }
    const Vector& amplitudes() const { return amps_; }
    cplx operator[](std::size_t i) const { return amps_(static_cast<Eigen::Index>(i)); }
    std::size_t size() const { return static_cast<std::size_t>(amps_.size()); }

    double norm() const { return amps_.norm(); }
    StateVector normalized() const;

    // Probability mass lost to truncation when the state was built.
    double leakage() const { return leakage_; }
    bool truncation_warning() const { return leakage_ > kLeakageWarn; }

    std::vector<double> probabilities() const;

private:
    HilbertShape shape_;
    Vector amps_;
    double leakage_ = 0.0;
};

class Operator {
public:
    Operator() = default;
    Operator(HilbertShape shape, Matrix matrix, double leakage = 0.0);

    static Operator identity(const HilbertShape& shape);

    const HilbertShape& shape() const { return shape_; }
    const Matrix& matrix() const { return m_; }
    std::size_t dim() const { return shape_.total(); }
    double leakage() const { return leakage_; }
    bool truncation_warning() const { return leakage_ > kLeakageWarn; }

    Operator adjoint() const;
    StateVector apply(const StateVector& psi) const;

    Operator operator*(const Operator& rhs) const;
    Operator operator+(const Operator& rhs) const;
    Operator operator-(const Operator& rhs) const;
    Operator scaled(cplx factor) const;

private:
    HilbertShape shape_;
    Matrix m_;
    double leakage_ = 0.0;
};

// Throws a shape error unless a == b.
void require_same_shape(const HilbertShape& a, const HilbertShape& b, const char* what);

Operator annihilation(std::size_t n_levels);
Operator creation(std::size_t n_levels);
Operator number_operator(std::size_t n_levels);

Operator tensor(const Operator& a, const Operator& b);
StateVector tensor(const StateVector& a, const StateVector& b);

// Places a single-subsystem operator on subsystem k of shape, identity elsewhere.
Operator embed(const Operator& local, std::size_t k, const HilbertShape& shape);

// Places an operator on the listed subsystems (in the operator's own factor
// order), identity elsewhere. local.shape() must equal the target dims.
Operator embed(const Operator& local, std::span<const std::size_t> targets, const HilbertShape& shape);

// Applies local to the listed subsystems of psi without forming the full matrix.
StateVector apply_local(const Operator& local, std::span<const std::size_t> targets, const StateVector& psi);

// Matrix exponential e^A by scaling and squaring with Pade approximants.
Matrix expm(const Matrix& a);

// exp(-i H t). Hermitian inputs take an eigendecomposition path.
Operator expm(const Operator& h, double t);

bool is_hermitian(const Matrix& m, double tol = 1e-12);

// Max-entry deviation of U^dagger U from the identity.
double unitarity_error(const Matrix& u);

// Same, restricted to the leading `interior` columns.
double unitarity_error(const Matrix& u, std::size_t interior);

StateVector coherent_state(cplx alpha, std::size_t n_levels);

// Haar-random pure state from a seeded generator. Identical seeds give
// identical states on every platform.
StateVector haar_random_state(const HilbertShape& shape, std::uint64_t seed);

// Overlap <psi1|psi2>.
cplx inner(const StateVector& psi1, const StateVector& psi2);

double fidelity(const StateVector& psi1, const StateVector& psi2);

// Reduced density matrix over the kept subsystems (in the given order).
Operator partial_trace(const StateVector& psi, std::span<const std::size_t> keep);

// Joint outcome probabilities over the kept subsystems, flattened with the
// same convention as HilbertShape.
std::vector<double> mode_probabilities(const StateVector& psi, std::span<const std::size_t> keep);

double purity(const Operator& rho);

} // namespace cavityq
