#pragma once

// Trotterized single-qudit dynamics built from SNAP and Fourier gates, and
// out-of-time-order correlators.
//
// H = 2 pi ( diag(V) + F diag(K) F^dag ) with V, K in cycles/s and F the
// qudit Fourier gate.

#include "cavityq/fit.hpp"
#include "cavityq/fock.hpp"
#include "cavityq/gates.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace cavityq {

struct QuditHamiltonian {
    std::vector<double> diagonal;          // V_n
    std::vector<double> kinetic_diagonal;  // K_j, in the Fourier basis

    std::size_t levels() const { return diagonal.size(); }
    void validate() const;
    Operator matrix() const;
};

// [snap(-2 pi V dt), fourier^dag, snap(-2 pi K dt), fourier]
Circuit trotter_step(const QuditHamiltonian& h, double dt);

// exp(-i H t)
Operator exact_propagator(const QuditHamiltonian& h, double t);

struct TrotterEvolution {
    StateVector state;
    StateVector exact;
    double infidelity = 0.0;  // 1 - |<exact|state>|^2
};

TrotterEvolution evolve_trotter(const QuditHamiltonian& h, double t_total, std::size_t steps, const StateVector& psi0);

struct TrotterRow {
    std::size_t steps = 0;
    double dt = 0.0;
    double infidelity = 0.0;
};

std::vector<TrotterRow> trotter_convergence(const QuditHamiltonian& h, double t_total,
                                            std::span<const std::size_t> steps, const StateVector& psi0);

// Fit of log sqrt(infidelity) against log dt; the slope is the order of the
// global state error. Rows with zero infidelity are skipped.
LinearFit trotter_error_exponent(std::span<const TrotterRow> rows);

// <psi0| W(t)^dag V^dag W(t) V |psi0>, W(t) = U^dag W U, U = exp(-i H t).
cplx otoc(const Operator& w, const Operator& v, const QuditHamiltonian& h, double t, const StateVector& psi0);
cplx otoc(const Operator& w, const Operator& v, const QuditHamiltonian& h, double t);  // psi0 = |0>

struct OtocRow {
    double t = 0.0;
    cplx value;
};

std::vector<OtocRow> otoc_series(const Operator& w, const Operator& v, const QuditHamiltonian& h,
                                 std::span<const double> times, const StateVector& psi0);

} // namespace cavityq
