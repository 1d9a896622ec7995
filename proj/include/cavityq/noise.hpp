#pragma once

// Single-mode noise channels, bosonic code states and loss experiments.

#include "cavityq/fock.hpp"

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

namespace cavityq {

// Largest tolerated completeness defect of the raw first-order Kraus pair.
// Beyond this the step is too coarse for the first-order model.
inline constexpr double kMaxFirstOrderDefect = 1e-6;

struct NoiseChannel {
    std::vector<Operator> kraus;
    double dt = 0.0;

    // max |sum_k K^dag K - I|
    double completeness_error() const;
};

// Amplitude damping with level-n rate n / t1_fock0:
// K1 = sqrt(dt/t1) a, K0 = sqrt(I - K1^dag K1) (first order: I - dt/(2 t1) n).
NoiseChannel photon_loss_channel(double t1_fock0, double dt, std::size_t n_levels);

// Pure dephasing with jump operator sqrt(rate) n.
NoiseChannel dephasing_channel(double rate, double dt, std::size_t n_levels);

Matrix density_matrix(const StateVector& psi);
Matrix apply_channel(const NoiseChannel& channel, const Matrix& rho);

struct TrajectoryStep {
    std::size_t step = 0;
    std::size_t jump_count = 0;
    double parity = 0.0;
    double mean_n = 0.0;
};

struct Trajectory {
    StateVector state;
    std::vector<std::size_t> jump_steps;  // steps at which a non-identity Kraus branch fired
    std::vector<TrajectoryStep> record;   // one row per step, after the step
};

// Monte Carlo unraveling: at each step branch k is chosen with probability
// |K_k psi|^2. Identical seeds give identical trajectories.
Trajectory apply_channel_trajectory(const NoiseChannel& channel, const StateVector& psi, std::size_t steps,
                                    std::uint64_t seed);

// Uniform double in [0, 1) from the top 53 bits of one draw.
double uniform01(std::uint64_t bits);

enum class CatParity { Even, Odd };
enum class CatAxis { Real, Imag };

// Normalized |beta> +- |-beta> with beta = alpha (Real) or i*alpha (Imag).
StateVector cat_state(cplx alpha, CatParity parity, CatAxis axis, std::size_t n_levels);

struct CatBasis {
    cplx alpha;
    // C+_alpha, C-_alpha, C+_{i alpha}, C-_{i alpha}
    std::array<StateVector, 4> states;
};

CatBasis cat_basis(cplx alpha, std::size_t n_levels);

// c_g C+_alpha + c_e C+_{i alpha}, renormalized.
StateVector cat_encode(cplx c_g, cplx c_e, cplx alpha, std::size_t n_levels);

// Probability weight of psi inside span{C+_alpha, C+_{i alpha}}.
double cat_code_fidelity(const StateVector& psi, cplx alpha);

// <(-1)^n> of a single-mode state.
double parity(const StateVector& psi);

double mean_photon_number(const StateVector& psi);

// Normalized a^k psi.
StateVector photon_loss_cycle_check(const StateVector& psi, std::size_t k);

// (|0> + |4>)/sqrt2 and |2>.
std::pair<StateVector, StateVector> binomial_codewords(std::size_t n_levels);

} // namespace cavityq
