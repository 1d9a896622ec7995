#pragma once

// Dispersive-regime estimators for a transmon coupled to a storage cavity.
//
// Frequencies are plain doubles in the units they are given in; every
// estimator here is a closed-form expression, so no 2*pi factors are
// inserted. snap_min_gate_time() treats chi as an angular rate.

#include <cstddef>
#include <optional>
#include <span>
#include <string>

namespace cavityq {

struct DeviceParams {
    double omega_q_hz = 0.0;
    double omega_c_hz = 0.0;
    double g_hz = 0.0;
    double chi_prime_hz = 0.0;
    double alpha_hz = 0.0;     // transmon anharmonicity, signed
    double t1_fock0_s = 0.0;   // lifetime of |1>, reference for the 1/n scaling
    double t1_min_s = 0.0;

    double detuning_hz() const { return omega_q_hz - omega_c_hz; }
};

// Throws an argument error if the parameter invariants do not hold.
void validate(const DeviceParams& p);

// Dispersive shift g^2 / (omega_q - omega_c).
double chi(const DeviceParams& p);

// Qubit frequency with n photons in the cavity, to first or second order in n.
double stark_shifted_freq(const DeviceParams& p, double n, int order);

// (Delta / 2g)^2
double critical_photon_number(const DeviceParams& p);

// T1 of Fock state |n>, t1_fock0 / n. Vacuum does not decay: nullopt.
std::optional<double> fock_t1(const DeviceParams& p, std::size_t n);

struct FockBound {
    std::size_t max_level = 0;
    std::string advisory;  // non-empty when the bound is degenerate
};

// floor(t1_fock0 / t1_min)
FockBound max_fock(const DeviceParams& p);

// 2*pi / |chi|
double snap_min_gate_time(const DeviceParams& p);

struct ModeShift {
    double photons = 0.0;
    double chi_hz = 0.0;
};

// omega_q - sum_k n_k chi_k
double multimode_drive_freq(double omega_q_hz, std::span<const ModeShift> shifts);
double multimode_drive_freq(const DeviceParams& p, std::span<const ModeShift> shifts);

// k * |dE01/dlambda|^2 * S(omega -> 0)
double dephasing_rate(double dispersion, double spectral_density_0, double k);

// k * |<0|O|1>|^2 * S(E01)
double relaxation_rate(double matrix_element, double spectral_density_e01, double k);

} // namespace cavityq
