#include "cavityq/device.hpp"

#include "cavityq/error.hpp"

#include <cmath>
#include <numbers>

namespace cavityq {

void validate(const DeviceParams& p) {
    if (!(p.g_hz > 0.0)) fail(ErrorKind::Argument, "g_hz must be > 0");
    if (p.omega_q_hz == p.omega_c_hz) fail(ErrorKind::Degenerate, "omega_q_hz equals omega_c_hz (zero detuning)");
    if (!(p.t1_fock0_s > 0.0)) fail(ErrorKind::Argument, "t1_fock0_s must be > 0");
    if (!(p.t1_min_s > 0.0)) fail(ErrorKind::Argument, "t1_min_s must be > 0");
}

double chi(const DeviceParams& p) {
    const double delta = p.detuning_hz();
    if (delta == 0.0) fail(ErrorKind::Degenerate, "dispersive shift undefined at zero detuning");
    return p.g_hz * p.g_hz / delta;
}

double stark_shifted_freq(const DeviceParams& p, double n, int order) {
    if (n < 0.0) fail(ErrorKind::Argument, "photon number must be >= 0");
    const double c = chi(p);
    switch (order) {
    case 1: return p.omega_q_hz - n * c;
    case 2: return p.omega_q_hz - (c * n + 0.5 * p.chi_prime_hz * n * n);
    default: fail(ErrorKind::Argument, "Stark shift order must be 1 or 2");
    }
}

double critical_photon_number(const DeviceParams& p) {
    if (!(p.g_hz > 0.0)) fail(ErrorKind::Argument, "g_hz must be > 0");
    const double r = p.detuning_hz() / (2.0 * p.g_hz);
    return r * r;
}

std::optional<double> fock_t1(const DeviceParams& p, std::size_t n) {
    if (n == 0) return std::nullopt;
    return p.t1_fock0_s / static_cast<double>(n);
}

FockBound max_fock(const DeviceParams& p) {
    if (!(p.t1_min_s > 0.0) || !(p.t1_fock0_s > 0.0)) fail(ErrorKind::Argument, "lifetimes must be > 0");
    if (p.t1_min_s > p.t1_fock0_s) {
        return {0, "t1_min_s exceeds t1_fock0_s: no Fock level meets the lifetime requirement"};
    }
    // The ratio of two decimal inputs can land a few ulps under an integer.
    const double ratio = p.t1_fock0_s / p.t1_min_s;
    return {static_cast<std::size_t>(std::floor(ratio * (1.0 + 4.0 * 2.220446049250313e-16))), {}};
}

double snap_min_gate_time(const DeviceParams& p) {
    const double c = chi(p);
    if (c == 0.0) fail(ErrorKind::Degenerate, "SNAP gate time undefined for chi = 0");
    return 2.0 * std::numbers::pi / std::abs(c);
}

double multimode_drive_freq(double omega_q_hz, std::span<const ModeShift> shifts) {
    double w = omega_q_hz;
    for (const auto& s : shifts) w -= s.photons * s.chi_hz;
    return w;
}

double multimode_drive_freq(const DeviceParams& p, std::span<const ModeShift> shifts) {
    return multimode_drive_freq(p.omega_q_hz, shifts);
}

double dephasing_rate(double dispersion, double spectral_density_0, double k) {
    if (spectral_density_0 < 0.0) fail(ErrorKind::Argument, "spectral density must be >= 0");
    if (!(k > 0.0)) fail(ErrorKind::Argument, "proportionality constant must be > 0");
    return k * dispersion * dispersion * spectral_density_0;
}

double relaxation_rate(double matrix_element, double spectral_density_e01, double k) {
    if (matrix_element < 0.0 || spectral_density_e01 < 0.0 || k < 0.0) {
        fail(ErrorKind::Argument, "relaxation rate inputs must be >= 0");
    }
    return k * matrix_element * matrix_element * spectral_density_e01;
}

} // namespace cavityq
