#pragma once

// Pitch-and-catch state transfer between two single-excitation nodes joined
// by an ideal directional channel. With the channel eliminated the emitter
// amplitude a and receiver amplitude b obey
//   da/dt = -(k1(t)/2 + i dw/2) a
//   db/dt = -k2(t)/2 b - sqrt(k1(t) k2(t)) a
// and the field leaving the receiver is sqrt(k1) a + sqrt(k2) b.
// All rates are angular (rad/s).

#include "cavityq/fit.hpp"
#include "cavityq/fock.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace cavityq {

// g(t) = kappa / (2 cosh(kappa t / 2))
double sech_pitch(double kappa_hz, double t);

// g(t) = g Omega(t) alpha / (sqrt(2) Delta (Delta + alpha))
double raman_coupling(double omega_drive, double g_hz, double anharmonicity_hz, double detuning_hz);

// kappa = sqrt(gamma / 2 pi)
double modulated_coupling(double gamma);

struct Waveform {
    enum class Kind { Sech, Sampled };

    Kind kind = Kind::Sech;
    double kappa_hz = 0.0;
    // Sampled: values at t0 + i dt, linearly interpolated, zero outside.
    double t0_s = 0.0;
    double dt_s = 0.0;
    std::vector<double> values;
    bool reversed = false;  // evaluate at -t

    // Decay rate kappa / (1 + exp(-kappa t)), which releases a photon with
    // the sech_pitch envelope. Reversed, it absorbs that photon.
    static Waveform sech(double kappa_hz, bool reversed = false);
    static Waveform sampled(double t0_s, double dt_s, std::vector<double> values);

    double operator()(double t) const;
    void validate() const;
};

struct QstConfig {
    double kappa_hz = 0.0;  // reference rate, sets the default sweep region
    Waveform emit_waveform;
    Waveform catch_waveform;
    double delta_omega_hz = 0.0;
    double t0_s = 0.0;
    double t1_s = 0.0;
    double dt_s = 0.0;
    cplx alpha = 0.0;  // input alpha |0> + beta |1>
    cplx beta = 1.0;
    double channel_temperature_k = 0.0;  // only 0 is supported
    std::size_t record_every = 1;

    // Matched sech pitch and time-reversed catch over kappa T = kappa_t.
    static QstConfig matched_sech(double kappa_hz, double kappa_t = 40.0, double kappa_dt = 0.02);

    void validate() const;
};

inline constexpr double kMaxRateStep = 0.05;  // largest allowed rate * dt

struct QstSample {
    double t = 0.0;
    cplx a;
    cplx b;
    double emitted = 0.0;  // excitation carried away by the channel so far
};

struct QstResult {
    double eta = 0.0;         // |b(t1)|^2 for a unit excitation
    double fidelity = 0.0;    // (|alpha|^2 + |beta|^2 |b(t1)|)^2
    double phase = 0.0;       // arg b(t1), removed by the receiver's phase reference
    std::vector<QstSample> samples;
};

QstResult simulate_transfer(const QstConfig& config);

struct DetuningRow {
    double delta_omega_hz = 0.0;
    double eta = 0.0;
    double sqrt_one_minus_eta = 0.0;
};

struct DetuningSweep {
    std::vector<DetuningRow> rows;
    LinearFit fit;  // sqrt(1 - eta) against |delta omega| inside the fit region
    std::size_t fit_points = 0;
};

// fit_max_hz <= 0 selects |delta omega| <= 0.05 kappa.
DetuningSweep detuning_sweep(const QstConfig& config, std::span<const double> deltas, double fit_max_hz = 0.0,
                             std::size_t threads = 1);

// max |w| / floor over the samples.
double on_off_ratio(std::span<const double> samples, double floor_hz);
// Waveform sampled on [t0, t1] with step dt (t = 0 included when in range).
double on_off_ratio(const Waveform& w, double floor_hz, double t0_s, double t1_s, double dt_s);

} // namespace cavityq
