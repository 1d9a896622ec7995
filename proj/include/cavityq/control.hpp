#pragma once

// Piecewise-constant pulse simulation and gradient pulse engineering in the
// rotating frame of the qubit drive.
//
// Segment j of a schedule evolves with
//   H_j = H_drift + sum_k ( v_kj C_k + conj(v_kj) C_k^dag ),
//   v_kj = u_kj * exp(-i f_k t_j),  t_j = (j + 1/2) dt,
// where u_kj are the schedule amplitudes and f_k the control carriers.
// With the qubit control C = |e><g| / 2 a real amplitude u is a Rabi rate:
// a constant drive for time T rotates the qubit by u T.

#include "cavityq/device.hpp"
#include "cavityq/fock.hpp"
#include "cavityq/gates.hpp"
#include "cavityq/optimize.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace cavityq {

struct ControlModel {
    Operator drift;
    std::vector<Operator> controls;
    std::vector<std::string> names;
    // For dispersive models: qubit transition offset (rad/s in the frame)
    // with n photons in the mode, n = 0 .. N-1. Empty otherwise.
    std::vector<double> transition_offsets;

    const HilbertShape& shape() const { return drift.shape(); }
    void validate() const;
};

struct ModelOptions {
    bool second_order = false;  // include the chi' n^2 / 2 term
    bool cavity_drive = false;  // add a cavity drive control C = a^dag
};

// Qubit (x) mode, shape {2, N}, drift -(chi n + chi'/2 n^2) (x) |e><e|,
// control 0 is the qubit drive |e><g| / 2.
ControlModel dispersive_model(double chi_hz, double chi_prime_hz, std::size_t n_levels, const ModelOptions& options = {});
ControlModel dispersive_model(const DeviceParams& params, std::size_t n_levels, const ModelOptions& options = {});

// Bare two-level qubit with drift detuning |e><e| and the qubit drive.
ControlModel qubit_model(double detuning_hz = 0.0);

struct PulseSchedule {
    double dt = 0.0;
    std::vector<std::vector<cplx>> amplitudes;  // [control][step]
    std::vector<double> carriers_hz;            // one per control

    static PulseSchedule zeros(std::size_t n_controls, std::size_t steps, double dt);

    std::size_t n_controls() const { return amplitudes.size(); }
    std::size_t steps() const { return amplitudes.empty() ? 0 : amplitudes.front().size(); }
    double duration() const { return dt * static_cast<double>(steps()); }
    void validate() const;
};

Matrix segment_hamiltonian(const ControlModel& model, const PulseSchedule& schedule, std::size_t step);

// exp(-i H_M dt) ... exp(-i H_1 dt)
Operator schedule_propagator(const ControlModel& model, const PulseSchedule& schedule);

StateVector simulate_schedule(const ControlModel& model, const PulseSchedule& schedule, const StateVector& psi0);

// |Tr(U^dag V)|^2 / d^2
double gate_fidelity(const Operator& u, const Operator& v);

// ---------------------------------------------------------------------------
// Propagator objectives with exact gradients

// Maps the columns of `initial` (an isometry into the model space) onto the
// columns of `target`. Fidelity |Tr(target^dag U initial)|^2 / d^2 with d the
// column count; leakage is the mean weight U initial places on `guard`.
struct GrapeTarget {
    Matrix initial;
    Matrix target;
    std::vector<bool> guard;

    std::size_t d() const { return static_cast<std::size_t>(initial.cols()); }

    static GrapeTarget unitary(const Operator& u);
    static GrapeTarget state(const StateVector& psi0, const StateVector& psi_target);

    // Target defined on a smaller register (each subsystem no larger than the
    // model's); levels above the target's dimensions are guard levels.
    static GrapeTarget embedded_unitary(const Operator& u, const HilbertShape& model_shape);
    static GrapeTarget embedded_state(const StateVector& psi0, const StateVector& psi_target,
                                      const HilbertShape& model_shape);
};

// dh / dx_param = coeff * basis + conj(coeff) * basis^dag. The basis matrix
// is owned by the caller and must outlive the evaluation.
struct GeneratorDerivative {
    std::size_t param = 0;
    cplx coeff = 0.0;
    const Matrix* basis = nullptr;
};

// One piecewise-constant segment exp(-i h dt) together with the derivatives
// of h with respect to the free parameters it depends on.
struct GeneratorSegment {
    Matrix h;
    double dt = 1.0;
    std::vector<GeneratorDerivative> dh;
};

struct ObjectiveValue {
    double fidelity = 0.0;
    double leakage = 0.0;
    double value = 0.0;  // fidelity - leakage_weight * leakage
    std::vector<double> gradient;
};

ObjectiveValue evaluate_segments(const std::vector<GeneratorSegment>& segments, const GrapeTarget& target,
                                 double leakage_weight, std::size_t n_params, bool want_gradient);

// Schedule objective; the gradient is ordered [control][step][re, im].
ObjectiveValue grape_objective(const ControlModel& model, const PulseSchedule& schedule, const GrapeTarget& target,
                               double leakage_weight, bool want_gradient);

struct GrapeOptions {
    std::size_t iterations = 500;
    double learning_rate = 1e-2;  // initial line-search step
    double target_infidelity = 1e-8;
    double leakage_weight = 1.0;
    std::uint64_t seed = 0;
    double jitter = 0.0;  // std-dev of seeded noise added to the initial amplitudes
};

struct GrapeTraceRow {
    std::size_t iteration = 0;
    double infidelity = 0.0;
    double step_size = 0.0;
};

struct GrapeResult {
    PulseSchedule schedule;
    double fidelity = 0.0;
    double leakage = 0.0;
    bool converged = false;
    std::vector<GrapeTraceRow> trace;
};

GrapeResult grape_optimize(const ControlModel& model, const GrapeTarget& target, const PulseSchedule& initial,
                           const GrapeOptions& options = {});

// ---------------------------------------------------------------------------
// Gate-level state preparation

struct SequenceOptions {
    std::size_t layers = 8;        // displacement + SNAP pairs, then a closing displacement
    std::size_t guard_levels = 1;  // simulated levels above the target register
    std::size_t iterations = 2000;
    double target_infidelity = 1e-4;
    double leakage_weight = 1.0;
    std::uint64_t seed = 0;
    double initial_spread = 0.5;   // std-dev of the initial displacement quadratures
};

struct SequenceResult {
    Circuit circuit;  // on the padded register, starting from vacuum
    double fidelity = 0.0;
    double leakage = 0.0;
    bool converged = false;
    std::size_t iterations = 0;
    std::vector<GrapeTraceRow> trace;
};

// Optimizes a seeded random D S D S ... D sequence so that it maps the vacuum
// onto `target` (a single-mode state).
SequenceResult optimize_snap_displacement(const StateVector& target, const SequenceOptions& options = {});

// ---------------------------------------------------------------------------
// SNAP by number-selective qubit loops

struct SnapOptions {
    std::size_t steps = 200;
    std::size_t calibration_iterations = 300;
    double target_infidelity = 1e-6;
    bool enforce_bound = true;  // reject durations below 2 pi / |chi|
    // Calibration start, three values (scale, frequency * T, phase) per driven
    // level. Empty starts from the analytic pulse.
    std::vector<double> initial_parameters;
};

struct SnapPulse {
    PulseSchedule schedule;
    double infidelity = 0.0;  // 1 - |Tr(S^dag M)/N|^2 with M = <g|U|g>
    std::size_t calibration_iterations = 0;
    std::vector<double> parameters;
};

// Uncalibrated multi-tone pulse: for every level with a nonzero phase, two
// Hann-windowed pi pulses at that level's transition, the second shifted in
// phase so the closed loop imprints theta_n on |g, n>.
PulseSchedule analytic_snap_pulse(const ControlModel& model, std::span<const double> theta, double duration,
                                  std::size_t steps);

SnapPulse synthesize_snap_pulse(const ControlModel& model, std::span<const double> theta, double duration,
                                const SnapOptions& options = {});

struct SnapSweepRow {
    double factor = 0.0;    // duration in units of 2 pi / |chi|
    double duration = 0.0;  // s
    double infidelity = 0.0;
};

// Calibrated SNAP infidelity against duration, longest first. Each point keeps
// the best of a cold start and warm starts from its neighbours' calibrations.
std::vector<SnapSweepRow> snap_bandwidth_sweep(const ControlModel& model, std::span<const double> theta,
                                               std::vector<double> factors, const SnapOptions& options = {});

GrapeTarget snap_target(std::span<const double> theta);

double snap_pulse_infidelity(const ControlModel& model, const PulseSchedule& schedule, std::span<const double> theta);

} // namespace cavityq
