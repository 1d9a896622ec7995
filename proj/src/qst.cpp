#include "cavityq/qst.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numbers>
#include <string>
#include <thread>

namespace cavityq {

namespace {

constexpr cplx kI{0.0, 1.0};

void require_finite(double v, const char* what) {
    if (!std::isfinite(v)) fail(ErrorKind::Numeric, std::string(what) + " is not finite");
}

struct State {
    cplx a, b;
    double emitted;
};

State operator+(const State& x, const State& y) { return {x.a + y.a, x.b + y.b, x.emitted + y.emitted}; }
State operator*(double s, const State& x) { return {s * x.a, s * x.b, s * x.emitted}; }

} // namespace

double sech_pitch(double kappa_hz, double t) {
    require_finite(kappa_hz, "sech kappa");
    require_finite(t, "time");
    return kappa_hz / (2.0 * std::cosh(0.5 * kappa_hz * t));
}

double raman_coupling(double omega_drive, double g_hz, double anharmonicity_hz, double detuning_hz) {
    for (double v : {omega_drive, g_hz, anharmonicity_hz, detuning_hz}) require_finite(v, "Raman coupling input");
    const double d1 = detuning_hz, d2 = detuning_hz + anharmonicity_hz;
    const double scale = std::max({std::abs(detuning_hz), std::abs(anharmonicity_hz), 1.0});
    if (std::abs(d1) <= 1e-12 * scale) fail(ErrorKind::Degenerate, "Raman coupling is singular at zero detuning");
    if (std::abs(d2) <= 1e-12 * scale) {
        fail(ErrorKind::Degenerate, "Raman coupling is singular when detuning cancels the anharmonicity");
    }
    return g_hz * omega_drive * anharmonicity_hz / (std::numbers::sqrt2 * d1 * d2);
}

double modulated_coupling(double gamma) {
    require_finite(gamma, "gamma");
    if (gamma < 0.0) fail(ErrorKind::Argument, "gamma must be >= 0");
    return std::sqrt(gamma / (2.0 * std::numbers::pi));
}

Waveform Waveform::sech(double kappa_hz, bool reversed) {
    Waveform w;
    w.kind = Kind::Sech;
    w.kappa_hz = kappa_hz;
    w.reversed = reversed;
    w.validate();
    return w;
}

Waveform Waveform::sampled(double t0_s, double dt_s, std::vector<double> values) {
    Waveform w;
    w.kind = Kind::Sampled;
    w.t0_s = t0_s;
    w.dt_s = dt_s;
    w.values = std::move(values);
    w.validate();
    return w;
}

void Waveform::validate() const {
    if (kind == Kind::Sech) {
        if (!(kappa_hz >= 0.0) || !std::isfinite(kappa_hz)) fail(ErrorKind::Argument, "sech waveform kappa must be finite and >= 0");
        return;
    }
    require_finite(t0_s, "waveform start time");
    if (!(dt_s > 0.0) || !std::isfinite(dt_s)) fail(ErrorKind::Argument, "sampled waveform dt must be positive");
    if (values.empty()) fail(ErrorKind::Argument, "sampled waveform has no values");
    for (double v : values) {
        require_finite(v, "waveform sample");
        if (v < 0.0) fail(ErrorKind::Argument, "waveform rates must be >= 0");
    }
}

double Waveform::operator()(double t) const {
    if (reversed) t = -t;
    if (kind == Kind::Sech) {
        const double x = -kappa_hz * t;
        return x > 700.0 ? 0.0 : kappa_hz / (1.0 + std::exp(x));
    }
    const double u = (t - t0_s) / dt_s;
    const double last = static_cast<double>(values.size() - 1);
    if (u < 0.0 || u > last) return 0.0;
    const auto i = static_cast<std::size_t>(std::floor(u));
    if (i + 1 >= values.size()) return values.back();
    const double f = u - static_cast<double>(i);
    return (1.0 - f) * values[i] + f * values[i + 1];
}

QstConfig QstConfig::matched_sech(double kappa_hz, double kappa_t, double kappa_dt) {
    if (!(kappa_hz > 0.0) || !std::isfinite(kappa_hz)) fail(ErrorKind::Argument, "kappa must be positive");
    QstConfig c;
    c.kappa_hz = kappa_hz;
    c.emit_waveform = Waveform::sech(kappa_hz);
    c.catch_waveform = Waveform::sech(kappa_hz, true);
    c.t0_s = -0.5 * kappa_t / kappa_hz;
    c.t1_s = 0.5 * kappa_t / kappa_hz;
    c.dt_s = kappa_dt / kappa_hz;
    return c;
}

void QstConfig::validate() const {
    emit_waveform.validate();
    catch_waveform.validate();
    for (double v : {kappa_hz, delta_omega_hz, t0_s, t1_s}) require_finite(v, "QST parameter");
    if (!(t1_s > t0_s)) fail(ErrorKind::Argument, "QST time span must have t1 > t0");
    if (!(dt_s > 0.0) || !std::isfinite(dt_s)) fail(ErrorKind::Argument, "QST step must be positive");
    const double norm = std::norm(alpha) + std::norm(beta);
    if (!std::isfinite(norm) || std::abs(norm - 1.0) > 1e-9) fail(ErrorKind::Argument, "QST input amplitudes must satisfy |alpha|^2 + |beta|^2 = 1");
    if (channel_temperature_k != 0.0) fail(ErrorKind::Argument, "thermal channels are not supported; channel temperature must be 0");
    if (record_every == 0) fail(ErrorKind::Argument, "record_every must be >= 1");
}

QstResult simulate_transfer(const QstConfig& config) {
    config.validate();
    const double span = config.t1_s - config.t0_s;
    const auto steps = static_cast<std::size_t>(std::ceil(span / config.dt_s - 1e-9));
    const double h = span / static_cast<double>(steps);
    const double dw = config.delta_omega_hz;

    const auto rates = [&](double t) {
        const double k1 = config.emit_waveform(t), k2 = config.catch_waveform(t);
        if (std::max(k1, k2) * h > kMaxRateStep * (1.0 + 1e-12)) {
            fail(ErrorKind::Numeric, "integrator step too coarse: rate * dt = " + std::to_string(std::max(k1, k2) * h) +
                                         " exceeds " + std::to_string(kMaxRateStep) + " at t = " + std::to_string(t));
        }
        return std::pair{k1, k2};
    };
    const auto deriv = [&](double t, const State& s) {
        const auto [k1, k2] = rates(t);
        const double c = std::sqrt(k1 * k2);
        const cplx out = std::sqrt(k1) * s.a + std::sqrt(k2) * s.b;
        return State{-(0.5 * k1 + 0.5 * kI * dw) * s.a, -0.5 * k2 * s.b - c * s.a, std::norm(out)};
    };

    QstResult r;
    State s{1.0, 0.0, 0.0};
    r.samples.push_back({config.t0_s, s.a, s.b, s.emitted});
    for (std::size_t j = 0; j < steps; ++j) {
        const double t = config.t0_s + static_cast<double>(j) * h;
        const State k1 = deriv(t, s);
        const State k2 = deriv(t + 0.5 * h, s + (0.5 * h) * k1);
        const State k3 = deriv(t + 0.5 * h, s + (0.5 * h) * k2);
        const State k4 = deriv(t + h, s + h * k3);
        s = s + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if ((j + 1) % config.record_every == 0 || j + 1 == steps) {
            r.samples.push_back({config.t0_s + static_cast<double>(j + 1) * h, s.a, s.b, s.emitted});
        }
    }
    if (!std::isfinite(s.a.real()) || !std::isfinite(s.b.real()) || !std::isfinite(s.b.imag())) {
        fail(ErrorKind::Numeric, "QST integration diverged");
    }
    r.eta = std::clamp(std::norm(s.b), 0.0, 1.0);
    r.phase = std::arg(s.b);
    const double f = std::norm(config.alpha) + std::norm(config.beta) * std::abs(s.b);
    r.fidelity = std::clamp(f * f, 0.0, 1.0);
    return r;
}

DetuningSweep detuning_sweep(const QstConfig& config, std::span<const double> deltas, double fit_max_hz,
                             std::size_t threads) {
    config.validate();
    if (deltas.empty()) fail(ErrorKind::Argument, "detuning sweep needs at least one detuning");
    for (double d : deltas) require_finite(d, "detuning");
    if (fit_max_hz <= 0.0) fit_max_hz = 0.05 * config.kappa_hz;

    QstConfig base = config;
    base.delta_omega_hz = 0.0;
    base.record_every = static_cast<std::size_t>(-1);
    const double eta0 = simulate_transfer(base).eta;
    if (!(eta0 > 0.99)) {
        fail(ErrorKind::Degenerate, "detuning sweep needs matched waveforms; baseline efficiency is " + std::to_string(eta0));
    }

    DetuningSweep out;
    out.rows.resize(deltas.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::atomic<bool> failed{false};
    const auto work = [&] {
        for (std::size_t i = next++; i < deltas.size() && !failed; i = next++) {
            try {
                QstConfig c = base;
                c.delta_omega_hz = deltas[i];
                const double eta = simulate_transfer(c).eta;
                out.rows[i] = {deltas[i], eta, std::sqrt(std::max(0.0, 1.0 - eta))};
            } catch (...) {
                if (!failed.exchange(true)) error = std::current_exception();
            }
        }
    };
    const std::size_t n_threads = std::clamp<std::size_t>(threads, 1, deltas.size());
    std::vector<std::thread> pool;
    for (std::size_t k = 1; k < n_threads; ++k) pool.emplace_back(work);
    work();
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);

    std::vector<double> x, y;
    for (const auto& row : out.rows) {
        if (std::abs(row.delta_omega_hz) <= fit_max_hz) {
            x.push_back(std::abs(row.delta_omega_hz));
            y.push_back(row.sqrt_one_minus_eta);
        }
    }
    out.fit_points = x.size();
    if (x.size() >= 2) out.fit = linear_fit(x, y);
    return out;
}

double on_off_ratio(std::span<const double> samples, double floor_hz) {
    if (!(floor_hz > 0.0) || !std::isfinite(floor_hz)) fail(ErrorKind::Argument, "on/off floor must be positive");
    if (samples.empty()) fail(ErrorKind::Argument, "on/off ratio needs samples");
    double peak = 0.0;
    for (double v : samples) {
        require_finite(v, "waveform sample");
        peak = std::max(peak, std::abs(v));
    }
    return peak / floor_hz;
}

double on_off_ratio(const Waveform& w, double floor_hz, double t0_s, double t1_s, double dt_s) {
    w.validate();
    if (!(t1_s >= t0_s) || !(dt_s > 0.0)) fail(ErrorKind::Argument, "on/off ratio needs t1 >= t0 and dt > 0");
    std::vector<double> samples;
    const auto n = static_cast<std::size_t>(std::floor((t1_s - t0_s) / dt_s + 1e-9));
    for (std::size_t i = 0; i <= n; ++i) samples.push_back(w(t0_s + static_cast<double>(i) * dt_s));
    if (t0_s <= 0.0 && t1_s >= 0.0) samples.push_back(w(0.0));
    return on_off_ratio(samples, floor_hz);
}

} // namespace cavityq
