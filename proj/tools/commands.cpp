#include "commands.hpp"

#include "cavityq/control.hpp"
#include "cavityq/device.hpp"
#include "cavityq/error.hpp"
#include "cavityq/gates.hpp"
#include "cavityq/hep.hpp"
#include "cavityq/io.hpp"
#include "cavityq/noise.hpp"
#include "cavityq/qst.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <iostream>
#include <mutex>
#include <numbers>
#include <thread>

namespace cavityq::cli {

using io::Cell;
using io::Json;
using io::Reader;
using io::Table;

namespace {

// A loaded config file plus the provenance every output of the command shares.
struct Input {
    io::JsonDocument doc;
    io::Provenance prov;

    Input(const std::filesystem::path& path, const std::string& command, std::uint64_t seed)
        : doc(io::read_file(path), path.string()) {
        prov.command = command;
        prov.seed = seed;
        prov.inputs.emplace_back(path.filename().string(), io::sha256_hex(doc.text()));
    }
};

class Output {
public:
    Output(const GlobalOptions& g, const io::Provenance& prov) : g_(g), prov_(prov) {}

    void table(const std::string& stem, const Table& t) const {
        if (g_.format == TableFormat::Json) write(stem + ".json", io::format_table_json(t, prov_));
        else write(stem + ".csv", io::format_csv(t, prov_));
    }
    void json(const std::string& name, Json doc) const { write(name, io::format_json(std::move(doc), prov_)); }

private:
    void write(const std::string& name, const std::string& content) const {
        const auto path = g_.out / name;
        io::write_atomic(path, content);
        std::cout << "wrote " << path.string() << "\n";
    }

    const GlobalOptions& g_;
    const io::Provenance& prov_;
};

// Runs fn(i) for i in [0, n) on up to `threads` workers. Results must be
// written to per-index slots so the outcome does not depend on scheduling.
template <class F>
void parallel_for(std::size_t n, std::size_t threads, F&& fn) {
    threads = std::max<std::size_t>(1, std::min(threads, n));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                    next = n;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

Json complex_json(cplx z) { return Json::array({z.real(), z.imag()}); }

Cell num(double v) { return v; }
Cell count(std::size_t v) { return static_cast<std::int64_t>(v); }

std::size_t size_field(const Reader& r, const std::string& o, const char* field) {
    return static_cast<std::size_t>(r.unsigned_integer(o, field));
}

std::size_t size_or(const Reader& r, const std::string& o, const char* field, std::size_t fallback) {
    return static_cast<std::size_t>(r.unsigned_or(o, field, fallback));
}

// Either a flat basis index or a list of [re, im] amplitudes.
StateVector state_from_json(const Reader& r, const std::string& o, const char* field, const HilbertShape& shape) {
    const std::string ptr = io::child(o, field);
    const Json& v = r.at(ptr);
    if (v.is_number()) {
        const std::size_t k = static_cast<std::size_t>(r.unsigned_integer(o, field));
        if (k >= shape.total()) r.doc().fail_at(ptr, "basis index " + std::to_string(k) + " outside dimension " + std::to_string(shape.total()));
        return StateVector::basis(shape, k);
    }
    const auto amps = r.complex_list(o, field);
    if (amps.size() != shape.total()) {
        r.doc().fail_at(ptr, "expected " + std::to_string(shape.total()) + " amplitudes, found " + std::to_string(amps.size()));
    }
    Vector psi = Eigen::Map<const Vector>(amps.data(), static_cast<Eigen::Index>(amps.size()));
    const double norm = psi.norm();
    if (!(norm > 0.0)) r.doc().fail_at(ptr, "state has zero norm");
    return StateVector(shape, psi / norm);
}

// ---------------------------------------------------------------------------
// grape

ControlModel model_from_json(const Reader& r, const std::string& o) {
    const std::string kind = r.string(o, "kind");
    if (kind == "qubit") {
        r.only_fields(o, {"kind", "detuning_hz"});
        return qubit_model(r.number_or(o, "detuning_hz", 0.0));
    }
    ModelOptions mo;
    mo.second_order = r.boolean_or(o, "second_order", false);
    mo.cavity_drive = r.boolean_or(o, "cavity_drive", false);
    if (kind == "dispersive") {
        r.only_fields(o, {"kind", "chi_hz", "chi_prime_hz", "levels", "second_order", "cavity_drive"});
        return dispersive_model(r.number(o, "chi_hz"), r.number_or(o, "chi_prime_hz", 0.0), size_field(r, o, "levels"), mo);
    }
    if (kind == "device") {
        r.only_fields(o, {"kind", "device", "levels", "second_order", "cavity_drive"});
        return dispersive_model(io::device_from_json(r, io::child(o, "device")), size_field(r, o, "levels"), mo);
    }
    r.doc().fail_at(io::child(o, "kind"), "unknown model kind '" + kind + "'");
}

double snap_time_bound(const ControlModel& model) {
    if (model.transition_offsets.size() < 2) fail(ErrorKind::Argument, "SNAP synthesis needs a dispersive model");
    const double spacing = std::abs(model.transition_offsets[1] - model.transition_offsets[0]);
    if (!(spacing > 0.0)) fail(ErrorKind::Degenerate, "dispersive shift is zero");
    return 2.0 * std::numbers::pi / spacing;
}

GrapeTarget grape_target_from_json(const Reader& r, const std::string& o, const ControlModel& model) {
    const std::string kind = r.string(o, "kind");
    if (kind == "identity") {
        r.only_fields(o, {"kind"});
        return GrapeTarget::unitary(Operator::identity(model.shape()));
    }
    if (kind == "unitary") {
        r.only_fields(o, {"kind", "circuit"});
        const Circuit c = io::circuit_from_json(r, io::child(o, "circuit"));
        const Operator u = circuit_unitary(c);
        return c.shape == model.shape() ? GrapeTarget::unitary(u) : GrapeTarget::embedded_unitary(u, model.shape());
    }
    if (kind == "state") {
        r.only_fields(o, {"kind", "initial", "target"});
        return GrapeTarget::state(state_from_json(r, o, "initial", model.shape()), state_from_json(r, o, "target", model.shape()));
    }
    if (kind == "snap") {
        r.only_fields(o, {"kind", "theta"});
        return snap_target(r.numbers(o, "theta"));
    }
    r.doc().fail_at(io::child(o, "kind"), "unknown target kind '" + kind + "'");
}

Table trace_table(const std::vector<GrapeTraceRow>& trace) {
    Table t{{"iteration", "infidelity", "step_size"}, {}};
    for (const auto& row : trace) t.rows.push_back({count(row.iteration), num(row.infidelity), num(row.step_size)});
    return t;
}

void grape_pulse(const GlobalOptions& g, const Reader& r, const Output& out) {
    r.only_fields("", {"mode", "model", "target", "steps", "dt_s", "duration_s", "carriers_hz", "initial_schedule",
                       "iterations", "learning_rate", "target_infidelity", "leakage_weight", "jitter"});
    const ControlModel model = model_from_json(r, "/model");
    const GrapeTarget target = grape_target_from_json(r, "/target", model);

    PulseSchedule initial;
    if (r.has("", "initial_schedule")) {
        initial = io::schedule_from_json(r, "/initial_schedule");
    } else {
        const std::size_t steps = size_field(r, "", "steps");
        if (steps == 0) r.doc().fail_at("/steps", "need at least one step");
        double dt = 0.0;
        if (r.has("", "dt_s")) dt = r.number("", "dt_s");
        else dt = r.number("", "duration_s") / static_cast<double>(steps);
        initial = PulseSchedule::zeros(model.controls.size(), steps, dt);
        if (r.has("", "carriers_hz")) {
            initial.carriers_hz = r.numbers("", "carriers_hz");
            if (initial.carriers_hz.size() != model.controls.size()) {
                r.doc().fail_at("/carriers_hz", "expected one carrier per control (" + std::to_string(model.controls.size()) + ")");
            }
        }
    }
    if (initial.n_controls() != model.controls.size()) {
        fail(ErrorKind::Shape, "schedule has " + std::to_string(initial.n_controls()) + " controls, model has " +
                                   std::to_string(model.controls.size()));
    }

    GrapeOptions opts;
    opts.iterations = size_or(r, "", "iterations", opts.iterations);
    opts.learning_rate = r.number_or("", "learning_rate", opts.learning_rate);
    opts.target_infidelity = r.number_or("", "target_infidelity", opts.target_infidelity);
    opts.leakage_weight = r.number_or("", "leakage_weight", opts.leakage_weight);
    opts.jitter = r.number_or("", "jitter", 0.0);
    opts.seed = g.seed;

    const GrapeResult res = grape_optimize(model, target, initial, opts);
    out.json("grape_schedule.json", io::schedule_to_json(res.schedule));
    out.table("grape_trace", trace_table(res.trace));
    out.json("grape_summary.json", Json{{"fidelity", res.fidelity},
                                        {"infidelity", 1.0 - res.fidelity},
                                        {"leakage", res.leakage},
                                        {"converged", res.converged},
                                        {"iterations", res.trace.empty() ? 0 : res.trace.back().iteration}});
}

SnapOptions snap_options(const Reader& r) {
    SnapOptions so;
    so.steps = size_or(r, "", "steps", so.steps);
    so.calibration_iterations = size_or(r, "", "calibration_iterations", so.calibration_iterations);
    so.target_infidelity = r.number_or("", "target_infidelity", so.target_infidelity);
    so.enforce_bound = r.boolean_or("", "enforce_bound", so.enforce_bound);
    return so;
}

void grape_snap(const Reader& r, const Output& out) {
    r.only_fields("", {"mode", "model", "theta", "duration_s", "duration_factor", "steps", "calibration_iterations",
                       "target_infidelity", "enforce_bound"});
    const ControlModel model = model_from_json(r, "/model");
    const auto theta = r.numbers("", "theta");
    const double bound = snap_time_bound(model);
    const double duration = r.has("", "duration_s") ? r.number("", "duration_s") : r.number_or("", "duration_factor", 4.0) * bound;
    const SnapPulse p = synthesize_snap_pulse(model, theta, duration, snap_options(r));
    out.json("snap_schedule.json", io::schedule_to_json(p.schedule));
    out.json("snap_summary.json", Json{{"duration_s", duration},
                                       {"duration_factor", duration / bound},
                                       {"infidelity", p.infidelity},
                                       {"calibration_iterations", p.calibration_iterations},
                                       {"parameters", p.parameters}});
}

void grape_snap_sweep(const Reader& r, const Output& out) {
    r.only_fields("", {"mode", "model", "theta", "factors", "steps", "calibration_iterations", "target_infidelity"});
    const ControlModel model = model_from_json(r, "/model");
    const auto theta = r.numbers("", "theta");
    std::vector<double> factors{4.0, 2.0, 1.0, 0.75, 0.5};
    if (r.has("", "factors")) factors = r.numbers("", "factors");
    SnapOptions so = snap_options(r);
    so.enforce_bound = false;
    const auto rows = snap_bandwidth_sweep(model, theta, factors, so);
    Table t{{"factor", "duration_s", "infidelity"}, {}};
    for (const auto& row : rows) t.rows.push_back({num(row.factor), num(row.duration), num(row.infidelity)});
    out.table("snap_sweep", t);
}

void grape_sequence(const GlobalOptions& g, const Reader& r, const Output& out) {
    r.only_fields("", {"mode", "target", "layers", "guard_levels", "iterations", "target_infidelity", "leakage_weight",
                       "initial_spread"});
    const std::string tk = r.string("/target", "kind");
    StateVector target;
    if (tk == "haar") {
        r.only_fields("/target", {"kind", "dim"});
        target = haar_random_state(HilbertShape{size_field(r, "/target", "dim")}, g.seed);
    } else if (tk == "fock") {
        r.only_fields("/target", {"kind", "dim", "n"});
        const std::size_t dim = size_field(r, "/target", "dim");
        const std::size_t n = size_field(r, "/target", "n");
        if (n >= dim) r.doc().fail_at("/target/n", "level outside the register");
        target = StateVector::basis(HilbertShape{dim}, n);
    } else if (tk == "amplitudes") {
        r.only_fields("/target", {"kind", "amplitudes"});
        const std::size_t dim = r.complex_list("/target", "amplitudes").size();
        target = state_from_json(r, "/target", "amplitudes", HilbertShape{dim});
    } else {
        r.doc().fail_at("/target/kind", "unknown sequence target kind '" + tk + "'");
    }

    SequenceOptions so;
    so.layers = size_or(r, "", "layers", so.layers);
    so.guard_levels = size_or(r, "", "guard_levels", so.guard_levels);
    so.iterations = size_or(r, "", "iterations", so.iterations);
    so.target_infidelity = r.number_or("", "target_infidelity", so.target_infidelity);
    so.leakage_weight = r.number_or("", "leakage_weight", so.leakage_weight);
    so.initial_spread = r.number_or("", "initial_spread", so.initial_spread);
    so.seed = g.seed;

    const SequenceResult res = optimize_snap_displacement(target, so);
    Json amps = Json::array();
    for (Eigen::Index i = 0; i < target.amplitudes().size(); ++i) amps.push_back(complex_json(target.amplitudes()(i)));
    out.json("sequence_circuit.json", io::circuit_to_json(res.circuit));
    out.table("sequence_trace", trace_table(res.trace));
    out.json("sequence_summary.json", Json{{"fidelity", res.fidelity},
                                           {"infidelity", 1.0 - res.fidelity},
                                           {"leakage", res.leakage},
                                           {"converged", res.converged},
                                           {"iterations", res.iterations},
                                           {"target", amps}});
}

// ---------------------------------------------------------------------------
// code

StateVector mode_state_from_json(const Reader& r, const std::string& o, std::size_t levels) {
    const std::string kind = r.string(o, "kind");
    if (kind == "fock") {
        r.only_fields(o, {"kind", "n"});
        const std::size_t n = size_field(r, o, "n");
        if (n >= levels) r.doc().fail_at(io::child(o, "n"), "level outside the truncation");
        return StateVector::basis(HilbertShape{levels}, n);
    }
    if (kind == "coherent") {
        r.only_fields(o, {"kind", "alpha"});
        return coherent_state(r.complex(o, "alpha"), levels);
    }
    if (kind == "cat") {
        r.only_fields(o, {"kind", "alpha", "parity", "axis"});
        const std::string par = r.string_or(o, "parity", "even");
        const std::string axis = r.string_or(o, "axis", "real");
        if (par != "even" && par != "odd") r.doc().fail_at(io::child(o, "parity"), "expected \"even\" or \"odd\"");
        if (axis != "real" && axis != "imag") r.doc().fail_at(io::child(o, "axis"), "expected \"real\" or \"imag\"");
        return cat_state(r.complex(o, "alpha"), par == "even" ? CatParity::Even : CatParity::Odd,
                         axis == "real" ? CatAxis::Real : CatAxis::Imag, levels);
    }
    r.doc().fail_at(io::child(o, "kind"), "unknown state kind '" + kind + "'");
}

std::size_t default_levels(cplx alpha) {
    const double a = std::abs(alpha);
    return std::max<std::size_t>(50, static_cast<std::size_t>(std::ceil(a * a + 5.0 * a + 10.0)) + 10);
}

void code_cat_loss(const Reader& r, const Output& out) {
    r.only_fields("", {"experiment", "alpha", "levels", "max_losses", "logical"});
    const cplx alpha = r.complex("", "alpha");
    const std::size_t levels = size_or(r, "", "levels", default_levels(alpha));
    const std::size_t max_losses = size_or(r, "", "max_losses", 4);
    cplx c_g = 1.0, c_e = 0.0;
    if (r.has("", "logical")) {
        r.only_fields("/logical", {"c_g", "c_e"});
        c_g = r.complex("/logical", "c_g");
        c_e = r.complex("/logical", "c_e");
    }
    const StateVector logical = cat_encode(c_g, c_e, alpha, levels);
    Table t{{"losses", "parity", "code_fidelity", "input_fidelity", "mean_n"}, {}};
    for (std::size_t k = 0; k <= max_losses; ++k) {
        const StateVector psi = photon_loss_cycle_check(logical, k);
        t.rows.push_back({count(k), num(parity(psi)), num(cat_code_fidelity(psi, alpha)), num(fidelity(psi, logical)),
                          num(mean_photon_number(psi))});
    }
    out.table("cat_loss", t);
}

void code_trajectories(const GlobalOptions& g, const Reader& r, const Output& out) {
    r.only_fields("", {"experiment", "levels", "initial", "t1_fock0_s", "dt_s", "steps", "trajectories"});
    const std::size_t levels = size_field(r, "", "levels");
    const StateVector psi0 = mode_state_from_json(r, "/initial", levels);
    const NoiseChannel ch = photon_loss_channel(r.number("", "t1_fock0_s"), r.number("", "dt_s"), levels);
    const std::size_t steps = size_field(r, "", "steps");
    const std::size_t n = size_or(r, "", "trajectories", 1);

    std::vector<Trajectory> runs(n);
    parallel_for(n, g.threads, [&](std::size_t k) { runs[k] = apply_channel_trajectory(ch, psi0, steps, g.seed + k); });

    Table t{{"seed", "step", "jump_count", "parity", "mean_n"}, {}};
    for (std::size_t k = 0; k < n; ++k) {
        const auto seed = static_cast<std::int64_t>(g.seed + k);
        t.rows.push_back({seed, count(0), count(0), num(parity(psi0)), num(mean_photon_number(psi0))});
        for (const auto& row : runs[k].record) {
            t.rows.push_back({seed, count(row.step), count(row.jump_count), num(row.parity), num(row.mean_n)});
        }
    }
    out.table("trajectories", t);
}

void code_fock_decay(const Reader& r, const Output& out) {
    r.only_fields("", {"experiment", "t1_fock0_s", "dt_s", "steps", "photon_numbers"});
    const double t1 = r.number_or("", "t1_fock0_s", 1.0);
    const double dt = r.number_or("", "dt_s", 1e-4 * t1);
    const std::size_t steps = size_or(r, "", "steps", 40);
    if (steps < 2) r.doc().fail_at("/steps", "need at least two steps for a rate fit");
    std::vector<std::uint64_t> ns{1, 2, 3, 5};
    if (r.has("", "photon_numbers")) ns = r.unsigned_list("", "photon_numbers");

    const auto rate = [&](std::size_t n) {
        if (n == 0) fail(ErrorKind::Argument, "vacuum does not decay");
        const auto ch = photon_loss_channel(t1, dt, n + 1);
        Matrix rho = density_matrix(StateVector::basis(HilbertShape{n + 1}, n));
        std::vector<double> t, logp;
        for (std::size_t s = 1; s <= steps; ++s) {
            rho = apply_channel(ch, rho);
            t.push_back(static_cast<double>(s) * dt);
            logp.push_back(std::log(rho(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)).real()));
        }
        return linear_fit(t, logp);
    };
    const double r1 = -rate(1).slope;
    Table t{{"n", "rate_hz", "rate_ratio", "r_squared"}, {}};
    for (auto n : ns) {
        const auto fit = rate(static_cast<std::size_t>(n));
        t.rows.push_back({count(n), num(-fit.slope), num(-fit.slope / r1), num(fit.r_squared)});
    }
    out.table("fock_decay", t);
}

// ---------------------------------------------------------------------------
// hep

QuditHamiltonian qudit_hamiltonian(const Reader& r) {
    QuditHamiltonian h{r.numbers("", "diagonal_hz"), r.numbers("", "kinetic_hz")};
    try {
        h.validate();
    } catch (const Error& e) {
        r.doc().fail_at("", e.what());
    }
    return h;
}

Operator qudit_operator_from_json(const Reader& r, const std::string& o, std::size_t n) {
    const std::string kind = r.string(o, "kind");
    if (kind == "clock" || kind == "shift") {
        r.only_fields(o, {"kind", "power"});
        const std::size_t p = size_or(r, o, "power", 1);
        if (kind == "clock") {
            std::vector<double> theta(n);
            for (std::size_t k = 0; k < n; ++k) theta[k] = 2.0 * std::numbers::pi * static_cast<double>((k * p) % n) / static_cast<double>(n);
            return snap(theta);
        }
        Matrix m = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        for (std::size_t k = 0; k < n; ++k) m(static_cast<Eigen::Index>((k + p) % n), static_cast<Eigen::Index>(k)) = 1.0;
        return Operator(HilbertShape{n}, m);
    }
    if (kind == "gates") {
        r.only_fields(o, {"kind", "gates", "displacement_convention"});
        Circuit c;
        c.shape = HilbertShape{n};
        if (r.string_or(o, "displacement_convention", "standard") == "paper") c.convention = DisplacementConvention::Paper;
        const std::string gates = io::child(o, "gates");
        const Json& arr = r.at(gates);
        if (!arr.is_array()) r.doc().fail_at(gates, "expected an array of gates");
        for (std::size_t i = 0; i < arr.size(); ++i) c.gates.push_back(io::gate_from_json(r, io::child(gates, i)));
        return circuit_unitary(c);
    }
    r.doc().fail_at(io::child(o, "kind"), "unknown operator kind '" + kind + "'");
}

} // namespace

// ---------------------------------------------------------------------------

int cmd_device(const GlobalOptions& g, const std::filesystem::path& params_file) {
    Input in(params_file, "device", g.seed);
    const Reader r(in.doc);
    const DeviceParams p = io::device_from_json(r, "");
    const FockBound bound = max_fock(p);
    Json report{{"chi_hz", chi(p)},
                {"detuning_hz", p.detuning_hz()},
                {"critical_photon_number", critical_photon_number(p)},
                {"max_fock", bound.max_level},
                {"snap_min_gate_time_s", snap_min_gate_time(p)}};
    if (!bound.advisory.empty()) report["advisory"] = bound.advisory;
    if (g.out_given) Output(g, in.prov).json("device.json", report);
    else std::cout << io::format_json(report, in.prov);
    return 0;
}

int cmd_run(const GlobalOptions& g, const std::filesystem::path& circuit_file, const std::string& initial) {
    Input in(circuit_file, "run", g.seed);
    const Reader r(in.doc);
    const Circuit c = io::circuit_from_json(r, "");

    std::size_t index = 0;
    if (initial.find(':') != std::string::npos) {
        std::vector<std::size_t> digits;
        std::size_t pos = 0;
        while (pos <= initial.size()) {
            const auto next = std::min(initial.find(':', pos), initial.size());
            const std::string part = initial.substr(pos, next - pos);
            if (part.empty() || part.find_first_not_of("0123456789") != std::string::npos) {
                fail(ErrorKind::Usage, "--initial: expected levels such as 1:3, found '" + initial + "'");
            }
            digits.push_back(std::stoul(part));
            pos = next + 1;
        }
        if (digits.size() != c.shape.subsystems()) fail(ErrorKind::Usage, "--initial: expected " + std::to_string(c.shape.subsystems()) + " levels");
        for (std::size_t k = 0; k < digits.size(); ++k)
            if (digits[k] >= c.shape.dim(k)) fail(ErrorKind::Usage, "--initial: level outside subsystem " + std::to_string(k));
        index = c.shape.flatten(digits);
    } else {
        if (initial.empty() || initial.find_first_not_of("0123456789") != std::string::npos) {
            fail(ErrorKind::Usage, "--initial: expected a basis index, found '" + initial + "'");
        }
        index = std::stoul(initial);
        if (index >= c.shape.total()) fail(ErrorKind::Usage, "--initial: index outside dimension " + std::to_string(c.shape.total()));
    }

    const StateVector psi = apply_circuit(c, StateVector::basis(c.shape, index));
    Table t;
    t.columns.push_back("index");
    for (std::size_t k = 0; k < c.shape.subsystems(); ++k) t.columns.push_back("n" + std::to_string(k));
    for (const char* col : {"re_amplitude", "im_amplitude", "probability"}) t.columns.push_back(col);
    for (std::size_t i = 0; i < c.shape.total(); ++i) {
        const cplx amp = psi.amplitudes()(static_cast<Eigen::Index>(i));
        const double p = std::norm(amp);
        if (p <= 1e-12) continue;
        std::vector<Cell> row{count(i)};
        for (std::size_t d : c.shape.unflatten(i)) row.push_back(count(d));
        row.push_back(num(amp.real()));
        row.push_back(num(amp.imag()));
        row.push_back(num(p));
        t.rows.push_back(std::move(row));
    }
    Output(g, in.prov).table("run", t);
    return 0;
}

int cmd_qst(const GlobalOptions& g, const std::filesystem::path& config_file) {
    Input in(config_file, "qst", g.seed);
    const Reader r(in.doc);
    r.only_fields("", {"kappa_hz", "emit_waveform", "catch_waveform", "kappa_t", "kappa_dt", "t0_s", "t1_s", "dt_s",
                       "delta_omega_hz", "input_state", "channel_temperature_k", "detunings_hz", "fit_max_hz",
                       "record_every"});
    const double kappa = r.number("", "kappa_hz");
    QstConfig cfg = QstConfig::matched_sech(kappa, r.number_or("", "kappa_t", 40.0), r.number_or("", "kappa_dt", 0.02));
    if (r.has("", "emit_waveform")) cfg.emit_waveform = io::waveform_from_json(r, "/emit_waveform");
    if (r.has("", "catch_waveform")) cfg.catch_waveform = io::waveform_from_json(r, "/catch_waveform");
    cfg.t0_s = r.number_or("", "t0_s", cfg.t0_s);
    cfg.t1_s = r.number_or("", "t1_s", cfg.t1_s);
    cfg.dt_s = r.number_or("", "dt_s", cfg.dt_s);
    cfg.delta_omega_hz = r.number_or("", "delta_omega_hz", 0.0);
    cfg.channel_temperature_k = r.number_or("", "channel_temperature_k", 0.0);
    cfg.record_every = size_or(r, "", "record_every", 100);
    if (r.has("", "input_state")) {
        r.only_fields("/input_state", {"alpha", "beta"});
        cfg.alpha = r.complex("/input_state", "alpha");
        cfg.beta = r.complex("/input_state", "beta");
    }

    std::vector<double> deltas;
    if (r.has("", "detunings_hz")) {
        deltas = r.numbers("", "detunings_hz");
    } else {
        for (int k = -10; k <= 10; ++k) deltas.push_back(0.005 * kappa * k);
    }

    const QstResult base = simulate_transfer(cfg);
    const DetuningSweep sweep = detuning_sweep(cfg, deltas, r.number_or("", "fit_max_hz", 0.0), g.threads);

    const Output out(g, in.prov);
    Table t{{"delta_omega_hz", "eta", "sqrt_one_minus_eta"}, {}};
    for (const auto& row : sweep.rows) t.rows.push_back({num(row.delta_omega_hz), num(row.eta), num(row.sqrt_one_minus_eta)});
    out.table("qst_sweep", t);

    Table traj{{"t_s", "node1_population", "node2_population", "emitted", "total"}, {}};
    for (const auto& s : base.samples) {
        const double pa = std::norm(s.a), pb = std::norm(s.b);
        traj.rows.push_back({num(s.t), num(pa), num(pb), num(s.emitted), num(pa + pb + s.emitted)});
    }
    out.table("qst_trajectory", traj);

    out.json("qst_summary.json", Json{{"eta", base.eta},
                                      {"fidelity", base.fidelity},
                                      {"phase", base.phase},
                                      {"delta_omega_hz", cfg.delta_omega_hz},
                                      {"fit", {{"slope", sweep.fit.slope},
                                               {"intercept", sweep.fit.intercept},
                                               {"r_squared", sweep.fit.r_squared},
                                               {"points", sweep.fit_points}}}});
    return 0;
}

int cmd_grape(const GlobalOptions& g, const std::filesystem::path& config_file) {
    Input in(config_file, "grape", g.seed);
    const Reader r(in.doc);
    const Output out(g, in.prov);
    const std::string mode = r.string_or("", "mode", "grape");
    if (mode == "grape") grape_pulse(g, r, out);
    else if (mode == "snap") grape_snap(r, out);
    else if (mode == "snap_sweep") grape_snap_sweep(r, out);
    else if (mode == "sequence") grape_sequence(g, r, out);
    else r.doc().fail_at("/mode", "unknown mode '" + mode + "' (grape, snap, snap_sweep, sequence)");
    return 0;
}

int cmd_code(const GlobalOptions& g, const std::filesystem::path& config_file) {
    Input in(config_file, "code", g.seed);
    const Reader r(in.doc);
    const Output out(g, in.prov);
    const std::string exp = r.string("", "experiment");
    if (exp == "cat_loss") code_cat_loss(r, out);
    else if (exp == "trajectories") code_trajectories(g, r, out);
    else if (exp == "fock_decay") code_fock_decay(r, out);
    else r.doc().fail_at("/experiment", "unknown experiment '" + exp + "' (cat_loss, trajectories, fock_decay)");
    return 0;
}

int cmd_trotter(const GlobalOptions& g, const std::filesystem::path& config_file) {
    Input in(config_file, "trotter", g.seed);
    const Reader r(in.doc);
    r.only_fields("", {"diagonal_hz", "kinetic_hz", "t_total_s", "steps", "initial"});
    const QuditHamiltonian h = qudit_hamiltonian(r);
    const HilbertShape shape{h.levels()};
    const StateVector psi0 = r.has("", "initial") ? state_from_json(r, "", "initial", shape) : StateVector::basis(shape, 0);
    const double t_total = r.number("", "t_total_s");
    std::vector<std::size_t> steps;
    for (auto s : r.unsigned_list("", "steps")) steps.push_back(static_cast<std::size_t>(s));
    if (steps.empty()) r.doc().fail_at("/steps", "need at least one step count");

    std::vector<TrotterRow> rows(steps.size());
    parallel_for(steps.size(), g.threads, [&](std::size_t i) {
        rows[i] = trotter_convergence(h, t_total, std::span(&steps[i], 1), psi0).front();
    });

    const Output out(g, in.prov);
    Table t{{"steps", "dt", "infidelity"}, {}};
    for (const auto& row : rows) t.rows.push_back({count(row.steps), num(row.dt), num(row.infidelity)});
    out.table("trotter", t);
    if (rows.size() >= 2) {
        const LinearFit fit = trotter_error_exponent(rows);
        out.json("trotter_fit.json", Json{{"exponent", fit.slope}, {"r_squared", fit.r_squared}});
    }
    return 0;
}

int cmd_otoc(const GlobalOptions& g, const std::filesystem::path& config_file) {
    Input in(config_file, "otoc", g.seed);
    const Reader r(in.doc);
    r.only_fields("", {"diagonal_hz", "kinetic_hz", "w", "v", "times_s", "t_max_s", "points", "initial"});
    const QuditHamiltonian h = qudit_hamiltonian(r);
    const HilbertShape shape{h.levels()};
    const Operator w = qudit_operator_from_json(r, "/w", h.levels());
    const Operator v = qudit_operator_from_json(r, "/v", h.levels());
    const StateVector psi0 = r.has("", "initial") ? state_from_json(r, "", "initial", shape) : StateVector::basis(shape, 0);

    std::vector<double> times;
    if (r.has("", "times_s")) {
        times = r.numbers("", "times_s");
    } else {
        const double t_max = r.number("", "t_max_s");
        const std::size_t points = size_or(r, "", "points", 101);
        if (points < 2) r.doc().fail_at("/points", "need at least two points");
        for (std::size_t k = 0; k < points; ++k) times.push_back(t_max * static_cast<double>(k) / static_cast<double>(points - 1));
    }

    std::vector<OtocRow> rows(times.size());
    parallel_for(times.size(), g.threads, [&](std::size_t i) { rows[i] = {times[i], otoc(w, v, h, times[i], psi0)}; });

    Table t{{"t", "re_otoc", "im_otoc", "abs_otoc"}, {}};
    for (const auto& row : rows) t.rows.push_back({num(row.t), num(row.value.real()), num(row.value.imag()), num(std::abs(row.value))});
    Output(g, in.prov).table("otoc", t);
    return 0;
}

} // namespace cavityq::cli
