#include "cavityq/control.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <string>

namespace cavityq {

namespace {

constexpr cplx kI{0.0, 1.0};

double step_time(const PulseSchedule& s, std::size_t j) { return (static_cast<double>(j) + 0.5) * s.dt; }

// Columns of the model-space basis that a smaller register embeds onto,
// plus the guard mask of levels outside it.
std::vector<std::size_t> embedding_columns(const HilbertShape& small, const HilbertShape& big,
                                           std::vector<bool>* guard) {
    if (small.subsystems() != big.subsystems()) {
        fail(ErrorKind::Shape, "target register " + to_string(small) + " does not match model register " + to_string(big));
    }
    for (std::size_t k = 0; k < small.subsystems(); ++k) {
        if (small.dim(k) > big.dim(k)) {
            fail(ErrorKind::Shape, "target register " + to_string(small) + " exceeds model register " + to_string(big));
        }
    }
    std::vector<std::size_t> cols(small.total());
    for (std::size_t i = 0; i < small.total(); ++i) cols[i] = big.flatten(small.unflatten(i));
    if (guard) {
        guard->assign(big.total(), false);
        for (std::size_t i = 0; i < big.total(); ++i) {
            const auto digits = big.unflatten(i);
            for (std::size_t k = 0; k < digits.size(); ++k)
                if (digits[k] >= small.dim(k)) (*guard)[i] = true;
        }
    }
    return cols;
}

Matrix embed_columns(const Matrix& m, const std::vector<std::size_t>& rows, std::size_t big_dim) {
    Matrix out = Matrix::Zero(static_cast<Eigen::Index>(big_dim), m.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Eigen::Index>(rows[r])) = m.row(static_cast<Eigen::Index>(r));
    return out;
}

double wrap_phase(double theta) {
    double w = std::remainder(theta, 2.0 * std::numbers::pi);
    if (w <= -std::numbers::pi) w += 2.0 * std::numbers::pi;
    return w;
}

void require_dispersive(const ControlModel& model, std::size_t n_levels) {
    const auto& shape = model.shape();
    if (shape.subsystems() != 2 || shape.dim(0) != 2 || model.transition_offsets.size() != shape.dim(1)) {
        fail(ErrorKind::Shape, "SNAP synthesis needs a dispersive qubit (x) mode model");
    }
    if (n_levels != shape.dim(1)) {
        fail(ErrorKind::Shape, "SNAP phase vector length " + std::to_string(n_levels) +
                                   " does not match mode dimension " + std::to_string(shape.dim(1)));
    }
}

struct SnapLayout {
    double duration = 0.0;
    std::size_t steps = 0;
    std::vector<std::size_t> levels;  // driven photon numbers
    std::vector<double> theta;        // wrapped phases of the driven levels
};

// Per-level calibration p = (amplitude scale, frequency offset * T, extra
// phase of the second half). Fills d_amp[j][3k + i] = du_j / dp_{3k+i}.
std::vector<cplx> snap_amplitudes(const ControlModel& model, const SnapLayout& lay, const std::vector<double>& p,
                                  std::vector<std::vector<cplx>>* d_amp) {
    const double t_total = lay.duration;
    const double dt = t_total / static_cast<double>(lay.steps);
    const double area = 4.0 * std::numbers::pi / t_total;
    std::vector<cplx> u(lay.steps, 0.0);
    if (d_amp) d_amp->assign(lay.steps, std::vector<cplx>(p.size(), 0.0));
    for (std::size_t j = 0; j < lay.steps; ++j) {
        const double t = (static_cast<double>(j) + 0.5) * dt;
        const bool second = t >= 0.5 * t_total;
        const double th = second ? t - 0.5 * t_total : t;
        const double s = std::sin(2.0 * std::numbers::pi * th / t_total);
        const double w = area * s * s;
        for (std::size_t k = 0; k < lay.levels.size(); ++k) {
            const double scale = p[3 * k], freq = p[3 * k + 1], extra = p[3 * k + 2];
            const double omega = model.transition_offsets[lay.levels[k]] + freq / t_total;
            const double phase = second ? std::numbers::pi - lay.theta[k] + extra : 0.0;
            const cplx term = w * std::exp(kI * (phase - omega * t));
            u[j] += scale * term;
            if (d_amp) {
                auto& row = (*d_amp)[j];
                row[3 * k] = term;
                row[3 * k + 1] = scale * term * (-kI * t / t_total);
                row[3 * k + 2] = second ? scale * term * kI : cplx(0.0);
            }
        }
    }
    return u;
}

PulseSchedule schedule_from_amplitudes(const ControlModel& model, std::vector<cplx> u, double duration) {
    PulseSchedule s = PulseSchedule::zeros(model.controls.size(), u.size(), duration / static_cast<double>(u.size()));
    s.amplitudes[0] = std::move(u);
    return s;
}

SnapLayout snap_layout(const ControlModel& model, std::span<const double> theta, double duration, std::size_t steps) {
    require_dispersive(model, theta.size());
    if (!(duration > 0.0) || !std::isfinite(duration)) fail(ErrorKind::Argument, "SNAP duration must be positive");
    if (steps < 2) fail(ErrorKind::Argument, "SNAP pulse needs at least two steps");
    SnapLayout lay{duration, steps, {}, {}};
    for (std::size_t n = 0; n < theta.size(); ++n) {
        if (!std::isfinite(theta[n])) fail(ErrorKind::Numeric, "SNAP phase is not finite");
        const double w = wrap_phase(theta[n]);
        if (std::abs(w) > 1e-12) {
            lay.levels.push_back(n);
            lay.theta.push_back(w);
        }
    }
    return lay;
}

} // namespace

void ControlModel::validate() const {
    if (!is_hermitian(drift.matrix())) fail(ErrorKind::Argument, "drift Hamiltonian is not Hermitian");
    if (!names.empty() && names.size() != controls.size()) fail(ErrorKind::Argument, "control names do not match controls");
    for (const auto& c : controls) require_same_shape(drift.shape(), c.shape(), "control Hamiltonian");
}

ControlModel dispersive_model(double chi_hz, double chi_prime_hz, std::size_t n_levels, const ModelOptions& options) {
    if (!std::isfinite(chi_hz) || !std::isfinite(chi_prime_hz)) fail(ErrorKind::Numeric, "dispersive shift is not finite");
    const HilbertShape shape{2, n_levels};
    const auto n = static_cast<Eigen::Index>(n_levels);
    ControlModel m;
    m.transition_offsets.resize(n_levels);
    Matrix drift = Matrix::Zero(2 * n, 2 * n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const double kd = static_cast<double>(k);
        double off = -chi_hz * kd;
        if (options.second_order) off -= 0.5 * chi_prime_hz * kd * kd;
        m.transition_offsets[static_cast<std::size_t>(k)] = off;
        drift(n + k, n + k) = off;
    }
    m.drift = Operator(shape, std::move(drift));

    Matrix qubit = Matrix::Zero(2 * n, 2 * n);
    for (Eigen::Index k = 0; k < n; ++k) qubit(n + k, k) = 0.5;
    m.controls.emplace_back(shape, std::move(qubit));
    m.names.emplace_back("qubit");
    if (options.cavity_drive) {
        m.controls.push_back(embed(creation(n_levels), 1, shape));
        m.names.emplace_back("cavity");
    }
    return m;
}

ControlModel dispersive_model(const DeviceParams& params, std::size_t n_levels, const ModelOptions& options) {
    validate(params);
    return dispersive_model(chi(params), params.chi_prime_hz, n_levels, options);
}

ControlModel qubit_model(double detuning_hz) {
    const HilbertShape shape{2};
    ControlModel m;
    Matrix drift = Matrix::Zero(2, 2);
    drift(1, 1) = detuning_hz;
    m.drift = Operator(shape, std::move(drift));
    Matrix c = Matrix::Zero(2, 2);
    c(1, 0) = 0.5;
    m.controls.emplace_back(shape, std::move(c));
    m.names.emplace_back("qubit");
    m.transition_offsets = {detuning_hz};
    return m;
}

PulseSchedule PulseSchedule::zeros(std::size_t n_controls, std::size_t steps, double dt) {
    PulseSchedule s;
    s.dt = dt;
    s.amplitudes.assign(n_controls, std::vector<cplx>(steps, 0.0));
    s.carriers_hz.assign(n_controls, 0.0);
    return s;
}

void PulseSchedule::validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) fail(ErrorKind::Argument, "schedule dt must be positive");
    if (carriers_hz.size() != amplitudes.size()) fail(ErrorKind::Shape, "schedule needs one carrier per control");
    for (const auto& row : amplitudes) {
        if (row.size() != steps()) fail(ErrorKind::Shape, "schedule controls have different lengths");
        for (const cplx& u : row)
            if (!std::isfinite(u.real()) || !std::isfinite(u.imag())) fail(ErrorKind::Numeric, "schedule amplitude is not finite");
    }
    for (double f : carriers_hz)
        if (!std::isfinite(f)) fail(ErrorKind::Numeric, "schedule carrier is not finite");
}

namespace {

struct Entry {
    Eigen::Index row, col;
    cplx value;
};

// Nonzero entries of every control matrix.
std::vector<std::vector<Entry>> control_entries(const ControlModel& model) {
    std::vector<std::vector<Entry>> out(model.controls.size());
    for (std::size_t k = 0; k < model.controls.size(); ++k) {
        const Matrix& c = model.controls[k].matrix();
        for (Eigen::Index col = 0; col < c.cols(); ++col)
            for (Eigen::Index row = 0; row < c.rows(); ++row)
                if (c(row, col) != cplx{}) out[k].push_back({row, col, c(row, col)});
    }
    return out;
}

Matrix segment_hamiltonian(const ControlModel& model, const std::vector<std::vector<Entry>>& entries,
                           const PulseSchedule& schedule, std::size_t step) {
    Matrix h = model.drift.matrix();
    const double t = step_time(schedule, step);
    for (std::size_t k = 0; k < entries.size(); ++k) {
        const cplx v = schedule.amplitudes[k][step] * std::exp(-kI * schedule.carriers_hz[k] * t);
        if (v == cplx{}) continue;
        for (const Entry& e : entries[k]) {
            const cplx z = v * e.value;
            h(e.row, e.col) += z;
            h(e.col, e.row) += std::conj(z);
        }
    }
    return h;
}

} // namespace

Matrix segment_hamiltonian(const ControlModel& model, const PulseSchedule& schedule, std::size_t step) {
    if (schedule.n_controls() != model.controls.size()) {
        fail(ErrorKind::Shape, "schedule has " + std::to_string(schedule.n_controls()) + " controls, model has " +
                                   std::to_string(model.controls.size()));
    }
    return segment_hamiltonian(model, control_entries(model), schedule, step);
}

Operator schedule_propagator(const ControlModel& model, const PulseSchedule& schedule) {
    schedule.validate();
    Matrix u = Matrix::Identity(static_cast<Eigen::Index>(model.shape().total()), static_cast<Eigen::Index>(model.shape().total()));
    for (std::size_t j = 0; j < schedule.steps(); ++j) {
        const Operator h(model.shape(), segment_hamiltonian(model, schedule, j));
        u = expm(h, schedule.dt).matrix() * u;
    }
    return Operator(model.shape(), std::move(u));
}

StateVector simulate_schedule(const ControlModel& model, const PulseSchedule& schedule, const StateVector& psi0) {
    schedule.validate();
    require_same_shape(model.shape(), psi0.shape(), "pulse simulation");
    Vector v = psi0.amplitudes();
    for (std::size_t j = 0; j < schedule.steps(); ++j) {
        const Operator h(model.shape(), segment_hamiltonian(model, schedule, j));
        v = expm(h, schedule.dt).matrix() * v;
    }
    if (!v.allFinite()) fail(ErrorKind::Numeric, "pulse simulation produced non-finite amplitudes");
    return StateVector(psi0.shape(), std::move(v), psi0.leakage());
}

double gate_fidelity(const Operator& u, const Operator& v) {
    require_same_shape(u.shape(), v.shape(), "gate fidelity");
    const double d = static_cast<double>(u.dim());
    const cplx tr = (u.matrix().adjoint() * v.matrix()).trace();
    return std::clamp(std::norm(tr) / (d * d), 0.0, 1.0);
}

// ---------------------------------------------------------------------------

GrapeTarget GrapeTarget::unitary(const Operator& u) { return embedded_unitary(u, u.shape()); }

GrapeTarget GrapeTarget::state(const StateVector& psi0, const StateVector& psi_target) {
    return embedded_state(psi0, psi_target, psi0.shape());
}

GrapeTarget GrapeTarget::embedded_unitary(const Operator& u, const HilbertShape& model_shape) {
    GrapeTarget t;
    const auto cols = embedding_columns(u.shape(), model_shape, &t.guard);
    const auto d = static_cast<Eigen::Index>(u.dim());
    t.initial = embed_columns(Matrix::Identity(d, d), cols, model_shape.total());
    t.target = embed_columns(u.matrix(), cols, model_shape.total());
    return t;
}

GrapeTarget GrapeTarget::embedded_state(const StateVector& psi0, const StateVector& psi_target,
                                        const HilbertShape& model_shape) {
    require_same_shape(psi0.shape(), psi_target.shape(), "state transfer target");
    GrapeTarget t;
    const auto cols = embedding_columns(psi0.shape(), model_shape, &t.guard);
    t.initial = embed_columns(psi0.normalized().amplitudes(), cols, model_shape.total());
    t.target = embed_columns(psi_target.normalized().amplitudes(), cols, model_shape.total());
    return t;
}

namespace {

// Connected components of the union sparsity pattern of every generator, so
// block-diagonal dynamics can be propagated one block at a time.
std::vector<std::vector<Eigen::Index>> invariant_blocks(const std::vector<GeneratorSegment>& segments, Eigen::Index n) {
    std::vector<Eigen::Index> parent(static_cast<std::size_t>(n));
    std::iota(parent.begin(), parent.end(), Eigen::Index{0});
    const auto find = [&](Eigen::Index i) {
        while (parent[static_cast<std::size_t>(i)] != i) {
            auto& p = parent[static_cast<std::size_t>(i)];
            p = parent[static_cast<std::size_t>(p)];
            i = p;
        }
        return i;
    };
    const auto join = [&](const Matrix& m) {
        for (Eigen::Index c = 0; c < n; ++c)
            for (Eigen::Index r = 0; r < n; ++r)
                if (r != c && m(r, c) != cplx{}) parent[static_cast<std::size_t>(find(r))] = find(c);
    };
    std::vector<const Matrix*> bases;
    for (const auto& seg : segments) {
        join(seg.h);
        for (const auto& d : seg.dh)
            if (std::find(bases.begin(), bases.end(), d.basis) == bases.end()) bases.push_back(d.basis);
    }
    for (const Matrix* b : bases) join(*b);
    std::vector<std::vector<Eigen::Index>> blocks;
    std::vector<Eigen::Index> slot(static_cast<std::size_t>(n), -1);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index root = find(i);
        auto& sl = slot[static_cast<std::size_t>(root)];
        if (sl < 0) {
            sl = static_cast<Eigen::Index>(blocks.size());
            blocks.emplace_back();
        }
        blocks[static_cast<std::size_t>(sl)].push_back(i);
    }
    return blocks;
}

} // namespace

namespace {

// Matrices small enough to live on the stack.
using SmallMatrix = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, 0, 4, 4>;

struct BlockAccumulator {
    cplx overlap = 0.0;
    double leak = 0.0;
    std::vector<cplx>* dg = nullptr;
    std::vector<double>* dleak = nullptr;
};

// Propagates one invariant block. `rows` are the block's basis indices and
// `cols` the target columns with support in it.
template <class M>
void propagate_block(const std::vector<GeneratorSegment>& segments, const GrapeTarget& target,
                     const std::vector<Eigen::Index>& rows, const std::vector<Eigen::Index>& cols, bool want_gradient,
                     bool track_leak, BlockAccumulator& acc) {
    using RealVector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, M::MaxRowsAtCompileTime, 1>;
    using PhaseVector = Eigen::Matrix<cplx, Eigen::Dynamic, 1, 0, M::MaxRowsAtCompileTime, 1>;
    const std::size_t m = segments.size();
    const auto nb = static_cast<Eigen::Index>(rows.size());

    std::vector<M> vecs(m), fwd(m + 1);
    std::vector<RealVector> vals(m);
    fwd[0] = target.initial(rows, cols);
    Eigen::SelfAdjointEigenSolver<M> es(nb);
    M h(nb, nb);
    for (std::size_t j = 0; j < m; ++j) {
        h = segments[j].h(rows, rows);
        h = (0.5 * (h + h.adjoint())).eval();
        es.compute(h);
        vecs[j] = es.eigenvectors();
        vals[j] = es.eigenvalues();
        const PhaseVector phase = (-kI * segments[j].dt * vals[j].template cast<cplx>()).array().exp();
        fwd[j + 1] = vecs[j] * (phase.asDiagonal() * (vecs[j].adjoint() * fwd[j]));
    }
    const M& final_rows = fwd[m];
    M back = target.target(rows, cols);
    acc.overlap += back.conjugate().cwiseProduct(final_rows).sum();
    M back_leak = M::Zero(nb, final_rows.cols());
    if (!target.guard.empty()) {
        for (Eigen::Index r = 0; r < nb; ++r)
            if (target.guard[static_cast<std::size_t>(rows[static_cast<std::size_t>(r)])]) back_leak.row(r) = final_rows.row(r);
        acc.leak += back_leak.squaredNorm();
    }
    if (!want_gradient) return;

    M y, gmat, gleak, phi(nb, nb), k(nb, nb), dh(nb, nb);
    for (std::size_t jj = m; jj-- > 0;) {
        const auto& seg = segments[jj];
        const M& v = vecs[jj];
        y = v.adjoint() * fwd[jj];
        gmat = (y * (v.adjoint() * back).adjoint()).transpose();
        if (track_leak) gleak = (y * (v.adjoint() * back_leak).adjoint()).transpose();
        for (Eigen::Index a = 0; a < nb; ++a) {
            for (Eigen::Index b = 0; b < nb; ++b) {
                const double z = 0.5 * (vals[jj](a) - vals[jj](b)) * seg.dt;
                const double sinc = std::abs(z) < 1e-4 ? 1.0 - z * z / 6.0 : std::sin(z) / z;
                phi(a, b) = std::exp(-kI * 0.5 * (vals[jj](a) + vals[jj](b)) * seg.dt) * sinc * (-kI * seg.dt);
            }
        }
        for (const auto& d : seg.dh) {
            dh = (*d.basis)(rows, rows);
            if (dh.squaredNorm() == 0.0) continue;
            dh = (d.coeff * dh + std::conj(d.coeff) * dh.adjoint()).eval();
            k = phi.cwiseProduct(v.adjoint() * dh * v);
            (*acc.dg)[d.param] += k.cwiseProduct(gmat).sum();
            if (track_leak) (*acc.dleak)[d.param] += k.cwiseProduct(gleak).sum().real();
        }
        const PhaseVector phase = (kI * seg.dt * vals[jj].template cast<cplx>()).array().exp();
        back = v * (phase.asDiagonal() * (v.adjoint() * back));
        if (track_leak) back_leak = v * (phase.asDiagonal() * (v.adjoint() * back_leak));
    }
}

} // namespace

ObjectiveValue evaluate_segments(const std::vector<GeneratorSegment>& segments, const GrapeTarget& target,
                                 double leakage_weight, std::size_t n_params, bool want_gradient) {
    const Eigen::Index n = target.initial.rows();
    const double d = static_cast<double>(target.d());
    if (target.target.rows() != n || target.target.cols() != target.initial.cols() || target.d() == 0) {
        fail(ErrorKind::Shape, "objective target and initial blocks disagree");
    }
    if (!target.guard.empty() && target.guard.size() != static_cast<std::size_t>(n)) {
        fail(ErrorKind::Shape, "guard mask does not match the model dimension");
    }
    for (const auto& seg : segments) {
        if (seg.h.rows() != n || seg.h.cols() != n) fail(ErrorKind::Shape, "segment Hamiltonian has the wrong dimension");
        if (!seg.h.allFinite()) fail(ErrorKind::Numeric, "segment Hamiltonian is not finite");
        for (const auto& d : seg.dh) {
            if (d.param >= n_params) fail(ErrorKind::Argument, "segment parameter index out of range");
            if (!d.basis) fail(ErrorKind::Argument, "segment derivative has no basis matrix");
            if (d.basis->rows() != n || d.basis->cols() != n) fail(ErrorKind::Shape, "segment derivative has the wrong dimension");
        }
    }
    const bool track_leak = leakage_weight != 0.0 && !target.guard.empty();

    std::vector<cplx> dg(want_gradient ? n_params : 0, 0.0);
    std::vector<double> dleak(want_gradient && track_leak ? n_params : 0, 0.0);
    BlockAccumulator acc{0.0, 0.0, &dg, &dleak};

    for (const auto& rows : invariant_blocks(segments, n)) {
        // Columns the block maps to zero contribute nothing.
        std::vector<Eigen::Index> cols;
        for (Eigen::Index c = 0; c < target.initial.cols(); ++c) {
            bool active = false;
            for (Eigen::Index r : rows) active = active || target.initial(r, c) != cplx{};
            if (active) cols.push_back(c);
        }
        if (cols.empty()) continue;
        if (rows.size() <= 4 && cols.size() <= 4) {
            propagate_block<SmallMatrix>(segments, target, rows, cols, want_gradient, track_leak, acc);
        } else {
            propagate_block<Matrix>(segments, target, rows, cols, want_gradient, track_leak, acc);
        }
    }

    ObjectiveValue out;
    out.fidelity = std::norm(acc.overlap) / (d * d);
    out.leakage = acc.leak / d;
    out.value = out.fidelity - leakage_weight * out.leakage;
    if (!want_gradient) return out;
    out.gradient.assign(n_params, 0.0);
    for (std::size_t p = 0; p < n_params; ++p) {
        out.gradient[p] = 2.0 * (std::conj(acc.overlap) * dg[p]).real() / (d * d);
        if (track_leak) out.gradient[p] -= leakage_weight * 2.0 * dleak[p] / d;
    }
    return out;
}

ObjectiveValue grape_objective(const ControlModel& model, const PulseSchedule& schedule, const GrapeTarget& target,
                               double leakage_weight, bool want_gradient) {
    schedule.validate();
    if (target.initial.rows() != static_cast<Eigen::Index>(model.shape().total())) {
        fail(ErrorKind::Shape, "optimization target does not match the model register " + to_string(model.shape()));
    }
    const std::size_t steps = schedule.steps();
    const std::size_t nc = model.controls.size();
    if (schedule.n_controls() != nc) fail(ErrorKind::Shape, "schedule and model control counts differ");
    const auto entries = control_entries(model);
    std::vector<GeneratorSegment> segs(steps);
    for (std::size_t j = 0; j < steps; ++j) {
        auto& seg = segs[j];
        seg.h = segment_hamiltonian(model, entries, schedule, j);
        seg.dt = schedule.dt;
        if (!want_gradient) continue;
        const double t = step_time(schedule, j);
        for (std::size_t k = 0; k < nc; ++k) {
            const cplx e = std::exp(-kI * schedule.carriers_hz[k] * t);
            const Matrix* c = &model.controls[k].matrix();
            const std::size_t base = 2 * (k * steps + j);
            seg.dh.push_back({base, e, c});
            seg.dh.push_back({base + 1, kI * e, c});
        }
    }
    return evaluate_segments(segs, target, leakage_weight, 2 * nc * steps, want_gradient);
}

namespace {

// The optimizer works on per-segment rotation angles u * dt, which are
// dimensionless and of order one.
std::vector<double> pack(const PulseSchedule& s) {
    std::vector<double> x;
    x.reserve(2 * s.n_controls() * s.steps());
    for (const auto& row : s.amplitudes)
        for (const cplx& u : row) {
            x.push_back(u.real() * s.dt);
            x.push_back(u.imag() * s.dt);
        }
    return x;
}

void unpack(std::span<const double> x, PulseSchedule& s) {
    std::size_t i = 0;
    for (auto& row : s.amplitudes)
        for (cplx& u : row) {
            u = cplx(x[i], x[i + 1]) / s.dt;
            i += 2;
        }
}

} // namespace

GrapeResult grape_optimize(const ControlModel& model, const GrapeTarget& target, const PulseSchedule& initial,
                           const GrapeOptions& options) {
    model.validate();
    initial.validate();
    if (!(options.target_infidelity >= 0.0)) fail(ErrorKind::Argument, "target infidelity must be >= 0");

    PulseSchedule work = initial;
    if (options.jitter > 0.0) {
        std::mt19937_64 rng(options.seed);
        std::normal_distribution<double> noise(0.0, options.jitter);
        for (auto& row : work.amplitudes)
            for (cplx& u : row) u += cplx(noise(rng), noise(rng));
    }

    const Objective f = [&](std::span<const double> x, std::vector<double>* grad) {
        unpack(x, work);
        auto v = grape_objective(model, work, target, options.leakage_weight, grad != nullptr);
        if (grad) {
            *grad = std::move(v.gradient);
            for (double& gi : *grad) gi /= work.dt;
        }
        return v.value;
    };
    OptimizeOptions oo;
    oo.max_iterations = options.iterations;
    oo.initial_step = options.learning_rate;
    oo.target = 1.0 - options.target_infidelity;
    const auto r = maximize(f, pack(work), oo);

    GrapeResult out;
    out.schedule = work;
    unpack(r.x, out.schedule);
    const auto final_value = grape_objective(model, out.schedule, target, options.leakage_weight, false);
    out.fidelity = final_value.fidelity;
    out.leakage = final_value.leakage;
    out.converged = r.converged;
    out.trace.reserve(r.trace.size());
    for (const auto& row : r.trace) out.trace.push_back({row.iteration, 1.0 - row.value, row.step});
    return out;
}

// ---------------------------------------------------------------------------

SequenceResult optimize_snap_displacement(const StateVector& target, const SequenceOptions& options) {
    if (target.shape().subsystems() != 1) fail(ErrorKind::Shape, "sequence target must be a single-mode state");
    if (options.layers == 0) fail(ErrorKind::Argument, "sequence needs at least one layer");
    if (!(options.initial_spread >= 0.0)) fail(ErrorKind::Argument, "initial displacement spread must be >= 0");
    const std::size_t n_small = target.shape().dim(0);
    const std::size_t n = n_small + options.guard_levels;
    const HilbertShape shape{n};
    const auto ni = static_cast<Eigen::Index>(n);
    const GrapeTarget goal = GrapeTarget::embedded_state(StateVector::basis(target.shape(), 0), target, shape);

    // Parameters: per layer (Re alpha, Im alpha, theta_0 .. theta_{n-1}), then
    // the closing displacement.
    const std::size_t per_layer = 2 + n;
    const std::size_t n_params = per_layer * options.layers + 2;
    const Matrix raise = creation(n).matrix();
    std::vector<Matrix> projectors(n, Matrix::Zero(ni, ni));
    for (std::size_t k = 0; k < n; ++k) projectors[k](static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) = 1.0;

    const auto build = [&](std::span<const double> x) {
        std::vector<GeneratorSegment> segs;
        const auto add_displacement = [&](std::size_t base) {
            // D(alpha) = exp(-i h), h = x i(a^dag - a) - y (a^dag + a)
            GeneratorSegment seg;
            const Matrix r = raise;
            seg.h = x[base] * (kI * (r - r.adjoint())) - x[base + 1] * (r + r.adjoint());
            seg.dh = {{base, kI, &raise}, {base + 1, -1.0, &raise}};
            segs.push_back(std::move(seg));
        };
        for (std::size_t l = 0; l < options.layers; ++l) {
            const std::size_t base = l * per_layer;
            add_displacement(base);
            GeneratorSegment seg;
            seg.h = Matrix::Zero(ni, ni);
            for (std::size_t k = 0; k < n; ++k) {
                seg.h(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) = -x[base + 2 + k];
                seg.dh.push_back({base + 2 + k, -0.5, &projectors[k]});
            }
            segs.push_back(std::move(seg));
        }
        add_displacement(per_layer * options.layers);
        return segs;
    };

    std::mt19937_64 rng(options.seed);
    const auto uniform = [&rng] { return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53; };
    std::vector<double> x0(n_params);
    for (std::size_t l = 0; l <= options.layers; ++l) {
        const std::size_t base = l * per_layer;
        const double r = options.initial_spread * std::sqrt(-2.0 * std::log(uniform()));
        const double phi = 2.0 * std::numbers::pi * uniform();
        x0[base] = r * std::cos(phi);
        x0[base + 1] = r * std::sin(phi);
        if (l == options.layers) break;
        for (std::size_t k = 0; k < n; ++k) x0[base + 2 + k] = std::numbers::pi * (2.0 * uniform() - 1.0);
    }

    const Objective f = [&](std::span<const double> x, std::vector<double>* grad) {
        auto v = evaluate_segments(build(x), goal, options.leakage_weight, n_params, grad != nullptr);
        if (grad) *grad = std::move(v.gradient);
        return v.value;
    };
    OptimizeOptions oo;
    oo.max_iterations = options.iterations;
    oo.target = 1.0 - options.target_infidelity;
    oo.initial_step = 1e-2;
    const auto r = maximize(f, x0, oo);
    const auto final_value = evaluate_segments(build(r.x), goal, options.leakage_weight, n_params, false);

    SequenceResult out;
    out.circuit.shape = shape;
    for (std::size_t l = 0; l <= options.layers; ++l) {
        const std::size_t base = l * per_layer;
        out.circuit.gates.push_back({gate::Displacement{0, cplx(r.x[base], r.x[base + 1])}});
        if (l == options.layers) break;
        out.circuit.gates.push_back({gate::Snap{0, std::vector<double>(r.x.begin() + static_cast<std::ptrdiff_t>(base + 2),
                                                                       r.x.begin() + static_cast<std::ptrdiff_t>(base + 2 + n))}});
    }
    out.fidelity = final_value.fidelity;
    out.leakage = final_value.leakage;
    out.converged = r.converged;
    out.iterations = r.iterations;
    for (const auto& row : r.trace) out.trace.push_back({row.iteration, 1.0 - row.value, row.step});
    return out;
}

// ---------------------------------------------------------------------------

GrapeTarget snap_target(std::span<const double> theta) {
    const std::size_t n = theta.size();
    if (n == 0) fail(ErrorKind::Shape, "SNAP phase vector is empty");
    const auto ni = static_cast<Eigen::Index>(n);
    GrapeTarget t;
    t.initial = Matrix::Zero(2 * ni, ni);
    t.target = Matrix::Zero(2 * ni, ni);
    for (Eigen::Index k = 0; k < ni; ++k) {
        t.initial(k, k) = 1.0;
        t.target(k, k) = std::polar(1.0, theta[static_cast<std::size_t>(k)]);
    }
    return t;
}

double snap_pulse_infidelity(const ControlModel& model, const PulseSchedule& schedule, std::span<const double> theta) {
    require_dispersive(model, theta.size());
    return 1.0 - grape_objective(model, schedule, snap_target(theta), 0.0, false).fidelity;
}

PulseSchedule analytic_snap_pulse(const ControlModel& model, std::span<const double> theta, double duration,
                                  std::size_t steps) {
    const SnapLayout lay = snap_layout(model, theta, duration, steps);
    std::vector<double> p(3 * lay.levels.size(), 0.0);
    for (std::size_t k = 0; k < lay.levels.size(); ++k) p[3 * k] = 1.0;
    return schedule_from_amplitudes(model, snap_amplitudes(model, lay, p, nullptr), duration);
}

SnapPulse synthesize_snap_pulse(const ControlModel& model, std::span<const double> theta, double duration,
                                const SnapOptions& options) {
    const SnapLayout lay = snap_layout(model, theta, duration, options.steps);
    const auto& off = model.transition_offsets;
    if (options.enforce_bound && off.size() >= 2) {
        const double chi = std::abs(off[1] - off[0]);
        const double bound = 2.0 * std::numbers::pi / chi;
        if (duration < bound * (1.0 - 1e-12)) {
            fail(ErrorKind::Argument, "SNAP duration " + std::to_string(duration) +
                                          " s is below the selectivity bound 2 pi / chi = " + std::to_string(bound) + " s");
        }
    }

    const GrapeTarget target = snap_target(theta);
    std::vector<double> p0(3 * lay.levels.size(), 0.0);
    for (std::size_t k = 0; k < lay.levels.size(); ++k) p0[3 * k] = 1.0;
    if (!options.initial_parameters.empty()) {
        if (options.initial_parameters.size() != p0.size()) {
            fail(ErrorKind::Shape, "SNAP calibration start has " + std::to_string(options.initial_parameters.size()) +
                                       " values, expected " + std::to_string(p0.size()));
        }
        p0 = options.initial_parameters;
    }

    std::vector<std::vector<cplx>> du;
    const Objective f = [&](std::span<const double> x, std::vector<double>* grad) {
        const std::vector<double> p(x.begin(), x.end());
        const auto u = snap_amplitudes(model, lay, p, grad ? &du : nullptr);
        const auto sched = schedule_from_amplitudes(model, u, duration);
        const auto v = grape_objective(model, sched, target, 0.0, grad != nullptr);
        if (grad) {
            grad->assign(p.size(), 0.0);
            // Control 0 occupies the first 2 * steps gradient slots.
            for (std::size_t j = 0; j < lay.steps; ++j) {
                const double g_re = v.gradient[2 * j], g_im = v.gradient[2 * j + 1];
                for (std::size_t i = 0; i < p.size(); ++i) (*grad)[i] += g_re * du[j][i].real() + g_im * du[j][i].imag();
            }
        }
        return v.fidelity;
    };

    SnapPulse out;
    if (lay.levels.empty()) {
        out.schedule = schedule_from_amplitudes(model, std::vector<cplx>(lay.steps, 0.0), duration);
        out.infidelity = snap_pulse_infidelity(model, out.schedule, theta);
        return out;
    }
    OptimizeOptions oo;
    oo.max_iterations = options.calibration_iterations;
    oo.target = 1.0 - options.target_infidelity;
    oo.initial_step = 1e-2;
    const auto r = maximize(f, p0, oo);
    out.schedule = schedule_from_amplitudes(model, snap_amplitudes(model, lay, r.x, nullptr), duration);
    out.infidelity = 1.0 - r.value;
    out.calibration_iterations = r.iterations;
    out.parameters = r.x;
    return out;
}

std::vector<SnapSweepRow> snap_bandwidth_sweep(const ControlModel& model, std::span<const double> theta,
                                               std::vector<double> factors, const SnapOptions& options) {
    require_dispersive(model, theta.size());
    const auto& off = model.transition_offsets;
    if (off.size() < 2 || off[1] == off[0]) fail(ErrorKind::Degenerate, "SNAP sweep needs a nonzero dispersive shift");
    const double bound = 2.0 * std::numbers::pi / std::abs(off[1] - off[0]);
    for (double f : factors)
        if (!(f > 0.0) || !std::isfinite(f)) fail(ErrorKind::Argument, "sweep duration factors must be positive");
    std::sort(factors.begin(), factors.end(), std::greater<>());

    SnapOptions opts = options;
    opts.enforce_bound = false;
    std::vector<SnapPulse> best(factors.size());
    const auto attempt = [&](std::size_t i, std::vector<double> start) {
        opts.initial_parameters = std::move(start);
        SnapPulse p = synthesize_snap_pulse(model, theta, factors[i] * bound, opts);
        if (best[i].schedule.steps() == 0 || p.infidelity < best[i].infidelity) best[i] = std::move(p);
    };
    // Calibrations move between durations with the frequency correction held
    // fixed in rad/s.
    const auto moved = [&](std::size_t from, std::size_t to) {
        std::vector<double> p = best[from].parameters;
        for (std::size_t k = 1; k < p.size(); k += 3) p[k] *= factors[to] / factors[from];
        return p;
    };
    for (std::size_t i = 0; i < factors.size(); ++i) {
        attempt(i, {});
        if (i > 0) attempt(i, moved(i - 1, i));
    }
    for (std::size_t i = factors.size(); i-- > 1;) attempt(i - 1, moved(i, i - 1));

    std::vector<SnapSweepRow> rows;
    for (std::size_t i = 0; i < factors.size(); ++i) rows.push_back({factors[i], factors[i] * bound, best[i].infidelity});
    return rows;
}

} // namespace cavityq
