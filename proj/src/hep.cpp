#include "cavityq/hep.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace cavityq {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::vector<double> scaled(const std::vector<double>& v, double s) {
    std::vector<double> out(v.size());
    std::transform(v.begin(), v.end(), out.begin(), [s](double x) { return s * x; });
    return out;
}

void require_time(double t, const char* what) {
    if (!std::isfinite(t)) fail(ErrorKind::Numeric, std::string(what) + " is not finite");
}

} // namespace

void QuditHamiltonian::validate() const {
    if (diagonal.size() < 2) fail(ErrorKind::Argument, "qudit Hamiltonian needs at least two levels");
    if (kinetic_diagonal.size() != diagonal.size()) {
        fail(ErrorKind::Shape, "kinetic diagonal has " + std::to_string(kinetic_diagonal.size()) +
                                   " entries, potential has " + std::to_string(diagonal.size()));
    }
    for (double x : diagonal)
        if (!std::isfinite(x)) fail(ErrorKind::Numeric, "potential entry is not finite");
    for (double x : kinetic_diagonal)
        if (!std::isfinite(x)) fail(ErrorKind::Numeric, "kinetic entry is not finite");
}

Operator QuditHamiltonian::matrix() const {
    validate();
    const Matrix f = fourier(levels()).matrix();
    Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(diagonal.data(), static_cast<Eigen::Index>(levels()));
    Eigen::VectorXd k = Eigen::Map<const Eigen::VectorXd>(kinetic_diagonal.data(), static_cast<Eigen::Index>(levels()));
    Matrix h = f * k.cast<cplx>().asDiagonal() * f.adjoint();
    h.diagonal() += v.cast<cplx>();
    return Operator(HilbertShape{levels()}, kTwoPi * 0.5 * (h + h.adjoint()));
}

Circuit trotter_step(const QuditHamiltonian& h, double dt) {
    h.validate();
    require_time(dt, "Trotter step");
    if (!(dt > 0.0)) fail(ErrorKind::Argument, "Trotter step must be positive");
    Circuit c;
    c.shape = HilbertShape{h.levels()};
    c.gates.push_back({gate::Snap{0, scaled(h.diagonal, -kTwoPi * dt)}});
    c.gates.push_back({gate::Fourier{0}, true});
    c.gates.push_back({gate::Snap{0, scaled(h.kinetic_diagonal, -kTwoPi * dt)}});
    c.gates.push_back({gate::Fourier{0}});
    return c;
}

Operator exact_propagator(const QuditHamiltonian& h, double t) {
    require_time(t, "evolution time");
    return expm(h.matrix(), t);
}

TrotterEvolution evolve_trotter(const QuditHamiltonian& h, double t_total, std::size_t steps, const StateVector& psi0) {
    h.validate();
    require_time(t_total, "evolution time");
    if (steps == 0) fail(ErrorKind::Argument, "Trotter evolution needs at least one step");
    if (t_total < 0.0) fail(ErrorKind::Argument, "evolution time must be >= 0");
    if (psi0.shape() != HilbertShape{h.levels()}) fail(ErrorKind::Shape, "initial state does not match the qudit dimension");

    TrotterEvolution out;
    out.exact = exact_propagator(h, t_total).apply(psi0);
    if (t_total == 0.0) {
        out.state = psi0;
    } else {
        const Operator step = circuit_unitary(trotter_step(h, t_total / static_cast<double>(steps)));
        Vector psi = psi0.amplitudes();
        for (std::size_t j = 0; j < steps; ++j) psi = step.matrix() * psi;
        out.state = StateVector(psi0.shape(), std::move(psi));
    }
    out.infidelity = std::max(0.0, 1.0 - fidelity(out.exact, out.state));
    return out;
}

std::vector<TrotterRow> trotter_convergence(const QuditHamiltonian& h, double t_total,
                                            std::span<const std::size_t> steps, const StateVector& psi0) {
    std::vector<TrotterRow> rows;
    for (std::size_t s : steps) {
        const auto e = evolve_trotter(h, t_total, s, psi0);
        rows.push_back({s, t_total / static_cast<double>(s), e.infidelity});
    }
    return rows;
}

LinearFit trotter_error_exponent(std::span<const TrotterRow> rows) {
    std::vector<double> x, y;
    for (const auto& r : rows) {
        if (r.infidelity > 0.0 && r.dt > 0.0) {
            x.push_back(std::log(r.dt));
            y.push_back(0.5 * std::log(r.infidelity));
        }
    }
    if (x.size() < 2) fail(ErrorKind::Degenerate, "error exponent fit needs two rows with nonzero infidelity");
    return linear_fit(x, y);
}

cplx otoc(const Operator& w, const Operator& v, const QuditHamiltonian& h, double t, const StateVector& psi0) {
    const HilbertShape shape{h.levels()};
    h.validate();
    if (w.shape() != shape || v.shape() != shape || psi0.shape() != shape) {
        fail(ErrorKind::Shape, "OTOC operators and state must match the qudit dimension " + to_string(shape));
    }
    const Matrix u = exact_propagator(h, t).matrix();
    const Matrix wt = u.adjoint() * w.matrix() * u;
    const Vector& psi = psi0.amplitudes();
    const Vector right = wt * (v.matrix() * psi);
    const Vector left = v.matrix() * (wt * psi);
    return left.dot(right);
}

cplx otoc(const Operator& w, const Operator& v, const QuditHamiltonian& h, double t) {
    return otoc(w, v, h, t, StateVector::basis(HilbertShape{h.levels()}, 0));
}

std::vector<OtocRow> otoc_series(const Operator& w, const Operator& v, const QuditHamiltonian& h,
                                 std::span<const double> times, const StateVector& psi0) {
    std::vector<OtocRow> rows;
    rows.reserve(times.size());
    for (double t : times) rows.push_back({t, otoc(w, v, h, t, psi0)});
    return rows;
}

} // namespace cavityq
