#include "cavityq/gates.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace cavityq {

namespace {

void require_levels(std::size_t m, std::size_t n, std::size_t n_levels, const char* what) {
    if (m >= n_levels || n >= n_levels) {
        fail(ErrorKind::Argument, std::string(what) + ": level index out of range for dimension " +
                                      std::to_string(n_levels));
    }
    if (m == n) fail(ErrorKind::Argument, std::string(what) + ": levels must differ");
}

void require_qubit_mode(const HilbertShape& shape, const char* what) {
    if (shape.subsystems() != 2 || shape.dim(0) != 2) {
        fail(ErrorKind::Shape, std::string(what) + " expects shape {2, N}, got " + to_string(shape));
    }
}

// exp(alpha a^dag - alpha^* a) in a space of n_levels.
Matrix displacement_matrix(cplx alpha, std::size_t n_levels) {
    const Matrix a = annihilation(n_levels).matrix();
    const Matrix h = cplx(0.0, 1.0) * (alpha * a.adjoint() - std::conj(alpha) * a);
    return expm(Operator(HilbertShape{n_levels}, h), 1.0).matrix();
}

} // namespace

Operator snap(std::span<const double> theta) {
    if (theta.empty()) fail(ErrorKind::Shape, "SNAP phase vector is empty");
    const auto d = static_cast<Eigen::Index>(theta.size());
    Matrix m = Matrix::Zero(d, d);
    for (Eigen::Index n = 0; n < d; ++n) m(n, n) = std::polar(1.0, theta[static_cast<std::size_t>(n)]);
    return Operator(HilbertShape{theta.size()}, std::move(m));
}

Operator multiqudit_snap(std::size_t k, std::span<const double> theta, const HilbertShape& shape) {
    if (k >= shape.subsystems()) fail(ErrorKind::Argument, "SNAP target " + std::to_string(k) + " out of range");
    if (theta.size() != shape.dim(k)) {
        fail(ErrorKind::Shape, "SNAP phase vector length " + std::to_string(theta.size()) +
                                   " does not match mode dimension " + std::to_string(shape.dim(k)));
    }
    return embed(snap(theta), k, shape);
}

std::size_t displacement_interior(cplx alpha, std::size_t n_levels) {
    const double r = std::abs(alpha);
    const auto budget = static_cast<std::size_t>(std::ceil(r * r + 5.0 * r));
    return n_levels > budget ? n_levels - budget : 0;
}

Operator displacement(cplx alpha, std::size_t n_levels) {
    if (n_levels == 0) fail(ErrorKind::Argument, "invalid dimension 0 for displacement");
    if (!std::isfinite(alpha.real()) || !std::isfinite(alpha.imag())) {
        fail(ErrorKind::Numeric, "displacement amplitude is not finite");
    }
    Matrix d = displacement_matrix(alpha, n_levels);

    // Leakage: weight the vacuum column of a padded copy carries above the
    // truncation, i.e. the coherent-state tail beyond n_levels.
    double leakage = 0.0;
    if (alpha != cplx{}) {
        const double r = std::abs(alpha);
        const std::size_t pad = static_cast<std::size_t>(std::ceil(r * r + 5.0 * r)) + 10;
        const Matrix big = displacement_matrix(alpha, n_levels + pad);
        leakage = big.col(0).tail(static_cast<Eigen::Index>(pad)).squaredNorm();
    }
    return Operator(HilbertShape{n_levels}, std::move(d), leakage);
}

Operator givens(std::size_t m, std::size_t n, double theta, std::size_t n_levels) {
    require_levels(m, n, n_levels, "givens");
    const auto d = static_cast<Eigen::Index>(n_levels);
    Matrix u = Matrix::Identity(d, d);
    const auto im = static_cast<Eigen::Index>(m), in = static_cast<Eigen::Index>(n);
    u(im, im) = std::cos(theta);
    u(im, in) = -std::sin(theta);
    u(in, im) = std::sin(theta);
    u(in, in) = std::cos(theta);
    return Operator(HilbertShape{n_levels}, std::move(u));
}

Operator phase_swap(std::size_t m, std::size_t n, std::size_t n_levels) {
    require_levels(m, n, n_levels, "phase_swap");
    const auto d = static_cast<Eigen::Index>(n_levels);
    Matrix u = Matrix::Identity(d, d);
    const auto im = static_cast<Eigen::Index>(m), in = static_cast<Eigen::Index>(n);
    u(im, im) = u(in, in) = 0.0;
    u(im, in) = u(in, im) = 1.0;
    return Operator(HilbertShape{n_levels}, std::move(u));
}

Operator fourier(std::size_t n_levels) {
    if (n_levels < 2) fail(ErrorKind::Argument, "Fourier gate needs dimension >= 2");
    const auto d = static_cast<Eigen::Index>(n_levels);
    const double norm = 1.0 / std::sqrt(static_cast<double>(n_levels));
    Matrix f(d, d);
    for (Eigen::Index j = 0; j < d; ++j)
        for (Eigen::Index k = 0; k < d; ++k) {
            // Reduce jk mod N first so large dimensions keep exact phases.
            const auto jk = static_cast<double>((j * k) % d);
            f(j, k) = std::polar(norm, 2.0 * std::numbers::pi * jk / static_cast<double>(d));
        }
    return Operator(HilbertShape{n_levels}, std::move(f));
}

Operator qubit_rotation(double theta, double phi) {
    Matrix r(2, 2);
    const double c = std::cos(theta / 2.0), s = std::sin(theta / 2.0);
    r(0, 0) = c;
    r(1, 1) = c;
    r(0, 1) = cplx(0.0, -s) * std::polar(1.0, -phi);
    r(1, 0) = cplx(0.0, -s) * std::polar(1.0, phi);
    return Operator(HilbertShape{2}, std::move(r));
}

Operator cond_rotation(std::size_t n, double theta, double phi, const HilbertShape& shape) {
    require_qubit_mode(shape, "cond_rotation");
    const std::size_t modes = shape.dim(1);
    if (n >= modes) fail(ErrorKind::Argument, "cond_rotation photon number out of range");
    const Matrix r = qubit_rotation(theta, phi).matrix();
    const auto d = static_cast<Eigen::Index>(shape.total());
    Matrix u = Matrix::Identity(d, d);
    const auto N = static_cast<Eigen::Index>(modes), in = static_cast<Eigen::Index>(n);
    for (Eigen::Index q = 0; q < 2; ++q)
        for (Eigen::Index p = 0; p < 2; ++p) u(q * N + in, p * N + in) = r(q, p);
    return Operator(shape, std::move(u));
}

Operator controlled_increment(std::size_t n_levels) {
    if (n_levels < 2) fail(ErrorKind::Argument, "controlled increment needs dimension >= 2");
    const auto N = static_cast<Eigen::Index>(n_levels);
    Matrix u = Matrix::Zero(N * N, N * N);
    for (Eigen::Index i = 0; i < N; ++i)
        for (Eigen::Index j = 0; j < N; ++j) u(i * N + (j + i) % N, i * N + j) = 1.0;
    return Operator(HilbertShape{n_levels, n_levels}, std::move(u));
}

Operator ecd(cplx beta, const HilbertShape& shape) {
    require_qubit_mode(shape, "ecd");
    const std::size_t modes = shape.dim(1);
    const Operator plus = displacement(beta / 2.0, modes);
    const Operator minus = displacement(-beta / 2.0, modes);
    const auto N = static_cast<Eigen::Index>(modes);
    Matrix u = Matrix::Zero(2 * N, 2 * N);
    u.block(N, 0, N, N) = plus.matrix();   // |e><g| (x) D(beta/2)
    u.block(0, N, N, N) = minus.matrix();  // |g><e| (x) D(-beta/2)
    return Operator(shape, std::move(u), std::max(plus.leakage(), minus.leakage()));
}

std::size_t qubit_binary_encode(std::string_view bits, std::size_t qudit_dim) {
    if (bits.empty()) fail(ErrorKind::Argument, "empty qubit string");
    if (bits.size() >= 8 * sizeof(std::size_t)) fail(ErrorKind::Argument, "qubit string too long");
    std::size_t value = 0;
    for (char c : bits) {
        if (c != '0' && c != '1') fail(ErrorKind::Argument, "qubit string must contain only 0 and 1");
        value = (value << 1) | static_cast<std::size_t>(c - '0');
    }
    if (qudit_dim < (std::size_t{1} << bits.size())) {
        fail(ErrorKind::Argument, "qudit dimension " + std::to_string(qudit_dim) + " is smaller than 2^" +
                                      std::to_string(bits.size()));
    }
    return value;
}

std::string qubit_binary_decode(std::size_t index, std::size_t n_bits) {
    if (n_bits < 8 * sizeof(std::size_t) && index >= (std::size_t{1} << n_bits)) {
        fail(ErrorKind::Argument, "index does not fit in the requested number of qubits");
    }
    std::string s(n_bits, '0');
    for (std::size_t b = 0; b < n_bits; ++b)
        if ((index >> b) & 1u) s[n_bits - 1 - b] = '1';
    return s;
}

// ---------------------------------------------------------------------------

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

void require_subsystem(const HilbertShape& shape, std::size_t k) {
    if (k >= shape.subsystems()) {
        fail(ErrorKind::Argument, "subsystem index " + std::to_string(k) + " out of range for shape " + to_string(shape));
    }
}

void require_qubit(const HilbertShape& shape, std::size_t k) {
    require_subsystem(shape, k);
    if (shape.dim(k) != 2) fail(ErrorKind::Shape, "subsystem " + std::to_string(k) + " is not a qubit");
}

void require_distinct(std::size_t a, std::size_t b) {
    if (a == b) fail(ErrorKind::Argument, "two-subsystem gate needs distinct subsystems");
}

} // namespace

std::string_view kind_name(const GateSpec& g) {
    return std::visit(overloaded{
                          [](const gate::Snap&) { return std::string_view("snap"); },
                          [](const gate::Displacement&) { return std::string_view("displacement"); },
                          [](const gate::CondRotation&) { return std::string_view("cond_rotation"); },
                          [](const gate::QubitRotation&) { return std::string_view("qubit_rotation"); },
                          [](const gate::ControlledIncrement&) { return std::string_view("controlled_increment"); },
                          [](const gate::Givens&) { return std::string_view("givens"); },
                          [](const gate::PhaseSwap&) { return std::string_view("phase_swap"); },
                          [](const gate::Fourier&) { return std::string_view("fourier"); },
                          [](const gate::Ecd&) { return std::string_view("ecd"); },
                      },
                      g.gate);
}

LocalGate resolve(const GateSpec& g, const HilbertShape& shape, DisplacementConvention convention) {
    // exp(alpha a - alpha^* a^dag) == D(-alpha^*).
    const auto amplitude = [convention](cplx z) {
        return convention == DisplacementConvention::Paper ? -std::conj(z) : z;
    };
    LocalGate local = std::visit(
        overloaded{
            [&](const gate::Snap& s) {
                require_subsystem(shape, s.target);
                if (s.theta.size() != shape.dim(s.target)) {
                    fail(ErrorKind::Shape, "SNAP phase vector length " + std::to_string(s.theta.size()) +
                                               " does not match mode dimension " + std::to_string(shape.dim(s.target)));
                }
                return LocalGate{snap(s.theta), {s.target}};
            },
            [&](const gate::Displacement& d) {
                require_subsystem(shape, d.target);
                return LocalGate{displacement(amplitude(d.alpha), shape.dim(d.target)), {d.target}};
            },
            [&](const gate::CondRotation& c) {
                require_qubit(shape, c.qubit);
                require_subsystem(shape, c.mode);
                require_distinct(c.qubit, c.mode);
                const HilbertShape local_shape{2, shape.dim(c.mode)};
                return LocalGate{cond_rotation(c.photons, c.theta, c.phi, local_shape), {c.qubit, c.mode}};
            },
            [&](const gate::QubitRotation& r) {
                require_qubit(shape, r.qubit);
                return LocalGate{qubit_rotation(r.theta, r.phi), {r.qubit}};
            },
            [&](const gate::ControlledIncrement& c) {
                require_subsystem(shape, c.control);
                require_subsystem(shape, c.target);
                require_distinct(c.control, c.target);
                if (shape.dim(c.control) != shape.dim(c.target)) {
                    fail(ErrorKind::Shape, "controlled increment needs equal control and target dimensions");
                }
                return LocalGate{controlled_increment(shape.dim(c.target)), {c.control, c.target}};
            },
            [&](const gate::Givens& gv) {
                require_subsystem(shape, gv.target);
                return LocalGate{givens(gv.m, gv.n, gv.theta, shape.dim(gv.target)), {gv.target}};
            },
            [&](const gate::PhaseSwap& p) {
                require_subsystem(shape, p.target);
                return LocalGate{phase_swap(p.m, p.n, shape.dim(p.target)), {p.target}};
            },
            [&](const gate::Fourier& f) {
                require_subsystem(shape, f.target);
                return LocalGate{fourier(shape.dim(f.target)), {f.target}};
            },
            [&](const gate::Ecd& e) {
                require_qubit(shape, e.qubit);
                require_subsystem(shape, e.mode);
                require_distinct(e.qubit, e.mode);
                const HilbertShape local_shape{2, shape.dim(e.mode)};
                return LocalGate{ecd(amplitude(e.beta), local_shape), {e.qubit, e.mode}};
            },
        },
        g.gate);
    if (g.adjoint) local.op = local.op.adjoint();
    return local;
}

Operator gate_operator(const GateSpec& g, const HilbertShape& shape, DisplacementConvention convention) {
    const LocalGate local = resolve(g, shape, convention);
    return embed(local.op, local.targets, shape);
}

StateVector apply_circuit(const Circuit& circuit, const StateVector& psi) {
    require_same_shape(circuit.shape, psi.shape(), "apply_circuit");
    StateVector out = psi;
    for (std::size_t i = 0; i < circuit.gates.size(); ++i) {
        const GateSpec& g = circuit.gates[i];
        try {
            const LocalGate local = resolve(g, circuit.shape, circuit.convention);
            out = apply_local(local.op, local.targets, out);
        } catch (const Error& e) {
            throw Error(e.kind(), "gate " + std::to_string(i) + " (" + std::string(kind_name(g)) + "): " + e.what());
        }
    }
    return out;
}

Operator circuit_unitary(const Circuit& circuit) {
    Operator u = Operator::identity(circuit.shape);
    for (std::size_t i = 0; i < circuit.gates.size(); ++i) {
        const GateSpec& g = circuit.gates[i];
        try {
            u = gate_operator(g, circuit.shape, circuit.convention) * u;
        } catch (const Error& e) {
            throw Error(e.kind(), "gate " + std::to_string(i) + " (" + std::string(kind_name(g)) + "): " + e.what());
        }
    }
    return u;
}

} // namespace cavityq
