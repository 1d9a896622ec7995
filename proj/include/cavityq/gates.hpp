#pragma once

// The cavity qudit gate vocabulary.
//
// Conventions:
//  - displacement(alpha) = exp(alpha a^dag - alpha^* a). Circuits written in
//    the alternative exp(alpha a - alpha^* a^dag) convention are mapped onto
//    this one with alpha -> -conj(alpha) (see DisplacementConvention).
//  - controlled_increment maps |i>|j> -> |i>|(j + i) mod N>.
//  - Qubit basis: index 0 = |g>, index 1 = |e>.

#include "cavityq/fock.hpp"

#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace cavityq {

// Single-cavity gates.
Operator snap(std::span<const double> theta);
Operator displacement(cplx alpha, std::size_t n_levels);
Operator givens(std::size_t m, std::size_t n, double theta, std::size_t n_levels);
Operator phase_swap(std::size_t m, std::size_t n, std::size_t n_levels);
Operator fourier(std::size_t n_levels);

// SNAP on subsystem k of a multi-mode register.
Operator multiqudit_snap(std::size_t k, std::span<const double> theta, const HilbertShape& shape);

// Qubit rotation R(theta, phi) = exp(-i theta/2 (cos phi X + sin phi Y)).
Operator qubit_rotation(double theta, double phi);

// R(theta, phi) on the qubit when the mode holds exactly n photons.
// shape must be {2, N} (qubit first).
Operator cond_rotation(std::size_t n, double theta, double phi, const HilbertShape& shape);

// Shape {N, N}, control first.
Operator controlled_increment(std::size_t n_levels);

// |e><g| (x) D(beta/2) + |g><e| (x) D(-beta/2). shape must be {2, N}.
Operator ecd(cplx beta, const HilbertShape& shape);

// Levels below this index keep displacement(alpha) unitary to 1e-10 in a
// space of n_levels: n < N - ceil(|alpha|^2 + 5|alpha|).
std::size_t displacement_interior(cplx alpha, std::size_t n_levels);

// Big-endian value of a qubit basis string such as "1011".
std::size_t qubit_binary_encode(std::string_view bits, std::size_t qudit_dim);
std::string qubit_binary_decode(std::size_t index, std::size_t n_bits);

// ---------------------------------------------------------------------------
// Circuits

namespace gate {

struct Snap {
    std::size_t target = 0;
    std::vector<double> theta;
};
struct Displacement {
    std::size_t target = 0;
    cplx alpha;
};
struct CondRotation {
    std::size_t qubit = 0;
    std::size_t mode = 1;
    std::size_t photons = 0;
    double theta = 0.0;
    double phi = 0.0;
};
struct QubitRotation {
    std::size_t qubit = 0;
    double theta = 0.0;
    double phi = 0.0;
};
struct ControlledIncrement {
    std::size_t control = 0;
    std::size_t target = 1;
};
struct Givens {
    std::size_t target = 0;
    std::size_t m = 0;
    std::size_t n = 1;
    double theta = 0.0;
};
struct PhaseSwap {
    std::size_t target = 0;
    std::size_t m = 0;
    std::size_t n = 1;
};
struct Fourier {
    std::size_t target = 0;
};
struct Ecd {
    std::size_t qubit = 0;
    std::size_t mode = 1;
    cplx beta;
};

} // namespace gate

using GateVariant = std::variant<gate::Snap, gate::Displacement, gate::CondRotation, gate::QubitRotation,
                                 gate::ControlledIncrement, gate::Givens, gate::PhaseSwap, gate::Fourier, gate::Ecd>;

struct GateSpec {
    GateVariant gate;
    bool adjoint = false;
};

// Stable lower-case kind name, as used in circuit files.
std::string_view kind_name(const GateSpec& g);

enum class DisplacementConvention { Standard, Paper };

struct Circuit {
    HilbertShape shape;
    std::vector<GateSpec> gates;
    DisplacementConvention convention = DisplacementConvention::Standard;
};

// A gate's matrix on its own subsystems plus the subsystems it acts on.
struct LocalGate {
    Operator op;
    std::vector<std::size_t> targets;
};

LocalGate resolve(const GateSpec& g, const HilbertShape& shape,
                  DisplacementConvention convention = DisplacementConvention::Standard);

// Full-register matrix of one gate.
Operator gate_operator(const GateSpec& g, const HilbertShape& shape,
                       DisplacementConvention convention = DisplacementConvention::Standard);

// Gates applied in list order. Errors carry the failing gate's index.
StateVector apply_circuit(const Circuit& circuit, const StateVector& psi);

// Product U_last ... U_first.
Operator circuit_unitary(const Circuit& circuit);

} // namespace cavityq
