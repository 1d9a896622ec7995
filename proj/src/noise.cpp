#include "cavityq/noise.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace cavityq {

namespace {

void require_single_mode(const StateVector& psi, const char* what) {
    if (psi.shape().subsystems() != 1) {
        fail(ErrorKind::Shape, std::string(what) + " expects a single-mode state, got " + to_string(psi.shape()));
    }
}

// Two-element set {sqrt(I - dt L^dag L), sqrt(dt) L} for a jump operator L
// whose L^dag L is diagonal.
NoiseChannel first_order_pair(const Matrix& jump, double dt, std::size_t n_levels, const char* what) {
    if (!(dt > 0.0) || !std::isfinite(dt)) fail(ErrorKind::Argument, std::string(what) + ": dt must be positive");
    const HilbertShape shape{n_levels};
    const Matrix k1 = std::sqrt(dt) * jump;
    const Matrix weight = k1.adjoint() * k1;
    const auto d = static_cast<Eigen::Index>(n_levels);

    // The raw first-order K0 = I - weight/2 misses completeness by weight^2/4.
    const double defect = 0.25 * weight.diagonal().cwiseAbs2().maxCoeff();
    if (defect > kMaxFirstOrderDefect) {
        fail(ErrorKind::Numeric, std::string(what) + ": step dt = " + std::to_string(dt) +
                                     " too large for the first-order Kraus model (completeness defect " +
                                     std::to_string(defect) + ")");
    }
    Matrix k0 = Matrix::Zero(d, d);
    for (Eigen::Index n = 0; n < d; ++n) k0(n, n) = std::sqrt(1.0 - weight(n, n).real());

    NoiseChannel ch;
    ch.dt = dt;
    ch.kraus.emplace_back(shape, std::move(k0));
    ch.kraus.emplace_back(shape, k1);
    return ch;
}

cplx overlap(const Vector& a, const Vector& b) { return a.dot(b); }

} // namespace

double NoiseChannel::completeness_error() const {
    if (kraus.empty()) return 1.0;
    const auto d = static_cast<Eigen::Index>(kraus.front().dim());
    Matrix sum = Matrix::Zero(d, d);
    for (const auto& k : kraus) sum += k.matrix().adjoint() * k.matrix();
    return (sum - Matrix::Identity(d, d)).cwiseAbs().maxCoeff();
}

NoiseChannel photon_loss_channel(double t1_fock0, double dt, std::size_t n_levels) {
    if (!(t1_fock0 > 0.0)) fail(ErrorKind::Argument, "photon loss: t1_fock0 must be positive");
    return first_order_pair(annihilation(n_levels).matrix() / std::sqrt(t1_fock0), dt, n_levels, "photon loss");
}

NoiseChannel dephasing_channel(double rate, double dt, std::size_t n_levels) {
    if (!(rate >= 0.0)) fail(ErrorKind::Argument, "dephasing: rate must be non-negative");
    return first_order_pair(number_operator(n_levels).matrix() * std::sqrt(rate), dt, n_levels, "dephasing");
}

Matrix density_matrix(const StateVector& psi) { return psi.amplitudes() * psi.amplitudes().adjoint(); }

Matrix apply_channel(const NoiseChannel& channel, const Matrix& rho) {
    if (channel.kraus.empty()) fail(ErrorKind::Argument, "channel has no Kraus operators");
    const auto d = static_cast<Eigen::Index>(channel.kraus.front().dim());
    if (rho.rows() != d || rho.cols() != d) fail(ErrorKind::Shape, "density matrix does not match channel dimension");
    Matrix out = Matrix::Zero(d, d);
    for (const auto& k : channel.kraus) out += k.matrix() * rho * k.matrix().adjoint();
    return out;
}

double uniform01(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

Trajectory apply_channel_trajectory(const NoiseChannel& channel, const StateVector& psi, std::size_t steps,
                                    std::uint64_t seed) {
    if (channel.kraus.empty()) fail(ErrorKind::Argument, "channel has no Kraus operators");
    require_same_shape(channel.kraus.front().shape(), psi.shape(), "trajectory");
    const bool single_mode = psi.shape().subsystems() == 1;

    std::mt19937_64 rng(seed);
    Trajectory tr;
    Vector v = psi.amplitudes() / psi.norm();
    std::size_t jumps = 0;
    tr.record.reserve(steps);
    for (std::size_t s = 0; s < steps; ++s) {
        const double r = uniform01(rng());
        double acc = 0.0;
        std::size_t chosen = channel.kraus.size();
        Vector next;
        std::size_t last_nonzero = 0;
        Vector last_vec;
        for (std::size_t k = 0; k < channel.kraus.size(); ++k) {
            Vector w = channel.kraus[k].matrix() * v;
            const double p = w.squaredNorm();
            if (p <= 0.0) continue;
            last_nonzero = k;
            last_vec = w;
            acc += p;
            if (r < acc) {
                chosen = k;
                next = std::move(w);
                break;
            }
        }
        if (chosen == channel.kraus.size()) {
            // r landed in the rounding gap above sum p_k; take the last live branch.
            chosen = last_nonzero;
            next = std::move(last_vec);
        }
        v = next / next.norm();
        if (chosen != 0) {
            ++jumps;
            tr.jump_steps.push_back(s);
        }
        TrajectoryStep row;
        row.step = s + 1;
        row.jump_count = jumps;
        if (single_mode) {
            const StateVector cur(psi.shape(), v);
            row.parity = parity(cur);
            row.mean_n = mean_photon_number(cur);
        }
        tr.record.push_back(row);
    }
    tr.state = StateVector(psi.shape(), v, psi.leakage());
    return tr;
}

StateVector cat_state(cplx alpha, CatParity parity_sign, CatAxis axis, std::size_t n_levels) {
    const cplx beta = axis == CatAxis::Real ? alpha : cplx(0.0, 1.0) * alpha;
    const StateVector plus = coherent_state(beta, n_levels);
    const StateVector minus = coherent_state(-beta, n_levels);
    const double sign = parity_sign == CatParity::Even ? 1.0 : -1.0;
    const Vector v = plus.amplitudes() + sign * minus.amplitudes();
    const double norm = v.norm();
    if (norm < 1e-12) fail(ErrorKind::Degenerate, "cat state vanishes (odd cat at alpha = 0)");
    return StateVector(plus.shape(), v / norm, plus.leakage());
}

CatBasis cat_basis(cplx alpha, std::size_t n_levels) {
    return CatBasis{alpha,
                    {cat_state(alpha, CatParity::Even, CatAxis::Real, n_levels),
                     cat_state(alpha, CatParity::Odd, CatAxis::Real, n_levels),
                     cat_state(alpha, CatParity::Even, CatAxis::Imag, n_levels),
                     cat_state(alpha, CatParity::Odd, CatAxis::Imag, n_levels)}};
}

StateVector cat_encode(cplx c_g, cplx c_e, cplx alpha, std::size_t n_levels) {
    const double weight = std::norm(c_g) + std::norm(c_e);
    if (std::abs(weight - 1.0) > 1e-9) fail(ErrorKind::Argument, "cat encoding needs |c_g|^2 + |c_e|^2 = 1");
    const StateVector g = cat_state(alpha, CatParity::Even, CatAxis::Real, n_levels);
    const StateVector e = cat_state(alpha, CatParity::Even, CatAxis::Imag, n_levels);
    const Vector v = c_g * g.amplitudes() + c_e * e.amplitudes();
    const double norm = v.norm();
    if (norm < 1e-12) fail(ErrorKind::Degenerate, "cat encoding cancels to zero");
    return StateVector(g.shape(), v / norm, std::max(g.leakage(), e.leakage()));
}

double cat_code_fidelity(const StateVector& psi, cplx alpha) {
    require_single_mode(psi, "cat code fidelity");
    const std::size_t n = psi.size();
    const Vector g = cat_state(alpha, CatParity::Even, CatAxis::Real, n).amplitudes();
    Vector e = cat_state(alpha, CatParity::Even, CatAxis::Imag, n).amplitudes();
    e -= overlap(g, e) * g;
    const Vector& v = psi.amplitudes();
    double weight = std::norm(overlap(g, v));
    const double en = e.norm();
    if (en > 1e-12) weight += std::norm(overlap(e / en, v));
    return std::clamp(weight / v.squaredNorm(), 0.0, 1.0);
}

double parity(const StateVector& psi) {
    require_single_mode(psi, "parity");
    double p = 0.0;
    for (std::size_t n = 0; n < psi.size(); ++n) p += (n % 2 == 0 ? 1.0 : -1.0) * std::norm(psi[n]);
    return p / psi.amplitudes().squaredNorm();
}

double mean_photon_number(const StateVector& psi) {
    require_single_mode(psi, "mean photon number");
    double m = 0.0;
    for (std::size_t n = 0; n < psi.size(); ++n) m += static_cast<double>(n) * std::norm(psi[n]);
    return m / psi.amplitudes().squaredNorm();
}

StateVector photon_loss_cycle_check(const StateVector& psi, std::size_t k) {
    require_single_mode(psi, "photon loss cycle");
    const Matrix a = annihilation(psi.size()).matrix();
    Vector v = psi.amplitudes();
    for (std::size_t i = 0; i < k; ++i) v = a * v;
    const double norm = v.norm();
    if (norm < 1e-12) {
        fail(ErrorKind::Degenerate, "state has no weight left after " + std::to_string(k) + " photon losses");
    }
    return StateVector(psi.shape(), v / norm, psi.leakage());
}

std::pair<StateVector, StateVector> binomial_codewords(std::size_t n_levels) {
    if (n_levels < 5) fail(ErrorKind::Argument, "binomial code needs at least 5 levels");
    const HilbertShape shape{n_levels};
    Vector zero = Vector::Zero(static_cast<Eigen::Index>(n_levels));
    zero(0) = zero(4) = 1.0 / std::sqrt(2.0);
    return {StateVector(shape, zero), StateVector::basis(shape, 2)};
}

} // namespace cavityq
