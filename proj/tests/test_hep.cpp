#include "doctest.h"
#include "helpers.hpp"

#include "cavityq/hep.hpp"

#include <cmath>
#include <numbers>

using namespace cavityq;
using namespace testutil;
using std::numbers::pi;

namespace {

QuditHamiltonian random_hamiltonian(std::mt19937_64& rng, std::size_t n, double scale) {
    std::uniform_real_distribution<double> u(-scale, scale);
    QuditHamiltonian h;
    for (std::size_t i = 0; i < n; ++i) {
        h.diagonal.push_back(u(rng));
        h.kinetic_diagonal.push_back(u(rng));
    }
    return h;
}

// Dense H from explicit DFT sums.
Matrix brute_hamiltonian(const QuditHamiltonian& h) {
    const auto n = static_cast<Eigen::Index>(h.levels());
    Matrix m = Matrix::Zero(n, n);
    for (Eigen::Index a = 0; a < n; ++a) {
        m(a, a) += 2 * pi * h.diagonal[static_cast<std::size_t>(a)];
        for (Eigen::Index b = 0; b < n; ++b)
            for (Eigen::Index j = 0; j < n; ++j) {
                const double phase = 2 * pi * static_cast<double>(j * (a - b)) / static_cast<double>(n);
                m(a, b) += 2 * pi * h.kinetic_diagonal[static_cast<std::size_t>(j)] * std::polar(1.0, phase) / static_cast<double>(n);
            }
    }
    return m;
}

Matrix brute_propagator(const Matrix& h, double t) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(h);
    const Vector phases = (cplx(0, -t) * es.eigenvalues().cast<cplx>()).array().exp();
    return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

cplx brute_otoc(const Matrix& w, const Matrix& v, const Matrix& h, double t, const Vector& psi) {
    const Matrix u = brute_propagator(h, t);
    const Matrix wt = u.adjoint() * w * u;
    const Matrix product = wt.adjoint() * v.adjoint() * wt * v;
    return psi.dot(product * psi);
}

Operator clock(std::size_t n, std::size_t power) {
    std::vector<double> theta(n);
    for (std::size_t k = 0; k < n; ++k) theta[k] = 2 * pi * static_cast<double>(k * power) / static_cast<double>(n);
    return snap(theta);
}

} // namespace

TEST_CASE("Hamiltonian matrix") {
    std::mt19937_64 rng(3);
    const auto h = random_hamiltonian(rng, 6, 1.0);
    CHECK(max_abs_diff(h.matrix().matrix(), brute_hamiltonian(h)) < 1e-12);
    CHECK(is_hermitian(h.matrix().matrix()));
    QuditHamiltonian bad = h;
    bad.kinetic_diagonal.pop_back();
    CHECK_THROWS_AS(bad.matrix(), Error);
    bad = h;
    bad.diagonal[0] = NAN;
    CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("trotter_step") {
    std::mt19937_64 rng(11);
    const auto h = random_hamiltonian(rng, 8, 1.0);
    const auto c = trotter_step(h, 0.01);
    REQUIRE(c.gates.size() == 4);
    CHECK(kind_name(c.gates[0]) == "snap");
    CHECK(kind_name(c.gates[1]) == "fourier");
    CHECK(c.gates[1].adjoint);
    CHECK_FALSE(c.gates[3].adjoint);

    SUBCASE("commuting limits are exact") {
        QuditHamiltonian v_only = h;
        std::fill(v_only.kinetic_diagonal.begin(), v_only.kinetic_diagonal.end(), 0.0);
        CHECK(max_abs_diff(circuit_unitary(trotter_step(v_only, 0.3)).matrix(), exact_propagator(v_only, 0.3).matrix()) < 1e-12);
        QuditHamiltonian k_only = h;
        std::fill(k_only.diagonal.begin(), k_only.diagonal.end(), 0.0);
        CHECK(max_abs_diff(circuit_unitary(trotter_step(k_only, 0.3)).matrix(), exact_propagator(k_only, 0.3).matrix()) < 1e-12);
    }
    SUBCASE("per-step error is second order") {
        const auto err = [&](double dt) {
            return (circuit_unitary(trotter_step(h, dt)).matrix() - exact_propagator(h, dt).matrix()).norm();
        };
        for (double dt : {0.02, 0.01, 0.005}) {
            const double ratio = err(dt) / err(dt / 2);
            CHECK(ratio >= 3.5);
            CHECK(ratio <= 4.5);
        }
    }
    CHECK_THROWS_AS(trotter_step(h, 0.0), Error);
}

TEST_CASE("evolve_trotter") {
    std::mt19937_64 rng(2);
    auto h = random_hamiltonian(rng, 8, 1.0);
    const double norm = h.matrix().matrix().operatorNorm();
    const double t = 5.0 / norm;
    const auto psi0 = random_state(rng, HilbertShape{8});

    const auto e = evolve_trotter(h, t, 200, psi0);
    CHECK(e.infidelity < 1e-4);
    CHECK(e.state.amplitudes().norm() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(fidelity(e.exact, StateVector(psi0.shape(), brute_propagator(brute_hamiltonian(h), t) * psi0.amplitudes())) ==
          doctest::Approx(1.0).epsilon(1e-12));

    const auto zero = evolve_trotter(h, 0.0, 5, psi0);
    CHECK(zero.infidelity < 1e-14);
    CHECK(max_abs_diff(zero.state.amplitudes(), psi0.amplitudes()) == 0.0);

    QuditHamiltonian commuting = h;
    std::fill(commuting.kinetic_diagonal.begin(), commuting.kinetic_diagonal.end(), 0.0);
    CHECK(evolve_trotter(commuting, t, 1, psi0).infidelity < 1e-12);

    CHECK_THROWS_AS(evolve_trotter(h, t, 0, psi0), Error);
    CHECK_THROWS_AS(evolve_trotter(h, t, 3, random_state(rng, HilbertShape{4})), Error);
}

TEST_CASE("global error is first order") {
    std::mt19937_64 rng(4);
    const auto h = random_hamiltonian(rng, 8, 1.0);
    const auto psi0 = random_state(rng, HilbertShape{8});
    const std::vector<std::size_t> steps{50, 100, 200, 400, 800};
    const auto rows = trotter_convergence(h, 1.0, steps, psi0);
    REQUIRE(rows.size() == 5);
    CHECK(rows[2].dt == doctest::Approx(1.0 / 200));
    for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].infidelity < rows[i - 1].infidelity);
    const auto fit = trotter_error_exponent(rows);
    CHECK(fit.slope >= 0.9);
    CHECK(fit.slope <= 1.1);
    CHECK(fit.r_squared > 0.999);
}

TEST_CASE("otoc") {
    std::mt19937_64 rng(8);
    const auto h = random_hamiltonian(rng, 8, 1.0);
    const Operator w = clock(8, 1);
    const Operator v = clock(8, 3);

    CHECK(std::abs(otoc(w, v, h, 0.0) - 1.0) < 1e-12);

    SUBCASE("matches a brute-force evaluation") {
        const Matrix hb = brute_hamiltonian(h);
        const auto psi = random_state(rng, HilbertShape{8});
        const Operator x = givens(1, 4, 0.7, 8);
        for (double t : {0.0, 0.05, 0.1, 0.37, 1.0, 2.5}) {
            CHECK(std::abs(otoc(w, v, h, t) - brute_otoc(w.matrix(), v.matrix(), hb, t, StateVector::basis(HilbertShape{8}, 0).amplitudes())) < 1e-9);
            CHECK(std::abs(otoc(w, x, h, t, psi) - brute_otoc(w.matrix(), x.matrix(), hb, t, psi.amplitudes())) < 1e-9);
        }
    }
    SUBCASE("scrambling and the unitarity bound") {
        double smallest = 1.0;
        std::vector<double> times;
        for (int k = 0; k <= 40; ++k) times.push_back(0.025 * k);
        const auto rows = otoc_series(w, v, h, times, StateVector::basis(HilbertShape{8}, 0));
        REQUIRE(rows.size() == times.size());
        for (const auto& r : rows) {
            CHECK(std::abs(r.value) <= 1.0 + 1e-12);
            smallest = std::min(smallest, std::abs(r.value));
        }
        CHECK(smallest < 0.9);
    }
    SUBCASE("diagonal dynamics leave diagonal operators static") {
        QuditHamiltonian diag = h;
        std::fill(diag.kinetic_diagonal.begin(), diag.kinetic_diagonal.end(), 0.0);
        const auto psi = random_state(rng, HilbertShape{8});
        const cplx v0 = otoc(w, v, diag, 0.0, psi);
        for (double t : {0.3, 1.7, 4.0}) CHECK(std::abs(otoc(w, v, diag, t, psi) - v0) < 1e-12);
    }
    CHECK_THROWS_AS(otoc(clock(4, 1), v, h, 0.1), Error);
}
