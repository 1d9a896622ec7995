#include "doctest.h"

#include "cavityq/device.hpp"
#include "cavityq/error.hpp"

#include <cmath>
#include <numbers>

using namespace cavityq;

namespace {

// Delta = 2 GHz, g = 10 MHz, T1(|1>) = 1 s, T1min = 200 us.
DeviceParams reference_device() {
    DeviceParams p;
    p.omega_q_hz = 6.0e9;
    p.omega_c_hz = 4.0e9;
    p.g_hz = 10.0e6;
    p.chi_prime_hz = -1.0e3;
    p.alpha_hz = -200.0e6;
    p.t1_fock0_s = 1.0;
    p.t1_min_s = 200e-6;
    return p;
}

} // namespace

TEST_CASE("dispersive shift") {
    auto p = reference_device();
    CHECK(chi(p) == doctest::Approx(50.0e3));
    p.g_hz = 1e-3;
    CHECK(std::abs(chi(p)) < 1e-12);
    p = reference_device();
    std::swap(p.omega_q_hz, p.omega_c_hz);
    CHECK(chi(p) < 0.0);
    p.omega_c_hz = p.omega_q_hz;
    CHECK_THROWS_AS(chi(p), Error);
}

TEST_CASE("Stark-shifted qubit frequency") {
    auto p = reference_device();
    CHECK(stark_shifted_freq(p, 0, 1) == p.omega_q_hz);
    CHECK(stark_shifted_freq(p, 0, 2) == p.omega_q_hz);
    for (double n : {1.0, 3.0, 10.0}) {
        const double diff = stark_shifted_freq(p, n, 2) - stark_shifted_freq(p, n, 1);
        CHECK(diff == doctest::Approx(-p.chi_prime_hz * n * n / 2.0));
    }
    p.chi_prime_hz = 0.0;
    for (double n : {1.0, 7.0, 100.0}) CHECK(stark_shifted_freq(p, n, 2) == stark_shifted_freq(p, n, 1));
    CHECK_THROWS_AS(stark_shifted_freq(p, -1, 1), Error);
    CHECK_THROWS_AS(stark_shifted_freq(p, 1, 3), Error);

    SUBCASE("opposing chi' closes the level spacing") {
        // chi = 50 kHz, chi' = -1 kHz: spacing chi + chi'(n + 1/2) vanishes near n = 49.5.
        auto q = reference_device();
        double prev = std::abs(stark_shifted_freq(q, 1, 2) - stark_shifted_freq(q, 0, 2));
        for (int n = 1; n < 49; ++n) {
            const double spacing = std::abs(stark_shifted_freq(q, n + 1, 2) - stark_shifted_freq(q, n, 2));
            CHECK(spacing < prev);
            prev = spacing;
        }
        CHECK(prev < 0.05 * chi(q));
    }
}

TEST_CASE("critical photon number") {
    auto p = reference_device();
    CHECK(critical_photon_number(p) == 10000.0);
    p.g_hz = p.detuning_hz() / 2.0;
    CHECK(critical_photon_number(p) == doctest::Approx(1.0));
    p = reference_device();
    double prev = critical_photon_number(p);
    for (double g : {20e6, 40e6, 80e6}) {
        p.g_hz = g;
        CHECK(critical_photon_number(p) < prev);
        prev = critical_photon_number(p);
    }
    SUBCASE("scale invariance") {
        auto q = reference_device();
        auto r = q;
        r.omega_q_hz *= 3.0;
        r.omega_c_hz *= 3.0;
        r.g_hz *= 3.0;
        CHECK(critical_photon_number(r) == doctest::Approx(critical_photon_number(q)));
    }
}

TEST_CASE("Fock-state lifetimes and the Hilbert-space bound") {
    auto p = reference_device();
    CHECK_FALSE(fock_t1(p, 0).has_value());
    CHECK(*fock_t1(p, 1) == 1.0);
    CHECK(*fock_t1(p, 2) == 0.5);
    CHECK(*fock_t1(p, 5000) == doctest::Approx(200e-6));

    CHECK(max_fock(p).max_level == 5000);
    CHECK(max_fock(p).advisory.empty());
    p.t1_min_s = p.t1_fock0_s;
    CHECK(max_fock(p).max_level == 1);
    p = reference_device();
    p.t1_min_s = 100e-6;
    CHECK(max_fock(p).max_level == 10000);
    p.t1_min_s = 2.0;
    CHECK(max_fock(p).max_level == 0);
    CHECK_FALSE(max_fock(p).advisory.empty());

    auto q = reference_device();
    q.t1_fock0_s *= 7.0;
    q.t1_min_s *= 7.0;
    CHECK(max_fock(q).max_level == 5000);
}

TEST_CASE("SNAP gate-time bound") {
    auto p = reference_device();
    CHECK(snap_min_gate_time(p) == doctest::Approx(125.66e-6).epsilon(1e-4));
    CHECK(snap_min_gate_time(p) == doctest::Approx(2.0 * std::numbers::pi / 50e3));
    const double t = snap_min_gate_time(p);
    p.g_hz *= std::sqrt(2.0);
    CHECK(snap_min_gate_time(p) == doctest::Approx(t / 2.0));
    std::swap(p.omega_q_hz, p.omega_c_hz);
    CHECK(snap_min_gate_time(p) > 0.0);
}

TEST_CASE("multi-mode drive frequency") {
    const auto p = reference_device();
    const ModeShift none[] = {{0, 1e6}, {0, 5e5}};
    CHECK(multimode_drive_freq(p, none) == p.omega_q_hz);
    const ModeShift one[] = {{3, chi(p)}};
    CHECK(multimode_drive_freq(p, one) == doctest::Approx(stark_shifted_freq(p, 3, 1)));
    const ModeShift two[] = {{1, 1e6}, {2, 0.5e6}};
    CHECK(multimode_drive_freq(p, two) == doctest::Approx(p.omega_q_hz - 2e6));
}

TEST_CASE("decoherence-rate estimators") {
    CHECK(dephasing_rate(0.0, 5.0, 1.0) == 0.0);
    CHECK(dephasing_rate(2.0, 3.0, 1.0) == doctest::Approx(12.0));
    CHECK(dephasing_rate(4.0, 3.0, 1.0) == doctest::Approx(4.0 * dephasing_rate(2.0, 3.0, 1.0)));
    CHECK_THROWS_AS(dephasing_rate(1.0, -1.0, 1.0), Error);
    CHECK_THROWS_AS(dephasing_rate(1.0, 1.0, 0.0), Error);

    CHECK(relaxation_rate(0.0, 3.0, 2.0) == 0.0);
    CHECK(relaxation_rate(1.0, 0.5, 2.0) == doctest::Approx(1.0));
    CHECK(relaxation_rate(1.0, 1.0, 2.0) == doctest::Approx(2.0 * relaxation_rate(1.0, 0.5, 2.0)));
    CHECK_THROWS_AS(relaxation_rate(-1.0, 1.0, 1.0), Error);
}

TEST_CASE("parameter validation") {
    auto p = reference_device();
    CHECK_NOTHROW(validate(p));
    p.g_hz = 0.0;
    CHECK_THROWS_AS(validate(p), Error);
    p = reference_device();
    p.t1_min_s = 0.0;
    CHECK_THROWS_AS(validate(p), Error);
}
