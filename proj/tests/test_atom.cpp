#include "doctest.h"

#include <stdexcept>
#include "oracles.hpp"

#include "mollow/atom.hpp"
#include "mollow/units.hpp"

#include <cmath>

using namespace mollow;

namespace {
const double G = mhz_to_angular(rb87_d2_linewidth_mhz);
}

TEST_CASE("parameter validation") {
    CHECK_THROWS_AS((AtomParams{0.0, 1.0, 0.0}).validate(), std::invalid_argument);
    CHECK_THROWS_AS((AtomParams{-1.0, 1.0, 0.0}).validate(), std::invalid_argument);
    CHECK_THROWS_AS((AtomParams{G, -1.0, 0.0}).validate(), std::invalid_argument);
    CHECK_THROWS_AS((AtomParams{G, std::nan(""), 0.0}).validate(), std::invalid_argument);
    CHECK_NOTHROW((AtomParams{G, 0.0, -G}).validate());
}

TEST_CASE("steady state: no drive leaves the atom in the ground state") {
    BlochState s = steady_state(AtomParams{G, 0.0, 0.0});
    CHECK(s.p_ee == 0.0);
    CHECK(s.coh_re == 0.0);
    CHECK(s.coh_im == 0.0);
}

TEST_CASE("steady state saturates at one half") {
    BlochState s = steady_state(AtomParams{G, 1e4 * G, 0.0});
    CHECK(s.p_ee == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("steady state at omega = gamma/sqrt(2) is 1/4, and matches the long-time ODE") {
    AtomParams p{G, G / std::sqrt(2.0), 0.0};
    BlochState s = steady_state(p);
    CHECK(s.p_ee == doctest::Approx(0.25).epsilon(1e-12));

    // Brute-force fixed-step integration to t = 60/gamma.
    oracle::Bloch b = oracle::rk4_evolve(p.gamma, p.omega, p.delta, {0, 0, 0}, 60.0 / G, 200000);
    CHECK(s.p_ee == doctest::Approx(b.p).epsilon(1e-8));
    CHECK(s.coh_re == doctest::Approx(b.u).epsilon(1e-6));
    CHECK(s.coh_im == doctest::Approx(b.v).epsilon(1e-6));
}

TEST_CASE("steady state matches long-time evolution at detuned drive") {
    AtomParams p{G, 3.1 * G, -1.7 * G};
    BlochState ss = steady_state(p);
    BlochState longtime = evolve(p, excited_state(), 80.0 / G);
    CHECK(std::abs(longtime.p_ee - ss.p_ee) < 1e-6);
    CHECK(std::abs(longtime.coh_re - ss.coh_re) < 1e-6);
    CHECK(std::abs(longtime.coh_im - ss.coh_im) < 1e-6);
}

TEST_CASE("evolve: zero duration is the identity") {
    AtomParams p{G, 2.0 * G, 0.5 * G};
    BlochState s{0.3, 0.1, -0.2};
    BlochState out = evolve(p, s, 0.0);
    CHECK(out.p_ee == s.p_ee);
    CHECK(out.coh_re == s.coh_re);
    CHECK(out.coh_im == s.coh_im);
}

TEST_CASE("evolve: pure decay of the excited state") {
    AtomParams p{G, 0.0, 0.0};
    for (double t : {0.1 / G, 1.0 / G, 5.0 / G}) {
        BlochState out = evolve(p, excited_state(), t);
        CHECK(out.p_ee == doctest::Approx(std::exp(-G * t)).epsilon(1e-7));
        CHECK(std::abs(out.coh_re) < 1e-12);
        CHECK(std::abs(out.coh_im) < 1e-12);
    }
}

TEST_CASE("evolve: first Rabi maximum against the brute-force integrator") {
    AtomParams p{G, 10.0 * G, 0.0};
    const double t = std::acos(-1.0) / p.omega; // half Rabi period
    BlochState out = evolve(p, ground_state(), t);
    oracle::Bloch b = oracle::rk4_evolve(p.gamma, p.omega, p.delta, {0, 0, 0}, t, 100000);
    CHECK(out.p_ee == doctest::Approx(b.p).epsilon(1e-7));
    // Near the maximum of the first (damped) Rabi cycle.
    CHECK(out.p_ee > 0.85);
}

TEST_CASE("evolve agrees with the oracle at detuned strong drive") {
    AtomParams p{G, 7.0 * G, -3.0 * G};
    const double t = 2.7 / G;
    BlochState out = evolve(p, ground_state(), t);
    oracle::Bloch b = oracle::rk4_evolve(p.gamma, p.omega, p.delta, {0, 0, 0}, t, 400000);
    CHECK(out.p_ee == doctest::Approx(b.p).epsilon(1e-7));
    CHECK(out.coh_re == doctest::Approx(b.u).epsilon(1e-6));
    CHECK(out.coh_im == doctest::Approx(b.v).epsilon(1e-6));
}

TEST_CASE("evolve preserves density-matrix positivity") {
    AtomParams p{G, 4.0 * G, 1.3 * G};
    BlochState s = excited_state();
    for (int i = 0; i < 40; ++i) {
        s = evolve(p, s, 0.25 / G);
        CHECK(s.physical(1e-6));
    }
}

TEST_CASE("evolve rejects non-finite input") {
    AtomParams p{G, G, 0.0};
    CHECK_THROWS_AS(evolve(p, BlochState{std::nan(""), 0, 0}, 1.0 / G), std::invalid_argument);
    CHECK_THROWS_AS(evolve(p, ground_state(), -1.0), std::invalid_argument);
}

TEST_CASE("generalized Rabi frequency") {
    CHECK(generalized_rabi(AtomParams{G, 3.0 * G, 0.0}) == 3.0 * G);
    CHECK(generalized_rabi(AtomParams{G, 0.0, -2.0 * G}) == 2.0 * G);
    // 2pi x 29.4 MHz drive at 2pi x 30 MHz detuning gives 2pi x 42.0 MHz.
    AtomParams p{G, mhz_to_angular(29.4), mhz_to_angular(30.0)};
    CHECK(angular_to_mhz(generalized_rabi(p)) == doctest::Approx(42.0043).epsilon(1e-4));
}

TEST_CASE("saturation rate") {
    SaturationModel m{6.3e-12, 0.0179};
    CHECK(saturation_rate(m, G, 0.0) == 0.0);
    CHECK(saturation_rate(m, G, 1e-6) == doctest::Approx(0.5 * m.eta * G).epsilon(1e-5));
    CHECK(saturation_rate(m, G, m.p_sat) == doctest::Approx(0.25 * m.eta * G).epsilon(1e-12));
    CHECK_THROWS_AS(saturation_rate(m, G, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(saturation_rate(SaturationModel{0.0, 0.5}, G, 1.0), std::invalid_argument);
}
