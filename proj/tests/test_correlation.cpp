#include "doctest.h"

#include <stdexcept>
#include "oracles.hpp"

#include "mollow/correlation.hpp"
#include "mollow/units.hpp"

#include <cmath>
#include <vector>

using namespace mollow;

namespace {
const double G = mhz_to_angular(rb87_d2_linewidth_mhz);

std::vector<double> linspace(double lo, double hi, std::size_t n) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = lo + (hi - lo) * i / (n - 1);
    return v;
}
} // namespace

TEST_CASE("g2 analytic: antibunching at zero delay") {
    for (double w : {0.5 * G, 2.0 * G, 10.0 * G})
        CHECK(g2_analytic(AtomParams{G, w, 0.0}, 0.0) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("g2 analytic: uncorrelated at large delay, symmetric in tau") {
    AtomParams p{G, 5.0 * G, 0.0};
    CHECK(g2_analytic(p, 200.0 / G) == doctest::Approx(1.0).epsilon(1e-10));
    for (double t : {0.3 / G, 1.7 / G, 4.0 / G})
        CHECK(g2_analytic(p, t) == doctest::Approx(g2_analytic(p, -t)).epsilon(1e-14));
}

TEST_CASE("g2 analytic: first Rabi maximum exceeds one") {
    AtomParams p{G, 10.0 * G, 0.0};
    const double tau = std::acos(-1.0) / p.omega;
    double v = g2_analytic(p, tau);
    CHECK(v > 1.0);
    // Direct evaluation of the closed form at tau = pi/omega.
    double expected = 1.0 + std::exp(-0.75 * G * tau);
    CHECK(v == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("g2 analytic rejects omega = 0") {
    CHECK_THROWS_AS(g2_analytic(AtomParams{G, 0.0, 0.0}, 1.0 / G), std::domain_error);
}

TEST_CASE("g2 numeric: zero at tau = 0 exactly") {
    auto taus = linspace(0.0, 5.0 / G, 64);
    auto g = g2_numeric(AtomParams{G, 3.0 * G, 0.0}, taus);
    CHECK(g[0] == 0.0);
}

TEST_CASE("g2 numeric matches g2 analytic at strong drive") {
    for (double w : {5.0 * G, 10.0 * G}) {
        AtomParams p{G, w, 0.0};
        auto taus = linspace(0.0, 10.0 / G, 400);
        auto g = g2_numeric(p, taus);
        double max_diff = 0.0;
        for (std::size_t i = 0; i < taus.size(); ++i)
            max_diff = std::max(max_diff, std::abs(g[i] - g2_analytic(p, taus[i])));
        CHECK(max_diff <= 0.02);
    }
}

TEST_CASE("g2 numeric: monotonic rise without oscillation at weak drive") {
    AtomParams p{G, 0.1 * G, 0.0};
    auto taus = linspace(0.0, 12.0 / G, 300);
    auto g = g2_numeric(p, taus);
    for (std::size_t i = 1; i < g.size(); ++i) CHECK(g[i] >= g[i - 1] - 1e-9);
    // Weak-drive limit: the coherence builds as 1 - e^{-gamma tau/2}, so
    // g2 follows its square with O(omega^2/gamma^2) corrections.
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double ref = std::pow(1.0 - std::exp(-0.5 * G * taus[i]), 2);
        CHECK(std::abs(g[i] - ref) < 0.02);
    }
    CHECK(g.back() > 0.99);
    // No overshoot above the asymptote.
    for (double v : g) CHECK(v <= 1.0 + 1e-6);
}

TEST_CASE("g2 numeric against the brute-force Bloch oracle, including detuning") {
    AtomParams p{G, 6.0 * G, -2.0 * G};
    auto taus = linspace(0.0, 6.0 / G, 25);
    auto g = g2_numeric(p, taus);
    const double p_ss = steady_state(p).p_ee;
    for (std::size_t i = 0; i < taus.size(); ++i) {
        oracle::Bloch b =
            oracle::rk4_evolve(p.gamma, p.omega, p.delta, {0, 0, 0}, taus[i], 40000);
        CHECK(g[i] == doctest::Approx(b.p / p_ss).epsilon(1e-6));
    }
}

TEST_CASE("g2 numeric input validation") {
    AtomParams p{G, G, 0.0};
    std::vector<double> bad{1.0 / G, 0.5 / G};
    CHECK_THROWS_AS(g2_numeric(p, bad), std::invalid_argument);
    std::vector<double> neg{-1.0 / G, 0.5 / G};
    CHECK_THROWS_AS(g2_numeric(p, neg), std::invalid_argument);
    CHECK_THROWS_AS(g2_numeric(AtomParams{G, 0.0, 0.0}, std::vector<double>{0.0, 1.0 / G}),
                    std::domain_error);
}
