#include "mollow/correlation.hpp"

#include <cmath>
#include <iostream>
#include <stdexcept>

namespace mollow {

double g2_analytic(const AtomParams& prm, double tau) {
    prm.validate();
    if (prm.omega == 0.0)
        throw std::domain_error("g2_analytic: undefined for omega = 0");
    if (prm.omega <= 0.25 * prm.gamma) {
        static thread_local bool warned = false;
        if (!warned) {
            std::cerr << "warning: g2_analytic used below its strong-drive "
                         "validity range (omega <= gamma/4)\n";
            warned = true;
        }
    }
    const double G = prm.gamma, W = prm.omega;
    const double at = std::abs(tau);
    return 1.0 - std::exp(-0.75 * G * at) *
                     (std::cos(W * tau) + (0.75 * G / W) * std::sin(W * at));
}

std::vector<double> g2_numeric(const AtomParams& prm, std::span<const double> tau_grid) {
    prm.validate();
    if (prm.omega == 0.0)
        throw std::domain_error("g2_numeric: undefined for omega = 0 (no steady-state emission)");
    for (std::size_t i = 0; i < tau_grid.size(); ++i) {
        if (!(tau_grid[i] >= 0.0) || !std::isfinite(tau_grid[i]))
            throw std::invalid_argument("g2_numeric: tau_grid must be >= 0 and finite");
        if (i > 0 && tau_grid[i] < tau_grid[i - 1])
            throw std::invalid_argument("g2_numeric: tau_grid must be sorted");
    }

    const double p_ss = steady_state(prm).p_ee;
    std::vector<double> out(tau_grid.size());
    BlochState state = ground_state();
    double t_prev = 0.0;
    for (std::size_t i = 0; i < tau_grid.size(); ++i) {
        state = evolve(prm, state, tau_grid[i] - t_prev);
        t_prev = tau_grid[i];
        out[i] = state.p_ee / p_ss;
    }
    return out;
}

} // namespace mollow
