#include "mollow/atom.hpp"
#include "mollow/ode.hpp"

#include <cmath>
#include <stdexcept>

namespace mollow {

void AtomParams::validate() const {
    if (!std::isfinite(gamma) || gamma <= 0.0)
        throw std::invalid_argument("AtomParams: gamma must be finite and > 0");
    if (!std::isfinite(omega) || omega < 0.0)
        throw std::invalid_argument("AtomParams: omega must be finite and >= 0");
    if (!std::isfinite(delta))
        throw std::invalid_argument("AtomParams: delta must be finite");
}

bool BlochState::physical(double tol) const {
    if (!(p_ee >= -tol && p_ee <= 1.0 + tol)) return false;
    double coh2 = coh_re * coh_re + coh_im * coh_im;
    return coh2 <= p_ee * (1.0 - p_ee) + tol;
}

BlochState ground_state() { return BlochState{0.0, 0.0, 0.0}; }
BlochState excited_state() { return BlochState{1.0, 0.0, 0.0}; }

// y = (p_ee, Re rho_ge, Im rho_ge):
//   p'  =  W v - G p
//   u'  =  D v - (G/2) u
//   v'  = -D u - (G/2) v - W p + W/2
std::array<double, 3> bloch_derivative(const AtomParams& prm, const std::array<double, 3>& y) {
    const double G = prm.gamma, W = prm.omega, D = prm.delta;
    const double p = y[0], u = y[1], v = y[2];
    return {W * v - G * p,
            D * v - 0.5 * G * u,
            -D * u - 0.5 * G * v - W * p + 0.5 * W};
}

BlochState steady_state(const AtomParams& prm) {
    prm.validate();
    const double G = prm.gamma, W = prm.omega, D = prm.delta;
    if (W == 0.0) return ground_state();
    double p = 0.25 * W * W / (D * D + 0.25 * G * G + 0.5 * W * W);
    return BlochState{p, 2.0 * D * p / W, G * p / W};
}

BlochState evolve(const AtomParams& prm, const BlochState& initial, double t) {
    prm.validate();
    if (!std::isfinite(initial.p_ee) || !std::isfinite(initial.coh_re) || !std::isfinite(initial.coh_im))
        throw std::invalid_argument("evolve: non-finite initial state");
    if (!(t >= 0.0) || !std::isfinite(t))
        throw std::invalid_argument("evolve: t must be finite and >= 0");
    if (t == 0.0) return initial;

    std::array<double, 3> y{initial.p_ee, initial.coh_re, initial.coh_im};
    auto rhs = [&prm](const std::array<double, 3>& s) { return bloch_derivative(prm, s); };
    y = ode::integrate_adaptive(rhs, y, t, 1e-8, 1e-14);
    return BlochState{y[0], y[1], y[2]};
}

double generalized_rabi(const AtomParams& prm) {
    return std::hypot(prm.omega, prm.delta);
}

double elastic_weight_steady_state(const AtomParams& prm) {
    BlochState ss = steady_state(prm);
    return ss.coh_re * ss.coh_re + ss.coh_im * ss.coh_im;
}

void SaturationModel::validate() const {
    if (!std::isfinite(p_sat) || p_sat <= 0.0)
        throw std::invalid_argument("SaturationModel: p_sat must be > 0");
    if (!std::isfinite(eta) || eta <= 0.0 || eta > 1.0)
        throw std::invalid_argument("SaturationModel: eta must be in (0, 1]");
}

double saturation_rate(const SaturationModel& m, double gamma, double p_probe) {
    m.validate();
    if (!std::isfinite(p_probe) || p_probe < 0.0)
        throw std::invalid_argument("saturation_rate: p_probe must be >= 0");
    if (p_probe == 0.0) return 0.0;
    return 0.5 * m.eta * gamma * p_probe / (p_probe + m.p_sat);
}

} // namespace mollow
