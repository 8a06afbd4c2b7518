#pragma once

#include <array>

// Driven two-level atom in the frame rotating at the drive frequency,
// rotating-wave approximation. Decay at rate gamma acts on the population
// and gamma/2 on the coherence. All rates are angular (rad/s).

namespace mollow {

// 2pi x 6.07 MHz, the natural linewidth of the Rb-87 D2 transition, as the
// conventional default drive-independent scale.
inline constexpr double rb87_d2_linewidth_mhz = 6.07;

struct AtomParams {
    double gamma; // natural linewidth (rad/s), > 0
    double omega; // Rabi frequency (rad/s), >= 0
    double delta; // drive detuning from atomic resonance (rad/s), < 0 = red

    void validate() const; // throws std::invalid_argument
};

// Density matrix of the atom as three real components: the excited-state
// population and the ground-excited coherence rho_ge = coh_re + i coh_im.
struct BlochState {
    double p_ee = 0.0;
    double coh_re = 0.0;
    double coh_im = 0.0;

    // Positivity of the 2x2 density matrix: |rho_ge|^2 <= p_ee (1 - p_ee).
    bool physical(double tol = 1e-9) const;
};

BlochState ground_state();
BlochState excited_state();

// Time derivative of the Bloch vector under the optical Bloch equations.
std::array<double, 3> bloch_derivative(const AtomParams& p, const std::array<double, 3>& y);

// Unique stationary solution; p_ee = (W^2/4) / (D^2 + G^2/4 + W^2/2).
BlochState steady_state(const AtomParams& p);

// Propagate `initial` for a duration t >= 0 (adaptive Dormand-Prince,
// rtol 1e-8). Preserves the density-matrix invariants to integrator accuracy.
BlochState evolve(const AtomParams& p, const BlochState& initial, double t);

// sqrt(omega^2 + delta^2): the triplet splitting under detuned drive.
double generalized_rabi(const AtomParams& p);

// Expectation of the lowering operator in the steady state, |<sigma->|^2.
// This is the weight of the coherently scattered (elastic) line.
double elastic_weight_steady_state(const AtomParams& p);

struct SaturationModel {
    double p_sat; // saturation power (W), > 0
    double eta;   // total detection efficiency, 0 < eta <= 1

    void validate() const;
};

// Detected count rate (eta gamma / 2) P / (P + P_sat).
double saturation_rate(const SaturationModel& m, double gamma, double p_probe);

} // namespace mollow
