#pragma once

#include <Eigen/Dense>

#include <array>
#include <span>
#include <vector>

#include "mollow/atom.hpp"
#include "mollow/fit.hpp"
#include "mollow/units.hpp"

// Frequency-filtered photon correlations by the weak-sensor method: each
// filter is a two-level absorber at the filter center whose decay rate is
// the filter linewidth, weakly coupled to the atomic dipole. Correlations
// of the sensor populations reproduce the filtered photon correlations
// without any back-action in the operating regime (epsilon << linewidth).

namespace mollow {

struct SensorConfig {
    // Offsets of the two filter centers from the drive (rad/s); index 0 is
    // the lower-energy sideband, index 1 the higher-energy one.
    std::array<double, 2> filter_centers{};
    double filter_fwhm = mhz_to_angular(20.0);
    // Weak-sensor regime: epsilon << filter_fwhm. Zero is the decoupled
    // limit (well-defined generator, but no sensor signal to correlate).
    double coupling_epsilon = filter_fwhm / 200.0;

    void validate() const;
};

// Centers at -+ the generalized Rabi frequency, where the sidebands sit.
SensorConfig sideband_sensors(const AtomParams& p, double filter_fwhm = mhz_to_angular(20.0));

// Atom (x) sensor1 (x) sensor2 open system, Hilbert dimension 8,
// Liouvillian 64x64 in column-stacked form.
class CompositeSystem {
public:
    CompositeSystem(const AtomParams& p, const SensorConfig& cfg);

    const Eigen::MatrixXcd& liouvillian() const { return liouvillian_; }
    // Steady state: Hermitian, unit trace (null-space of the Liouvillian).
    const Eigen::MatrixXcd& steady_state() const { return steady_state_; }
    double sensor_population(int sensor) const; // <n_i> in the steady state

    const Eigen::MatrixXcd& sensor_lowering(int sensor) const;
    const Eigen::MatrixXcd& sensor_number(int sensor) const;

private:
    Eigen::MatrixXcd liouvillian_;   // 64x64
    Eigen::MatrixXcd steady_state_;  // 8x8
    std::array<Eigen::MatrixXcd, 2> lowering_;
    std::array<Eigen::MatrixXcd, 2> number_;
};

CompositeSystem build_composite(const AtomParams& p, const SensorConfig& cfg);

struct CrossCorrelation {
    std::vector<double> tau; // signed delays (s); tau > 0: higher-energy
                             // sideband photon after lower-energy one
    std::vector<double> g;   // normalized, -> 1 at large |tau|
};

// g(tau) = <n_lo(0) n_hi(tau)> / (<n_lo><n_hi>) for tau > 0, roles swapped
// for tau < 0, via the quantum regression theorem (collapse on one sensor,
// propagate by the matrix exponential, read the other's population).
CrossCorrelation filtered_cross_correlation(const CompositeSystem& sys,
                                            std::span<const double> tau_grid);

// Autocorrelation of one filtered line: both sensors are parked at the same
// center, so the pair of two-level absorbers emulates the beam-split photon
// pair detection behind g2 of a single filter. Symmetric in tau.
CrossCorrelation filtered_autocorrelation(const AtomParams& p, double filter_center,
                                          double filter_fwhm,
                                          std::span<const double> tau_grid);

// Piecewise two-exponential fit around the bunching peak:
//   baseline + A e^{+(tau - tau_peak)/tau_rise}   (tau <  tau_peak)
//   baseline + A e^{-(tau - tau_peak)/tau_fall}   (tau >= tau_peak)
// Parameters: tau_rise, tau_fall, amplitude, baseline. The peak position is
// the grid argmax. Throws std::invalid_argument when there is no peak above
// the baseline.
FitResult fit_two_exponentials(const CrossCorrelation& corr);

} // namespace mollow
