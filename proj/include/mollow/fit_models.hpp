#pragma once

#include "mollow/atom.hpp"
#include "mollow/fit.hpp"
#include "mollow/units.hpp"

#include <span>

// Fits of the physics models to data. Conventions follow the measurement
// practice: the natural linewidth is fixed to its known value, never
// floated; amplitudes are free; abscissae are rad/s (spectra, offsets from
// the drive), seconds (correlations) or watts (saturation).

namespace mollow {

struct SpectrumFitFixed {
    double gamma = mhz_to_angular(rb87_d2_linewidth_mhz);
    double cavity_fwhm = mhz_to_angular(3.92);
    double reflection_fraction = 0.076;
};

// Triplet spectrum pushed through the instrument chain (reflection, then
// cavity convolution). Free parameters: omega (rad/s), amplitude, offset.
// Flags `degenerate` when the fitted triplet is unresolvable (omega < gamma).
FitResult fit_spectrum(const DataSeries& data, const SpectrumFitFixed& fixed = {});

struct G2FitFixed {
    double gamma = mhz_to_angular(rb87_d2_linewidth_mhz);
    double pulse_length = 2e-6;
};

// amplitude * g2_analytic(omega; gamma) * triangle(tau; pulse). Free
// parameters: omega (rad/s), amplitude. Flags `degenerate` when omega is
// not identifiable (no resolved oscillation).
FitResult fit_g2(const DataSeries& data, const G2FitFixed& fixed = {});

// (eta gamma / 2) P / (P + P_sat); free parameters p_sat (W) and eta.
FitResult fit_saturation(const DataSeries& data, double gamma);

// Fitted-model curves for plot output.
std::vector<double> spectrum_model_curve(const SpectrumFitFixed& fixed, double omega,
                                         double amplitude, double offset,
                                         std::span<const double> freq);
std::vector<double> g2_model_curve(const G2FitFixed& fixed, double omega, double amplitude,
                                   std::span<const double> tau);

} // namespace mollow
