#pragma once

#include <stdexcept>

#include "mollow/spectrum.hpp"

// Measurement-chain model: Fabry-Perot filter transmission, spectrum
// convolution with the filter line, monochromatic laser-reflection
// background, Lorentzian width deconvolution, and the triangle window of
// the finite excitation pulse.

namespace mollow {

struct CavityFilter {
    double center; // resonance offset from the drive (rad/s)
    double fwhm;   // transfer-function FWHM (rad/s), > 0

    void validate() const;
};

struct ReflectionBackground {
    double fraction; // laser-reflection share of total detected power, [0, 1)

    void validate() const;
};

// Lorentzian transmission, unity on resonance:
// 1 / (1 + (2 (w - center) / fwhm)^2).
double cavity_transfer(const CavityFilter& f, double omega);

struct PeakFindingError : std::runtime_error {
    PeakFindingError(const std::string& msg, int found)
        : std::runtime_error(msg), peaks_found(found) {}
    int peaks_found;
};

// Precomputed convolution with a unit-area Lorentzian kernel on a fixed
// grid. Kernel columns are renormalized on the grid, so integrated power is
// conserved exactly. Reusable across many spectra with the same grid (the
// spectrum fit applies it once per model evaluation).
class CavityConvolution {
public:
    CavityConvolution(std::vector<double> freq_grid, double filter_fwhm);
    Spectrum apply(const Spectrum& s) const;

private:
    std::vector<double> freq_;
    std::vector<double> weights_; // trapezoid quadrature weights
    std::vector<double> kernel_;  // uniform-grid fast path: kernel by offset
    std::vector<double> col_norm_;
    double fwhm_;
    bool uniform_;
};

// density convolved with the unit-area Lorentzian of width filter_fwhm;
// elastic_weight becomes a Lorentzian of that width at offset 0 and is
// folded into density (output elastic_weight = 0). The grid step must be
// finer than filter_fwhm / 10.
Spectrum convolve_with_cavity(const Spectrum& s, double filter_fwhm);

// Mix a monochromatic probe-reflection line into the elastic component so
// it carries `fraction` of the total output power; the atomic part is
// rescaled by (1 - fraction). Applies before cavity filtering.
Spectrum add_reflection(const Spectrum& s, const ReflectionBackground& bg);

struct PeakRatios {
    double left, center, right; // heights normalized to the smaller sideband
};

// Heights of the three tallest local maxima (after 3-point smoothing),
// normalized to the smaller sideband. Throws PeakFindingError if fewer
// than three peaks are resolvable.
PeakRatios peak_ratios(const Spectrum& s);

// FWHM of the local maximum nearest `peak_freq`, by linear interpolation
// of the half-maximum crossings on either side.
double measure_fwhm(const Spectrum& s, double peak_freq);

// Lorentzian widths add under convolution, so the intrinsic width is the
// measured width minus the cavity width. Throws for measured <= cavity.
double deconvolve_fwhm(double measured_fwhm, double cavity_fwhm);

// max(0, 1 - |tau|/T): overlap of two square pulses of length T.
double triangle_window(double tau, double pulse_length);

} // namespace mollow
