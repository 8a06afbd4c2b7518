#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "mollow/atom.hpp"

namespace mollow {

// Emission spectrum on a grid of frequency offsets from the drive.
// `density` is the inelastic spectral density; the coherently scattered
// delta-like line at offset 0 is carried separately in `elastic_weight`
// until an instrument stage gives it a width.
struct Spectrum {
    std::vector<double> freq;    // rad/s, strictly increasing
    std::vector<double> density; // >= 0, per (rad/s)
    double elastic_weight = 0.0; // >= 0, same units as integrated density

    void validate() const;        // throws std::invalid_argument
    double integrated_density() const; // trapezoid over the grid
    double total_power() const;        // elastic_weight + integrated_density
};

std::vector<double> uniform_grid(double lo, double hi, std::size_t n);

// Area-normalized Lorentzian, area * (fwhm/2pi) / ((w-center)^2 + (fwhm/2)^2).
double lorentzian_density(double area, double center, double fwhm, double w);

struct TripletComponent {
    double center; // rad/s offset from the drive
    double fwhm;   // rad/s
    double area;   // fraction of total inelastic power
};

// The three Lorentzians of the strong-drive resonant triplet: center of
// width gamma and area 1/2 at offset 0, sidebands of width 3 gamma/2 and
// area 1/4 at +-omega (peak heights 1:3:1, areas 1:2:1).
std::array<TripletComponent, 3> mollow_triplet_components(const AtomParams& p);

// Strong-drive resonant spectrum, unit total power, no elastic term.
// Requires delta = 0; warns (stderr) when omega <= gamma/4.
Spectrum mollow_spectrum_analytic(const AtomParams& p, std::vector<double> freq_grid);

// Spectrum at any drive via the quantum regression theorem: propagate the
// dipole correlation <sigma+(0) sigma-(tau)> from its regression initial
// condition, split off the non-decaying coherent part as elastic_weight,
// and Fourier-transform the decaying remainder (correlation window 30/gamma,
// cos^2 tail taper). Total power (elastic + integrated density) equals the
// steady-state excited population. Warns on grids too coarse to resolve
// the gamma-wide central feature.
Spectrum spectrum_numeric(const AtomParams& p, std::vector<double> freq_grid);

} // namespace mollow
