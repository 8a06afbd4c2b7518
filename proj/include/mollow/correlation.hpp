#pragma once

#include <span>
#include <vector>

#include "mollow/atom.hpp"

// Second-order intensity correlation of the fluorescence. g2(0) = 0
// (antibunching); at strong drive the approach to 1 carries a Rabi
// oscillation whose frequency matches the triplet splitting.

namespace mollow {

// Strong-drive resonant closed form,
//   g2(tau) = 1 - e^{-(3G/4)|tau|} (cos(W tau) + (3G/4W) sin(W |tau|)).
// Valid for W >> G/4 at delta = 0; warns (stderr) below W = G/4 because the
// weak-drive panels are conventionally fitted with the same form.
// Throws std::domain_error for W = 0.
double g2_analytic(const AtomParams& p, double tau);

// g2(tau) = p_ee(tau | ground start) / p_ee(steady state), valid at any
// detuning. tau_grid must be sorted and >= 0; extend to tau < 0 by symmetry.
// Throws std::domain_error for W = 0 (no steady-state emission).
std::vector<double> g2_numeric(const AtomParams& p, std::span<const double> tau_grid);

} // namespace mollow
