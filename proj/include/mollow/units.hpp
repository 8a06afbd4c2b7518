#pragma once

// All frequencies inside the library are angular (rad/s). File formats and
// CLI flags speak MHz (ordinary frequency); conversion happens only here.

namespace mollow {

inline constexpr double two_pi = 6.283185307179586476925286766559;

constexpr double mhz_to_angular(double mhz) { return two_pi * mhz * 1e6; }
constexpr double angular_to_mhz(double w) { return w / (two_pi * 1e6); }

constexpr double ns_to_s(double ns) { return ns * 1e-9; }
constexpr double s_to_ns(double s) { return s * 1e9; }

} // namespace mollow
