#include "mollow/spectrum.hpp"
#include "mollow/units.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <complex>
#include <iostream>
#include <numbers>
#include <stdexcept>

namespace mollow {

void Spectrum::validate() const {
    if (freq.size() != density.size())
        throw std::invalid_argument("Spectrum: freq/density length mismatch");
    if (freq.size() < 2)
        throw std::invalid_argument("Spectrum: need at least two grid points");
    for (std::size_t i = 0; i < freq.size(); ++i) {
        if (!std::isfinite(freq[i]) || !std::isfinite(density[i]))
            throw std::invalid_argument("Spectrum: non-finite entries");
        if (i > 0 && !(freq[i] > freq[i - 1]))
            throw std::invalid_argument("Spectrum: freq must be strictly increasing");
        if (density[i] < 0.0)
            throw std::invalid_argument("Spectrum: density must be >= 0");
    }
    if (!(elastic_weight >= 0.0))
        throw std::invalid_argument("Spectrum: elastic_weight must be >= 0");
}

double Spectrum::integrated_density() const {
    double total = 0.0;
    for (std::size_t i = 1; i < freq.size(); ++i)
        total += 0.5 * (density[i] + density[i - 1]) * (freq[i] - freq[i - 1]);
    return total;
}

double Spectrum::total_power() const { return elastic_weight + integrated_density(); }

std::vector<double> uniform_grid(double lo, double hi, std::size_t n) {
    if (!(hi > lo) || n < 2)
        throw std::invalid_argument("uniform_grid: need hi > lo and n >= 2");
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i)
        g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    return g;
}

double lorentzian_density(double area, double center, double fwhm, double w) {
    const double half = 0.5 * fwhm;
    const double d = w - center;
    return area * (fwhm / two_pi) / (d * d + half * half);
}

std::array<TripletComponent, 3> mollow_triplet_components(const AtomParams& prm) {
    prm.validate();
    const double G = prm.gamma, W = prm.omega;
    return {TripletComponent{-W, 1.5 * G, 0.25},
            TripletComponent{0.0, G, 0.5},
            TripletComponent{W, 1.5 * G, 0.25}};
}

Spectrum mollow_spectrum_analytic(const AtomParams& prm, std::vector<double> freq_grid) {
    prm.validate();
    if (prm.delta != 0.0)
        throw std::invalid_argument("mollow_spectrum_analytic: resonant form, requires delta = 0");
    if (prm.omega <= 0.25 * prm.gamma)
        std::cerr << "warning: mollow_spectrum_analytic outside its strong-drive "
                     "validity range (omega <= gamma/4)\n";

    auto comps = mollow_triplet_components(prm);
    Spectrum s;
    s.freq = std::move(freq_grid);
    s.density.resize(s.freq.size());
    for (std::size_t i = 0; i < s.freq.size(); ++i) {
        double v = 0.0;
        for (const auto& c : comps)
            v += lorentzian_density(c.area, c.center, c.fwhm, s.freq[i]);
        s.density[i] = v;
    }
    s.elastic_weight = 0.0;
    s.validate();
    return s;
}

namespace {

// Generator of the master equation acting on a general 2x2 matrix
// X = (X_gg, X_ge, X_eg, X_ee), used to propagate the regression
// initial condition rho_ss sigma+.
Eigen::Matrix4cd master_equation_generator(const AtomParams& prm) {
    using namespace std::complex_literals;
    const double G = prm.gamma, W = prm.omega, D = prm.delta;
    Eigen::Matrix4cd L = Eigen::Matrix4cd::Zero();
    const std::complex<double> ihw = -0.5i * W;
    // X_gg' = -i(W/2)(X_eg - X_ge) + G X_ee
    L(0, 2) += ihw; L(0, 1) -= ihw; L(0, 3) += G;
    // X_ge' = -i(W/2)(X_ee - X_gg) - iD X_ge - (G/2) X_ge
    L(1, 3) += ihw; L(1, 0) -= ihw; L(1, 1) += -1.0i * D - 0.5 * G;
    // X_eg' = -i(W/2)(X_gg - X_ee) + iD X_eg - (G/2) X_eg
    L(2, 0) += ihw; L(2, 3) -= ihw; L(2, 2) += 1.0i * D - 0.5 * G;
    // X_ee' = -i(W/2)(X_ge - X_eg) - G X_ee
    L(3, 1) += ihw; L(3, 2) -= ihw; L(3, 3) -= G;
    return L;
}

} // namespace

Spectrum spectrum_numeric(const AtomParams& prm, std::vector<double> freq_grid) {
    prm.validate();
    if (freq_grid.size() < 2)
        throw std::invalid_argument("spectrum_numeric: need at least two grid points");
    const double G = prm.gamma;

    {
        double max_step = 0.0;
        for (std::size_t i = 1; i < freq_grid.size(); ++i)
            max_step = std::max(max_step, freq_grid[i] - freq_grid[i - 1]);
        if (max_step > 0.25 * G)
            std::cerr << "warning: spectrum_numeric frequency grid too coarse to "
                         "resolve the gamma/2 linewidth\n";
    }

    const BlochState ss = steady_state(prm);
    const double u = ss.coh_re, v = ss.coh_im;
    const double elastic = u * u + v * v; // |<sigma->_ss|^2

    // Correlation window and step. 30/gamma puts the slowest decaying
    // component (gamma/2) below 1e-6 at the window edge; the step resolves
    // both the dipole oscillation at the generalized Rabi frequency and the
    // fastest requested DFT phase.
    const double w_abs_max = std::max(std::abs(freq_grid.front()), std::abs(freq_grid.back()));
    const double kappa = w_abs_max + generalized_rabi(prm) + 2.0 * G;
    const double t_window = 30.0 / G;
    double dt = 0.15 / kappa;
    std::size_t n_steps = static_cast<std::size_t>(std::ceil(t_window / dt));
    if (n_steps > 2'000'000)
        throw std::invalid_argument("spectrum_numeric: frequency grid span too wide");
    dt = t_window / static_cast<double>(n_steps);

    // Regression initial condition Lambda(0) = rho_ss sigma+ and exact
    // fixed-step propagation by the exponential of the 4x4 generator.
    const Eigen::Matrix4cd stepper = (master_equation_generator(prm) * dt).exp();
    Eigen::Vector4cd lam;
    lam << std::complex<double>(u, v), 0.0, std::complex<double>(ss.p_ee, 0.0), 0.0;

    std::vector<std::complex<double>> corr(n_steps + 1);
    for (std::size_t j = 0; j <= n_steps; ++j) {
        corr[j] = lam(2) - elastic; // <sigma+(0) sigma-(tau)> minus coherent part
        if (j < n_steps) lam = stepper * lam;
    }

    // cos^2 taper over the last 30% of the window kills truncation ringing.
    const double taper_start = 0.7 * t_window;
    for (std::size_t j = 0; j <= n_steps; ++j) {
        double tau = static_cast<double>(j) * dt;
        if (tau > taper_start) {
            double x = (tau - taper_start) / (t_window - taper_start);
            double c = std::cos(0.5 * std::numbers::pi * x);
            corr[j] *= c * c;
        }
    }
    corr[0] *= 0.5; // trapezoid end weights
    corr[n_steps] *= 0.5;

    // S(w) = (1/pi) Re int_0^inf C(tau) e^{-i w tau} dtau.
    Spectrum s;
    s.freq = std::move(freq_grid);
    s.density.resize(s.freq.size());
    for (std::size_t k = 0; k < s.freq.size(); ++k) {
        const std::complex<double> rot = std::polar(1.0, -s.freq[k] * dt);
        std::complex<double> phase = 1.0;
        std::complex<double> acc = 0.0;
        for (std::size_t j = 0; j <= n_steps; ++j) {
            acc += corr[j] * phase;
            phase *= rot;
        }
        s.density[k] = std::max(0.0, acc.real() * dt / std::numbers::pi);
    }
    s.elastic_weight = elastic;
    s.validate();
    return s;
}

} // namespace mollow
