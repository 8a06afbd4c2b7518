#pragma once

// Test-side reference implementations, kept independent of the library's
// numerical paths: a fixed-step RK4 Bloch integrator with its own statement
// of the equations of motion, simple quadrature, and a closed-form linear
// least-squares solve.

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

namespace oracle {

struct Bloch {
    double p, u, v; // excited population, Re/Im of rho_ge
};

// Optical Bloch equations, rotating frame, RWA. Written out from the master
// equation independently of src/atom.cpp.
inline Bloch bloch_rhs(double gamma, double omega, double delta, const Bloch& s) {
    return Bloch{
        omega * s.v - gamma * s.p,
        delta * s.v - 0.5 * gamma * s.u,
        -delta * s.u - 0.5 * gamma * s.v - omega * s.p + 0.5 * omega,
    };
}

inline Bloch rk4_evolve(double gamma, double omega, double delta, Bloch s, double t,
                        int n_steps) {
    const double h = t / n_steps;
    auto add = [](const Bloch& a, double c, const Bloch& b) {
        return Bloch{a.p + c * b.p, a.u + c * b.u, a.v + c * b.v};
    };
    for (int i = 0; i < n_steps; ++i) {
        Bloch k1 = bloch_rhs(gamma, omega, delta, s);
        Bloch k2 = bloch_rhs(gamma, omega, delta, add(s, 0.5 * h, k1));
        Bloch k3 = bloch_rhs(gamma, omega, delta, add(s, 0.5 * h, k2));
        Bloch k4 = bloch_rhs(gamma, omega, delta, add(s, h, k3));
        s.p += h / 6.0 * (k1.p + 2 * k2.p + 2 * k3.p + k4.p);
        s.u += h / 6.0 * (k1.u + 2 * k2.u + 2 * k3.u + k4.u);
        s.v += h / 6.0 * (k1.v + 2 * k2.v + 2 * k3.v + k4.v);
    }
    return s;
}

// Composite-trapezoid quadrature of f over [a, b].
inline double trapezoid(const std::function<double(double)>& f, double a, double b, int n) {
    double acc = 0.5 * (f(a) + f(b));
    const double h = (b - a) / n;
    for (int i = 1; i < n; ++i) acc += f(a + i * h);
    return acc * h;
}

// Lorentzian area over the full line via the tangent substitution
// w = center + (fwhm/2) tan(theta): the integrand becomes smooth and
// compactly supported, so the trapezoid converges fast.
inline double lorentzian_full_area(const std::function<double(double)>& density,
                                   double center, double fwhm, int n = 20000) {
    const double half = 0.5 * fwhm;
    auto g = [&](double theta) {
        const double c = std::cos(theta);
        return density(center + half * std::tan(theta)) * half / (c * c);
    };
    const double eps = 1e-8; // stay clear of the poles of tan
    return trapezoid(g, -std::acos(-1.0) / 2 + eps, std::acos(-1.0) / 2 - eps, n);
}

// Closed-form straight-line fit (normal equations).
struct LineFit {
    double intercept, slope;
};
inline LineFit line_fit(const std::vector<double>& x, const std::vector<double>& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const auto n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double d = n * sxx - sx * sx;
    return LineFit{(sxx * sy - sx * sxy) / d, (n * sxy - sx * sy) / d};
}

// Deterministic Gaussian noise for synthetic datasets (Box-Muller over a
// splitmix64 stream; independent of the library's RNG usage).
class GaussStream {
public:
    explicit GaussStream(std::uint64_t seed) : state_(seed) {}
    double next() {
        if (have_) {
            have_ = false;
            return spare_;
        }
        double u1 = uniform(), u2 = uniform();
        while (u1 <= 1e-300) u1 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::acos(-1.0) * u2;
        spare_ = r * std::sin(a);
        have_ = true;
        return r * std::cos(a);
    }

private:
    double uniform() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        z ^= z >> 31;
        return static_cast<double>(z >> 11) * 0x1.0p-53;
    }
    std::uint64_t state_;
    bool have_ = false;
    double spare_ = 0.0;
};

} // namespace oracle
