#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>

// Dormand-Prince 5(4) adaptive integrator for small fixed-size systems.
// The systems here (Bloch equations, regression propagation) are 3-4
// dimensional and non-stiff, so an explicit embedded pair is plenty.

namespace mollow::ode {

inline double comp_abs(double x) { return std::abs(x); }
inline double comp_abs(const std::complex<double>& x) { return std::abs(x); }

// Integrate y' = f(y) from t = 0 to t = t_end. f has signature
// State f(const State&); State is std::array<double,N> or
// std::array<std::complex<double>,N>.
template <typename State, typename Rhs>
State integrate_adaptive(Rhs&& f, State y, double t_end,
                         double rtol = 1e-8, double atol = 1e-12) {
    if (!(t_end >= 0.0) || !std::isfinite(t_end))
        throw std::invalid_argument("integrate_adaptive: bad time span");
    if (t_end == 0.0) return y;

    constexpr std::size_t n = std::tuple_size<State>::value;
    using V = typename State::value_type;

    auto axpy = [](State& out, double a, const State& x) {
        for (std::size_t i = 0; i < n; ++i) out[i] += a * x[i];
    };

    // Dormand-Prince RK5(4)7M coefficients (autonomous form, no nodes needed).
    constexpr double a21 = 1.0 / 5;
    constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                     a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                     a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                     b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    // Error weights: b - b_hat.
    constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                     e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

    double t = 0.0;
    double h = t_end;
    State k1 = f(y);
    // Initial step heuristic: limit by the derivative scale.
    {
        double ynorm = 0.0, dnorm = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            ynorm = std::max(ynorm, comp_abs(y[i]));
            dnorm = std::max(dnorm, comp_abs(k1[i]));
        }
        if (dnorm > 0.0) h = std::min(h, 0.1 * (ynorm + atol) / dnorm + 1e-3 * t_end);
    }

    int rejected_in_a_row = 0;
    while (t < t_end) {
        h = std::min(h, t_end - t);
        if (!(h > 0.0) || t + h == t)
            throw std::runtime_error("integrate_adaptive: step size underflow (non-finite inputs?)");

        State y2 = y; axpy(y2, h * a21, k1);
        State k2 = f(y2);
        State y3 = y; axpy(y3, h * a31, k1); axpy(y3, h * a32, k2);
        State k3 = f(y3);
        State y4 = y; axpy(y4, h * a41, k1); axpy(y4, h * a42, k2); axpy(y4, h * a43, k3);
        State k4 = f(y4);
        State y5 = y; axpy(y5, h * a51, k1); axpy(y5, h * a52, k2); axpy(y5, h * a53, k3); axpy(y5, h * a54, k4);
        State k5 = f(y5);
        State y6 = y; axpy(y6, h * a61, k1); axpy(y6, h * a62, k2); axpy(y6, h * a63, k3); axpy(y6, h * a64, k4); axpy(y6, h * a65, k5);
        State k6 = f(y6);
        State ynew = y; axpy(ynew, h * b1, k1); axpy(ynew, h * b3, k3); axpy(ynew, h * b4, k4); axpy(ynew, h * b5, k5); axpy(ynew, h * b6, k6);
        State k7 = f(ynew);

        double err = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            V e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
            double scale = atol + rtol * std::max(comp_abs(y[i]), comp_abs(ynew[i]));
            err = std::max(err, comp_abs(e) / scale);
        }
        if (!std::isfinite(err))
            throw std::runtime_error("integrate_adaptive: non-finite state encountered");

        if (err <= 1.0) {
            t += h;
            y = ynew;
            k1 = k7; // FSAL
            rejected_in_a_row = 0;
            double grow = (err == 0.0) ? 5.0 : 0.9 * std::pow(err, -0.2);
            h *= std::min(5.0, std::max(0.2, grow));
        } else {
            ++rejected_in_a_row;
            if (rejected_in_a_row > 50)
                throw std::runtime_error("integrate_adaptive: repeated step rejection");
            h *= std::max(0.1, 0.9 * std::pow(err, -0.2));
        }
    }
    return y;
}

} // namespace mollow::ode
