#include "mollow/fit_models.hpp"
#include "mollow/correlation.hpp"
#include "mollow/instrument.hpp"
#include "mollow/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <stdexcept>

namespace mollow {

namespace {

constexpr double huge_bound = 1e300;

double interp_linear(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
    if (x <= xs.front()) return ys.front();
    if (x >= xs.back()) return ys.back();
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    auto i = static_cast<std::size_t>(it - xs.begin());
    const double t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
    return ys[i - 1] + t * (ys[i] - ys[i - 1]);
}

void flag_if_unidentifiable(FitResult& r, const std::string& name, double frac = 0.5) {
    const double v = r.value(name);
    const double s = r.sigma(name);
    if (!std::isfinite(s) || s >= frac * std::abs(v)) r.status = FitStatus::degenerate;
}

} // namespace

FitResult fit_spectrum(const DataSeries& data, const SpectrumFitFixed& fixed) {
    data.validate();
    if (!(fixed.gamma > 0.0) || !(fixed.cavity_fwhm > 0.0))
        throw std::invalid_argument("fit_spectrum: fixed gamma/cavity_fwhm must be > 0");
    ReflectionBackground refl{fixed.reflection_fraction};
    refl.validate();

    const double x_lo = *std::min_element(data.x.begin(), data.x.end());
    const double x_hi = *std::max_element(data.x.begin(), data.x.end());
    const double pad = std::max(8.0 * fixed.cavity_fwhm, 3.0 * fixed.gamma);
    const double step = std::min(fixed.cavity_fwhm, fixed.gamma) / 15.0;
    const auto n = static_cast<std::size_t>(std::ceil((x_hi - x_lo + 2.0 * pad) / step)) + 1;
    if (n > 100'000)
        throw std::invalid_argument("fit_spectrum: data span too wide for the model grid");
    auto grid = uniform_grid(x_lo - pad, x_hi + pad, n);

    // The convolution operator depends only on the grid and the cavity, so
    // it is built once; each model evaluation is one kernel application.
    auto conv = std::make_shared<CavityConvolution>(grid, fixed.cavity_fwhm);

    struct Cache {
        double omega = std::numeric_limits<double>::quiet_NaN();
        std::vector<double> grid;
        std::vector<double> curve;
    };
    auto cache = std::make_shared<Cache>();
    cache->grid = grid;
    const double gamma = fixed.gamma;

    ModelFunc model = [conv, cache, gamma, refl](double x, const Eigen::VectorXd& p) {
        const double omega = p(0), amp = p(1), offset = p(2);
        if (omega != cache->omega) {
            Spectrum ideal = mollow_spectrum_analytic(AtomParams{gamma, omega, 0.0}, cache->grid);
            Spectrum seen = conv->apply(add_reflection(ideal, refl));
            cache->curve = std::move(seen.density);
            cache->omega = omega;
        }
        return amp * interp_linear(cache->grid, cache->curve, x) + offset;
    };

    // Seed omega from the outer-peak position: beyond a couple of
    // linewidths the sideband dominates the center peak's wing.
    double omega0 = 2.0 * gamma;
    {
        double best = -huge_bound;
        for (std::size_t i = 0; i < data.x.size(); ++i) {
            if (std::abs(data.x[i]) >= 2.0 * gamma && data.y[i] > best) {
                best = data.y[i];
                omega0 = std::abs(data.x[i]);
            }
        }
    }
    const double y_max = *std::max_element(data.y.begin(), data.y.end());
    const double y_min = *std::min_element(data.y.begin(), data.y.end());
    double curve_max = 0.0;
    {
        Eigen::VectorXd probe(3);
        probe << omega0, 1.0, 0.0;
        for (double x : data.x) curve_max = std::max(curve_max, model(x, probe));
    }
    Eigen::VectorXd initial(3);
    initial << omega0, (curve_max > 0.0 ? std::max(y_max - y_min, 1e-12) / curve_max : 1.0),
        y_min;

    FitOptions opts;
    opts.lower = Eigen::Vector3d(0.0, 0.0, -huge_bound);
    opts.upper = Eigen::Vector3d(2.0 * (x_hi - x_lo) + 10.0 * gamma, huge_bound, huge_bound);

    FitResult res = least_squares(model, data, {"omega", "amplitude", "offset"}, initial, opts);
    if (res.status != FitStatus::degenerate) {
        // Sidebands closer than a linewidth to the center are not resolvable.
        if (res.value("omega") < gamma) res.status = FitStatus::degenerate;
        flag_if_unidentifiable(res, "omega");
    }
    return res;
}

FitResult fit_g2(const DataSeries& data, const G2FitFixed& fixed) {
    data.validate();
    if (!(fixed.gamma > 0.0) || !(fixed.pulse_length > 0.0))
        throw std::invalid_argument("fit_g2: fixed gamma/pulse_length must be > 0");
    const double gamma = fixed.gamma;
    const double pulse = fixed.pulse_length;

    ModelFunc model = [gamma, pulse](double tau, const Eigen::VectorXd& p) {
        return p(1) * g2_analytic(AtomParams{gamma, p(0), 0.0}, tau) *
               triangle_window(tau, pulse);
    };

    // First local maximum after zero delay seeds omega at pi / tau_peak;
    // a coarse chi-square scan around it (closed-form optimal amplitude)
    // guards the damped-cosine fit against local minima on noisy histograms.
    double omega0 = gamma;
    {
        std::vector<std::size_t> order(data.x.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return data.x[a] < data.x[b]; });
        std::vector<double> xs, ys;
        for (auto i : order)
            if (data.x[i] >= 0.0) {
                xs.push_back(data.x[i]);
                ys.push_back(data.y[i]);
            }
        for (std::size_t i = 2; i + 2 < ys.size(); ++i) {
            const double s_prev = (ys[i - 2] + ys[i - 1] + ys[i]) / 3.0;
            const double s_here = (ys[i - 1] + ys[i] + ys[i + 1]) / 3.0;
            const double s_next = (ys[i] + ys[i + 1] + ys[i + 2]) / 3.0;
            if (s_here > s_prev && s_here >= s_next && xs[i] > 0.0) {
                omega0 = std::numbers::pi / xs[i];
                break;
            }
        }
    }
    double amp0 = std::max(0.1, *std::max_element(data.y.begin(), data.y.end()) / 1.2);
    {
        double tau_step = 1e300;
        for (std::size_t i = 1; i < data.x.size(); ++i) {
            const double d = std::abs(data.x[i] - data.x[i - 1]);
            if (d > 0.0) tau_step = std::min(tau_step, d);
        }
        const double w_lo = std::max(0.05 * gamma, omega0 / 6.0);
        const double w_hi = std::min(std::numbers::pi / tau_step, omega0 * 6.0 + 4.0 * gamma);
        double best_chi2 = std::numeric_limits<double>::infinity();
        for (int k = 0; k <= 200; ++k) {
            const double w = w_lo * std::pow(w_hi / w_lo, k / 200.0);
            double num = 0.0, den = 0.0;
            for (std::size_t i = 0; i < data.x.size(); ++i) {
                const double mi = g2_analytic(AtomParams{gamma, w, 0.0}, data.x[i]) *
                                  triangle_window(data.x[i], pulse);
                const double wt = data.weighted() ? 1.0 / (data.y_err[i] * data.y_err[i]) : 1.0;
                num += wt * mi * data.y[i];
                den += wt * mi * mi;
            }
            const double amp = den > 0.0 ? std::max(num / den, 0.0) : 0.0;
            double chi2 = 0.0;
            for (std::size_t i = 0; i < data.x.size(); ++i) {
                const double mi = amp *
                                  g2_analytic(AtomParams{gamma, w, 0.0}, data.x[i]) *
                                  triangle_window(data.x[i], pulse);
                const double wt = data.weighted() ? 1.0 / (data.y_err[i] * data.y_err[i]) : 1.0;
                chi2 += wt * (data.y[i] - mi) * (data.y[i] - mi);
            }
            if (chi2 < best_chi2) {
                best_chi2 = chi2;
                omega0 = w;
                amp0 = std::max(amp, 1e-6);
            }
        }
    }

    Eigen::VectorXd initial(2);
    initial << omega0, amp0;
    FitOptions opts;
    opts.lower = Eigen::Vector2d(1e-4 * gamma, 0.0);
    opts.upper = Eigen::Vector2d(huge_bound, huge_bound);

    FitResult res = least_squares(model, data, {"omega", "amplitude"}, initial, opts);
    if (res.status != FitStatus::degenerate) flag_if_unidentifiable(res, "omega", 0.25);
    return res;
}

std::vector<double> spectrum_model_curve(const SpectrumFitFixed& fixed, double omega,
                                         double amplitude, double offset,
                                         std::span<const double> freq) {
    if (freq.empty()) return {};
    const double x_lo = *std::min_element(freq.begin(), freq.end());
    const double x_hi = *std::max_element(freq.begin(), freq.end());
    const double pad = std::max(8.0 * fixed.cavity_fwhm, 3.0 * fixed.gamma);
    const double step = std::min(fixed.cavity_fwhm, fixed.gamma) / 15.0;
    const auto n = static_cast<std::size_t>(std::ceil((x_hi - x_lo + 2.0 * pad) / step)) + 1;
    auto grid = uniform_grid(x_lo - pad, x_hi + pad, n);
    Spectrum ideal = mollow_spectrum_analytic(AtomParams{fixed.gamma, omega, 0.0}, grid);
    Spectrum seen = convolve_with_cavity(
        add_reflection(ideal, ReflectionBackground{fixed.reflection_fraction}),
        fixed.cavity_fwhm);
    std::vector<double> out(freq.size());
    for (std::size_t i = 0; i < freq.size(); ++i)
        out[i] = amplitude * interp_linear(grid, seen.density, freq[i]) + offset;
    return out;
}

std::vector<double> g2_model_curve(const G2FitFixed& fixed, double omega, double amplitude,
                                   std::span<const double> tau) {
    std::vector<double> out(tau.size());
    for (std::size_t i = 0; i < tau.size(); ++i)
        out[i] = amplitude * g2_analytic(AtomParams{fixed.gamma, omega, 0.0}, tau[i]) *
                 triangle_window(tau[i], fixed.pulse_length);
    return out;
}

FitResult fit_saturation(const DataSeries& data, double gamma) {
    data.validate();
    if (!(gamma > 0.0)) throw std::invalid_argument("fit_saturation: gamma must be > 0");

    ModelFunc model = [gamma](double p_probe, const Eigen::VectorXd& p) {
        return 0.5 * p(1) * gamma * p_probe / (p_probe + p(0));
    };

    const double y_max = *std::max_element(data.y.begin(), data.y.end());
    double eta0 = std::clamp(2.0 * y_max / gamma, 1e-8, 1.0);
    // Half-saturation abscissa as the p_sat seed.
    double psat0 = data.x[data.x.size() / 2];
    for (std::size_t i = 0; i < data.x.size(); ++i) {
        if (data.y[i] >= 0.5 * y_max && data.x[i] > 0.0) {
            psat0 = data.x[i];
            break;
        }
    }
    psat0 = std::max(psat0, 1e-18);

    Eigen::VectorXd initial(2);
    initial << psat0, eta0;
    FitOptions opts;
    opts.lower = Eigen::Vector2d(1e-18, 1e-10);
    opts.upper = Eigen::Vector2d(huge_bound, 1.0);

    FitResult res = least_squares(model, data, {"p_sat", "eta"}, initial, opts);
    if (res.status != FitStatus::degenerate) {
        flag_if_unidentifiable(res, "p_sat");
        flag_if_unidentifiable(res, "eta");
    }
    return res;
}

} // namespace mollow
