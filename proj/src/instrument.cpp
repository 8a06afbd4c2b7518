#include "mollow/instrument.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mollow {

void CavityFilter::validate() const {
    if (!std::isfinite(center))
        throw std::invalid_argument("CavityFilter: center must be finite");
    if (!std::isfinite(fwhm) || fwhm <= 0.0)
        throw std::invalid_argument("CavityFilter: fwhm must be > 0");
}

void ReflectionBackground::validate() const {
    if (!std::isfinite(fraction) || fraction < 0.0 || fraction >= 1.0)
        throw std::invalid_argument("ReflectionBackground: fraction must be in [0, 1)");
}

double cavity_transfer(const CavityFilter& f, double omega) {
    f.validate();
    const double x = 2.0 * (omega - f.center) / f.fwhm;
    return 1.0 / (1.0 + x * x);
}

namespace {

std::vector<double> trapezoid_weights(const std::vector<double>& f) {
    std::vector<double> w(f.size(), 0.0);
    for (std::size_t i = 1; i < f.size(); ++i) {
        const double h = 0.5 * (f[i] - f[i - 1]);
        w[i - 1] += h;
        w[i] += h;
    }
    return w;
}

bool is_uniform(const std::vector<double>& f) {
    const double step = (f.back() - f.front()) / static_cast<double>(f.size() - 1);
    for (std::size_t i = 1; i < f.size(); ++i)
        if (std::abs((f[i] - f[i - 1]) - step) > 1e-9 * step) return false;
    return true;
}

} // namespace

CavityConvolution::CavityConvolution(std::vector<double> freq_grid, double filter_fwhm)
    : freq_(std::move(freq_grid)), fwhm_(filter_fwhm) {
    if (!std::isfinite(fwhm_) || fwhm_ <= 0.0)
        throw std::invalid_argument("convolve_with_cavity: filter_fwhm must be > 0");
    if (freq_.size() < 4)
        throw std::invalid_argument("convolve_with_cavity: grid too small");
    double max_step = 0.0;
    for (std::size_t i = 1; i < freq_.size(); ++i) {
        if (!(freq_[i] > freq_[i - 1]))
            throw std::invalid_argument("convolve_with_cavity: grid not increasing");
        max_step = std::max(max_step, freq_[i] - freq_[i - 1]);
    }
    if (max_step > 0.1 * fwhm_)
        throw std::invalid_argument(
            "convolve_with_cavity: grid resolution coarser than filter_fwhm/10");

    weights_ = trapezoid_weights(freq_);
    uniform_ = is_uniform(freq_);
    const std::size_t n = freq_.size();
    if (uniform_) {
        const double step = (freq_.back() - freq_.front()) / static_cast<double>(n - 1);
        kernel_.resize(n);
        for (std::size_t d = 0; d < n; ++d)
            kernel_[d] = lorentzian_density(1.0, 0.0, fwhm_, static_cast<double>(d) * step);
    }
    // Per-source renormalization: the kernel mass that falls on the grid.
    col_norm_.assign(n + 1, 0.0); // last entry: source at offset 0 (elastic)
    for (std::size_t j = 0; j < n; ++j) {
        double acc = 0.0;
        if (uniform_) {
            for (std::size_t i = 0; i < n; ++i)
                acc += kernel_[i > j ? i - j : j - i] * weights_[i];
        } else {
            for (std::size_t i = 0; i < n; ++i)
                acc += lorentzian_density(1.0, freq_[j], fwhm_, freq_[i]) * weights_[i];
        }
        col_norm_[j] = acc;
    }
    {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            acc += lorentzian_density(1.0, 0.0, fwhm_, freq_[i]) * weights_[i];
        col_norm_[n] = acc;
    }
}

Spectrum CavityConvolution::apply(const Spectrum& s) const {
    s.validate();
    if (s.freq.size() != freq_.size() || s.freq.front() != freq_.front() ||
        s.freq.back() != freq_.back())
        throw std::invalid_argument("CavityConvolution: spectrum grid mismatch");

    const std::size_t n = freq_.size();
    std::vector<double> src(n);
    for (std::size_t j = 0; j < n; ++j)
        src[j] = s.density[j] * weights_[j] / col_norm_[j];

    Spectrum out;
    out.freq = freq_;
    out.density.assign(n, 0.0);
    if (uniform_) {
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j)
                acc += kernel_[i > j ? i - j : j - i] * src[j];
            out.density[i] = acc;
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j)
                acc += lorentzian_density(1.0, freq_[j], fwhm_, freq_[i]) * src[j];
            out.density[i] = acc;
        }
    }
    if (s.elastic_weight > 0.0) {
        const double amp = s.elastic_weight / col_norm_[n];
        for (std::size_t i = 0; i < n; ++i)
            out.density[i] += amp * lorentzian_density(1.0, 0.0, fwhm_, freq_[i]);
    }
    out.elastic_weight = 0.0;
    return out;
}

Spectrum convolve_with_cavity(const Spectrum& s, double filter_fwhm) {
    s.validate();
    return CavityConvolution(s.freq, filter_fwhm).apply(s);
}

Spectrum add_reflection(const Spectrum& s, const ReflectionBackground& bg) {
    s.validate();
    bg.validate();
    if (bg.fraction == 0.0) return s;
    const double total = s.total_power();
    Spectrum out = s;
    for (auto& d : out.density) d *= 1.0 - bg.fraction;
    out.elastic_weight = (1.0 - bg.fraction) * s.elastic_weight + bg.fraction * total;
    return out;
}

namespace {

struct Peak {
    std::size_t index;
    double freq;
    double height; // raw density at the refined index
};

std::vector<Peak> find_local_maxima(const Spectrum& s) {
    const std::size_t n = s.freq.size();
    std::vector<double> sm(n);
    sm[0] = s.density[0];
    sm[n - 1] = s.density[n - 1];
    for (std::size_t i = 1; i + 1 < n; ++i)
        sm[i] = (s.density[i - 1] + s.density[i] + s.density[i + 1]) / 3.0;

    std::vector<Peak> peaks;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (sm[i] > sm[i - 1] && sm[i] >= sm[i + 1]) {
            // Refine to the raw maximum among the smoothed peak's neighbors.
            std::size_t best = i;
            for (std::size_t k = i - 1; k <= i + 1; ++k)
                if (s.density[k] > s.density[best]) best = k;
            peaks.push_back(Peak{best, s.freq[best], s.density[best]});
        }
    }
    return peaks;
}

} // namespace

PeakRatios peak_ratios(const Spectrum& s) {
    s.validate();
    auto peaks = find_local_maxima(s);
    if (peaks.size() < 3)
        throw PeakFindingError("peak_ratios: found " + std::to_string(peaks.size()) +
                                   " local maxima, need 3",
                               static_cast<int>(peaks.size()));

    // Three tallest, ties broken toward smaller |freq|.
    std::stable_sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) {
        if (a.height != b.height) return a.height > b.height;
        return std::abs(a.freq) < std::abs(b.freq);
    });
    peaks.resize(3);
    std::sort(peaks.begin(), peaks.end(),
              [](const Peak& a, const Peak& b) { return a.freq < b.freq; });

    const double ref = std::min(peaks[0].height, peaks[2].height);
    if (ref <= 0.0)
        throw PeakFindingError("peak_ratios: zero-height sideband", 3);
    return PeakRatios{peaks[0].height / ref, peaks[1].height / ref, peaks[2].height / ref};
}

double measure_fwhm(const Spectrum& s, double peak_freq) {
    s.validate();
    auto peaks = find_local_maxima(s);
    if (peaks.empty())
        throw PeakFindingError("measure_fwhm: no local maximum", 0);
    const Peak* nearest = &peaks[0];
    for (const auto& p : peaks)
        if (std::abs(p.freq - peak_freq) < std::abs(nearest->freq - peak_freq)) nearest = &p;

    const double half = 0.5 * nearest->height;
    const std::size_t pk = nearest->index;

    auto cross = [&](bool leftward) -> double {
        std::size_t i = pk;
        while (true) {
            std::size_t next = leftward ? i - 1 : i + 1;
            if ((leftward && i == 0) || (!leftward && next >= s.freq.size()))
                throw std::runtime_error("measure_fwhm: half-maximum crossing outside grid");
            if (s.density[next] <= half) {
                // Linear interpolation between grid points i and next.
                const double d1 = s.density[i], d2 = s.density[next];
                const double f1 = s.freq[i], f2 = s.freq[next];
                return f1 + (half - d1) * (f2 - f1) / (d2 - d1);
            }
            i = next;
        }
    };
    const double left = cross(true);
    const double right = cross(false);
    return right - left;
}

double deconvolve_fwhm(double measured_fwhm, double cavity_fwhm) {
    if (!std::isfinite(measured_fwhm) || !std::isfinite(cavity_fwhm) || cavity_fwhm <= 0.0)
        throw std::invalid_argument("deconvolve_fwhm: widths must be finite, cavity > 0");
    if (measured_fwhm <= cavity_fwhm)
        throw std::domain_error(
            "deconvolve_fwhm: measured width <= cavity width is non-physical");
    return measured_fwhm - cavity_fwhm;
}

double triangle_window(double tau, double pulse_length) {
    if (!std::isfinite(pulse_length) || pulse_length <= 0.0)
        throw std::invalid_argument("triangle_window: pulse length must be > 0");
    return std::max(0.0, 1.0 - std::abs(tau) / pulse_length);
}

} // namespace mollow
