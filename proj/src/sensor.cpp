#include "mollow/sensor.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mollow {

void SensorConfig::validate() const {
    if (!std::isfinite(filter_fwhm) || filter_fwhm <= 0.0)
        throw std::invalid_argument("SensorConfig: filter_fwhm must be > 0");
    if (!std::isfinite(filter_centers[0]) || !std::isfinite(filter_centers[1]))
        throw std::invalid_argument("SensorConfig: filter centers must be finite");
    if (coupling_epsilon < 0.0 || !std::isfinite(coupling_epsilon))
        throw std::invalid_argument("SensorConfig: coupling_epsilon must be >= 0");
    if (coupling_epsilon > filter_fwhm / 100.0)
        throw std::invalid_argument(
            "SensorConfig: coupling_epsilon must be <= filter_fwhm/100 (weak sensor)");
}

SensorConfig sideband_sensors(const AtomParams& p, double filter_fwhm) {
    const double wg = generalized_rabi(p);
    SensorConfig cfg;
    cfg.filter_centers = {-wg, wg};
    cfg.filter_fwhm = filter_fwhm;
    cfg.coupling_epsilon = filter_fwhm / 200.0;
    return cfg;
}

namespace {

using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

Mat kron(const Mat& a, const Mat& b) {
    Mat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

Mat kron3(const Mat& a, const Mat& b, const Mat& c) { return kron(kron(a, b), c); }

// vec(A rho B) = (B^T kron A) vec(rho), column stacking.
Mat left_mul(const Mat& a) {
    return kron(Mat::Identity(a.rows(), a.cols()), a);
}
Mat right_mul(const Mat& b) {
    return kron(b.transpose(), Mat::Identity(b.rows(), b.cols()));
}
Mat sandwich(const Mat& c) { return kron(c.conjugate(), c); }

Mat dissipator(const Mat& c) {
    const Mat cdc = c.adjoint() * c;
    return sandwich(c) - 0.5 * (left_mul(cdc) + right_mul(cdc));
}

} // namespace

CompositeSystem::CompositeSystem(const AtomParams& prm, const SensorConfig& cfg) {
    prm.validate();
    cfg.validate();
    const double eps = cfg.coupling_epsilon;
    const double kappa = cfg.filter_fwhm;

    Mat id2 = Mat::Identity(2, 2);
    Mat sm(2, 2), num(2, 2);
    sm << 0, 1, 0, 0;  // |g><e| in the (g, e) basis
    num << 0, 0, 0, 1; // |e><e|

    const Mat a_low = kron3(sm, id2, id2);
    lowering_[0] = kron3(id2, sm, id2);
    lowering_[1] = kron3(id2, id2, sm);
    const Mat a_num = kron3(num, id2, id2);
    number_[0] = kron3(id2, num, id2);
    number_[1] = kron3(id2, id2, num);

    // Every two-level system carries its resonance offset from the drive as
    // the coefficient of its number operator in the rotating frame.
    Mat h = -prm.delta * a_num + 0.5 * prm.omega * (a_low + a_low.adjoint()) +
            cfg.filter_centers[0] * number_[0] + cfg.filter_centers[1] * number_[1];
    for (int s = 0; s < 2; ++s)
        h += eps * (a_low.adjoint() * lowering_[s] + lowering_[s].adjoint() * a_low);

    const std::complex<double> im(0.0, 1.0);
    liouvillian_ = -im * (left_mul(h) - right_mul(h));
    liouvillian_ += prm.gamma * dissipator(a_low);
    liouvillian_ += kappa * dissipator(lowering_[0]);
    liouvillian_ += kappa * dissipator(lowering_[1]);

    // Steady state: L rho = 0 with unit trace, solved as a bordered least
    // squares problem (the 65th equation is the trace).
    const Eigen::Index d = 8, d2 = 64;
    Mat a(d2 + 1, d2);
    a.topRows(d2) = liouvillian_;
    a.row(d2).setZero();
    for (Eigen::Index i = 0; i < d; ++i) a(d2, i * d + i) = 1.0;
    Vec b = Vec::Zero(d2 + 1);
    b(d2) = 1.0;
    Vec rho_vec = a.colPivHouseholderQr().solve(b);

    steady_state_ = Eigen::Map<Mat>(rho_vec.data(), d, d);
    steady_state_ = 0.5 * (steady_state_ + steady_state_.adjoint()).eval();
    steady_state_ /= steady_state_.trace().real();
}

double CompositeSystem::sensor_population(int sensor) const {
    return (number_[static_cast<std::size_t>(sensor)] * steady_state_).trace().real();
}

const Mat& CompositeSystem::sensor_lowering(int sensor) const {
    return lowering_[static_cast<std::size_t>(sensor)];
}
const Mat& CompositeSystem::sensor_number(int sensor) const {
    return number_[static_cast<std::size_t>(sensor)];
}

CompositeSystem build_composite(const AtomParams& p, const SensorConfig& cfg) {
    return CompositeSystem(p, cfg);
}

namespace {

// Propagate vec(M_first rho_ss M_first^dag) over sorted non-negative delays
// and read Tr[N_second rho(tau)]. Matrix exponentials are cached per step.
std::vector<double> regression_curve(const CompositeSystem& sys, int first, int second,
                                     const std::vector<double>& taus) {
    const Mat& lower = sys.sensor_lowering(first);
    const Mat& read = sys.sensor_number(second);
    Mat seeded = lower * sys.steady_state() * lower.adjoint();
    Vec v = Eigen::Map<Vec>(seeded.data(), 64);

    std::vector<double> out(taus.size());
    double t_prev = 0.0;
    double cached_step = -1.0;
    Mat stepper;
    for (std::size_t i = 0; i < taus.size(); ++i) {
        const double dt = taus[i] - t_prev;
        if (dt > 0.0) {
            if (std::abs(dt - cached_step) > 1e-12 * dt) {
                stepper = (sys.liouvillian() * dt).exp();
                cached_step = dt;
            }
            v = stepper * v;
            t_prev = taus[i];
        }
        Eigen::Map<const Mat> rho(v.data(), 8, 8);
        out[i] = (read * rho).trace().real();
    }
    return out;
}

} // namespace

CrossCorrelation filtered_cross_correlation(const CompositeSystem& sys,
                                            std::span<const double> tau_grid) {
    for (std::size_t i = 1; i < tau_grid.size(); ++i)
        if (!(tau_grid[i] >= tau_grid[i - 1]))
            throw std::invalid_argument("filtered_cross_correlation: tau grid must be sorted");

    const double n_lo = sys.sensor_population(0);
    const double n_hi = sys.sensor_population(1);
    if (!(n_lo > 0.0) || !(n_hi > 0.0))
        throw std::domain_error(
            "filtered_cross_correlation: zero sensor population in the steady state");
    const double denom = n_lo * n_hi;

    std::vector<double> pos, neg; // |tau| ascending
    for (double t : tau_grid) (t >= 0.0 ? pos : neg).push_back(t);
    std::reverse(neg.begin(), neg.end());
    for (auto& t : neg) t = -t;

    // tau > 0: lower-sideband click first, read the higher sideband.
    std::vector<double> g_pos = regression_curve(sys, 0, 1, pos);
    std::vector<double> g_neg = regression_curve(sys, 1, 0, neg);

    CrossCorrelation out;
    out.tau.assign(tau_grid.begin(), tau_grid.end());
    out.g.resize(tau_grid.size());
    std::size_t n_neg = neg.size();
    for (std::size_t i = 0; i < n_neg; ++i) out.g[n_neg - 1 - i] = g_neg[i] / denom;
    for (std::size_t i = 0; i < pos.size(); ++i) out.g[n_neg + i] = g_pos[i] / denom;
    return out;
}

CrossCorrelation filtered_autocorrelation(const AtomParams& p, double filter_center,
                                          double filter_fwhm,
                                          std::span<const double> tau_grid) {
    for (std::size_t i = 1; i < tau_grid.size(); ++i)
        if (!(tau_grid[i] >= tau_grid[i - 1]))
            throw std::invalid_argument("filtered_autocorrelation: tau grid must be sorted");
    SensorConfig cfg;
    cfg.filter_centers = {filter_center, filter_center};
    cfg.filter_fwhm = filter_fwhm;
    cfg.coupling_epsilon = filter_fwhm / 200.0;
    CompositeSystem sys(p, cfg);
    const double n0 = sys.sensor_population(0);
    const double n1 = sys.sensor_population(1);
    if (!(n0 > 0.0) || !(n1 > 0.0))
        throw std::domain_error("filtered_autocorrelation: zero sensor population");

    std::vector<double> abs_sorted(tau_grid.size());
    for (std::size_t i = 0; i < tau_grid.size(); ++i) abs_sorted[i] = std::abs(tau_grid[i]);
    std::sort(abs_sorted.begin(), abs_sorted.end());
    std::vector<double> curve = regression_curve(sys, 0, 1, abs_sorted);

    CrossCorrelation out;
    out.tau.assign(tau_grid.begin(), tau_grid.end());
    out.g.resize(tau_grid.size());
    for (std::size_t i = 0; i < tau_grid.size(); ++i) {
        const double a = std::abs(tau_grid[i]);
        auto it = std::lower_bound(abs_sorted.begin(), abs_sorted.end(), a);
        out.g[i] = curve[static_cast<std::size_t>(it - abs_sorted.begin())] / (n0 * n1);
    }
    return out;
}

FitResult fit_two_exponentials(const CrossCorrelation& corr) {
    const auto n = corr.tau.size();
    if (n != corr.g.size() || n < 8)
        throw std::invalid_argument("fit_two_exponentials: need >= 8 aligned points");
    for (std::size_t i = 1; i < n; ++i)
        if (!(corr.tau[i] > corr.tau[i - 1]))
            throw std::invalid_argument("fit_two_exponentials: tau must be increasing");

    // Baseline from the outermost tenth on each side; peak at the argmax.
    const std::size_t edge = std::max<std::size_t>(1, n / 10);
    double baseline0 = 0.0;
    for (std::size_t i = 0; i < edge; ++i) baseline0 += corr.g[i] + corr.g[n - 1 - i];
    baseline0 /= static_cast<double>(2 * edge);

    std::size_t pk = 0;
    for (std::size_t i = 1; i < n; ++i)
        if (corr.g[i] > corr.g[pk]) pk = i;
    const double g_max = corr.g[pk];
    if (!(g_max > baseline0 * (1.0 + 1e-9)) || pk == 0 || pk == n - 1)
        throw std::invalid_argument("fit_two_exponentials: no bunching peak above baseline");
    const double tau_peak = corr.tau[pk];
    const double amp0 = g_max - baseline0;

    // 1/e distances seed the two time constants.
    auto efold = [&](bool rightward) {
        const double target = baseline0 + amp0 / std::numbers::e;
        std::size_t i = pk;
        while (rightward ? i + 1 < n : i > 0) {
            i = rightward ? i + 1 : i - 1;
            if (corr.g[i] <= target) return std::abs(corr.tau[i] - tau_peak);
        }
        return 0.25 * (corr.tau.back() - corr.tau.front());
    };
    const double fall0 = std::max(efold(true), 1e-3 * (corr.tau.back() - corr.tau.front()));
    const double rise0 = std::max(efold(false), 1e-3 * (corr.tau.back() - corr.tau.front()));

    ModelFunc model = [tau_peak](double tau, const Eigen::VectorXd& p) {
        const double d = tau - tau_peak;
        if (d < 0.0) return p(3) + p(2) * std::exp(d / p(0));
        return p(3) + p(2) * std::exp(-d / p(1));
    };

    DataSeries data;
    data.x = corr.tau;
    data.y = corr.g;

    const double span = corr.tau.back() - corr.tau.front();
    Eigen::VectorXd initial(4);
    initial << rise0, fall0, amp0, baseline0;
    FitOptions opts;
    opts.lower = Eigen::Vector4d(1e-6 * span, 1e-6 * span, 0.0, -1e300);
    opts.upper = Eigen::Vector4d(1e3 * span, 1e3 * span, 1e300, 1e300);

    return least_squares(model, data, {"tau_rise", "tau_fall", "amplitude", "baseline"},
                         initial, opts);
}

} // namespace mollow
