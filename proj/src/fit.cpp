#include "mollow/fit.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace mollow {

void DataSeries::validate() const {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("DataSeries: x/y must match and have >= 2 points");
    if (!y_err.empty() && y_err.size() != x.size())
        throw std::invalid_argument("DataSeries: y_err length mismatch");
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!std::isfinite(x[i]) || !std::isfinite(y[i]))
            throw std::invalid_argument("DataSeries: non-finite data");
        if (!y_err.empty() && (!std::isfinite(y_err[i]) || y_err[i] <= 0.0))
            throw std::invalid_argument("DataSeries: y_err must be > 0");
    }
}

const char* to_string(FitStatus s) {
    switch (s) {
        case FitStatus::converged: return "converged";
        case FitStatus::max_iterations: return "max_iterations";
        case FitStatus::degenerate: return "degenerate";
    }
    return "unknown";
}

double FitResult::value(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return values(static_cast<Eigen::Index>(i));
    throw std::out_of_range("FitResult: no parameter named " + name);
}

double FitResult::sigma(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return sigmas(static_cast<Eigen::Index>(i));
    throw std::out_of_range("FitResult: no parameter named " + name);
}

namespace {

Eigen::VectorXd clamp_to_bounds(Eigen::VectorXd p, const FitOptions& opts) {
    if (opts.lower.size())
        p = p.cwiseMax(opts.lower);
    if (opts.upper.size())
        p = p.cwiseMin(opts.upper);
    return p;
}

// Weighted residuals (y - f) / sigma.
Eigen::VectorXd residuals(const ModelFunc& model, const DataSeries& d,
                          const Eigen::VectorXd& p) {
    const auto n = static_cast<Eigen::Index>(d.x.size());
    Eigen::VectorXd r(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        double f = model(d.x[k], p);
        double w = d.weighted() ? d.y_err[k] : 1.0;
        r(i) = (d.y[k] - f) / w;
    }
    return r;
}

// Central-difference Jacobian of the residual vector; the h^2 truncation
// keeps the derivative noise floor below the 1e-8 convergence threshold.
// Falls back to a one-sided difference at an active bound.
Eigen::MatrixXd jacobian(const ModelFunc& model, const DataSeries& d,
                         const Eigen::VectorXd& p, const Eigen::VectorXd& r0,
                         const FitOptions& opts) {
    const auto n = r0.size();
    const auto m = p.size();
    Eigen::MatrixXd J(n, m);
    for (Eigen::Index j = 0; j < m; ++j) {
        const double step = std::abs(p(j)) > 0.0 ? 1e-6 * std::abs(p(j)) : 1e-6;
        Eigen::VectorXd ph = p, pl = p;
        ph(j) += step;
        pl(j) -= step;
        const bool hi_ok = !opts.upper.size() || ph(j) <= opts.upper(j);
        const bool lo_ok = !opts.lower.size() || pl(j) >= opts.lower(j);
        if (hi_ok && lo_ok) {
            J.col(j) = (residuals(model, d, ph) - residuals(model, d, pl)) / (2.0 * step);
        } else if (hi_ok) {
            J.col(j) = (residuals(model, d, ph) - r0) / step;
        } else {
            J.col(j) = (r0 - residuals(model, d, pl)) / step;
        }
    }
    return J;
}

} // namespace

FitResult least_squares(const ModelFunc& model, const DataSeries& data,
                        std::vector<std::string> names, const Eigen::VectorXd& initial,
                        const FitOptions& opts) {
    data.validate();
    const auto m = initial.size();
    if (m == 0 || static_cast<std::size_t>(m) != names.size())
        throw std::invalid_argument("least_squares: names/initial size mismatch");
    if (!initial.allFinite())
        throw std::invalid_argument("least_squares: non-finite initial guess");
    if (opts.lower.size() && (opts.lower.size() != m || (initial - opts.lower).minCoeff() < 0))
        throw std::invalid_argument("least_squares: initial guess below lower bound");
    if (opts.upper.size() && (opts.upper.size() != m || (opts.upper - initial).minCoeff() < 0))
        throw std::invalid_argument("least_squares: initial guess above upper bound");
    const auto n = static_cast<Eigen::Index>(data.x.size());
    if (n <= m)
        throw std::invalid_argument("least_squares: need more data points than parameters");

    Eigen::VectorXd p = initial;
    Eigen::VectorXd r = residuals(model, data, p);
    if (!r.allFinite())
        throw std::invalid_argument("least_squares: model non-finite at initial guess");
    double chi2 = r.squaredNorm();

    double lambda = 1e-3;
    FitStatus status = FitStatus::max_iterations;
    int iter = 0;
    Eigen::MatrixXd J = jacobian(model, data, p, r, opts);

    for (iter = 1; iter <= opts.max_iterations; ++iter) {
        Eigen::MatrixXd JtJ = J.transpose() * J;
        Eigen::VectorXd g = J.transpose() * r;

        bool stepped = false;
        for (int attempt = 0; attempt < 25; ++attempt) {
            Eigen::MatrixXd A = JtJ;
            for (Eigen::Index k = 0; k < m; ++k)
                A(k, k) += lambda * std::max(JtJ(k, k), 1e-300);
            Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
            if (ldlt.info() != Eigen::Success) {
                lambda *= 10.0;
                continue;
            }
            // r = (y - f)/sigma and J = dr/dp, so the damped Gauss-Newton
            // step is p - (J^T J + lambda D)^{-1} J^T r.
            Eigen::VectorXd step = ldlt.solve(g);
            if (!step.allFinite()) {
                lambda *= 10.0;
                continue;
            }
            Eigen::VectorXd p_try = clamp_to_bounds(p - step, opts);
            Eigen::VectorXd r_try = residuals(model, data, p_try);
            double chi2_try = r_try.allFinite() ? r_try.squaredNorm()
                                                : std::numeric_limits<double>::infinity();
            if (chi2_try < chi2) {
                // Relative parameter change for the convergence test.
                double rel = 0.0;
                for (Eigen::Index k = 0; k < m; ++k)
                    rel = std::max(rel, std::abs(p_try(k) - p(k)) /
                                            std::max(std::abs(p(k)), 1e-300));
                p = p_try;
                r = r_try;
                chi2 = chi2_try;
                lambda = std::max(lambda * 0.3, 1e-12);
                stepped = true;
                if (rel < opts.param_rtol) status = FitStatus::converged;
                break;
            }
            lambda *= 10.0;
        }
        if (!stepped) {
            // No downhill step found at any damping: at a (possibly bounded)
            // minimum to working precision.
            status = FitStatus::converged;
            break;
        }
        if (status == FitStatus::converged) break;
        J = jacobian(model, data, p, r, opts);
    }

    FitResult res;
    res.names = std::move(names);
    res.values = p;
    res.status = status;
    res.iterations = iter;
    const double dof = static_cast<double>(n - m);
    res.reduced_chi2 = chi2 / dof;

    J = jacobian(model, data, p, r, opts);
    Eigen::MatrixXd JtJ = J.transpose() * J;
    // Rank and inversion on the correlation-form matrix: parameters span
    // many orders of magnitude (rad/s vs seconds vs unitless), so the raw
    // curvature is badly scaled even when perfectly well conditioned.
    Eigen::VectorXd diag = JtJ.diagonal();
    auto degenerate = [&res, m]() {
        res.status = FitStatus::degenerate;
        res.covariance =
            Eigen::MatrixXd::Constant(m, m, std::numeric_limits<double>::quiet_NaN());
        res.sigmas = Eigen::VectorXd::Constant(m, std::numeric_limits<double>::quiet_NaN());
    };
    if (!diag.allFinite() || diag.minCoeff() <= 0.0) {
        degenerate();
        return res;
    }
    Eigen::VectorXd dinv = diag.cwiseSqrt().cwiseInverse();
    Eigen::MatrixXd scaled = dinv.asDiagonal() * JtJ * dinv.asDiagonal();
    Eigen::FullPivLU<Eigen::MatrixXd> lu(scaled);
    lu.setThreshold(1e-10);
    if (lu.rank() < m) {
        degenerate();
        return res;
    }
    // Scale by reduced chi-square: with unit weights this reproduces the
    // usual variance estimate; with stated errors it absorbs mis-scaled bars.
    res.covariance =
        (dinv.asDiagonal() * lu.inverse() * dinv.asDiagonal()) * res.reduced_chi2;
    res.sigmas = res.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
    return res;
}

} // namespace mollow
