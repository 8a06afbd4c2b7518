#pragma once

#include <Eigen/Dense>

#include <functional>
#include <string>
#include <vector>

// Damped (Levenberg-Marquardt) weighted least squares with box bounds.
// Converges when the relative parameter change drops below 1e-8 or after
// 200 iterations; parameter uncertainties come from the inverse of the
// approximated curvature scaled by the reduced chi-square.

namespace mollow {

struct DataSeries {
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> y_err; // optional; > 0 where present

    void validate() const;
    bool weighted() const { return !y_err.empty(); }
};

enum class FitStatus { converged, max_iterations, degenerate };

const char* to_string(FitStatus s);

struct FitResult {
    std::vector<std::string> names;
    Eigen::VectorXd values;
    Eigen::VectorXd sigmas;
    double reduced_chi2 = 0.0;
    Eigen::MatrixXd covariance;
    FitStatus status = FitStatus::converged;
    int iterations = 0;

    bool converged() const { return status == FitStatus::converged; }
    double value(const std::string& name) const;
    double sigma(const std::string& name) const;
};

// Model value at a single abscissa for parameter vector p.
using ModelFunc = std::function<double(double x, const Eigen::VectorXd& p)>;

struct FitOptions {
    int max_iterations = 200;
    double param_rtol = 1e-8;
    Eigen::VectorXd lower; // empty = unbounded
    Eigen::VectorXd upper;
};

FitResult least_squares(const ModelFunc& model, const DataSeries& data,
                        std::vector<std::string> names, const Eigen::VectorXd& initial,
                        const FitOptions& opts = {});

} // namespace mollow
