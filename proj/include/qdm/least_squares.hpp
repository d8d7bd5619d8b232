#pragma once

#include <functional>

#include <Eigen/Dense>

namespace qdm {

// Residual callback: fill r (size m) and, when J is non-null, the m x n Jacobian.
using ResidualFn = std::function<void(const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd* J)>;

struct LmOptions {
    int max_iterations = 200;
    double step_tolerance = 1e-9;  // relative parameter step
    double initial_lambda = 1e-3;
};

struct LmResult {
    Eigen::VectorXd params;
    Eigen::VectorXd residuals;
    Eigen::MatrixXd jacobian;
    double cost = 0.0;  // sum of squared residuals
    int iterations = 0;
    bool converged = false;
};

// Damped Gauss-Newton (Levenberg-Marquardt with diagonal scaling).
LmResult levenberg_marquardt(const ResidualFn& fn, Eigen::VectorXd p0, int n_residuals, const LmOptions& opt = {});

// sigma^2 (J^T J)^-1 with sigma^2 = cost / (m - n); pseudo-inverse when singular
Eigen::MatrixXd lm_covariance(const LmResult& r);

}  // namespace qdm
