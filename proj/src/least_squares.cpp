#include "qdm/least_squares.hpp"

#include <algorithm>
#include <cmath>

namespace qdm {

LmResult levenberg_marquardt(const ResidualFn& fn, Eigen::VectorXd p, int m, const LmOptions& opt) {
    const int n = static_cast<int>(p.size());
    LmResult out;
    Eigen::VectorXd r(m), r_try(m);
    Eigen::MatrixXd J(m, n);
    fn(p, r, &J);
    double cost = r.squaredNorm();
    double lambda = opt.initial_lambda;

    int it = 0;
    for (; it < opt.max_iterations; ++it) {
        Eigen::MatrixXd A = J.transpose() * J;
        Eigen::VectorXd g = J.transpose() * r;
        if (g.lpNorm<Eigen::Infinity>() == 0.0) {
            out.converged = true;
            break;
        }
        Eigen::VectorXd diag = A.diagonal().cwiseMax(1e-30);

        bool accepted = false;
        bool tiny_step = false;
        while (lambda < 1e16) {
            Eigen::MatrixXd Ad = A;
            Ad.diagonal() += lambda * diag;
            Eigen::VectorXd step = Ad.ldlt().solve(-g);
            if (!step.allFinite()) {
                lambda *= 10.0;
                continue;
            }
            Eigen::VectorXd p_try = p + step;
            fn(p_try, r_try, nullptr);
            double cost_try = r_try.squaredNorm();
            tiny_step = step.norm() <= opt.step_tolerance * (p.norm() + opt.step_tolerance);
            if (std::isfinite(cost_try) && cost_try <= cost) {
                p = p_try;
                cost = cost_try;
                fn(p, r, &J);
                lambda = std::max(lambda * 0.2, 1e-12);
                accepted = true;
                break;
            }
            if (tiny_step) break;
            lambda *= 10.0;
        }
        if (tiny_step) {
            out.converged = true;
            ++it;
            break;
        }
        if (!accepted) {
            // no descent direction left at any damping: a stationary point
            out.converged = true;
            ++it;
            break;
        }
    }
    out.params = p;
    out.residuals = r;
    out.jacobian = J;
    out.cost = cost;
    out.iterations = it;
    return out;
}

Eigen::MatrixXd lm_covariance(const LmResult& r) {
    const auto m = r.jacobian.rows();
    const auto n = r.jacobian.cols();
    double s2 = m > n ? r.cost / static_cast<double>(m - n) : 0.0;
    Eigen::MatrixXd A = r.jacobian.transpose() * r.jacobian;
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(A);
    Eigen::MatrixXd inv = cod.pseudoInverse();
    Eigen::MatrixXd cov = s2 * inv;
    return 0.5 * (cov + cov.transpose());
}

}  // namespace qdm
