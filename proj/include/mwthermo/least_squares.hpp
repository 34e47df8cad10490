#pragma once

// Damped Gauss-Newton (Levenberg-Marquardt) on real residual vectors with a
// central-difference Jacobian. Shared by the spectroscopy and relaxation fits.

#include <functional>
#include <string>

#include <Eigen/Dense>

namespace mwthermo::lsq {

using ResidualFunction = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using Feasibility = std::function<bool(const Eigen::VectorXd&)>;

struct Options
{
    int max_iterations = 200;
    /// Stop when ||J^T r|| <= gradient_tolerance * ||J||_F * ||r_0||.
    double gradient_tolerance = 1e-8;
    double step_tolerance = 1e-12;
    double cost_tolerance = 1e-16;
    /// Relative finite-difference step, scaled by max(1, |x_i|).
    double difference_step = 1e-5;
    double initial_damping = 1e-3;
};

struct Result
{
    Eigen::VectorXd x;
    Eigen::VectorXd residual;
    Eigen::MatrixXd jacobian;
    double initial_residual_norm = 0.0;
    double residual_norm = 0.0;
    double gradient_norm = 0.0;
    int iterations = 0;
    bool converged = false;
    std::string stop_reason;

    /// Diagonal of (J^T J)^-1 scaled by the residual variance; empty if singular.
    Eigen::VectorXd standard_errors() const;
};

Eigen::MatrixXd numerical_jacobian(const ResidualFunction& f, const Eigen::VectorXd& x,
                                   const Eigen::VectorXd& fx, double relative_step,
                                   const Feasibility& feasible = {});

/// Minimizes 0.5 ||f(x)||^2 from x0. Steps into infeasible points are rejected as
/// if they increased the cost. Never throws on non-convergence; inspect `converged`.
Result levenberg_marquardt(const ResidualFunction& f, Eigen::VectorXd x0,
                           const Options& options = {}, const Feasibility& feasible = {});

} // namespace mwthermo::lsq
