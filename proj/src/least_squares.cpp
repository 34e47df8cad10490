#include "mwthermo/least_squares.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mwthermo::lsq {

namespace {

bool usable(const Eigen::VectorXd& r) { return r.size() > 0 && r.allFinite(); }

} // namespace

Eigen::VectorXd Result::standard_errors() const
{
    const Eigen::Index m = residual.size();
    const Eigen::Index p = x.size();
    if (m <= p || jacobian.rows() != m)
        return {};
    const Eigen::MatrixXd normal = jacobian.transpose() * jacobian;
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(normal);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
        return {};
    const double variance = residual.squaredNorm() / static_cast<double>(m - p);
    const Eigen::MatrixXd covariance =
        variance * ldlt.solve(Eigen::MatrixXd::Identity(p, p));
    return covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
}

Eigen::MatrixXd numerical_jacobian(const ResidualFunction& f, const Eigen::VectorXd& x,
                                   const Eigen::VectorXd& fx, double relative_step,
                                   const Feasibility& feasible)
{
    Eigen::MatrixXd jac(fx.size(), x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double h = relative_step * std::max(1.0, std::abs(x(i)));
        Eigen::VectorXd plus = x;
        Eigen::VectorXd minus = x;
        plus(i) += h;
        minus(i) -= h;
        const bool plus_ok = !feasible || feasible(plus);
        const bool minus_ok = !feasible || feasible(minus);
        if (plus_ok && minus_ok)
            jac.col(i) = (f(plus) - f(minus)) / (2.0 * h);
        else if (plus_ok)
            jac.col(i) = (f(plus) - fx) / h;
        else
            jac.col(i) = (fx - f(minus)) / h;
    }
    return jac;
}

Result levenberg_marquardt(const ResidualFunction& f, Eigen::VectorXd x0, const Options& options,
                           const Feasibility& feasible)
{
    Result out;
    out.x = std::move(x0);
    out.residual = f(out.x);
    if (!usable(out.residual)) {
        out.stop_reason = "residual not finite at the initial point";
        return out;
    }
    out.initial_residual_norm = out.residual.norm();
    double cost = 0.5 * out.residual.squaredNorm();
    out.jacobian = numerical_jacobian(f, out.x, out.residual, options.difference_step, feasible);

    double damping = options.initial_damping;
    double growth = 2.0;
    for (out.iterations = 0; out.iterations < options.max_iterations; ++out.iterations) {
        const Eigen::VectorXd gradient = out.jacobian.transpose() * out.residual;
        out.gradient_norm = gradient.norm();
        const double gradient_scale = out.jacobian.norm() * out.initial_residual_norm;
        if (out.gradient_norm <= options.gradient_tolerance * gradient_scale || cost == 0.0) {
            out.converged = true;
            out.stop_reason = "gradient";
            break;
        }

        const Eigen::MatrixXd normal = out.jacobian.transpose() * out.jacobian;
        Eigen::VectorXd scaling = normal.diagonal().cwiseMax(1e-300);
        bool accepted = false;
        Eigen::VectorXd step;
        for (int attempt = 0; attempt < 60 && !accepted; ++attempt) {
            Eigen::MatrixXd damped = normal;
            damped.diagonal() += damping * scaling;
            step = damped.ldlt().solve(-gradient);
            if (!step.allFinite()) {
                damping *= growth;
                growth *= 2.0;
                continue;
            }
            const Eigen::VectorXd candidate = out.x + step;
            if (feasible && !feasible(candidate)) {
                damping *= growth;
                growth *= 2.0;
                continue;
            }
            const Eigen::VectorXd r_new = f(candidate);
            const double new_cost = usable(r_new) ? 0.5 * r_new.squaredNorm()
                                                  : std::numeric_limits<double>::infinity();
            const double predicted = -(step.dot(gradient) + 0.5 * step.dot(normal * step));
            if (new_cost < cost) {
                const double ratio = predicted > 0.0 ? (cost - new_cost) / predicted : 1.0;
                const double previous_cost = cost;
                out.x = candidate;
                out.residual = r_new;
                cost = new_cost;
                damping *= std::max(1.0 / 3.0, 1.0 - std::pow(2.0 * ratio - 1.0, 3));
                growth = 2.0;
                accepted = true;
                if (previous_cost - cost <= options.cost_tolerance * previous_cost) {
                    out.jacobian = numerical_jacobian(f, out.x, out.residual,
                                                      options.difference_step, feasible);
                    out.gradient_norm = (out.jacobian.transpose() * out.residual).norm();
                    out.converged = true;
                    out.stop_reason = "cost";
                    out.residual_norm = out.residual.norm();
                    ++out.iterations;
                    return out;
                }
            } else {
                damping *= growth;
                growth *= 2.0;
            }
        }
        if (!accepted) {
            // No downhill step exists at any damping: a stationary point to working precision.
            out.converged = true;
            out.stop_reason = "no descent";
            break;
        }
        out.jacobian = numerical_jacobian(f, out.x, out.residual, options.difference_step, feasible);
        if (step.norm() <= options.step_tolerance * (out.x.norm() + options.step_tolerance)) {
            out.gradient_norm = (out.jacobian.transpose() * out.residual).norm();
            out.converged = true;
            out.stop_reason = "step";
            ++out.iterations;
            break;
        }
    }
    if (!out.converged && out.stop_reason.empty())
        out.stop_reason = "iteration limit";
    out.residual_norm = out.residual.norm();
    return out;
}

} // namespace mwthermo::lsq
