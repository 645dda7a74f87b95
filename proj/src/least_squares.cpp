#include "toptag/least_squares.hpp"

#include <Eigen/Dense>

#include <cmath>

#include "toptag/error.hpp"

namespace toptag {

void SolverSettings::validate() const {
  if (max_iterations < 0 || !(step_tolerance > 0.0) || !(residual_tolerance > 0.0) ||
      !(damping_init > 0.0) || !(mu >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "solver tolerances must be positive and mu non-negative");
  }
}

Eigen::MatrixXd finite_difference_jacobian(const ResidualFn& fn, const Eigen::VectorXd& x,
                                           double step) {
  Eigen::MatrixXd J;
  Eigen::VectorXd xp = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    xp(j) = x(j) + step;
    const Eigen::VectorXd rp = fn(xp);
    xp(j) = x(j) - step;
    const Eigen::VectorXd rm = fn(xp);
    xp(j) = x(j);
    if (j == 0) J.resize(rp.size(), x.size());
    J.col(j) = (rp - rm) / (2.0 * step);
  }
  return J;
}

LeastSquaresResult solve_least_squares(const ResidualFn& fn, const Eigen::VectorXd& init,
                                       const SolverSettings& settings) {
  settings.validate();

  LeastSquaresResult out;
  out.params = init;
  Eigen::VectorXd r = fn(init);
  if (!r.allFinite()) {
    throw Error(ErrorCode::NonFiniteResidual, "residual is not finite at the initial parameters");
  }
  double cost = r.squaredNorm();
  out.initial_cost = cost;
  out.accepted_costs.push_back(cost);

  if (cost == 0.0) {
    out.final_cost = 0.0;
    out.converged = true;
    out.termination = Termination::ZeroResidual;
    return out;
  }

  const Eigen::Index n = init.size();
  double damping = settings.damping_init;
  Eigen::VectorXd x = init;

  for (int it = 1; it <= settings.max_iterations; ++it) {
    out.iterations = it;
    const Eigen::MatrixXd J = finite_difference_jacobian(fn, x);
    const Eigen::MatrixXd N = J.transpose() * J;
    const Eigen::VectorXd g = J.transpose() * r;

    bool accepted = false;
    Eigen::VectorXd dx;
    double new_cost = cost;
    Eigen::VectorXd r_new;
    while (damping < 1e16) {
      const Eigen::MatrixXd M = N + damping * Eigen::MatrixXd::Identity(n, n);
      dx = M.ldlt().solve(-g);
      const Eigen::VectorXd x_new = x + dx;
      r_new = fn(x_new);
      new_cost = r_new.allFinite() ? r_new.squaredNorm() : INFINITY;
      if (new_cost <= cost) {
        accepted = true;
        damping = std::max(damping / 10.0, 1e-15);
        break;
      }
      damping *= 10.0;
    }

    if (!accepted) {
      out.converged = true;
      out.termination = Termination::NoDescent;
      break;
    }

    const double decrease = cost - new_cost;
    x += dx;
    r = std::move(r_new);
    cost = new_cost;
    out.accepted_costs.push_back(cost);

    if (cost == 0.0) {
      out.converged = true;
      out.termination = Termination::ZeroResidual;
      break;
    }
    if (dx.norm() < settings.step_tolerance) {
      out.converged = true;
      out.termination = Termination::SmallStep;
      break;
    }
    if (decrease < settings.residual_tolerance * (cost + decrease)) {
      out.converged = true;
      out.termination = Termination::SmallDecrease;
      break;
    }
  }

  out.params = x;
  out.final_cost = cost;
  return out;
}

}  // namespace toptag
