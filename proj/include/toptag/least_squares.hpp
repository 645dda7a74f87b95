#pragma once

#include <Eigen/Core>

#include <functional>
#include <vector>

namespace toptag {

struct SolverSettings {
  int max_iterations = 50;
  double step_tolerance = 1e-10;
  double residual_tolerance = 1e-12;
  double mu = 1.0;  // plane-penalty weight of the soft solver
  double damping_init = 1e-3;

  /// Throws InvalidArgument unless all tolerances are positive and mu >= 0.
  void validate() const;
};

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

enum class Termination { ZeroResidual, SmallStep, SmallDecrease, NoDescent, MaxIterations };

struct LeastSquaresResult {
  Eigen::VectorXd params;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  int iterations = 0;
  bool converged = false;
  Termination termination = Termination::MaxIterations;
  std::vector<double> accepted_costs;  // cost after each accepted step, starting with the initial cost
};

inline constexpr double kJacobianStep = 1e-6;

/// Central finite-difference Jacobian of `fn` at `x`.
Eigen::MatrixXd finite_difference_jacobian(const ResidualFn& fn, const Eigen::VectorXd& x,
                                           double step = kJacobianStep);

/// Levenberg-damped Gauss-Newton on cost = |r(x)|^2.
///
/// Damping is multiplied by 10 after a rejected step and divided by 10 after
/// an accepted one, so the accepted cost sequence never increases. Stops on a
/// step shorter than step_tolerance, a relative cost decrease below
/// residual_tolerance, or max_iterations (the only non-converged exit).
/// Throws NonFiniteResidual when r(init) is not finite.
LeastSquaresResult solve_least_squares(const ResidualFn& fn, const Eigen::VectorXd& init,
                                       const SolverSettings& settings);

}  // namespace toptag
