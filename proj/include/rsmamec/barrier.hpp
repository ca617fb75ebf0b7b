#pragma once

#include <Eigen/Dense>

namespace rsmamec {

/// A smooth convex program in barrier form. For a barrier weight t the
/// solver minimizes  t * f0(y) + phi(y), where phi is the sum of the
/// num_barrier_terms() logarithmic barrier terms of the constraints.
class BarrierProgram {
 public:
  virtual ~BarrierProgram() = default;

  virtual Eigen::Index dimension() const = 0;
  virtual int num_barrier_terms() const = 0;

  /// f0(y); the quantity being minimized.
  virtual double objective(const Eigen::VectorXd& y) const = 0;

  /// Value of t*f0 + phi at y. Returns false when y lies outside the barrier
  /// domain. Gradient and Hessian are filled when the pointers are non-null.
  virtual bool evaluate(const Eigen::VectorXd& y, double t, double& value, Eigen::VectorXd* grad,
                        Eigen::MatrixXd* hess) const = 0;
};

struct BarrierOptions {
  /// Stop when the duality-gap bound m/t drops below tol * max(1, |f0|).
  double tol = 1e-6;
  double mu = 20.0;
  int max_newton_steps = 200;
  double newton_tol = 1e-10;  // on lambda^2 / 2
  double armijo = 0.25;
  double backtrack = 0.5;
};

struct BarrierResult {
  Eigen::VectorXd y;
  double objective = 0;
  int newton_steps = 0;
  bool converged = false;
};

/// Barrier path-following with damped Newton centering steps. `y0` must be
/// strictly inside the domain.
BarrierResult solve_barrier(const BarrierProgram& program, Eigen::VectorXd y0,
                            const BarrierOptions& options);

}  // namespace rsmamec
