#include "rsmamec/barrier.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rsmamec {

BarrierResult solve_barrier(const BarrierProgram& program, Eigen::VectorXd y0,
                            const BarrierOptions& opt) {
  const Eigen::Index n = program.dimension();
  if (y0.size() != n) throw std::invalid_argument("solve_barrier: start point has wrong size");
  const double m = program.num_barrier_terms();

  BarrierResult res;
  res.y = std::move(y0);
  double value = 0;
  if (!program.evaluate(res.y, 1.0, value, nullptr, nullptr))
    throw std::invalid_argument("solve_barrier: start point outside the domain");

  double t = m / std::max(1.0, std::abs(program.objective(res.y)));
  Eigen::VectorXd grad(n), step(n), trial(n);
  Eigen::MatrixXd hess(n, n);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(n);

  while (res.newton_steps < opt.max_newton_steps) {
    // centering
    while (res.newton_steps < opt.max_newton_steps) {
      program.evaluate(res.y, t, value, &grad, &hess);
      ldlt.compute(hess);
      if (ldlt.info() != Eigen::Success) break;
      step = -ldlt.solve(grad);
      const double decrement = -grad.dot(step);
      ++res.newton_steps;
      // below the rounding noise of the barrier value nothing more can be gained
      if (!(decrement > 0) || decrement / 2 <= std::max(opt.newton_tol, 1e-13 * std::abs(value))) break;

      double alpha = 1.0;
      double trial_value = 0;
      bool moved = false;
      for (int ls = 0; ls < 60; ++ls, alpha *= opt.backtrack) {
        trial = res.y + alpha * step;
        if (program.evaluate(trial, t, trial_value, nullptr, nullptr) &&
            trial_value <= value - opt.armijo * alpha * decrement) {
          moved = true;
          break;
        }
      }
      if (!moved) break;
      res.y.swap(trial);
    }
    const double f0 = program.objective(res.y);
    if (m / t <= opt.tol * std::max(1.0, std::abs(f0))) {
      res.converged = true;
      break;
    }
    t *= opt.mu;
  }
  res.objective = program.objective(res.y);
  return res;
}

}  // namespace rsmamec
