#include "rsmamec/sca_power.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "rsmamec/barrier.hpp"

namespace rsmamec {

// ---------------------------------------------------------------------------
// GroupProblem

GroupProblem GroupProblem::build(const Scenario& scenario, const Allocation& allocation, int m,
                                 bool single_message) {
  GroupProblem p;
  p.server = m;
  p.num_devices = scenario.num_devices();
  p.frequency = scenario.frequency(m);
  p.bandwidth = scenario.bandwidth();
  p.noise_power = scenario.noise_power();
  p.deadline = scenario.deadline();
  p.single_message = single_message;
  for (int k = 0; k < scenario.num_devices(); ++k) {
    if (allocation.server_of[k] != m || allocation.channel_of[k] == kUnassigned) continue;
    const int n = allocation.channel_of[k];
    p.members.push_back({k, n, scenario.gain(m, n, k), scenario.max_power(k)});
  }
  return p;
}

std::vector<int> GroupProblem::channel_group(int n) const {
  std::vector<int> out;
  for (const auto& mem : members)
    if (mem.channel == n) out.push_back(mem.device);
  return out;
}

std::vector<int> GroupProblem::channels() const {
  std::vector<int> out;
  for (const auto& mem : members) out.push_back(mem.channel);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double GroupProblem::min_single_user_capacity() const {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& mem : members)
    best = std::min(best, bandwidth * std::log2(1.0 + mem.gain * mem.max_power / noise_power));
  return best;
}

PowerAllocation initial_powers(const GroupProblem& problem) {
  PowerAllocation p(problem.num_devices);
  for (const auto& mem : problem.members) {
    if (problem.single_message) {
      p(mem.device, 0) = mem.max_power;
    } else {
      p(mem.device, 0) = mem.max_power / 2;
      p(mem.device, 1) = mem.max_power / 2;
    }
  }
  return p;
}

// ---------------------------------------------------------------------------
// Direct evaluation of the difference-of-concave terms in SI units.

namespace {

void require_ranked(const GroupProblem& problem, const DecodingOrder& order) {
  for (const auto& mem : problem.members)
    if (order.rank(mem.device, 0) <= 0 || order.rank(mem.device, 1) <= 0)
      throw std::domain_error("decoding order does not rank every member sub-message");
}

// Received power of the later-decoded sub-messages on the same channel.
double interference_of(const GroupProblem& problem, const DecodingOrder& order,
                       const PowerAllocation& powers, const GroupMember& self, int part) {
  const int own_rank = order.rank(self.device, part);
  double sum = 0;
  for (const auto& other : problem.members) {
    if (other.channel != self.channel) continue;
    for (int i = 0; i < 2; ++i)
      if (order.rank(other.device, i) > own_rank) sum += other.gain * powers(other.device, i);
  }
  return sum;
}

}  // namespace

std::vector<WvTerm> wv_terms(const GroupProblem& problem, const DecodingOrder& order,
                             const PowerAllocation& powers) {
  require_ranked(problem, order);
  std::vector<WvTerm> out;
  const double B = problem.bandwidth;
  for (const auto& mem : problem.members) {
    for (int i = 0; i < 2; ++i) {
      const double base = problem.noise_power + interference_of(problem, order, powers, mem, i);
      out.push_back({{mem.device, i}, B * std::log2(base + mem.gain * powers(mem.device, i)),
                     B * std::log2(base)});
    }
  }
  return out;
}

std::vector<ZlValue> zl_values(const GroupProblem& problem, const DecodingOrder& order,
                               const PowerAllocation& powers, double eta) {
  const double F = problem.frequency;
  if (!(eta < F)) throw std::domain_error("zl_values: eta must be below the server frequency");
  const auto terms = wv_terms(problem, order, powers);
  std::vector<ZlValue> out;
  for (const auto& mem : problem.members) {
    ZlValue zl{mem.device, 0, 0};
    for (const auto& t : terms) {
      if (t.message.device == mem.device) {
        zl.z += (F - eta) * t.w;
        zl.l += (F - eta) * t.v;
      } else {
        zl.z += eta * t.v;
        zl.l += eta * t.w;
      }
    }
    out.push_back(zl);
  }
  return out;
}

std::vector<double> AffineMinorant::evaluate(const PowerAllocation& p) const {
  std::vector<double> out;
  out.reserve(rows_.size());
  const auto& ref = reference_.values();
  const auto& cur = p.values();
  for (const auto& row : rows_) {
    double v = row.value_at_ref;
    for (std::size_t j = 0; j < row.gradient.size(); ++j) v += row.gradient[j] * (cur[j] - ref[j]);
    out.push_back(v);
  }
  return out;
}

AffineMinorant linearize(const GroupProblem& problem, const DecodingOrder& order,
                         const PowerAllocation& p_ref, double eta) {
  const double F = problem.frequency;
  const double B = problem.bandwidth;
  const auto zl = zl_values(problem, order, p_ref, eta);
  const std::size_t width = 2 * static_cast<std::size_t>(problem.num_devices);

  // Gradients of every v_{k,i} and w_{k,i} with respect to all powers.
  struct TermGrad {
    int device;
    std::vector<double> dv, dw;
  };
  std::vector<TermGrad> grads;
  for (const auto& mem : problem.members) {
    for (int i = 0; i < 2; ++i) {
      TermGrad g{mem.device, std::vector<double>(width, 0.0), std::vector<double>(width, 0.0)};
      const double interf = interference_of(problem, order, p_ref, mem, i);
      const double v_den = (problem.noise_power + interf) * std::numbers::ln2;
      const double w_den = (problem.noise_power + interf + mem.gain * p_ref(mem.device, i)) * std::numbers::ln2;
      const int own_rank = order.rank(mem.device, i);
      for (const auto& other : problem.members) {
        if (other.channel != mem.channel) continue;
        for (int ii = 0; ii < 2; ++ii) {
          const int r = order.rank(other.device, ii);
          const std::size_t idx = 2 * static_cast<std::size_t>(other.device) + ii;
          if (r > own_rank) {
            g.dv[idx] = B * other.gain / v_den;
            g.dw[idx] = B * other.gain / w_den;
          } else if (r == own_rank) {
            g.dw[idx] = B * other.gain / w_den;
          }
        }
      }
      grads.push_back(std::move(g));
    }
  }

  std::vector<AffineMinorant::Row> rows;
  for (std::size_t d = 0; d < problem.members.size(); ++d) {
    const int dev = problem.members[d].device;
    AffineMinorant::Row row{dev, zl[d].l, std::vector<double>(width, 0.0)};
    for (const auto& g : grads) {
      const bool own = g.device == dev;
      const auto& src = own ? g.dv : g.dw;
      const double coef = own ? (F - eta) : eta;
      for (std::size_t j = 0; j < width; ++j) row.gradient[j] += coef * src[j];
    }
    rows.push_back(std::move(row));
  }
  return AffineMinorant(p_ref, std::move(rows));
}

double maxmin_objective(const GroupProblem& problem, const DecodingOrder& order,
                        const PowerAllocation& powers, double eta) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& zl : zl_values(problem, order, powers, eta)) best = std::min(best, zl.z - zl.l);
  return best;
}

// ---------------------------------------------------------------------------
// Normalized model used by the solvers. Variables are power fractions
// x = p / P_k of the free sub-messages; received powers are scaled by the
// noise power, rates by the bandwidth, so every log term is ln(1 + u.x).

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kLn2 = std::numbers::ln2;

struct Variable {
  int member = 0;
  int part = 0;
  double snr = 0;  // h P / sigma^2 B
};

class GroupModel {
 public:
  GroupModel(const GroupProblem& problem, const DecodingOrder& order) : problem_(problem) {
    require_ranked(problem, order);
    const int parts = problem.single_message ? 1 : 2;
    member_vars_.resize(problem.members.size());
    for (std::size_t d = 0; d < problem.members.size(); ++d) {
      const auto& mem = problem.members[d];
      for (int i = 0; i < parts; ++i) {
        member_vars_[d].push_back(static_cast<int>(vars_.size()));
        vars_.push_back({static_cast<int>(d), i, mem.gain * mem.max_power / problem.noise_power});
      }
    }
    const auto nv = static_cast<Eigen::Index>(vars_.size());
    U_ = MatrixXd::Zero(2 * nv, nv);
    for (Eigen::Index j = 0; j < nv; ++j) {
      const auto& a = problem.members[vars_[j].member];
      const int ra = order.rank(a.device, vars_[j].part);
      for (Eigen::Index jj = 0; jj < nv; ++jj) {
        const auto& b = problem.members[vars_[jj].member];
        if (b.channel != a.channel) continue;
        const int rb = order.rank(b.device, vars_[jj].part);
        if (rb >= ra) U_(j, jj) = vars_[jj].snr;
        if (rb > ra) U_(nv + j, jj) = vars_[jj].snr;
      }
    }
  }

  Eigen::Index num_vars() const { return static_cast<Eigen::Index>(vars_.size()); }
  Eigen::Index num_members() const { return static_cast<Eigen::Index>(member_vars_.size()); }
  const MatrixXd& U() const { return U_; }
  const std::vector<std::vector<int>>& member_vars() const { return member_vars_; }
  const GroupProblem& problem() const { return problem_; }

  VectorXd to_vars(const PowerAllocation& p) const {
    VectorXd x(num_vars());
    for (Eigen::Index j = 0; j < num_vars(); ++j) {
      const auto& mem = problem_.members[vars_[j].member];
      x(j) = std::clamp(p(mem.device, vars_[j].part) / mem.max_power, 0.0, 1.0);
    }
    return x;
  }

  PowerAllocation to_powers(const VectorXd& x) const {
    PowerAllocation p(problem_.num_devices);
    for (Eigen::Index j = 0; j < num_vars(); ++j) {
      const auto& mem = problem_.members[vars_[j].member];
      p(mem.device, vars_[j].part) = std::max(0.0, x(j)) * mem.max_power;
    }
    return p;
  }

  /// ln(1 + U x): W terms first, then V terms.
  VectorXd log_terms(const VectorXd& x) const { return (U_ * x).array().log1p().matrix(); }

  /// Link rate of each member in bits/s/Hz.
  VectorXd link_rates(const VectorXd& x) const {
    const VectorXd T = log_terms(x);
    const auto nv = num_vars();
    VectorXd r = VectorXd::Zero(num_members());
    for (Eigen::Index d = 0; d < num_members(); ++d)
      for (int j : member_vars_[d]) r(d) += (T(j) - T(nv + j)) / kLn2;
    return r;
  }

  /// Coefficients of z and l on the log terms, in normalized units.
  void zl_coefficients(double eta_n, MatrixXd& Zc, MatrixXd& Lc) const {
    const double F = problem_.frequency / problem_.bandwidth;
    const auto nv = num_vars();
    const auto nd = num_members();
    Zc = MatrixXd::Constant(nd, 2 * nv, 0.0);
    Lc = MatrixXd::Constant(nd, 2 * nv, 0.0);
    for (Eigen::Index d = 0; d < nd; ++d) {
      for (Eigen::Index j = 0; j < nv; ++j) {
        if (vars_[j].member == d) {
          Zc(d, j) = (F - eta_n) / kLn2;
          Lc(d, nv + j) = (F - eta_n) / kLn2;
        } else {
          Zc(d, nv + j) = eta_n / kLn2;
          Lc(d, j) = eta_n / kLn2;
        }
      }
    }
  }

  /// min_d (F R_d - eta sum R), equal to min_d (z_d - l_d), normalized.
  double maxmin(const VectorXd& x, double eta_n) const {
    const VectorXd r = link_rates(x);
    const double F = problem_.frequency / problem_.bandwidth;
    return (F * r.array() - eta_n * r.sum()).minCoeff();
  }

 private:
  const GroupProblem& problem_;
  std::vector<Variable> vars_;
  std::vector<std::vector<int>> member_vars_;
  MatrixXd U_;
};

// Adds the barrier of x > 0 and sum_{j in J_d} x_j < 1. Returns false
// outside the domain.
bool add_budget_barrier(const GroupModel& model, const VectorXd& x, double& value, VectorXd* grad,
                        MatrixXd* hess) {
  const auto nv = model.num_vars();
  for (Eigen::Index j = 0; j < nv; ++j) {
    if (!(x(j) > 0)) return false;
    value -= std::log(x(j));
    if (grad) (*grad)(j) -= 1.0 / x(j);
    if (hess) (*hess)(j, j) += 1.0 / (x(j) * x(j));
  }
  for (const auto& J : model.member_vars()) {
    double slack = 1.0;
    for (int j : J) slack -= x(j);
    if (!(slack > 0)) return false;
    value -= std::log(slack);
    if (grad)
      for (int j : J) (*grad)(j) += 1.0 / slack;
    if (hess)
      for (int a : J)
        for (int b : J) (*hess)(a, b) += 1.0 / (slack * slack);
  }
  return true;
}

/// max s  s.t.  s <= z_d(x) - lhat_d(x), x in the budget set; y = [x; s].
class MaxMinProgram final : public BarrierProgram {
 public:
  MaxMinProgram(const GroupModel& model, MatrixXd Zc, VectorXd l_const, MatrixXd l_grad)
      : model_(model), Zc_(std::move(Zc)), l_const_(std::move(l_const)), l_grad_(std::move(l_grad)) {}

  Eigen::Index dimension() const override { return model_.num_vars() + 1; }
  int num_barrier_terms() const override {
    return static_cast<int>(2 * model_.num_members() + model_.num_vars());
  }
  double objective(const VectorXd& y) const override { return -y(y.size() - 1); }

  /// z_d - lhat_d for every member.
  VectorXd surrogate(const VectorXd& x) const {
    return Zc_ * model_.log_terms(x) - l_const_ - l_grad_ * x;
  }

  bool evaluate(const VectorXd& y, double t, double& value, VectorXd* grad,
                MatrixXd* hess) const override {
    const auto nv = model_.num_vars();
    const auto nd = model_.num_members();
    const VectorXd x = y.head(nv);
    const double s = y(nv);
    value = -t * s;
    if (grad) {
      grad->setZero(nv + 1);
      (*grad)(nv) = -t;
    }
    if (hess) hess->setZero(nv + 1, nv + 1);
    VectorXd gx;
    MatrixXd hx;
    if (grad) gx = VectorXd::Zero(nv);
    if (hess) hx = MatrixXd::Zero(nv, nv);
    if (!add_budget_barrier(model_, x, value, grad ? &gx : nullptr, hess ? &hx : nullptr))
      return false;

    const VectorXd lin = model_.U() * x;
    const VectorXd T = lin.array().log1p().matrix();
    const VectorXd g = Zc_ * T - l_const_ - l_grad_ * x - VectorXd::Constant(nd, s);
    for (Eigen::Index d = 0; d < nd; ++d) {
      if (!(g(d) > 0)) return false;
      value -= std::log(g(d));
    }
    if (!grad && !hess) return true;

    const VectorXd inv = (1.0 + lin.array()).inverse().matrix();  // 1 / (1 + u.x)
    // G(d, :) = d g_d / dx
    const MatrixXd G = (Zc_.array().rowwise() * inv.transpose().array()).matrix() * model_.U() - l_grad_;
    const VectorXd rg = g.array().inverse().matrix();  // 1 / g_d
    if (grad) {
      gx -= G.transpose() * rg;
      grad->head(nv) = gx;
      (*grad)(nv) += rg.sum();
    }
    if (hess) {
      const VectorXd rg2 = rg.array().square().matrix();
      // sum_d grad g grad g^T / g^2 over (x, s)
      hx += G.transpose() * rg2.asDiagonal() * G;
      // -sum_d hess g_d / g_d
      const VectorXd weight = (Zc_.transpose() * rg).array() * inv.array().square();
      hx += model_.U().transpose() * weight.asDiagonal() * model_.U();
      hess->topLeftCorner(nv, nv) = hx;
      const VectorXd cross = -(G.transpose() * rg2);
      hess->col(nv).head(nv) = cross;
      hess->row(nv).head(nv) = cross.transpose();
      (*hess)(nv, nv) = rg2.sum();
    }
    return true;
  }

 private:
  const GroupModel& model_;
  MatrixXd Zc_;
  VectorXd l_const_;
  MatrixXd l_grad_;
};

/// min -sum_d U_d(Rhat_d) over the budget set, with Rhat_d the concave
/// minorant of member d's link rate.
class UtilityProgram final : public BarrierProgram {
 public:
  UtilityProgram(const GroupModel& model, PowerObjective kind, VectorXd v_const, MatrixXd v_grad,
                 double floor)
      : model_(model), kind_(kind), v_const_(std::move(v_const)), v_grad_(std::move(v_grad)),
        floor_(floor) {}

  Eigen::Index dimension() const override { return model_.num_vars(); }
  int num_barrier_terms() const override {
    return static_cast<int>(model_.num_members() + model_.num_vars());
  }

  VectorXd rate_minorant(const VectorXd& x) const {
    const VectorXd T = model_.log_terms(x);
    VectorXd r = -v_const_ - v_grad_ * x;
    for (Eigen::Index d = 0; d < model_.num_members(); ++d)
      for (int j : model_.member_vars()[d]) r(d) += T(j) / kLn2;
    return r;
  }

  double utility(const VectorXd& rhat) const {
    if (kind_ == PowerObjective::sum_rate) return rhat.sum();
    double u = 0;
    for (Eigen::Index d = 0; d < rhat.size(); ++d) u += std::log(rhat(d) + floor_);
    return u;
  }

  double objective(const VectorXd& x) const override { return -utility(rate_minorant(x)); }

  bool evaluate(const VectorXd& x, double t, double& value, VectorXd* grad,
                MatrixXd* hess) const override {
    const auto nv = model_.num_vars();
    const auto nd = model_.num_members();
    value = 0;
    if (grad) grad->setZero(nv);
    if (hess) hess->setZero(nv, nv);
    if (!add_budget_barrier(model_, x, value, grad, hess)) return false;
    const VectorXd lin = model_.U() * x;
    const VectorXd rhat = rate_minorant(x);
    if (kind_ == PowerObjective::proportional_fair)
      for (Eigen::Index d = 0; d < nd; ++d)
        if (!(rhat(d) + floor_ > 0)) return false;
    value -= t * utility(rhat);
    if (!grad && !hess) return true;

    const VectorXd inv = (1.0 + lin.array()).inverse().matrix();
    // Gradient of each Rhat_d and the curvature of its W terms.
    MatrixXd G = -v_grad_;
    for (Eigen::Index d = 0; d < nd; ++d)
      for (int j : model_.member_vars()[d]) G.row(d) += model_.U().row(j) * (inv(j) / kLn2);
    VectorXd weight = VectorXd::Zero(2 * nv);  // multiplies u u^T / (1+u.x)^2
    VectorXd outer = VectorXd::Zero(nd);       // multiplies grad Rhat grad Rhat^T
    VectorXd dweight(nd);                      // d utility / d Rhat_d
    for (Eigen::Index d = 0; d < nd; ++d) {
      if (kind_ == PowerObjective::sum_rate) {
        dweight(d) = 1.0;
      } else {
        const double q = rhat(d) + floor_;
        dweight(d) = 1.0 / q;
        outer(d) = 1.0 / (q * q);
      }
      for (int j : model_.member_vars()[d]) weight(j) = dweight(d) * inv(j) * inv(j) / kLn2;
    }
    if (grad) *grad -= t * (G.transpose() * dweight);
    if (hess) {
      *hess += t * (model_.U().transpose() * weight.asDiagonal() * model_.U());
      if (kind_ == PowerObjective::proportional_fair)
        *hess += t * (G.transpose() * outer.asDiagonal() * G);
    }
    return true;
  }

 private:
  const GroupModel& model_;
  PowerObjective kind_;
  VectorXd v_const_;
  MatrixXd v_grad_;
  double floor_;
};

// Pulls a point of the budget set strictly inside it.
VectorXd interior_start(const GroupModel& model, const VectorXd& x) {
  constexpr double keep = 0.999;
  VectorXd out = x;
  for (const auto& J : model.member_vars()) {
    const double center = 1.0 / (static_cast<double>(J.size()) + 1.0);
    for (int j : J) out(j) = keep * std::clamp(x(j), 0.0, 1.0) + (1.0 - keep) * center;
  }
  return out;
}

BarrierOptions barrier_options(const ScaSettings& settings) {
  BarrierOptions opt;
  opt.tol = settings.inner_solver_tol;
  opt.max_newton_steps = settings.inner_max_iters;
  return opt;
}

struct InnerStep {
  VectorXd x;
  double objective = 0;  // surrogate at x, normalized
  int newton_steps = 0;
  bool stalled = false;
};

InnerStep inner_maxmin(const GroupModel& model, const VectorXd& x_ref, double eta_n,
                       const ScaSettings& settings) {
  MatrixXd Zc, Lc;
  model.zl_coefficients(eta_n, Zc, Lc);
  const VectorXd lin = model.U() * x_ref;
  const VectorXd T = lin.array().log1p().matrix();
  const VectorXd inv = (1.0 + lin.array()).inverse().matrix();
  const MatrixXd l_grad = (Lc.array().rowwise() * inv.transpose().array()).matrix() * model.U();
  const VectorXd l_const = Lc * T - l_grad * x_ref;

  const MaxMinProgram program(model, Zc, l_const, l_grad);
  const double ref_objective = program.surrogate(x_ref).minCoeff();

  InnerStep step{x_ref, ref_objective, 0, true};
  const VectorXd x0 = interior_start(model, x_ref);
  const double s_min = program.surrogate(x0).minCoeff();
  if (!std::isfinite(s_min)) return step;
  VectorXd y0(model.num_vars() + 1);
  y0.head(model.num_vars()) = x0;
  y0(model.num_vars()) = s_min - 0.1 * std::max(1.0, std::abs(s_min));

  const auto res = solve_barrier(program, std::move(y0), barrier_options(settings));
  step.newton_steps = res.newton_steps;
  const VectorXd x = res.y.head(model.num_vars());
  const double obj = program.surrogate(x).minCoeff();
  if (obj >= ref_objective) {
    step.x = x;
    step.objective = obj;
    step.stalled = false;
  }
  return step;
}

InnerStep inner_utility(const GroupModel& model, const VectorXd& x_ref, PowerObjective kind,
                        double floor_n, const ScaSettings& settings) {
  const auto nv = model.num_vars();
  const auto nd = model.num_members();
  const VectorXd lin = model.U() * x_ref;
  const VectorXd T = lin.array().log1p().matrix();
  const VectorXd inv = (1.0 + lin.array()).inverse().matrix();
  MatrixXd v_grad = MatrixXd::Zero(nd, nv);
  VectorXd v_const = VectorXd::Zero(nd);
  for (Eigen::Index d = 0; d < nd; ++d) {
    for (int j : model.member_vars()[d]) {
      v_grad.row(d) += model.U().row(nv + j) * (inv(nv + j) / kLn2);
      v_const(d) += T(nv + j) / kLn2;
    }
  }
  v_const -= v_grad * x_ref;

  const UtilityProgram program(model, kind, v_const, v_grad, floor_n);
  const double ref_objective = -program.objective(x_ref);
  InnerStep step{x_ref, ref_objective, 0, true};
  const VectorXd x0 = interior_start(model, x_ref);
  double probe = 0;
  if (!program.evaluate(x0, 1.0, probe, nullptr, nullptr)) return step;

  const auto res = solve_barrier(program, x0, barrier_options(settings));
  step.newton_steps = res.newton_steps;
  const double obj = -res.objective;
  if (obj >= ref_objective) {
    step.x = res.y;
    step.objective = obj;
    step.stalled = false;
  }
  return step;
}

double max_abs_change(const VectorXd& a, const VectorXd& b) {
  return a.size() == 0 ? 0.0 : (a - b).cwiseAbs().maxCoeff();
}

}  // namespace

InnerResult solve_inner(const GroupProblem& problem, const DecodingOrder& order,
                        const PowerAllocation& p_ref, double eta, const ScaSettings& settings) {
  if (!(eta < problem.frequency)) throw std::domain_error("solve_inner: eta must be below F_m");
  const GroupModel model(problem, order);
  const double B = problem.bandwidth;
  const auto step = inner_maxmin(model, model.to_vars(p_ref), eta / B, settings);
  InnerResult out;
  out.powers = model.to_powers(step.x);
  out.objective = step.objective * B * B;
  out.newton_steps = step.newton_steps;
  out.stalled = step.stalled;
  return out;
}

ScaResult sca_maximin_power(const GroupProblem& problem, const DecodingOrder& order, double eta,
                            const ScaSettings& settings, const PowerAllocation* start) {
  if (!(eta < problem.frequency)) throw std::domain_error("sca_maximin_power: eta must be below F_m");
  const GroupModel model(problem, order);
  const double B = problem.bandwidth;
  const double eta_n = eta / B;
  VectorXd x = model.to_vars(start ? *start : initial_powers(problem));
  double obj = model.maxmin(x, eta_n);

  ScaResult res;
  res.objectives.push_back(obj * B * B);
  for (int it = 1; it <= settings.sca_max_iters; ++it) {
    const auto step = inner_maxmin(model, x, eta_n, settings);
    res.iterations = it;
    const double next = model.maxmin(step.x, eta_n);
    if (step.stalled || !(next >= obj)) {
      res.converged = true;
      break;
    }
    const double change = max_abs_change(step.x, x);
    x = step.x;
    obj = next;
    res.objectives.push_back(obj * B * B);
    if (change <= settings.sca_tol) {
      res.converged = true;
      break;
    }
  }
  res.powers = model.to_powers(x);
  res.objective = obj * B * B;
  return res;
}

double utility_objective(const GroupProblem& problem, const DecodingOrder& order,
                         const PowerAllocation& powers, PowerObjective objective) {
  const GroupModel model(problem, order);
  const VectorXd r = model.link_rates(model.to_vars(powers)) * problem.bandwidth;
  if (objective == PowerObjective::sum_rate) return r.sum();
  double u = 0;
  for (Eigen::Index d = 0; d < r.size(); ++d) u += std::log(r(d) + kPropFairFloor);
  return u;
}

ScaResult sca_utility_power(const GroupProblem& problem, const DecodingOrder& order,
                            PowerObjective objective, const ScaSettings& settings) {
  const GroupModel model(problem, order);
  const double B = problem.bandwidth;
  const double floor_n = kPropFairFloor / B;
  // Both utilities are evaluated on normalized rates; the log utility is
  // shifted by K ln B relative to utility_objective().
  auto value = [&](const VectorXd& x) {
    const VectorXd r = model.link_rates(x);
    if (objective == PowerObjective::sum_rate) return r.sum();
    double u = 0;
    for (Eigen::Index d = 0; d < r.size(); ++d) u += std::log(r(d) + floor_n);
    return u;
  };
  auto to_si = [&](double v) {
    return objective == PowerObjective::sum_rate
               ? v * B
               : v + static_cast<double>(problem.size()) * std::log(B);
  };

  VectorXd x = model.to_vars(initial_powers(problem));
  double obj = value(x);
  ScaResult res;
  res.objectives.push_back(to_si(obj));
  for (int it = 1; it <= settings.sca_max_iters; ++it) {
    const auto step = inner_utility(model, x, objective, floor_n, settings);
    res.iterations = it;
    const double next = value(step.x);
    if (step.stalled || !(next >= obj)) {
      res.converged = true;
      break;
    }
    const double change = max_abs_change(step.x, x);
    x = step.x;
    obj = next;
    res.objectives.push_back(to_si(obj));
    if (change <= settings.sca_tol) {
      res.converged = true;
      break;
    }
  }
  res.powers = model.to_powers(x);
  res.objective = to_si(obj);
  return res;
}

// ---------------------------------------------------------------------------
// Decoding orders

DecodingOrder init_decoding_order(const GroupProblem& problem) {
  DecodingOrder order(problem.num_devices);
  for (int n : problem.channels()) {
    std::vector<GroupMember> on;
    for (const auto& mem : problem.members)
      if (mem.channel == n) on.push_back(mem);
    std::stable_sort(on.begin(), on.end(), [](const GroupMember& a, const GroupMember& b) {
      if (a.gain != b.gain) return a.gain > b.gain;
      return a.device < b.device;
    });
    std::vector<SubMessage> seq;
    for (int i = 0; i < 2; ++i)
      for (const auto& mem : on) seq.push_back({mem.device, i});
    order.assign(seq);
  }
  return order;
}

DecodingOrder order_from_powers(const GroupProblem& problem, const PowerAllocation& powers) {
  DecodingOrder order(problem.num_devices);
  for (int n : problem.channels()) {
    struct Item {
      SubMessage msg;
      double received;
    };
    std::vector<Item> items;
    for (const auto& mem : problem.members)
      if (mem.channel == n)
        for (int i = 0; i < 2; ++i) items.push_back({{mem.device, i}, mem.gain * powers(mem.device, i)});
    std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
      if (a.received != b.received) return a.received > b.received;
      return a.msg < b.msg;
    });
    std::vector<SubMessage> seq;
    for (const auto& it : items) seq.push_back(it.msg);
    order.assign(seq);
  }
  return order;
}

// ---------------------------------------------------------------------------
// Alternating optimization and bisection

bool is_feasible_objective(const GroupProblem& problem, double objective, double eta) {
  // margin of 1e-9 F_m in normalized units, scaled back to bits^2/s^2
  const double B = problem.bandwidth;
  const double margin = 1e-9 * problem.frequency / B * B * B;
  return objective >= eta * problem.frequency - margin;
}

AlternatingResult alternating_power_order(const GroupProblem& problem, double eta,
                                          const ScaSettings& settings,
                                          const PowerAllocation* start) {
  AlternatingResult res;
  res.objective = -std::numeric_limits<double>::infinity();
  DecodingOrder order = init_decoding_order(problem);
  const double B = problem.bandwidth;
  for (int round = 1; round <= settings.alt_max_iters; ++round) {
    const auto sca = sca_maximin_power(problem, order, eta, settings, start);
    res.rounds = round;
    res.sca_iterations.push_back(sca.iterations);
    const bool feasible = is_feasible_objective(problem, sca.objective, eta);
    if (settings.record_trace) {
      for (std::size_t i = 0; i < sca.objectives.size(); ++i)
        res.trace.push_back({eta, problem.server, round, static_cast<int>(i),
                             sca.objectives[i] / (B * B),
                             is_feasible_objective(problem, sca.objectives[i], eta)});
    }
    if (sca.objective > res.objective) {
      res.objective = sca.objective;
      res.powers = sca.powers;
      res.order = order;
    }
    if (feasible) {
      res.feasible = true;
      break;
    }
    if (problem.single_message) break;
    auto next = order_from_powers(problem, sca.powers);
    if (next == order) break;
    order = std::move(next);
  }
  return res;
}

Solution bisection_mcor(const Scenario& scenario, const Allocation& allocation,
                        const ScaSettings& settings, bool single_message,
                        const FeasibilityCheck& check) {
  settings.validate();
  if (!is_valid(allocation)) throw std::invalid_argument("bisection_mcor: invalid allocation");
  const int K = scenario.num_devices();

  std::vector<GroupProblem> problems;
  for (int m = 0; m < scenario.num_servers(); ++m) {
    auto p = GroupProblem::build(scenario, allocation, m, single_message);
    if (p.size() > 0) problems.push_back(std::move(p));
  }

  struct ServerState {
    PowerAllocation powers;
    DecodingOrder order;
  };
  std::vector<ServerState> best;
  double eta_max = std::numeric_limits<double>::infinity();
  for (const auto& p : problems) {
    best.push_back({initial_powers(p), init_decoding_order(p)});
    eta_max = std::min({eta_max, p.frequency * (1 - 1e-9), p.min_single_user_capacity()});
  }

  Solution sol;
  sol.allocation = allocation;
  const auto feasibility = [&](const GroupProblem& p, double eta, const PowerAllocation* start) {
    return check ? check(p, eta, start) : alternating_power_order(p, eta, settings, start);
  };

  double lo = 0;
  if (!problems.empty() && eta_max > 0) {
    double hi = eta_max;
    const double eps = settings.bisection_tol * eta_max;
    std::vector<std::size_t> visit(problems.size());
    for (std::size_t i = 0; i < visit.size(); ++i) visit[i] = i;
    while (hi - lo > eps) {
      const double eta = 0.5 * (lo + hi);
      std::vector<ServerState> current(problems.size());
      bool ok = true;
      for (std::size_t pos = 0; pos < visit.size(); ++pos) {
        const std::size_t idx = visit[pos];
        const auto r = feasibility(problems[idx], eta, settings.warm_start ? &best[idx].powers : nullptr);
        sol.sca_iterations.insert(sol.sca_iterations.end(), r.sca_iterations.begin(), r.sca_iterations.end());
        if (settings.record_trace) sol.trace.insert(sol.trace.end(), r.trace.begin(), r.trace.end());
        if (!r.feasible) {
          ok = false;
          // check the binding server first next time
          std::rotate(visit.begin(), visit.begin() + static_cast<std::ptrdiff_t>(pos),
                      visit.begin() + static_cast<std::ptrdiff_t>(pos) + 1);
          break;
        }
        current[idx] = {r.powers, r.order};
      }
      if (ok) {
        lo = eta;
        best = std::move(current);
      } else {
        hi = eta;
      }
    }
  }

  sol.order = DecodingOrder(K);
  sol.powers = PowerAllocation(K);
  for (std::size_t i = 0; i < problems.size(); ++i) {
    for (const auto& mem : problems[i].members) {
      for (int part = 0; part < 2; ++part) {
        sol.order.set_rank({mem.device, part}, best[i].order.rank(mem.device, part));
        sol.powers(mem.device, part) = best[i].powers(mem.device, part);
      }
    }
  }
  sol.eta = lo;
  evaluate_solution(scenario, sol);
  return sol;
}

}  // namespace rsmamec
