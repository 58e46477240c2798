#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "jacobians.hpp"
#include "odesens/ad/reverse.hpp"
#include "odesens/errors.hpp"
#include "odesens/ode/integrator.hpp"
#include "odesens/ode/linear_solve.hpp"
#include "odesens/ode/solve.hpp"
#include "odesens/quad/gauss_kronrod.hpp"
#include "odesens/sensitivity/sensitivity.hpp"

namespace odesens::sens {

namespace {

/// Left-continuous evaluation of the forward solution: at an event time this
/// is the pre-event state, which is what a backward sweep arriving from the
/// right sees.
void forward_state(const ode::Solution<double>& sol, double t, std::span<double> out) {
  if (!(t >= sol.ts.front() && t <= sol.ts.back())) throw RangeError("adjoint: time outside the forward solution");
  const auto it = std::lower_bound(sol.ts.begin(), sol.ts.end(), t);
  const auto k = static_cast<std::size_t>(it - sol.ts.begin());
  if (k == 0) {
    std::copy(sol.us[0].begin(), sol.us[0].end(), out.begin());
    return;
  }
  sol.dense[k - 1].evaluate(t, out);
}

/// Vector-Jacobian products v'(df/du) and v'(df/dp) along the forward solution.
class Pullback {
 public:
  Pullback(const ode::ODEProblem& prob, VjpStrategy strategy) : prob_(&prob), strategy_(strategy), tapes_(prob.rhs) {}

  void state(std::span<double> out, std::span<const double> v, std::span<const double> u,
             std::span<const double> p, double t) {
    if (strategy_ == VjpStrategy::reverse_tape) {
      const auto r = vjp(tapes_.at(u, p, t), v);
      std::copy(r.state.begin(), r.state.end(), out.begin());
      return;
    }
    const Eigen::MatrixXd j = detail::state_jacobian(*prob_, u, p, t, analytic());
    ++njac_;
    Eigen::Map<Eigen::VectorXd>(out.data(), static_cast<Eigen::Index>(out.size())).noalias() =
        j.transpose() * Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  }

  void params(std::span<double> out, std::span<const double> v, std::span<const double> u,
              std::span<const double> p, double t) {
    if (out.empty()) return;
    if (strategy_ == VjpStrategy::reverse_tape) {
      const auto r = vjp(tapes_.at(u, p, t), v);
      std::copy(r.params.begin(), r.params.end(), out.begin());
      return;
    }
    const Eigen::MatrixXd j = detail::param_jacobian(*prob_, u, p, t, analytic());
    ++njac_;
    Eigen::Map<Eigen::VectorXd>(out.data(), static_cast<Eigen::Index>(out.size())).noalias() =
        j.transpose() * Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  }

  /// Full df/du, for the stiff backward solve.
  Eigen::MatrixXd jacobian(std::span<const double> u, std::span<const double> p, double t) {
    ++njac_;
    if (strategy_ != VjpStrategy::reverse_tape) return detail::state_jacobian(*prob_, u, p, t, analytic());
    const std::size_t n = u.size();
    Eigen::MatrixXd j(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    Tape& tape = tapes_.at(u, p, t);
    std::vector<double> e(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      e[i] = 1.0;
      const auto r = vjp(tape, e);
      for (std::size_t k = 0; k < n; ++k) j(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = r.state[k];
      e[i] = 0.0;
    }
    return j;
  }

  [[nodiscard]] std::size_t jacobian_evaluations() const noexcept { return njac_; }

 private:
  [[nodiscard]] bool analytic() const noexcept { return strategy_ == VjpStrategy::user_jacobian_transpose; }

  const ode::ODEProblem* prob_;
  VjpStrategy strategy_;
  TapeCache tapes_;
  std::size_t njac_ = 0;
};

/**
 * The adjoint equation in reversed time s = -t: d(lambda)/ds = J(u(-s))' lambda.
 */
class AdjointSystem {
 public:
  using scalar_type = double;

  AdjointSystem(const ode::Solution<double>& fwd, std::span<const double> p, Pullback& pull)
      : fwd_(&fwd), p_(p.begin(), p.end()), pull_(&pull), u_(fwd.state_size()) {}

  [[nodiscard]] std::size_t size() const noexcept { return u_.size(); }
  [[nodiscard]] std::size_t event_state_size() const noexcept { return size(); }
  [[nodiscard]] std::size_t error_state_size() const noexcept { return size(); }
  [[nodiscard]] std::span<double> params() noexcept { return p_; }
  [[nodiscard]] std::span<const ode::EventSpec> events() const noexcept { return {}; }

  void rhs(std::span<double> dl, std::span<const double> l, double s) {
    forward_state(*fwd_, -s, u_);
    pull_->state(dl, l, u_, p_, -s);
  }

  void update_jacobian(std::span<const double>, double s) {
    forward_state(*fwd_, -s, u_);
    jac_ = pull_->jacobian(u_, p_, -s).transpose();
  }

  // Even for an autonomous problem the adjoint field depends on s through u(-s).
  void time_derivative(std::span<double> out, std::span<const double> l, double s, ode::SolverStats& stats) {
    const double t = -s;
    double ds = std::sqrt(std::numeric_limits<double>::epsilon()) * std::max(1.0, std::abs(s));
    if (t - ds < fwd_->ts.front()) ds = -ds;
    std::vector<double> f0(size());
    rhs(f0, l, s);
    rhs(out, l, s + ds);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (out[i] - f0[i]) / ds;
    stats.nf += 2;
  }

  void factorize(double inv_hgamma) {
    Eigen::MatrixXd w = -jac_;
    w.diagonal().array() += inv_hgamma;
    lu_.factorize(w);
  }

  void solve(std::span<double> b) { lu_.solve(b); }

 private:
  const ode::Solution<double>* fwd_;
  std::vector<double> p_;
  Pullback* pull_;
  std::vector<double> u_;
  Eigen::MatrixXd jac_;
  ode::DenseLU lu_;
};

}  // namespace

GradientResult casa_adjoint(const ode::ODEProblem& prob, const ode::IntegratorConfig& cfg, const CostSpec& cost,
                            const AdjointOptions& opts) {
  cost.validate(prob.t0, prob.tf);
  const std::size_t n = prob.u0.size();
  const std::size_t np = prob.p.size();
  if (opts.vjp == VjpStrategy::user_jacobian_transpose && (!prob.state_jacobian || !prob.param_jacobian)) {
    throw ConfigError("casa-user requires analytic state and parameter Jacobians");
  }
  if (!opts.du0_dp.empty() && opts.du0_dp.size() != n * np) throw ConfigError("du0_dp must be n x P");

  GradientResult res;
  res.grad.assign(np, std::numeric_limits<double>::quiet_NaN());
  res.cost = std::numeric_limits<double>::quiet_NaN();
  if (!prob.events.empty()) res.warnings.emplace_back("adjoint gradient does not account for event sensitivities");

  // Forward pass with dense output, stepping exactly onto every data time.
  ode::ODEProblem fprob = prob;
  fprob.tstops.insert(fprob.tstops.end(), cost.times.begin(), cost.times.end());
  ode::SolveOptions fopts;
  fopts.dense = true;
  const auto fwd = ode::solve<double>(fprob, prob.u0, prob.p, cfg, fopts);
  res.stats.solver += fwd.stats;
  ++res.stats.nsolves;
  if (!fwd.success()) {
    res.retcode = fwd.retcode;
    return res;
  }

  // Knots: data times, discontinuities and the interval ends.
  std::vector<double> knots = {prob.t0, prob.tf};
  knots.insert(knots.end(), cost.times.begin(), cost.times.end());
  knots.insert(knots.end(), fwd.event_times.begin(), fwd.event_times.end());
  for (double s : prob.tstops) {
    if (s > prob.t0 && s < prob.tf) knots.push_back(s);
  }
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end()), knots.end());

  std::vector<double> u(n), g(n), lambda(n, 0.0);
  double total_cost = 0.0;
  std::size_t next_data = cost.times.size();
  auto add_jump = [&](double t) {
    if (next_data == 0 || cost.times[next_data - 1] != t) return;
    --next_data;
    const auto ut = ode::interpolate(fwd, t);
    total_cost += cost.cost(next_data, ut);
    cost.gradient(next_data, ut, g);
    for (std::size_t i = 0; i < n; ++i) lambda[i] += g[i];
  };

  Pullback pull(prob, opts.vjp);
  AdjointSystem adj(fwd, prob.p, pull);
  std::vector<double> grad(np, 0.0), fp(np);
  ode::SolveOptions bopts;
  bopts.dense = true;

  add_jump(knots.back());
  for (std::size_t k = knots.size() - 1; k-- > 0;) {
    const double ta = knots[k];
    const double tb = knots[k + 1];
    const auto back = cfg.stiff ? ode::integrate<ode::Rodas4Stepper>(adj, lambda, -tb, -ta, {}, cfg, bopts)
                                : ode::integrate<ode::Tsit5Stepper>(adj, lambda, -tb, -ta, {}, cfg, bopts);
    res.stats.solver += back.stats;
    if (!back.success()) {
      res.retcode = back.retcode;
      return res;
    }
    std::vector<double> lt(n), ut(n);
    auto integrand = [&](double t, std::span<double> out) {
      ode::interpolate(back, std::clamp(-t, -tb, -ta), std::span<double>(lt));
      forward_state(fwd, t, ut);
      pull.params(out, lt, ut, prob.p, t);
    };
    if (np > 0) {
      quad::AdaptiveOptions qo;
      qo.rtol = opts.quad_rtol;
      qo.atol = opts.quad_atol;
      qo.segment_id = k;
      const auto q = quad::adaptive(integrand, np, ta, tb, qo);
      res.stats.solver.nf += q.nevals;
      for (std::size_t j = 0; j < np; ++j) grad[j] += q.value[j];
    }
    lambda = back.us.back();
    add_jump(ta);
  }
  ++res.stats.nsolves;

  if (!opts.du0_dp.empty()) {
    for (std::size_t j = 0; j < np; ++j) {
      for (std::size_t i = 0; i < n; ++i) grad[j] += lambda[i] * opts.du0_dp[i * np + j];
    }
  }
  res.stats.solver.nJ += pull.jacobian_evaluations();
  res.grad = std::move(grad);
  res.cost = total_cost;
  return res;
}

}  // namespace odesens::sens
