#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "jacobians.hpp"
#include "odesens/ad/forward.hpp"
#include "odesens/errors.hpp"
#include "odesens/ode/integrator.hpp"
#include "odesens/ode/linear_solve.hpp"
#include "odesens/ode/solve.hpp"
#include "odesens/sensitivity/sensitivity.hpp"

namespace odesens::sens {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_out_times(const ode::ODEProblem& prob, std::span<const double> times) {
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (!(times[k] >= prob.t0 && times[k] <= prob.tf)) throw RangeError("output time outside the problem time span");
    if (k > 0 && !(times[k] > times[k - 1])) throw ConfigError("output times must be strictly increasing");
  }
}

SensitivityResult empty_result(const ode::ODEProblem& prob, std::span<const double> times) {
  SensitivityResult r;
  r.times.assign(times.begin(), times.end());
  r.n_states = prob.u0.size();
  r.n_params = prob.p.size();
  r.values.assign(times.size(), std::vector<double>(r.n_states, kNaN));
  r.sens.assign(times.size() * r.n_states * r.n_params, kNaN);
  r.valid_columns.assign(r.n_params, true);
  return r;
}

void note_failure(SensitivityResult& r, ode::ReturnCode rc) {
  if (r.retcode == ode::ReturnCode::success) r.retcode = rc;
}

/**
 * u' = f(u, p, t) extended with S_j' = (df/du) S_j + df/dp_j. The state is
 * [u, S_0, ..., S_{P-1}], so the S block is an n x P column-major matrix.
 *
 * For the stiff integrator the extended Jacobian is block lower triangular
 * with J on the diagonal, so W is never formed: the u block is solved with
 * W0 = I/(h gamma) - J, and each S block with the same factors after adding
 * the coupling term (d/du of the S right-hand side) applied to the u-block
 * solution, which is taken by a directional finite difference.
 */
class CsaSystem {
 public:
  using scalar_type = double;

  CsaSystem(const ode::ODEProblem& prob, CsaJacobian jac, bool norm_includes_partials)
      : prob_(&prob),
        jac_(jac),
        p_(prob.p),
        n_(prob.u0.size()),
        np_(prob.p.size()),
        norm_all_(norm_includes_partials) {}

  [[nodiscard]] std::size_t size() const noexcept { return n_ * (1 + np_); }
  [[nodiscard]] std::size_t event_state_size() const noexcept { return n_; }
  [[nodiscard]] std::size_t error_state_size() const noexcept { return norm_all_ ? size() : n_; }
  [[nodiscard]] std::span<double> params() noexcept { return p_; }
  [[nodiscard]] std::span<const ode::EventSpec> events() const noexcept { return prob_->events; }
  [[nodiscard]] std::size_t jacobian_evaluations() const noexcept { return njac_; }

  void rhs(std::span<double> dU, std::span<const double> U, double t) {
    prob_->rhs(dU.first(n_), U.first(n_), std::span<const double>(p_), t);
    sens_block(dU.subspan(n_), U, t);
  }

  void update_jacobian(std::span<const double> U, double t) {
    const std::span<const double> u = U.first(n_);
    j0_ = detail::state_jacobian(*prob_, u, p_, t, use_analytic());
    ++njac_;
    ujac_.assign(U.begin(), U.end());
    tjac_ = t;
    g0_.resize(n_ * np_);
    sens_block(g0_, ujac_, t);
  }

  void time_derivative(std::span<double> out, std::span<const double> U, double t, ode::SolverStats& stats) {
    if (prob_->autonomous) {
      std::fill(out.begin(), out.end(), 0.0);
      return;
    }
    const double dt = std::sqrt(std::numeric_limits<double>::epsilon()) * std::max(1.0, std::abs(t));
    std::vector<double> f0(size());
    rhs(f0, U, t);
    rhs(out, U, t + dt);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (out[i] - f0[i]) / dt;
    stats.nf += 2;
  }

  void factorize(double inv_hgamma) {
    Eigen::MatrixXd w = -j0_;
    w.diagonal().array() += inv_hgamma;
    lu_.factorize(w);
  }

  void solve(std::span<double> b) {
    std::span<double> x0 = b.first(n_);
    lu_.solve(x0);
    if (np_ == 0) return;
    double xnorm = 0.0;
    double unorm = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      xnorm = std::max(xnorm, std::abs(x0[i]));
      unorm = std::max(unorm, std::abs(ujac_[i]));
    }
    if (xnorm > 0.0) {
      const double eps = std::sqrt(std::numeric_limits<double>::epsilon()) * std::max(1.0, unorm) / xnorm;
      std::vector<double> up(ujac_);
      for (std::size_t i = 0; i < n_; ++i) up[i] += eps * x0[i];
      std::vector<double> gp(n_ * np_);
      sens_block(gp, up, tjac_);
      for (std::size_t k = 0; k < gp.size(); ++k) b[n_ + k] += (gp[k] - g0_[k]) / eps;
    }
    Eigen::Map<Eigen::MatrixXd> s(b.data() + n_, static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(np_));
    lu_.solve(Eigen::Ref<Eigen::MatrixXd>(s));
  }

 private:
  [[nodiscard]] bool use_analytic() const noexcept { return jac_ == CsaJacobian::user; }

  // out = (df/du) S + df/dp at the u part of U, as an n x P column-major block.
  void sens_block(std::span<double> out, std::span<const double> U, double t) {
    if (np_ == 0) return;
    const std::span<const double> u = U.first(n_);
    const auto n = static_cast<Eigen::Index>(n_);
    const auto np = static_cast<Eigen::Index>(np_);
    Eigen::Map<const Eigen::MatrixXd> s(U.data() + n_, n, np);
    Eigen::Map<Eigen::MatrixXd> ds(out.data(), n, np);
    if (jac_ == CsaJacobian::ad_jv) {
      // One width-1 evaluation per column: u seeded with S_j, p_j seeded with 1.
      std::vector<Dual> ud(n_), pd(np_), fd(n_);
      for (std::size_t j = 0; j < np_; ++j) {
        for (std::size_t i = 0; i < n_; ++i) {
          const double sij = s(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
          ud[i] = Dual(u[i], std::span<const double>(&sij, 1));
        }
        for (std::size_t k = 0; k < np_; ++k) pd[k] = k == j ? Dual::variable(p_[k], 1, 0) : Dual(p_[k]);
        prob_->rhs(std::span<Dual>(fd), std::span<const Dual>(ud), std::span<const Dual>(pd), Dual(t));
        for (std::size_t i = 0; i < n_; ++i) ds(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = fd[i].partial(0);
      }
      return;
    }
    const Eigen::MatrixXd jac = detail::state_jacobian(*prob_, u, p_, t, use_analytic());
    const Eigen::MatrixXd fp = detail::param_jacobian(*prob_, u, p_, t, use_analytic());
    ++njac_;
    ds.noalias() = jac * s;
    ds += fp;
  }

  const ode::ODEProblem* prob_;
  CsaJacobian jac_;
  std::vector<double> p_;
  std::size_t n_;
  std::size_t np_;
  bool norm_all_;
  std::size_t njac_ = 0;
  Eigen::MatrixXd j0_;
  std::vector<double> ujac_;
  double tjac_ = 0.0;
  std::vector<double> g0_;
  ode::DenseLU lu_;
};

ode::Solution<double> solve_at(const ode::ODEProblem& prob, std::vector<double> p, const ode::IntegratorConfig& cfg,
                               std::span<const double> times) {
  ode::SolveOptions opts;
  opts.saveat.assign(times.begin(), times.end());
  opts.dense = false;
  return ode::solve<double>(prob, prob.u0, std::move(p), cfg, opts);
}

}  // namespace

SensitivityResult dsaad_forward(const ode::ODEProblem& prob, const ode::IntegratorConfig& cfg,
                                std::span<const double> out_times, std::size_t chunk) {
  check_out_times(prob, out_times);
  SensitivityResult r = empty_result(prob, out_times);
  const std::size_t n = r.n_states;
  const std::size_t np = r.n_params;
  const std::size_t width = chunk == 0 ? SeedPlan::default_chunk(np) : chunk;
  const std::size_t nchunks = np == 0 ? 1 : SeedPlan::chunk_count(np, width);

  ode::SolveOptions opts;
  opts.saveat.assign(out_times.begin(), out_times.end());
  opts.dense = false;
  for (std::size_t c = 0; c < nchunks; ++c) {
    SeedPlan plan{np, width, c};
    std::size_t w = 0;
    if (np > 0) {
      plan.validate();
      w = plan.width();
    }
    std::vector<Dual> pd(np);
    for (std::size_t j = 0; j < np; ++j) {
      const bool seeded = j >= plan.first() && j < plan.first() + w;
      pd[j] = seeded ? Dual::variable(prob.p[j], w, j - plan.first()) : Dual(prob.p[j]);
    }
    auto sol = ode::solve<Dual>(prob, to_duals(prob.u0), std::move(pd), cfg, opts);
    r.stats.solver += sol.stats;
    ++r.stats.nsolves;
    if (!sol.success()) note_failure(r, sol.retcode);
    for (std::size_t k = 0; k < sol.saved_us.size() && k < out_times.size(); ++k) {
      const auto& x = sol.saved_us[k];
      for (std::size_t i = 0; i < n; ++i) {
        if (c == 0) r.values[k][i] = x[i].value();
        for (std::size_t q = 0; q < w; ++q) r.at(k, i, plan.first() + q) = x[i].partial(q);
      }
    }
  }
  return r;
}

SensitivityResult csa_forward(const ode::ODEProblem& prob, const ode::IntegratorConfig& cfg,
                              std::span<const double> out_times, CsaJacobian jac) {
  check_out_times(prob, out_times);
  if (jac == CsaJacobian::user && (!prob.state_jacobian || !prob.param_jacobian)) {
    throw ConfigError("csa-user requires analytic state and parameter Jacobians");
  }
  SensitivityResult r = empty_result(prob, out_times);
  const std::size_t n = r.n_states;
  const std::size_t np = r.n_params;
  if (!prob.events.empty()) r.warnings.emplace_back(kCsaEventWarning);

  CsaSystem sys(prob, jac, cfg.norm_includes_partials);
  std::vector<double> U0(sys.size(), 0.0);
  std::copy(prob.u0.begin(), prob.u0.end(), U0.begin());
  ode::SolveOptions opts;
  opts.saveat.assign(out_times.begin(), out_times.end());
  opts.dense = false;
  auto sol = cfg.stiff ? ode::integrate<ode::Rodas4Stepper>(sys, std::move(U0), prob.t0, prob.tf, prob.tstops, cfg, opts)
                       : ode::integrate<ode::Tsit5Stepper>(sys, std::move(U0), prob.t0, prob.tf, prob.tstops, cfg, opts);
  r.stats.solver += sol.stats;
  r.stats.solver.nJ += sys.jacobian_evaluations() - (cfg.stiff ? sol.stats.nJ : 0);
  r.stats.nsolves = 1;
  if (!sol.success()) note_failure(r, sol.retcode);
  for (std::size_t k = 0; k < sol.saved_us.size() && k < out_times.size(); ++k) {
    const auto& x = sol.saved_us[k];
    for (std::size_t i = 0; i < n; ++i) {
      r.values[k][i] = x[i];
      for (std::size_t j = 0; j < np; ++j) r.at(k, i, j) = x[n + j * n + i];
    }
  }
  return r;
}

SensitivityResult numdiff(const ode::ODEProblem& prob, const ode::IntegratorConfig& cfg,
                          std::span<const double> out_times, NumdiffScheme scheme) {
  check_out_times(prob, out_times);
  SensitivityResult r = empty_result(prob, out_times);
  const std::size_t n = r.n_states;
  const std::size_t np = r.n_params;
  const std::size_t nt = out_times.size();
  constexpr double eps = std::numeric_limits<double>::epsilon();
  const double rel_step = scheme == NumdiffScheme::forward ? std::sqrt(eps) : std::cbrt(eps);

  auto run = [&](std::vector<double> p) {
    auto sol = solve_at(prob, std::move(p), cfg, out_times);
    r.stats.solver += sol.stats;
    ++r.stats.nsolves;
    return sol;
  };
  auto complete = [nt](const ode::Solution<double>& s) { return s.success() && s.saved_us.size() == nt; };
  auto invalidate = [&](std::size_t j) {
    r.valid_columns[j] = false;
    r.warnings.push_back("perturbed solve failed for parameter " + std::to_string(j));
  };

  std::optional<ode::Solution<double>> base;
  if (scheme == NumdiffScheme::forward || np == 0) {
    base = run(prob.p);
    if (!complete(*base)) {
      note_failure(r, base->success() ? ode::ReturnCode::domain_error : base->retcode);
      return r;
    }
    for (std::size_t k = 0; k < nt; ++k) r.values[k] = base->saved_us[k];
  }

  bool have_values = base.has_value();
  for (std::size_t j = 0; j < np; ++j) {
    const double step = rel_step * std::max(std::abs(prob.p[j]), 1.0);
    std::vector<double> pp = prob.p;
    pp[j] += step;
    const double up_step = pp[j] - prob.p[j];
    auto plus = run(pp);
    if (scheme == NumdiffScheme::forward) {
      if (!complete(plus)) {
        invalidate(j);
        continue;
      }
      for (std::size_t k = 0; k < nt; ++k) {
        for (std::size_t i = 0; i < n; ++i) r.at(k, i, j) = (plus.saved_us[k][i] - base->saved_us[k][i]) / up_step;
      }
      continue;
    }
    std::vector<double> pm = prob.p;
    pm[j] -= step;
    const double width = up_step + (prob.p[j] - pm[j]);
    auto minus = run(pm);
    if (!complete(plus) || !complete(minus)) {
      invalidate(j);
      continue;
    }
    for (std::size_t k = 0; k < nt; ++k) {
      for (std::size_t i = 0; i < n; ++i) {
        r.at(k, i, j) = (plus.saved_us[k][i] - minus.saved_us[k][i]) / width;
        if (!have_values) r.values[k][i] = 0.5 * (plus.saved_us[k][i] + minus.saved_us[k][i]);
      }
    }
    have_values = true;
  }
  if (!have_values) note_failure(r, ode::ReturnCode::domain_error);
  return r;
}

SensitivityResult forward_sensitivities(const ode::ODEProblem& prob, const ode::IntegratorConfig& cfg,
                                        std::span<const double> out_times, const SensitivityMethod& method) {
  switch (method.kind) {
    case SensitivityMethod::Kind::dsaad: return dsaad_forward(prob, cfg, out_times, method.chunk);
    case SensitivityMethod::Kind::csa: return csa_forward(prob, cfg, out_times, method.csa_jacobian);
    case SensitivityMethod::Kind::numdiff: return numdiff(prob, cfg, out_times, method.scheme);
    case SensitivityMethod::Kind::casa: break;
  }
  throw ConfigError("adjoint methods produce gradients, not sensitivity trajectories");
}

}  // namespace odesens::sens
