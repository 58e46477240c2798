#include "odesens/ode/solve.hpp"

#include <boost/math/tools/toms748_solve.hpp>
#include <cmath>
#include <cstdint>
#include <limits>

namespace odesens::ode {

const char* to_string(ReturnCode rc) noexcept {
  switch (rc) {
    case ReturnCode::success: return "success";
    case ReturnCode::maxiters: return "maxiters";
    case ReturnCode::dtmin: return "dtmin";
    case ReturnCode::domain_error: return "domain_error";
  }
  return "?";
}

void IntegratorConfig::validate() const {
  if (!(abstol > 0.0)) throw ConfigError("abstol must be positive");
  if (!(reltol > 0.0 && reltol < 1.0)) throw ConfigError("reltol must lie in (0, 1)");
  if (dtmin < 0.0) throw ConfigError("dtmin must be non-negative");
  if (!(dtmax > 0.0) || !(dtmin < dtmax)) throw ConfigError("dtmin must be less than dtmax");
  if (max_steps == 0) throw ConfigError("max_steps must be positive");
  if (!(controller.qmin > 0.0 && controller.qmin < 1.0 && controller.qmax > 1.0)) {
    throw ConfigError("controller limits must satisfy 0 < qmin < 1 < qmax");
  }
  if (!(controller.safety > 0.0 && controller.safety <= 1.0)) throw ConfigError("controller safety must lie in (0, 1]");
}

void ODEProblem::validate() const {
  if (!rhs) throw ConfigError("problem has no right-hand side");
  if (!(t0 < tf)) throw ConfigError("problem time span must satisfy t0 < tf");
  std::vector<double> du(u0.size(), std::numeric_limits<double>::quiet_NaN());
  rhs(std::span<double>(du), std::span<const double>(u0), std::span<const double>(p), t0);
  for (double x : du) {
    if (std::isnan(x)) throw ConfigError("right-hand side did not write every component at (u0, p, t0)");
  }
}

std::optional<double> locate_root(const std::function<double(double)>& g, double t_lo, double t_hi, double g_lo,
                                  double g_hi, double root_tol) {
  if (!(t_lo < t_hi)) throw ConfigError("locate_root: empty bracket");
  if (g_hi == 0.0) return t_hi;
  if (g_lo == 0.0 || (g_lo < 0.0) == (g_hi < 0.0)) return std::nullopt;
  const double tol = root_tol > 0.0
                         ? root_tol
                         : 10.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(t_lo), std::abs(t_hi));
  auto done = [tol](double a, double b) { return std::abs(b - a) <= tol; };
  std::uintmax_t max_iter = 200;
  const auto [a, b] = boost::math::tools::toms748_solve(g, t_lo, t_hi, g_lo, g_hi, done, max_iter);
  if (!done(a, b) && max_iter >= 200) throw RootFindError("event root finding did not converge");
  (void)a;
  return b;
}

std::optional<double> locate_event(const std::function<double(double)>& g, double t_lo, double t_hi,
                                   double root_tol) {
  return locate_root(g, t_lo, t_hi, g(t_lo), g(t_hi), root_tol);
}

template <class T>
Solution<T> solve(const ODEProblem& prob, std::vector<T> u0, std::vector<T> p, const IntegratorConfig& cfg,
                  const SolveOptions& opts) {
  if (u0.size() != prob.u0.size()) throw ConfigError("initial state has the wrong size");
  ProblemSystem<T> sys(prob, std::move(p));
  if (cfg.stiff) return integrate<Rodas4Stepper>(sys, std::move(u0), prob.t0, prob.tf, prob.tstops, cfg, opts);
  return integrate<Tsit5Stepper>(sys, std::move(u0), prob.t0, prob.tf, prob.tstops, cfg, opts);
}

template Solution<double> solve<double>(const ODEProblem&, std::vector<double>, std::vector<double>,
                                        const IntegratorConfig&, const SolveOptions&);
template Solution<Dual> solve<Dual>(const ODEProblem&, std::vector<Dual>, std::vector<Dual>, const IntegratorConfig&,
                                    const SolveOptions&);

Solution<double> solve(const ODEProblem& prob, const IntegratorConfig& cfg, const SolveOptions& opts) {
  return solve<double>(prob, prob.u0, prob.p, cfg, opts);
}

Solution<double> solve_explicit(const ODEProblem& prob, const IntegratorConfig& cfg, const SolveOptions& opts) {
  IntegratorConfig c = cfg;
  c.stiff = false;
  return solve(prob, c, opts);
}

Solution<double> solve_stiff(const ODEProblem& prob, const IntegratorConfig& cfg, const SolveOptions& opts) {
  IntegratorConfig c = cfg;
  c.stiff = true;
  return solve(prob, c, opts);
}

}  // namespace odesens::ode
