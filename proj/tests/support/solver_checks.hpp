#pragma once

// Solver properties shared by the unit tests and the acceptance run.

#include <cmath>
#include <vector>

#include "odesens/models/models.hpp"
#include "odesens/ode/solve.hpp"

namespace odesens::testing {

struct OrderStudy {
  std::vector<double> tols;
  std::vector<double> steps;   // accepted steps
  std::vector<double> errors;  // |u(tf) - exp(-tf)|
  double order = 0.0;          // -slope of log(error) against log(steps)
  bool monotone = true;        // error strictly decreases as the tolerance tightens
};

inline OrderStudy explicit_order_study(double tf = 10.0) {
  ode::ODEProblem prob;
  prob.rhs = VectorField([](auto du, auto u, auto, const auto&) { du[0] = -u[0]; });
  prob.u0 = {1.0};
  prob.tf = tf;
  prob.autonomous = true;
  OrderStudy s;
  for (int e = 4; e <= 10; ++e) {
    const double tol = std::pow(10.0, -e);
    const auto sol = ode::solve_explicit(prob, ode::IntegratorConfig::with_tol(tol));
    s.tols.push_back(tol);
    s.steps.push_back(static_cast<double>(sol.stats.naccept));
    s.errors.push_back(std::abs(sol.us.back()[0] - std::exp(-tf)));
    if (s.errors.size() > 1 && !(s.errors.back() < s.errors[s.errors.size() - 2])) s.monotone = false;
  }
  double mx = 0.0, my = 0.0;
  const auto n = static_cast<double>(s.tols.size());
  for (std::size_t k = 0; k < s.tols.size(); ++k) {
    mx += std::log(s.steps[k]) / n;
    my += std::log(s.errors[k]) / n;
  }
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t k = 0; k < s.tols.size(); ++k) {
    sxy += (std::log(s.steps[k]) - mx) * (std::log(s.errors[k]) - my);
    sxx += (std::log(s.steps[k]) - mx) * (std::log(s.steps[k]) - mx);
  }
  s.order = -sxy / sxx;
  return s;
}

struct StiffCheck {
  bool success = false;
  std::size_t naccept = 0;
  double endpoint_error = 0.0;  // infinity norm against a tol-1e-10 solve
};

inline StiffCheck pollu_stiff_check() {
  const auto m = models::pollu();
  const auto a = ode::solve_stiff(m.problem, ode::IntegratorConfig::with_tol(1e-6, true));
  const auto b = ode::solve_stiff(m.problem, ode::IntegratorConfig::with_tol(1e-10, true));
  StiffCheck c;
  c.success = a.success() && b.success();
  c.naccept = a.stats.naccept;
  for (std::size_t i = 0; i < m.state_size(); ++i) {
    c.endpoint_error = std::max(c.endpoint_error, std::abs(a.us.back()[i] - b.us.back()[i]));
  }
  return c;
}

}  // namespace odesens::testing
