#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "odesens/estimation/estimation.hpp"
#include "odesens/models/models.hpp"
#include "odesens/ode/solve.hpp"
#include "odesens/sensitivity/sensitivity.hpp"

using namespace odesens;
using namespace odesens::sens;

namespace {

std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> t(n);
  for (std::size_t k = 0; k < n; ++k) t[k] = a + (b - a) * static_cast<double>(k) / static_cast<double>(n - 1);
  return t;
}

double max_abs_diff(const SensitivityResult& a, const SensitivityResult& b) {
  REQUIRE(a.sens.size() == b.sens.size());
  double m = 0.0;
  for (std::size_t k = 0; k < a.sens.size(); ++k) m = std::max(m, std::abs(a.sens[k] - b.sens[k]));
  return m;
}

double rel_inf(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    d = std::max(d, std::abs(a[k] - b[k]));
    s = std::max({s, std::abs(a[k]), std::abs(b[k])});
  }
  return s == 0.0 ? d : d / s;
}

// Observations of the model at its true parameters on n evenly spaced times.
CostSpec synthetic_cost(const ode::ODEProblem& prob, std::size_t n) {
  auto times = linspace(prob.t0, prob.tf, n);
  ode::SolveOptions opts;
  opts.saveat = times;
  opts.dense = false;
  auto cfg = ode::IntegratorConfig::with_tol(1e-10);
  const auto sol = ode::solve(prob, cfg, opts);
  REQUIRE(sol.success());
  return l2_cost(std::move(times), sol.saved_us);
}

ode::ODEProblem decay(double rate) {
  ode::ODEProblem prob;
  prob.rhs = VectorField([](auto du, auto u, auto p, const auto&) { du[0] = -p[0] * u[0]; });
  prob.state_jacobian = GenericMatrixFunction([](auto J, auto, auto p, const auto&) { J[0] = -p[0]; });
  prob.param_jacobian = GenericMatrixFunction([](auto J, auto u, auto, const auto&) { J[0] = -u[0]; });
  prob.u0 = {1.0};
  prob.p = {rate};
  prob.tf = 1.0;
  prob.autonomous = true;
  return prob;
}

}  // namespace

TEST_CASE("method names round-trip") {
  for (const auto& name : SensitivityMethod::names()) CHECK(SensitivityMethod::parse(name).name() == name);
  CHECK_THROWS_AS((void)SensitivityMethod::parse("adjoint"), ConfigError);
  CHECK(SensitivityMethod::parse("csa-user").needs_analytic_jacobian());
  CHECK_FALSE(SensitivityMethod::parse("casa-ad-vjp").needs_analytic_jacobian());
}

TEST_CASE("hybrid control: discrete sensitivities see the event, naive continuous ones do not") {
  const auto m = models::hybrid_control(2.0, 1.0);
  const auto cfg = ode::IntegratorConfig::with_tol(1e-8);
  const std::vector<double> t = {0.0, 1.0};

  const auto d = dsaad_forward(m.problem, cfg, t);
  REQUIRE(d.success());
  CHECK(d.warnings.empty());
  CHECK(std::abs(d.at(1, 0, 0) + 1.0) < 1e-6);
  CHECK(std::abs(d.at(1, 1, 0) + 0.25) < 1e-6);
  CHECK(std::abs(d.at(1, 0, 1)) < 1e-6);
  CHECK(std::abs(d.at(1, 1, 1) - 0.5) < 1e-6);
  for (double s : std::vector<double>(d.sens.begin(), d.sens.begin() + 4)) CHECK(s == 0.0);

  for (auto jac : {CsaJacobian::user, CsaJacobian::ad_full, CsaJacobian::ad_jv}) {
    CAPTURE(to_string(jac));
    const auto c = csa_forward(m.problem, cfg, t, jac);
    REQUIRE(c.success());
    REQUIRE(c.warnings.size() == 1);
    CHECK(c.warnings[0] == kCsaEventWarning);
    CHECK(std::abs(c.at(1, 0, 0) + 1.0) < 1e-6);
    CHECK(std::abs(c.at(1, 1, 0)) < 1e-6);
    CHECK(std::abs(c.at(1, 0, 1)) < 1e-6);
    CHECK(std::abs(c.at(1, 1, 1) - 1.0) < 1e-6);
  }

  const auto nd = numdiff(m.problem, cfg, t, NumdiffScheme::central);
  REQUIRE(nd.success());
  const auto exact = m.analytic_sensitivity(1.0);
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 2; ++j) CHECK(std::abs(nd.at(1, i, j) - exact[i * 2 + j]) < 1e-3);
  }
}

TEST_CASE("dsaad matches the analytic hybrid sensitivities along the whole trajectory") {
  const auto m = models::hybrid_control(2.0, 1.0);
  const auto t = linspace(0.0, 1.0, 21);
  const auto d = dsaad_forward(m.problem, ode::IntegratorConfig::with_tol(1e-8), t);
  REQUIRE(d.success());
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (std::abs(t[k] - 0.5) < 1e-12) continue;  // the derivative jumps at the switch itself
    const auto exact = m.analytic_sensitivity(t[k]);
    for (std::size_t i = 0; i < 2; ++i) {
      for (std::size_t j = 0; j < 2; ++j) CHECK(std::abs(d.at(k, i, j) - exact[i * 2 + j]) < 1e-6);
    }
  }
}

TEST_CASE("LV: discrete and continuous forward sensitivities agree") {
  const auto m = models::lv();
  const auto cfg = ode::IntegratorConfig::with_tol(1e-6);
  const auto t = linspace(0.0, 10.0, 100);
  const auto d = dsaad_forward(m.problem, cfg, t);
  const auto c = csa_forward(m.problem, cfg, t, CsaJacobian::user);
  REQUIRE(d.success());
  REQUIRE(c.success());
  CHECK(max_abs_diff(d, c) <= 5e-4);
  for (double s : std::vector<double>(d.sens.begin(), d.sens.begin() + 6)) CHECK(s == 0.0);
}

TEST_CASE("LV: the three CSA Jacobian strategies agree") {
  const auto m = models::lv();
  const auto t = linspace(0.0, 10.0, 50);
  for (bool stiff : {false, true}) {
    CAPTURE(stiff);
    const auto cfg = ode::IntegratorConfig::with_tol(1e-6, stiff);
    const auto u = csa_forward(m.problem, cfg, t, CsaJacobian::user);
    const auto f = csa_forward(m.problem, cfg, t, CsaJacobian::ad_full);
    const auto v = csa_forward(m.problem, cfg, t, CsaJacobian::ad_jv);
    CHECK(max_abs_diff(u, f) <= 1e-8);
    CHECK(max_abs_diff(u, v) <= 1e-8);
    CHECK(max_abs_diff(f, v) <= 1e-8);
  }
}

TEST_CASE("CSA error norm with and without the sensitivity block") {
  const auto m = models::lv();
  const auto t = linspace(0.0, 10.0, 20);
  auto cfg = ode::IntegratorConfig::with_tol(1e-6);
  const auto full = csa_forward(m.problem, cfg, t, CsaJacobian::user);
  cfg.norm_includes_partials = false;
  const auto states_only = csa_forward(m.problem, cfg, t, CsaJacobian::user);
  CHECK(states_only.stats.solver.naccept < full.stats.solver.naccept);
  CHECK(max_abs_diff(full, states_only) < 0.05);
}

TEST_CASE("parameter-free right-hand side keeps sensitivities at zero") {
  ode::ODEProblem prob;
  prob.rhs = VectorField([](auto du, auto u, auto, const auto&) { du[0] = -u[0]; });
  prob.u0 = {1.0};
  prob.p = {0.3, 2.0};
  prob.tf = 2.0;
  prob.autonomous = true;
  const auto t = linspace(0.0, 2.0, 5);
  const auto cfg = ode::IntegratorConfig::with_tol(1e-8);
  for (auto jac : {CsaJacobian::ad_full, CsaJacobian::ad_jv}) {
    const auto c = csa_forward(prob, cfg, t, jac);
    for (double s : c.sens) CHECK(s == 0.0);
  }
  const auto d = dsaad_forward(prob, cfg, t);
  for (double s : d.sens) CHECK(s == 0.0);
  const auto nd = numdiff(prob, cfg, t, NumdiffScheme::forward);
  for (double s : nd.sens) CHECK(std::abs(s) < 1e-7);
  CHECK_THROWS_AS((void)csa_forward(prob, cfg, t, CsaJacobian::user), ConfigError);
}

TEST_CASE("numdiff solve counts and accuracy") {
  const auto m = models::lv();
  const auto t = linspace(0.0, 10.0, 100);
  const auto cfg = ode::IntegratorConfig::with_tol(1e-8);
  const auto fwd = numdiff(m.problem, cfg, t, NumdiffScheme::forward);
  const auto cen = numdiff(m.problem, cfg, t, NumdiffScheme::central);
  CHECK(fwd.stats.nsolves == 1 + 3);
  CHECK(cen.stats.nsolves == 2 * 3);
  const auto d = dsaad_forward(m.problem, cfg, t);
  CHECK(max_abs_diff(cen, d) <= 1e-3);
  CHECK(std::all_of(cen.valid_columns.begin(), cen.valid_columns.end(), [](bool b) { return b; }));
}

TEST_CASE("numdiff flags a column whose perturbed solve fails") {
  ode::ODEProblem prob;
  // Blows up in finite time once p[1] exceeds 1.
  prob.rhs = VectorField([](auto du, auto u, auto p, const auto&) { du[0] = p[0] * u[0] + (p[1] - 1.0) * 1e6 * u[0] * u[0]; });
  prob.u0 = {1.0};
  prob.p = {0.1, 1.0};
  prob.tf = 1.0;
  prob.autonomous = true;
  auto cfg = ode::IntegratorConfig::with_tol(1e-8);
  cfg.max_steps = 2000;
  const auto r = numdiff(prob, cfg, std::vector<double>{1.0}, NumdiffScheme::central);
  CHECK(r.valid_columns[0]);
  CHECK_FALSE(r.valid_columns[1]);
  CHECK(std::isnan(r.at(0, 0, 1)));
  CHECK(r.at(0, 0, 0) == doctest::Approx(std::exp(0.1)).epsilon(1e-6));
}

TEST_CASE("adjoint gradient of a terminal observation of exponential decay") {
  const auto prob = decay(1.0);
  CostSpec cost;
  cost.times = {1.0};
  cost.cost = [](std::size_t, std::span<const double> u) { return u[0]; };
  cost.gradient = [](std::size_t, std::span<const double>, std::span<double> g) { g[0] = 1.0; };
  for (auto v : {VjpStrategy::user_jacobian_transpose, VjpStrategy::forward_full_jacobian_transpose,
                 VjpStrategy::reverse_tape}) {
    for (bool stiff : {false, true}) {
      CAPTURE(to_string(v));
      CAPTURE(stiff);
      AdjointOptions opts;
      opts.vjp = v;
      const auto g = casa_adjoint(prob, ode::IntegratorConfig::with_tol(1e-8, stiff), cost, opts);
      REQUIRE(g.success());
      CHECK(std::abs(g.grad[0] + std::exp(-1.0)) < 1e-6);
      CHECK(g.cost == doctest::Approx(std::exp(-1.0)).epsilon(1e-7));
    }
  }
}

TEST_CASE("adjoint initial-condition term") {
  // u0 = p: d u(1)/dp = e^-p - p e^-p, and lambda(0) = e^-p.
  auto prob = decay(1.0);
  CostSpec cost;
  cost.times = {1.0};
  cost.cost = [](std::size_t, std::span<const double> u) { return u[0]; };
  cost.gradient = [](std::size_t, std::span<const double>, std::span<double> g) { g[0] = 1.0; };
  AdjointOptions opts;
  opts.du0_dp = {1.0};
  const auto g = casa_adjoint(prob, ode::IntegratorConfig::with_tol(1e-9), cost, opts);
  CHECK(std::abs(g.grad[0] - (std::exp(-1.0) - std::exp(-1.0))) < 1e-6);
}

TEST_CASE("LV: adjoint gradient matches the chained forward gradient") {
  auto m = models::lv();
  const auto cost = synthetic_cost(m.problem, m.estimation.n_data_points);
  m.problem.p = {1.4, 1.1, 2.8};
  const auto cfg = ode::IntegratorConfig::with_tol(1e-8);
  const auto ref = loss_gradient(m.problem, cfg, cost, SensitivityMethod::dsaad());
  REQUIRE(ref.success());
  for (auto v : {VjpStrategy::user_jacobian_transpose, VjpStrategy::forward_full_jacobian_transpose,
                 VjpStrategy::reverse_tape}) {
    const auto a = loss_gradient(m.problem, cfg, cost, SensitivityMethod::casa(v));
    REQUIRE(a.success());
    CHECK(a.cost == doctest::Approx(ref.cost).epsilon(1e-6));
    for (std::size_t j = 0; j < 3; ++j) CHECK(std::abs(a.grad[j] - ref.grad[j]) <= 1e-4 * std::abs(ref.grad[j]));
  }
}

TEST_CASE("zero-residual data gives a vanishing gradient for every method") {
  const auto m = models::lv();
  const auto cost = synthetic_cost(m.problem, 20);
  const auto cfg = ode::IntegratorConfig::with_tol(1e-10);
  for (const auto& name : SensitivityMethod::names()) {
    CAPTURE(name);
    const auto g = loss_gradient(m.problem, cfg, cost, SensitivityMethod::parse(name));
    REQUIRE(g.success());
    // Central differences take their values from the perturbed pair, so the
    // residuals are only zero up to the squared step.
    const double tol = name.rfind("numdiff", 0) == 0 ? 1e-5 : 1e-6;
    CHECK(g.cost < 1e-12);
    for (double x : g.grad) CHECK(std::abs(x) <= tol);
  }
}

TEST_CASE("LV: gradients from every method agree") {
  auto m = models::lv();
  const auto cost = synthetic_cost(m.problem, m.estimation.n_data_points);
  m.problem.p = {1.2, 0.8, 2.4};
  const auto cfg = ode::IntegratorConfig::with_tol(1e-8);
  std::vector<std::vector<double>> grads;
  for (const auto& name : SensitivityMethod::names()) {
    if (name == "numdiff-forward") continue;
    const auto g = loss_gradient(m.problem, cfg, cost, SensitivityMethod::parse(name));
    REQUIRE(g.success());
    grads.push_back(g.grad);
  }
  for (std::size_t a = 0; a < grads.size(); ++a) {
    for (std::size_t b = a + 1; b < grads.size(); ++b) CHECK(rel_inf(grads[a], grads[b]) <= 1e-3);
  }
}

TEST_CASE("dsaad chunk size does not change the result") {
  const auto m = models::lv();
  const auto t = linspace(0.0, 10.0, 30);
  auto cfg = ode::IntegratorConfig::with_tol(1e-7);
  // With partials in the error norm each chunk takes its own steps.
  const auto one = dsaad_forward(m.problem, cfg, t, 1);
  const auto all = dsaad_forward(m.problem, cfg, t, 3);
  CHECK(one.stats.nsolves == 3);
  CHECK(all.stats.nsolves == 1);
  CHECK(max_abs_diff(one, all) < 1e-4);
  // Without them every chunk follows the same steps.
  cfg.norm_includes_partials = false;
  const auto one_v = dsaad_forward(m.problem, cfg, t, 1);
  const auto all_v = dsaad_forward(m.problem, cfg, t, 3);
  CHECK(max_abs_diff(one_v, all_v) < 1e-12);
  CHECK_THROWS_AS((void)dsaad_forward(m.problem, cfg, t, 4), ConfigError);
}

TEST_CASE("BRUSS(3) stiff forward sensitivities agree") {
  const auto m = models::bruss(3);
  const auto t = linspace(0.0, 10.0, 21);
  const auto cfg = ode::IntegratorConfig::with_tol(1e-6, true);
  const auto d = dsaad_forward(m.problem, cfg, t);
  const auto c = csa_forward(m.problem, cfg, t, CsaJacobian::user);
  REQUIRE(d.success());
  REQUIRE(c.success());
  CHECK(max_abs_diff(d, c) <= 5e-4);
}

// Central differences of adaptive solves carry step-selection noise of order
// tol / dp, so the cross-method comparison runs at a tight tolerance.
TEST_CASE("forward methods agree on every event-free model") {
  const double tol = 1e-8;
  for (const auto& m : {models::lv(), models::bruss(3), models::pollu(), models::pkpd(20.0)}) {
    CAPTURE(m.name);
    const auto cfg = est::model_config(m, tol);
    const auto t = linspace(m.problem.t0, m.problem.tf, m.estimation.n_data_points);
    const auto d = dsaad_forward(m.problem, cfg, t);
    REQUIRE(d.success());
    for (const auto& name : {"csa-user", "csa-ad-jac", "csa-ad-jv", "numdiff-central"}) {
      CAPTURE(name);
      const auto r = forward_sensitivities(m.problem, cfg, t, SensitivityMethod::parse(name));
      REQUIRE(r.success());
      CHECK(max_abs_diff(d, r) <= std::max(1e-3, 100.0 * tol));
    }
  }
}

TEST_CASE("bad output grids are rejected") {
  const auto m = models::lv();
  const auto cfg = ode::IntegratorConfig::with_tol(1e-6);
  CHECK_THROWS_AS((void)dsaad_forward(m.problem, cfg, std::vector<double>{1.0, 0.5}), ConfigError);
  CHECK_THROWS_AS((void)csa_forward(m.problem, cfg, std::vector<double>{11.0}, CsaJacobian::user), RangeError);
  CostSpec bad = l2_cost({3.0, 2.0}, {{1.0, 1.0}, {1.0, 1.0}});
  CHECK_THROWS_AS((void)loss_gradient(m.problem, cfg, bad, SensitivityMethod::casa(VjpStrategy::reverse_tape)),
                  ConfigError);
}
