#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>

#include "odesens/bench/bench.hpp"
#include "odesens/errors.hpp"

namespace odesens::bench {

namespace {

using sens::CsaJacobian;
using sens::SensitivityMethod;
using sens::SensitivityResult;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

class Suite {
 public:
  explicit Suite(VerifyReport& report) : report_(report) {}

  /// Passes when value <= tolerance; NaN and exceptions fail.
  void bound(const std::string& name, double tolerance, const std::function<double()>& f) {
    Check c;
    c.name = name;
    c.tolerance = tolerance;
    try {
      c.value = f();
      c.passed = c.value <= tolerance;
      if (std::isnan(c.value)) c.detail = "not computable (failed solve)";
    } catch (const std::exception& e) {
      c.value = kNaN;
      c.detail = e.what();
    }
    report_.checks.push_back(std::move(c));
  }

 private:
  VerifyReport& report_;
};

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw ConfigError("verify: size mismatch");
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = std::abs(a[k] - b[k]);
    if (std::isnan(d)) return kNaN;
    m = std::max(m, d);
  }
  return m;
}

const SensitivityResult& ok(const SensitivityResult& r) {
  if (!r.success()) throw SolverFailure(std::string("solve failed: ") + ode::to_string(r.retcode));
  return r;
}

// Largest deviation of the sensitivities at t = 1 from an expected 2x2 table.
double table_error(const SensitivityResult& r, const std::array<double, 4>& expected) {
  ok(r);
  const std::size_t k = r.times.size() - 1;
  double e = 0.0;
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 2; ++j) e = std::max(e, std::abs(r.at(k, i, j) - expected[i * 2 + j]));
  }
  return e;
}

// The analytic state Jacobian with its first entry scaled by 1.1.
ode::ODEProblem with_faulty_jacobian(ode::ODEProblem prob) {
  auto orig = prob.state_jacobian;
  prob.state_jacobian = GenericMatrixFunction([orig](auto j, auto u, auto p, const auto& t) {
    orig(j, u, p, t);
    j[0] = j[0] * 1.1;
  });
  return prob;
}

// Largest pairwise relative infinity-norm difference among gradients of all methods.
double gradient_spread(const models::ModelSpec& model, const ode::IntegratorConfig& cfg,
                       const ode::ODEProblem& csa_prob) {
  const auto data = est::generate_data(model, model.estimation.n_data_points);
  const auto cost = data.cost();
  ode::ODEProblem prob = model.problem;
  prob.p = model.estimation.initial_guess(model.true_params);
  ode::ODEProblem faulty = csa_prob;
  faulty.p = prob.p;
  std::vector<std::vector<double>> grads;
  for (const auto& name : SensitivityMethod::names()) {
    if (name == "numdiff-forward") continue;
    const auto m = SensitivityMethod::parse(name);
    const auto g = sens::loss_gradient(m.kind == SensitivityMethod::Kind::csa ? faulty : prob, cfg, cost, m);
    if (!g.success()) return kNaN;
    grads.push_back(g.grad);
  }
  double spread = 0.0;
  for (std::size_t a = 0; a < grads.size(); ++a) {
    for (std::size_t b = a + 1; b < grads.size(); ++b) spread = std::max(spread, relative_inf_diff(grads[a], grads[b]));
  }
  return spread;
}

double csa_spread(const ode::ODEProblem& csa_prob, const ode::ODEProblem& prob, const ode::IntegratorConfig& cfg,
                  const std::vector<double>& t) {
  const auto u = ok(sens::csa_forward(csa_prob, cfg, t, CsaJacobian::user));
  const auto f = ok(sens::csa_forward(prob, cfg, t, CsaJacobian::ad_full));
  const auto v = ok(sens::csa_forward(prob, cfg, t, CsaJacobian::ad_jv));
  return std::max({max_abs_diff(u.sens, f.sens), max_abs_diff(u.sens, v.sens), max_abs_diff(f.sens, v.sens)});
}

}  // namespace

VerifyReport run_verify(const VerifyOptions& opts) {
  VerifyReport report;
  Suite suite(report);
  auto for_csa = [&](const ode::ODEProblem& p) { return opts.inject_csa_fault ? with_faulty_jacobian(p) : p; };

  // Hybrid control: discrete sensitivities see the switch, naive continuous ones do not.
  {
    const auto m = models::hybrid_control(2.0, 1.0);
    const auto cfg = ode::IntegratorConfig::with_tol(1e-8);
    const std::vector<double> t = {0.0, 1.0};
    const auto csa_prob = for_csa(m.problem);
    suite.bound("hybrid-switch-dsaad", 1e-6,
                [&] { return table_error(sens::dsaad_forward(m.problem, cfg, t), {-1.0, 0.0, -0.25, 0.5}); });
    for (auto j : {CsaJacobian::user, CsaJacobian::ad_full, CsaJacobian::ad_jv}) {
      const auto& prob = j == CsaJacobian::user ? csa_prob : m.problem;
      suite.bound(std::string("hybrid-switch-csa-") + sens::to_string(j), 1e-6,
                  [&] { return table_error(sens::csa_forward(prob, cfg, t, j), {-1.0, 0.0, 0.0, 1.0}); });
    }
    suite.bound("hybrid-numdiff-central-vs-analytic", 1e-3, [&] {
      const auto e = m.analytic_sensitivity(1.0);
      return table_error(sens::numdiff(m.problem, cfg, t, sens::NumdiffScheme::central), {e[0], e[1], e[2], e[3]});
    });
  }

  // Lotka-Volterra.
  {
    const auto m = models::lv();
    const auto cfg = ode::IntegratorConfig::with_tol(1e-6);
    const auto t = est::evenly_spaced(m.problem.t0, m.problem.tf, 100);
    const auto csa_prob = for_csa(m.problem);
    std::optional<SensitivityResult> d;
    auto dsaad = [&]() -> const SensitivityResult& {
      if (!d) d = sens::dsaad_forward(m.problem, cfg, t);
      return ok(*d);
    };
    suite.bound("lv-dsaad-vs-csa-user", 5e-4, [&] {
      return max_abs_diff(dsaad().sens, ok(sens::csa_forward(csa_prob, cfg, t, CsaJacobian::user)).sens);
    });
    suite.bound("lv-csa-strategies-agree", 1e-8, [&] { return csa_spread(csa_prob, m.problem, cfg, t); });
    // Finite differences of adaptive solves carry roughly tol / step of noise,
    // so this comparison runs at a tighter tolerance.
    suite.bound("lv-numdiff-central-vs-dsaad", 1e-3, [&] {
      const auto tight = ode::IntegratorConfig::with_tol(1e-8);
      return max_abs_diff(ok(sens::dsaad_forward(m.problem, tight, t)).sens,
                          ok(sens::numdiff(m.problem, tight, t, sens::NumdiffScheme::central)).sens);
    });
    suite.bound("lv-sensitivities-zero-at-t0", 0.0, [&] {
      const auto c = ok(sens::csa_forward(csa_prob, cfg, t, CsaJacobian::user));
      double s = 0.0;
      for (std::size_t k = 0; k < 6; ++k) s = std::max({s, std::abs(dsaad().sens[k]), std::abs(c.sens[k])});
      return s;
    });
    suite.bound("lv-numdiff-solve-counts", 0.0, [&] {
      const auto f = ok(sens::numdiff(m.problem, cfg, t, sens::NumdiffScheme::forward));
      const auto c = ok(sens::numdiff(m.problem, cfg, t, sens::NumdiffScheme::central));
      return static_cast<double>((f.stats.nsolves != 4) + (c.stats.nsolves != 6));
    });
    suite.bound("lv-gradient-agreement", 1e-3, [&] { return gradient_spread(m, cfg, csa_prob); });
    suite.bound("lv-casa-vs-dsaad-gradient", 1e-4, [&] {
      const auto data = est::generate_data(m, m.estimation.n_data_points);
      ode::ODEProblem prob = m.problem;
      prob.p = m.estimation.initial_guess(m.true_params);
      const auto a = sens::loss_gradient(prob, cfg, data.cost(), SensitivityMethod::casa(VjpStrategy::reverse_tape));
      const auto b = sens::loss_gradient(prob, cfg, data.cost(), SensitivityMethod::dsaad());
      return a.success() && b.success() ? relative_inf_diff(a.grad, b.grad) : kNaN;
    });
    suite.bound("lv-zero-residual-gradient", 1e-6, [&] {
      const auto data = est::generate_data(m, m.estimation.n_data_points);
      double g = 0.0;
      for (const auto& name : {"dsaad", "csa-user", "casa-ad-vjp"}) {
        const auto meth = SensitivityMethod::parse(name);
        const auto r = sens::loss_gradient(meth.kind == SensitivityMethod::Kind::csa ? csa_prob : m.problem,
                                           est::model_config(m, 1e-10), data.cost(), meth);
        if (!r.success()) return kNaN;
        for (double x : r.grad) g = std::max(g, std::abs(x));
      }
      return g;
    });
  }

  // Analytic adjoint: u' = -p u, C = u(1), dC/dp = -exp(-1) at p = 1.
  suite.bound("decay-adjoint-analytic", 1e-6, [&] {
    ode::ODEProblem prob;
    prob.rhs = VectorField([](auto du, auto u, auto p, const auto&) { du[0] = -p[0] * u[0]; });
    prob.u0 = {1.0};
    prob.p = {1.0};
    prob.tf = 1.0;
    prob.autonomous = true;
    sens::CostSpec cost;
    cost.times = {1.0};
    cost.cost = [](std::size_t, std::span<const double> u) { return u[0]; };
    cost.gradient = [](std::size_t, std::span<const double>, std::span<double> g) { g[0] = 1.0; };
    const auto r = sens::casa_adjoint(prob, ode::IntegratorConfig::with_tol(1e-10), cost);
    return r.success() ? std::abs(r.grad[0] + std::exp(-1.0)) : kNaN;
  });

  // Brusselator on a 3 x 3 grid.
  {
    const auto m = models::bruss(3);
    const auto cfg = est::model_config(m, 1e-6);
    const auto csa_prob = for_csa(m.problem);
    report.trace_times = est::evenly_spaced(m.problem.t0, m.problem.tf, 101);
    const auto& t = report.trace_times;
    std::optional<SensitivityResult> d;
    std::optional<SensitivityResult> c;
    suite.bound("bruss3-dsaad-vs-csa-user", 5e-4, [&] {
      d = ok(sens::dsaad_forward(m.problem, cfg, t));
      c = ok(sens::csa_forward(csa_prob, cfg, t, CsaJacobian::user));
      return max_abs_diff(d->sens, c->sens);
    });
    suite.bound("bruss3-gradient-agreement", 1e-3, [&] { return gradient_spread(m, cfg, csa_prob); });

    // Traces at the corner node: states u and v, and their sensitivities to
    // that node's four parameters.
    if (d && c) {
      const std::size_t nn = 9;
      const std::size_t iu = models::bruss_index(3, 0, 0);
      for (std::size_t s : {iu, nn + iu}) {
        Trace tr{m.state_names[s], {}};
        for (const auto& v : d->values) tr.values.push_back(v[s]);
        report.traces.push_back(std::move(tr));
      }
      for (const auto* r : {&*d, &*c}) {
        const char* label = r == &*d ? "dsaad" : "csa";
        for (std::size_t s : {iu, nn + iu}) {
          for (std::size_t q = 0; q < 4; ++q) {
            const std::size_t p = q * nn + iu;
            Trace tr{std::string(label) + " d" + m.state_names[s] + "/d" + m.param_names[p], {}};
            for (std::size_t k = 0; k < t.size(); ++k) tr.values.push_back(r->at(k, s, p));
            report.traces.push_back(std::move(tr));
          }
        }
      }
    }
  }
  return report;
}

}  // namespace odesens::bench
