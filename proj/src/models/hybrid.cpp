#include <algorithm>
#include <type_traits>

#include "odesens/models/models.hpp"

namespace odesens::models {

ModelSpec hybrid_control(double a, double b) {
  if (!(a > 0.0 && b > 0.0)) throw ConfigError("hybrid_control: a and b must be positive");
  ModelSpec m;
  m.name = "hybrid";
  auto& prob = m.problem;
  prob.rhs = VectorField([](auto du, auto, auto p, const auto&) {
    du[0] = -p[0];
    du[1] = p[1];
  });
  prob.state_jacobian = GenericMatrixFunction([](auto J, auto u, auto, const auto&) {
    using T = std::decay_t<decltype(u[0])>;
    for (auto& x : J) x = T(0.0);
  });
  prob.param_jacobian = GenericMatrixFunction([](auto J, auto u, auto, const auto&) {
    using T = std::decay_t<decltype(u[0])>;
    J[0] = T(-1.0);
    J[1] = T(0.0);
    J[2] = T(0.0);
    J[3] = T(1.0);
  });
  prob.u0 = {1.0, 0.0};
  prob.p = {a, b};
  prob.t0 = 0.0;
  prob.tf = 1.0;
  prob.autonomous = true;
  prob.events.emplace_back(
      "x=0", [](auto u, auto, const auto&) { return u[0]; },
      [](auto, auto p, const auto&, ode::EventControls&) {
        using T = std::decay_t<decltype(p[0])>;
        p[1] = T(0.0);
      });

  m.true_params = prob.p;
  m.recommended_solver = SolverKind::explicit_rk;
  m.estimation.n_data_points = 10;
  m.estimation.initial_guess = [](std::span<const double> p) {
    std::vector<double> g(p.begin(), p.end());
    for (auto& x : g) x *= 0.9;
    return g;
  };
  m.state_names = {"x", "y"};
  m.param_names = {"a", "b"};

  m.analytic_solution = [a, b](double t) {
    const double ts = 1.0 / a;
    return std::vector<double>{1.0 - a * t, t < ts ? b * t : b / a};
  };
  // Layout [state][param]: dx/da, dx/db, dy/da, dy/db.
  m.analytic_sensitivity = [a, b](double t) {
    const double ts = 1.0 / a;
    if (t < ts) return std::vector<double>{-t, 0.0, 0.0, t};
    return std::vector<double>{-t, 0.0, -b / (a * a), 1.0 / a};
  };
  return m;
}

ModelSpec make_model(std::string_view name, std::size_t n) {
  if (name == "lv") return lv();
  if (name == "bruss") return bruss(n);
  if (name == "pollu") return pollu();
  if (name == "pkpd") return pkpd();
  if (name == "hybrid") return hybrid_control();
  throw ConfigError("unknown model '" + std::string(name) + "'");
}

std::vector<std::string> model_names() { return {"lv", "bruss", "pollu", "pkpd", "hybrid"}; }

}  // namespace odesens::models
