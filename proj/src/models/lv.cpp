#include "odesens/models/models.hpp"

namespace odesens::models {

ModelSpec lv() {
  ModelSpec m;
  m.name = "lv";
  auto& prob = m.problem;
  prob.rhs = VectorField([](auto du, auto u, auto p, const auto&) {
    du[0] = p[0] * u[0] - p[1] * u[0] * u[1];
    du[1] = -p[2] * u[1] + u[0] * u[1];
  });
  prob.state_jacobian = GenericMatrixFunction([](auto J, auto u, auto p, const auto&) {
    J[0] = p[0] - p[1] * u[1];
    J[1] = -p[1] * u[0];
    J[2] = u[1];
    J[3] = -p[2] + u[0];
  });
  prob.param_jacobian = GenericMatrixFunction([](auto J, auto u, auto, const auto&) {
    using T = std::decay_t<decltype(J[0])>;
    J[0] = u[0];
    J[1] = -(u[0] * u[1]);
    J[2] = T(0.0);
    J[3] = T(0.0);
    J[4] = T(0.0);
    J[5] = -u[1];
  });
  prob.u0 = {1.0, 1.0};
  prob.p = {1.5, 1.0, 3.0};
  prob.t0 = 0.0;
  prob.tf = 10.0;
  prob.autonomous = true;
  m.true_params = prob.p;
  m.recommended_solver = SolverKind::explicit_rk;
  m.estimation.n_data_points = 100;
  m.estimation.initial_guess = [](std::span<const double> p) {
    std::vector<double> g(p.begin(), p.end());
    for (auto& x : g) x *= 0.8;
    return g;
  };
  m.state_names = {"x", "y"};
  m.param_names = {"p1", "p2", "p3"};
  return m;
}

}  // namespace odesens::models
