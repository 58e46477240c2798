#include <cmath>
#include <type_traits>

#include "odesens/models/models.hpp"

namespace odesens::models {

namespace {

// Parameter slots.
enum : std::size_t { KA, CL, VC, Q1, Q2, VP1, VP2, VMAX, KM, KIN, IMAX, IC50, KOUT, NPARAM };

constexpr double kDoseInterval = 24.0;
constexpr double kDoseAmount = 100.0;

}  // namespace

ModelSpec pkpd(double tf) {
  if (!(tf > 0.0)) throw ConfigError("pkpd: tf must be positive");
  ModelSpec m;
  m.name = "pkpd";
  auto& prob = m.problem;

  // The Hill coefficient of the inhibition is fixed at 1.
  prob.rhs = VectorField([](auto du, auto u, auto p, const auto&) {
    const auto c = u[1] / p[VC];
    const auto depot_out = p[KA] * u[0];
    const auto to_p1 = p[Q1] * c - p[Q1] * (u[2] / p[VP1]);
    const auto to_p2 = p[Q2] * c - p[Q2] * (u[3] / p[VP2]);
    du[0] = -depot_out;
    du[1] = depot_out - (p[CL] + p[VMAX] / (p[KM] + c)) * c - to_p1 - to_p2;
    du[2] = to_p1;
    du[3] = to_p2;
    du[4] = p[KIN] * (1.0 - p[IMAX] * c / (p[IC50] + c)) - p[KOUT] * u[4];
  });

  prob.state_jacobian = GenericMatrixFunction([](auto J, auto u, auto p, const auto&) {
    using T = std::decay_t<decltype(u[0])>;
    for (auto& x : J) x = T(0.0);
    const T c = u[1] / p[VC];
    const T km_c = p[KM] + c;
    const T ic_c = p[IC50] + c;
    const T de_dc = p[CL] + p[Q1] + p[Q2] + p[VMAX] * p[KM] / (km_c * km_c);
    J[0 * 5 + 0] = -p[KA];
    J[1 * 5 + 0] = p[KA];
    J[1 * 5 + 1] = -de_dc / p[VC];
    J[1 * 5 + 2] = p[Q1] / p[VP1];
    J[1 * 5 + 3] = p[Q2] / p[VP2];
    J[2 * 5 + 1] = p[Q1] / p[VC];
    J[2 * 5 + 2] = -p[Q1] / p[VP1];
    J[3 * 5 + 1] = p[Q2] / p[VC];
    J[3 * 5 + 3] = -p[Q2] / p[VP2];
    J[4 * 5 + 1] = -(p[KIN] * p[IMAX] * p[IC50] / (ic_c * ic_c)) / p[VC];
    J[4 * 5 + 4] = -p[KOUT];
  });

  prob.param_jacobian = GenericMatrixFunction([](auto J, auto u, auto p, const auto&) {
    using T = std::decay_t<decltype(u[0])>;
    for (auto& x : J) x = T(0.0);
    auto at = [&J](std::size_t row, std::size_t col) -> T& { return J[row * NPARAM + col]; };
    const T c = u[1] / p[VC];
    const T km_c = p[KM] + c;
    const T ic_c = p[IC50] + c;
    const T de_dc = p[CL] + p[Q1] + p[Q2] + p[VMAX] * p[KM] / (km_c * km_c);
    const T dc_dvc = -c / p[VC];
    const T c1 = u[2] / p[VP1];
    const T c2 = u[3] / p[VP2];
    at(0, KA) = -u[0];
    at(1, KA) = u[0];
    at(1, CL) = -c;
    at(1, VC) = -de_dc * dc_dvc;
    at(2, VC) = p[Q1] * dc_dvc;
    at(3, VC) = p[Q2] * dc_dvc;
    at(4, VC) = -(p[KIN] * p[IMAX] * p[IC50] / (ic_c * ic_c)) * dc_dvc;
    at(1, Q1) = c1 - c;
    at(2, Q1) = c - c1;
    at(1, Q2) = c2 - c;
    at(3, Q2) = c - c2;
    at(1, VP1) = -(p[Q1] * c1 / p[VP1]);
    at(2, VP1) = p[Q1] * c1 / p[VP1];
    at(1, VP2) = -(p[Q2] * c2 / p[VP2]);
    at(3, VP2) = p[Q2] * c2 / p[VP2];
    at(1, VMAX) = -c / km_c;
    at(1, KM) = p[VMAX] * c / (km_c * km_c);
    at(4, KIN) = 1.0 - p[IMAX] * c / ic_c;
    at(4, IMAX) = -(p[KIN] * c / ic_c);
    at(4, IC50) = p[KIN] * p[IMAX] * c / (ic_c * ic_c);
    at(4, KOUT) = -u[4];
  });

  prob.u0 = {100.0, 0.0, 0.0, 0.0, 5.0};
  prob.p = {1.0, 1.0, 20.0, 2.0, 0.5, 10.0, 100.0, 0.0, 2.0, 10.0, 1.0, 2.0, 2.0};
  prob.t0 = 0.0;
  prob.tf = tf;
  prob.autonomous = true;

  for (double td = kDoseInterval; td < tf; td += kDoseInterval) {
    prob.tstops.push_back(td);
    prob.events.emplace_back(
        "dose@" + std::to_string(static_cast<int>(td)),
        [td](auto, auto, const auto& t) { return t - td; },
        [](auto u, auto, const auto&, ode::EventControls&) { u[0] += kDoseAmount; }, ode::Crossing::up);
  }

  m.true_params = prob.p;
  m.recommended_solver = SolverKind::explicit_rk;
  m.estimation.n_data_points = 41;
  m.estimation.initial_guess = [](std::span<const double> p) {
    std::vector<double> g(p.begin(), p.end());
    for (auto& x : g) x = 0.95 * x + 0.001;
    return g;
  };
  m.state_names = {"Depot", "Cent", "Periph1", "Periph2", "Resp"};
  m.param_names = {"ka", "CL", "Vc", "Q1", "Q2", "Vp1", "Vp2", "Vmax", "Km", "kin", "Imax", "IC50", "kout"};
  return m;
}

}  // namespace odesens::models
