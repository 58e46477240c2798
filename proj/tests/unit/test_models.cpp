#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <vector>

#include "../support/ad_check.hpp"
#include "doctest.h"
#include "odesens/ad/forward.hpp"
#include "odesens/models/models.hpp"
#include "odesens/ode/solve.hpp"

using namespace odesens;
using namespace odesens::models;

namespace {

std::vector<double> rhs_at(const ModelSpec& m, std::span<const double> u, std::span<const double> p, double t) {
  std::vector<double> du(u.size());
  m.problem.rhs(std::span<double>(du), u, p, t);
  return du;
}

Eigen::MatrixXd analytic(const GenericMatrixFunction& f, std::size_t rows, std::size_t cols,
                         std::span<const double> u, std::span<const double> p, double t) {
  std::vector<double> out(rows * cols);
  f(std::span<double>(out), u, p, t);
  return Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      out.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

}  // namespace

TEST_CASE("Lotka-Volterra") {
  const auto m = lv();
  CHECK(m.state_size() == 2);
  CHECK(m.param_size() == 3);
  CHECK(m.problem.u0 == std::vector<double>{1.0, 1.0});
  CHECK(m.true_params == std::vector<double>{1.5, 1.0, 3.0});
  CHECK(m.problem.t0 == 0.0);
  CHECK(m.problem.tf == 10.0);
  CHECK_FALSE(m.stiff());
  CHECK(m.estimation.n_data_points == 100);
  const auto g = m.estimation.initial_guess(m.true_params);
  for (std::size_t j = 0; j < 3; ++j) CHECK(g[j] == doctest::Approx(0.8 * m.true_params[j]).epsilon(1e-15));
  CHECK(rhs_at(m, m.problem.u0, m.true_params, 0.0) == std::vector<double>{0.5, -2.0});
  Eigen::MatrixXd j(2, 2);
  j << 0.5, -1.0, 1.0, -2.0;
  CHECK(analytic(m.problem.state_jacobian, 2, 2, m.problem.u0, m.true_params, 0.0) == j);
}

TEST_CASE("Brusselator") {
  const auto m = bruss(3);
  CHECK(m.state_size() == 18);
  CHECK(m.param_size() == 36);
  CHECK(m.stiff());
  CHECK(m.problem.tf == 10.0);
  for (std::size_t k = 0; k < 9; ++k) {
    CHECK(m.true_params[k] == 3.4);
    CHECK(m.true_params[9 + k] == 1.0);
    CHECK(m.true_params[18 + k] == 10.0);
    CHECK(m.true_params[27 + k] == 10.0);
  }
  // Node (1, 1) sits at (0.5, 0.5).
  CHECK(m.problem.u0[bruss_index(3, 1, 1)] == doctest::Approx(2.75).epsilon(1e-14));
  CHECK(bruss_forcing(0.3, 0.6, 2.0) == 5.0);
  CHECK(bruss_forcing(0.3, 0.6, 1.0) == 0.0);
  CHECK(bruss_forcing(0.9, 0.1, 2.0) == 0.0);
  CHECK_THROWS_AS((void)bruss(1), ConfigError);
  CHECK(bruss(5).state_size() == 50);

  // A constant field has a zero discrete Laplacian, so every node sees the same reaction term.
  const auto m5 = bruss(5);
  std::vector<double> u(50);
  for (std::size_t k = 0; k < 25; ++k) {
    u[k] = 1.3;
    u[25 + k] = 0.7;
  }
  const auto du = rhs_at(m5, u, m5.true_params, 0.0);
  for (std::size_t k = 0; k < 25; ++k) {
    CHECK(du[k] == doctest::Approx(1.0 + 1.3 * 1.3 * 0.7 - 4.4 * 1.3).epsilon(1e-14));
    CHECK(du[25 + k] == doctest::Approx(3.4 * 1.3 - 1.3 * 1.3 * 0.7).epsilon(1e-14));
  }
}

TEST_CASE("POLLU") {
  const auto m = pollu();
  CHECK(m.state_size() == 20);
  CHECK(m.param_size() == 25);
  CHECK(m.stiff());
  CHECK(m.estimation.n_data_points == 10);
  const auto g = m.estimation.initial_guess(m.true_params);
  CHECK(g[4] == doctest::Approx(0.9 * m.true_params[4]).epsilon(1e-15));
  const auto du = rhs_at(m, m.problem.u0, m.true_params, 0.0);
  CHECK(du[11] == 0.0);
  CHECK(du[1] == doctest::Approx(-0.2128).epsilon(1e-13));
}

TEST_CASE("PK/PD") {
  const auto m = pkpd();
  CHECK(m.state_size() == 5);
  CHECK(m.param_size() == 13);
  CHECK(m.problem.u0 == std::vector<double>{100.0, 0.0, 0.0, 0.0, 5.0});
  CHECK(m.estimation.n_data_points == 41);
  const auto g = m.estimation.initial_guess(m.true_params);
  CHECK(g[2] == doctest::Approx(0.95 * 20.0 + 0.001).epsilon(1e-15));
  const auto du = rhs_at(m, m.problem.u0, m.true_params, 0.0);
  CHECK(du[0] == -100.0);
  CHECK(du[4] == 0.0);
  CHECK(m.problem.events.size() == 4);

  // Vmax = 0 at the defaults, so the Michaelis-Menten term contributes nothing.
  REQUIRE(m.true_params[7] == 0.0);
  std::mt19937_64 rng(9);
  for (int k = 0; k < 20; ++k) {
    const auto x = testing::random_point(m, rng);
    auto p = x.p;
    p[7] = 0.0;
    const auto got = rhs_at(m, x.u, p, x.t);
    const double c = x.u[1] / p[2];
    const double q1 = p[3] * c - p[3] * x.u[2] / p[5];
    const double q2 = p[4] * c - p[4] * x.u[3] / p[6];
    CHECK(got[1] == doctest::Approx(p[0] * x.u[0] - p[1] * c - q1 - q2).epsilon(1e-13));
  }

  ode::SolveOptions opts;
  opts.saveat = {24.0 - 1e-9, 24.0 + 1e-9};
  const auto sol = ode::solve(m.problem, ode::IntegratorConfig::with_tol(1e-8), opts);
  REQUIRE(sol.success());
  CHECK(sol.saved_us[1][0] - sol.saved_us[0][0] == doctest::Approx(100.0).epsilon(1e-6));
  CHECK(sol.event_times == std::vector<double>{24.0, 48.0, 72.0, 96.0});
}

TEST_CASE("hybrid control") {
  const auto m = hybrid_control(2.0, 1.0);
  const auto s = m.analytic_sensitivity(1.0);
  CHECK(s == std::vector<double>{-1.0, 0.0, -0.25, 0.5});
  CHECK(m.analytic_solution(1.0) == std::vector<double>{-1.0, 0.5});

  // With a = 1 the crossing is at tf itself.
  const auto edge = hybrid_control(1.0, 0.7);
  const auto sol = ode::solve(edge.problem, ode::IntegratorConfig::with_tol(1e-8));
  REQUIRE(sol.success());
  CHECK(std::abs(sol.us.back()[1] - 0.7) < 1e-8);
  CHECK(std::abs(sol.us.back()[0]) < 1e-8);
}

TEST_CASE("model registry") {
  for (const auto& name : model_names()) CHECK(make_model(name, 3).name == name);
  CHECK_THROWS_AS((void)make_model("rober"), ConfigError);
}

TEST_CASE("right-hand sides agree under real and zero-seeded Dual scalars") {
  std::mt19937_64 rng(17);
  for (const auto& name : model_names()) {
    CAPTURE(name);
    const auto m = make_model(name, 3);
    for (int k = 0; k < 5; ++k) {
      const auto x = testing::random_point(m, rng);
      const auto real = rhs_at(m, x.u, x.p, x.t);
      std::vector<Dual> u, p, du(x.u.size());
      for (double v : x.u) u.push_back(Dual::zeros(v, 3));
      for (double v : x.p) p.push_back(Dual::zeros(v, 3));
      m.problem.rhs(std::span<Dual>(du), std::span<const Dual>(u), std::span<const Dual>(p), Dual(x.t));
      for (std::size_t i = 0; i < du.size(); ++i) {
        CHECK(std::abs(du[i].value() - real[i]) <= 1e-14 * std::abs(real[i]));
        for (std::size_t w = 0; w < 3; ++w) CHECK(du[i].partial(w) == 0.0);
      }
    }
  }
}

TEST_CASE("analytic Jacobians agree with forward-mode AD") {
  std::mt19937_64 rng(23);
  for (const auto& name : model_names()) {
    CAPTURE(name);
    const auto m = make_model(name, 3);
    if (!m.has_analytic_jacobian()) continue;
    const auto n = m.state_size();
    const auto np = m.param_size();
    for (int k = 0; k < 3; ++k) {
      const auto x = testing::random_point(m, rng);
      const auto js = jacobian(m.problem.rhs, x.u, x.p, x.t, JacobianWrt::state);
      const auto jp = jacobian(m.problem.rhs, x.u, x.p, x.t, JacobianWrt::params);
      const auto as = analytic(m.problem.state_jacobian, n, n, x.u, x.p, x.t);
      const auto ap = analytic(m.problem.param_jacobian, n, np, x.u, x.p, x.t);
      CHECK((as - js).lpNorm<Eigen::Infinity>() <= 1e-12 * std::max(1.0, js.lpNorm<Eigen::Infinity>()));
      CHECK((ap - jp).lpNorm<Eigen::Infinity>() <= 1e-12 * std::max(1.0, jp.lpNorm<Eigen::Infinity>()));
    }
  }
}
