#pragma once

/**
 * @file models.hpp
 * @brief Benchmark models: Lotka-Volterra, Brusselator, POLLU, PK/PD and a hybrid control problem.
 */

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "odesens/ode/problem.hpp"

namespace odesens::models {

enum class SolverKind { explicit_rk, stiff };

struct EstimationDefaults {
  std::size_t n_data_points = 10;
  /// Starting point for parameter estimation as a function of the true parameters.
  std::function<std::vector<double>(std::span<const double>)> initial_guess;
};

struct ModelSpec {
  std::string name;
  ode::ODEProblem problem;
  std::vector<double> true_params;
  SolverKind recommended_solver = SolverKind::explicit_rk;
  EstimationDefaults estimation;
  std::vector<std::string> state_names;
  std::vector<std::string> param_names;
  /// Closed-form state and d(state)/d(params) (flattened [state][param]), when known.
  std::function<std::vector<double>(double)> analytic_solution;
  std::function<std::vector<double>(double)> analytic_sensitivity;

  [[nodiscard]] bool has_analytic_jacobian() const noexcept {
    return static_cast<bool>(problem.state_jacobian) && static_cast<bool>(problem.param_jacobian);
  }
  [[nodiscard]] std::size_t state_size() const noexcept { return problem.u0.size(); }
  [[nodiscard]] std::size_t param_size() const noexcept { return problem.p.size(); }
  [[nodiscard]] bool stiff() const noexcept { return recommended_solver == SolverKind::stiff; }
};

/// x' = p1 x - p2 x y, y' = -p3 y + x y.
[[nodiscard]] ModelSpec lv();

/// N x N Brusselator with spatially varying parameters (2N^2 states, 4N^2 parameters).
[[nodiscard]] ModelSpec bruss(std::size_t n);

/// Forcing term of the Brusselator at (x, y, t).
[[nodiscard]] double bruss_forcing(double x, double y, double t) noexcept;

/// Index of u at grid node (i, j) (x = i h, y = j h); v follows at offset N^2.
[[nodiscard]] constexpr std::size_t bruss_index(std::size_t n, std::size_t i, std::size_t j) noexcept {
  return j * n + i;
}

/// 20-species air pollution chemistry, 25 rate constants.
[[nodiscard]] ModelSpec pollu();

/// Two-compartment PK with indirect-response PD; doses of 100 into Depot every 24 time units before tf.
[[nodiscard]] ModelSpec pkpd(double tf = 100.0);

/// x' = -a, y' = b; when x crosses zero, b is set to 0.
[[nodiscard]] ModelSpec hybrid_control(double a = 2.0, double b = 1.0);

/// Registry: "lv", "bruss" (grid size `n`), "pollu", "pkpd", "hybrid". Throws ConfigError otherwise.
[[nodiscard]] ModelSpec make_model(std::string_view name, std::size_t n = 3);
[[nodiscard]] std::vector<std::string> model_names();

}  // namespace odesens::models
