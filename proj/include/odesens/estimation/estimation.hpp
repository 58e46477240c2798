#pragma once

/**
 * @file estimation.hpp
 * @brief Noise-free data generation, L2 loss and BFGS parameter estimation.
 */

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "odesens/models/models.hpp"
#include "odesens/ode/problem.hpp"
#include "odesens/sensitivity/sensitivity.hpp"

namespace odesens::est {

struct Dataset {
  std::vector<double> times;
  /// observations[k][i] = u_i(times[k]) at source_params.
  std::vector<std::vector<double>> observations;
  std::vector<double> source_params;

  /// The L2 cost against these observations.
  [[nodiscard]] sens::CostSpec cost() const { return sens::l2_cost(times, observations); }
};

/// n evenly spaced times on [t0, tf], both ends included exactly.
[[nodiscard]] std::vector<double> evenly_spaced(double t0, double tf, std::size_t n);

/// Tolerance of the reference solve behind generated data.
inline constexpr double kDataTolerance = 1e-10;

/// Observations of the model at its true parameters on n_points evenly spaced
/// times, endpoints included. Throws SolverFailure if the reference solve fails.
[[nodiscard]] Dataset generate_data(const models::ModelSpec& model, std::size_t n_points);

/// Solver configuration for a model at the given tolerance (stiff if the model recommends it).
[[nodiscard]] ode::IntegratorConfig model_config(const models::ModelSpec& model, double tol);

/// sum_k ||u(p, t_k) - obs_k||^2. A failed solve gives +infinity and, when
/// `diagnostic` is given, the reason.
[[nodiscard]] double l2_loss(const models::ModelSpec& model, std::span<const double> p, const Dataset& data,
                             const ode::IntegratorConfig& cfg, std::string* diagnostic = nullptr);

/// Returns f(x) and writes its gradient. Non-finite values count as +infinity.
using ObjectiveFn = std::function<double(std::span<const double> x, std::span<double> grad)>;

struct BfgsOptions {
  double gtol = 1e-6;  // on the infinity norm of the gradient
  std::size_t max_iters = 500;
  double c1 = 1e-4;
  double c2 = 0.9;
  std::size_t max_line_search = 40;
};

struct OptResult {
  std::vector<double> p_final;
  double cost_final = 0.0;
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  bool converged = false;
  double grad_norm = 0.0;
  /// Cost after each accepted iteration, starting with the initial cost.
  std::vector<double> cost_history;
  std::string message;
  std::vector<std::string> warnings;
  /// Solver work summed over every gradient evaluation.
  sens::SensitivityStats stats;
};

/// Inverse-Hessian BFGS with a strong-Wolfe line search. H0 = I / ||g0||_2.
[[nodiscard]] OptResult bfgs(const ObjectiveFn& fn, std::vector<double> p0, const BfgsOptions& opts = {});

/// Fits the model's parameters to `data` starting from its initial-guess rule,
/// with gradients from `method`.
[[nodiscard]] OptResult estimate(const models::ModelSpec& model, const sens::SensitivityMethod& method,
                                 const Dataset& data, const ode::IntegratorConfig& cfg,
                                 const BfgsOptions& opts = {});

/// Same, from an explicit starting point.
[[nodiscard]] OptResult estimate_from(const models::ModelSpec& model, const sens::SensitivityMethod& method,
                                      const Dataset& data, const ode::IntegratorConfig& cfg,
                                      std::vector<double> p0, const BfgsOptions& opts = {});

}  // namespace odesens::est
