#pragma once

/**
 * @file sensitivity.hpp
 * @brief Forward sensitivities (discrete via Duals, continuous, finite differences),
 *        adjoint gradients and cost-gradient assembly.
 */

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "odesens/ad/reverse.hpp"
#include "odesens/ode/problem.hpp"
#include "odesens/ode/solution.hpp"

namespace odesens::sens {

/// How the continuous forward system evaluates J*S + df/dp.
enum class CsaJacobian {
  user,     // analytic state and parameter Jacobians of the problem
  ad_full,  // both Jacobians assembled with forward-mode AD
  ad_jv,    // one width-1 Dual evaluation per parameter, seeded with (S_i, e_i)
};

enum class NumdiffScheme { forward, central };

[[nodiscard]] const char* to_string(CsaJacobian j) noexcept;
[[nodiscard]] const char* to_string(NumdiffScheme s) noexcept;

struct SensitivityMethod {
  enum class Kind { dsaad, csa, casa, numdiff };

  Kind kind = Kind::dsaad;
  std::size_t chunk = 0;  // dsaad: 0 selects the default chunk size
  CsaJacobian csa_jacobian = CsaJacobian::user;
  VjpStrategy vjp = VjpStrategy::reverse_tape;
  NumdiffScheme scheme = NumdiffScheme::central;

  static SensitivityMethod dsaad(std::size_t chunk = 0) { return {Kind::dsaad, chunk}; }
  static SensitivityMethod csa(CsaJacobian j) {
    SensitivityMethod m;
    m.kind = Kind::csa;
    m.csa_jacobian = j;
    return m;
  }
  static SensitivityMethod casa(VjpStrategy v) {
    SensitivityMethod m;
    m.kind = Kind::casa;
    m.vjp = v;
    return m;
  }
  static SensitivityMethod numdiff(NumdiffScheme s) {
    SensitivityMethod m;
    m.kind = Kind::numdiff;
    m.scheme = s;
    return m;
  }

  /// Command-line name: dsaad, csa-user, csa-ad-jac, csa-ad-jv, casa-user,
  /// casa-ad-jac, casa-ad-vjp, numdiff-forward, numdiff-central.
  [[nodiscard]] std::string name() const;
  /// Inverse of name(); throws ConfigError for unknown names.
  [[nodiscard]] static SensitivityMethod parse(std::string_view name);
  [[nodiscard]] static std::vector<std::string> names();

  [[nodiscard]] bool is_forward() const noexcept { return kind != Kind::casa; }
  /// csa-user and casa-user need the problem's analytic Jacobians.
  [[nodiscard]] bool needs_analytic_jacobian() const noexcept {
    return (kind == Kind::csa && csa_jacobian == CsaJacobian::user) ||
           (kind == Kind::casa && vjp == VjpStrategy::user_jacobian_transpose);
  }
};

struct SensitivityStats {
  ode::SolverStats solver;
  /// Number of separate ODE solves performed (chunks, perturbations, passes).
  std::size_t nsolves = 0;
};

struct SensitivityResult {
  std::vector<double> times;
  std::size_t n_states = 0;
  std::size_t n_params = 0;
  /// values[k][i] = u_i(times[k]).
  std::vector<std::vector<double>> values;
  /// Flattened [time][state][param].
  std::vector<double> sens;
  /// numdiff marks a column invalid when a perturbed solve fails.
  std::vector<bool> valid_columns;
  SensitivityStats stats;
  ode::ReturnCode retcode = ode::ReturnCode::success;
  std::vector<std::string> warnings;

  [[nodiscard]] double at(std::size_t k, std::size_t state, std::size_t param) const {
    return sens[(k * n_states + state) * n_params + param];
  }
  [[nodiscard]] double& at(std::size_t k, std::size_t state, std::size_t param) {
    return sens[(k * n_states + state) * n_params + param];
  }
  [[nodiscard]] bool success() const noexcept { return retcode == ode::ReturnCode::success; }
};

/// Discrete-point cost C = sum_i c_i(u(t_i)) with analytic state gradients.
struct CostSpec {
  std::vector<double> times;
  std::function<double(std::size_t i, std::span<const double> u)> cost;
  std::function<void(std::size_t i, std::span<const double> u, std::span<double> grad)> gradient;

  /// Throws ConfigError unless times are strictly increasing inside [t0, tf] and both functions are set.
  void validate(double t0, double tf) const;
};

/// L2 cost sum_i ||u(t_i) - obs_i||^2.
[[nodiscard]] CostSpec l2_cost(std::vector<double> times, std::vector<std::vector<double>> observations);

struct GradientResult {
  std::vector<double> grad;
  double cost = 0.0;
  SensitivityStats stats;
  ode::ReturnCode retcode = ode::ReturnCode::success;
  std::vector<std::string> warnings;

  [[nodiscard]] bool success() const noexcept { return retcode == ode::ReturnCode::success; }
};

/// Runs the integrator on Duals with the parameters seeded in chunks; the
/// partials at `out_times` are the derivatives of the discrete solution.
[[nodiscard]] SensitivityResult dsaad_forward(const ode::ODEProblem& prob, const ode::IntegratorConfig& cfg,
                                              std::span<const double> out_times, std::size_t chunk = 0);

/// Solves the extended system u' = f, S' = J S + df/dp. With
/// cfg.norm_includes_partials false only u enters the error norm.
[[nodiscard]] SensitivityResult csa_forward(const ode::ODEProblem& prob, const ode::IntegratorConfig& cfg,
                                            std::span<const double> out_times, CsaJacobian jac);

/// Finite differences: forward uses 1 + P solves, central 2P.
[[nodiscard]] SensitivityResult numdiff(const ode::ODEProblem& prob, const ode::IntegratorConfig& cfg,
                                        std::span<const double> out_times, NumdiffScheme scheme);

/// Dispatch for the forward methods; throws ConfigError for casa.
[[nodiscard]] SensitivityResult forward_sensitivities(const ode::ODEProblem& prob, const ode::IntegratorConfig& cfg,
                                                      std::span<const double> out_times,
                                                      const SensitivityMethod& method);

struct AdjointOptions {
  VjpStrategy vjp = VjpStrategy::reverse_tape;
  double quad_rtol = 1e-8;
  double quad_atol = 1e-12;
  /// Optional du0/dp (n x P, row-major) for the initial-condition term.
  std::vector<double> du0_dp;
};

/// Gradient of the cost through the backward adjoint equation and a
/// Gauss-Kronrod quadrature of lambda' df/dp between consecutive knots.
[[nodiscard]] GradientResult casa_adjoint(const ode::ODEProblem& prob, const ode::IntegratorConfig& cfg,
                                          const CostSpec& cost, const AdjointOptions& opts = {});

/// dC/dp by any method. Forward methods chain the cost gradient through the
/// sensitivities at the data times.
[[nodiscard]] GradientResult loss_gradient(const ode::ODEProblem& prob, const ode::IntegratorConfig& cfg,
                                           const CostSpec& cost, const SensitivityMethod& method);

/// Warning attached to continuous forward sensitivities of problems with events.
inline constexpr std::string_view kCsaEventWarning = "naive-CSA under events is known-incorrect";

}  // namespace odesens::sens
