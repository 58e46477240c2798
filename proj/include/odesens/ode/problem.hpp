#pragma once

/**
 * @file problem.hpp
 * @brief Problem definition, integrator configuration and event specifications.
 */

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "odesens/ad/dual.hpp"
#include "odesens/ad/vector_field.hpp"

namespace odesens::ode {

/// Controls an event effect may change besides state and parameters.
struct EventControls {
  bool terminate = false;
};

enum class Crossing { any, up, down };

template <class T>
using ConditionFunction = std::function<T(std::span<const T> u, std::span<const T> p, const T& t)>;

template <class T>
using EffectFunction = std::function<void(std::span<T> u, std::span<T> p, const T& t, EventControls& controls)>;

/**
 * Root-finding event: whenever condition(u, p, t) changes sign between two
 * accepted steps (filtered by `direction`), the crossing time is located on
 * the dense output and `effect` is applied once at that time.
 *
 * Condition and effect are generic callables instantiated for double and
 * Dual, so parameter-dependent crossing times propagate into Dual solves.
 */
class EventSpec {
 public:
  EventSpec() = default;

  template <class Condition, class Effect>
  EventSpec(std::string name, Condition condition, Effect effect, Crossing direction = Crossing::any,
            double root_tol = 0.0)
      : name_(std::move(name)),
        direction_(direction),
        root_tol_(root_tol),
        g_real_(condition),
        g_dual_(std::move(condition)),
        e_real_(effect),
        e_dual_(std::move(effect)) {}

  template <class T>
  [[nodiscard]] T condition(std::span<const T> u, std::span<const T> p, const T& t) const {
    if constexpr (std::is_same_v<T, double>) {
      return g_real_(u, p, t);
    } else {
      return g_dual_(u, p, t);
    }
  }

  template <class T>
  void effect(std::span<T> u, std::span<T> p, const T& t, EventControls& controls) const {
    if constexpr (std::is_same_v<T, double>) {
      e_real_(u, p, t, controls);
    } else {
      e_dual_(u, p, t, controls);
    }
  }

  [[nodiscard]] const std::string& name() const noexcept { return name_; }
  [[nodiscard]] Crossing direction() const noexcept { return direction_; }
  /// Bracket width at which root refinement stops; 0 selects 10 eps |t|.
  [[nodiscard]] double root_tol() const noexcept { return root_tol_; }

 private:
  std::string name_;
  Crossing direction_ = Crossing::any;
  double root_tol_ = 0.0;
  ConditionFunction<double> g_real_;
  ConditionFunction<Dual> g_dual_;
  EffectFunction<double> e_real_;
  EffectFunction<Dual> e_dual_;
};

/// u' = f(u, p, t) on (t0, tf).
struct ODEProblem {
  VectorField rhs;
  std::vector<double> u0;
  std::vector<double> p;
  double t0 = 0.0;
  double tf = 1.0;
  std::vector<EventSpec> events;
  /// Times the integrator must step onto exactly (known discontinuities).
  std::vector<double> tstops;
  /// Optional analytic df/du (n x n, row-major) and df/dp (n x P).
  GenericMatrixFunction state_jacobian;
  GenericMatrixFunction param_jacobian;
  /// f does not depend on t explicitly (df/dt = 0 almost everywhere).
  bool autonomous = false;

  [[nodiscard]] std::size_t state_size() const noexcept { return u0.size(); }
  [[nodiscard]] std::size_t param_size() const noexcept { return p.size(); }

  /// Throws ConfigError unless t0 < tf and the RHS is evaluable at (u0, p, t0).
  void validate() const;
};

struct ControllerGains {
  /// PI exponents; 0 selects 0.7/(q+1) and 0.4/(q+1) for an error estimator of order q.
  double beta1 = 0.0;
  double beta2 = 0.0;
  double safety = 0.9;
  double qmin = 0.2;
  double qmax = 10.0;
};

struct IntegratorConfig {
  double abstol = 1e-6;
  double reltol = 1e-3;
  /// 0 selects an automatic floor of 1e-14 * max(1, |t|).
  double dtmin = 0.0;
  double dtmax = std::numeric_limits<double>::infinity();
  /// 0 selects the automatic initial step heuristic.
  double dt_initial = 0.0;
  std::size_t max_steps = 200000;
  ControllerGains controller;
  bool stiff = false;
  /// For Dual solves, include the partials as extra components of the error norm.
  bool norm_includes_partials = true;

  void validate() const;

  static IntegratorConfig with_tol(double tol, bool stiff = false) {
    IntegratorConfig cfg;
    cfg.abstol = tol;
    cfg.reltol = tol;
    cfg.stiff = stiff;
    return cfg;
  }
};

struct SolveOptions {
  /// Extra output times, filled from the dense output as the solve passes them.
  std::vector<double> saveat;
  /// Keep every accepted step and its interpolation coefficients.
  bool dense = true;
};

}  // namespace odesens::ode
