#pragma once

/**
 * @file solve.hpp
 * @brief Entry points for solving an ODEProblem over double or Dual scalars.
 */

#include <vector>

#include "odesens/ad/dual.hpp"
#include "odesens/ode/integrator.hpp"
#include "odesens/ode/problem.hpp"
#include "odesens/ode/solution.hpp"
#include "odesens/ode/system.hpp"

namespace odesens::ode {

/// Tsit5 on the problem's own u0 and p.
[[nodiscard]] Solution<double> solve_explicit(const ODEProblem& prob, const IntegratorConfig& cfg,
                                              const SolveOptions& opts = {});

/// RODAS 4(3); uses prob.state_jacobian when present, forward-mode AD otherwise.
[[nodiscard]] Solution<double> solve_stiff(const ODEProblem& prob, const IntegratorConfig& cfg,
                                           const SolveOptions& opts = {});

/// Picks the method family from cfg.stiff.
[[nodiscard]] Solution<double> solve(const ODEProblem& prob, const IntegratorConfig& cfg,
                                     const SolveOptions& opts = {});

/// Solve with explicit initial state and parameters of scalar type T
/// (double or Dual). Seeded Duals make this the discrete-sensitivity solve.
template <class T>
[[nodiscard]] Solution<T> solve(const ODEProblem& prob, std::vector<T> u0, std::vector<T> p,
                                const IntegratorConfig& cfg, const SolveOptions& opts = {});

extern template Solution<double> solve<double>(const ODEProblem&, std::vector<double>, std::vector<double>,
                                               const IntegratorConfig&, const SolveOptions&);
extern template Solution<Dual> solve<Dual>(const ODEProblem&, std::vector<Dual>, std::vector<Dual>,
                                           const IntegratorConfig&, const SolveOptions&);

}  // namespace odesens::ode
