#include <algorithm>
#include <limits>

#include "odesens/errors.hpp"
#include "odesens/estimation/estimation.hpp"

namespace odesens::est {

OptResult estimate(const models::ModelSpec& model, const sens::SensitivityMethod& method, const Dataset& data,
                   const ode::IntegratorConfig& cfg, const BfgsOptions& opts) {
  if (!model.estimation.initial_guess) throw ConfigError("model " + model.name + " has no initial-guess rule");
  return estimate_from(model, method, data, cfg, model.estimation.initial_guess(model.true_params), opts);
}

OptResult estimate_from(const models::ModelSpec& model, const sens::SensitivityMethod& method, const Dataset& data,
                        const ode::IntegratorConfig& cfg, std::vector<double> p0, const BfgsOptions& opts) {
  if (p0.size() != model.param_size()) throw ConfigError("estimate: starting point has the wrong size");
  if (method.needs_analytic_jacobian() && !model.has_analytic_jacobian()) {
    throw ConfigError("method " + method.name() + " needs analytic Jacobians, which " + model.name + " lacks");
  }
  const sens::CostSpec cost = data.cost();
  ode::ODEProblem prob = model.problem;
  std::vector<std::string> warnings;
  sens::SensitivityStats stats;

  auto fn = [&](std::span<const double> x, std::span<double> grad) {
    prob.p.assign(x.begin(), x.end());
    const auto g = sens::loss_gradient(prob, cfg, cost, method);
    stats.solver += g.stats.solver;
    stats.nsolves += g.stats.nsolves;
    for (const auto& w : g.warnings) {
      if (std::find(warnings.begin(), warnings.end(), w) == warnings.end()) warnings.push_back(w);
    }
    if (!g.success()) return std::numeric_limits<double>::infinity();
    std::copy(g.grad.begin(), g.grad.end(), grad.begin());
    return g.cost;
  };
  OptResult r = bfgs(fn, std::move(p0), opts);
  r.warnings = std::move(warnings);
  r.stats = stats;
  return r;
}

}  // namespace odesens::est
