#include <limits>

#include "odesens/errors.hpp"
#include "odesens/sensitivity/sensitivity.hpp"

namespace odesens::sens {

GradientResult loss_gradient(const ode::ODEProblem& prob, const ode::IntegratorConfig& cfg, const CostSpec& cost,
                             const SensitivityMethod& method) {
  if (method.kind == SensitivityMethod::Kind::casa) {
    AdjointOptions opts;
    opts.vjp = method.vjp;
    return casa_adjoint(prob, cfg, cost, opts);
  }
  cost.validate(prob.t0, prob.tf);
  const auto s = forward_sensitivities(prob, cfg, cost.times, method);

  GradientResult res;
  res.stats = s.stats;
  res.retcode = s.retcode;
  res.warnings = s.warnings;
  const std::size_t n = s.n_states;
  const std::size_t np = s.n_params;
  res.grad.assign(np, std::numeric_limits<double>::quiet_NaN());
  if (!s.success()) return res;

  std::fill(res.grad.begin(), res.grad.end(), 0.0);
  std::vector<double> g(n);
  double c = 0.0;
  for (std::size_t k = 0; k < s.times.size(); ++k) {
    c += cost.cost(k, s.values[k]);
    cost.gradient(k, s.values[k], g);
    for (std::size_t j = 0; j < np; ++j) {
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) acc += g[i] * s.at(k, i, j);
      res.grad[j] += acc;
    }
  }
  for (std::size_t j = 0; j < np; ++j) {
    if (!s.valid_columns[j]) res.grad[j] = std::numeric_limits<double>::quiet_NaN();
  }
  res.cost = c;
  return res;
}

}  // namespace odesens::sens
