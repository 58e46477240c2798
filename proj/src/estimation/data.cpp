#include <cmath>
#include <limits>

#include "odesens/errors.hpp"
#include "odesens/estimation/estimation.hpp"
#include "odesens/ode/solve.hpp"

namespace odesens::est {

ode::IntegratorConfig model_config(const models::ModelSpec& model, double tol) {
  return ode::IntegratorConfig::with_tol(tol, model.stiff());
}

std::vector<double> evenly_spaced(double t0, double tf, std::size_t n) {
  if (n < 2) throw ConfigError("evenly_spaced: at least two points are required");
  std::vector<double> t(n);
  for (std::size_t k = 0; k < n; ++k) t[k] = t0 + (tf - t0) * static_cast<double>(k) / static_cast<double>(n - 1);
  t.back() = tf;
  return t;
}

Dataset generate_data(const models::ModelSpec& model, std::size_t n_points) {
  if (n_points < 2) throw ConfigError("generate_data: at least two data points are required");
  const auto& prob = model.problem;
  Dataset d;
  d.source_params = model.true_params;
  d.times = evenly_spaced(prob.t0, prob.tf, n_points);

  ode::SolveOptions opts;
  opts.saveat = d.times;
  opts.dense = false;
  const auto sol = ode::solve<double>(prob, prob.u0, model.true_params, model_config(model, kDataTolerance), opts);
  if (!sol.success() || sol.saved_us.size() != n_points) {
    throw SolverFailure("generate_data: reference solve of " + model.name + " failed (" + ode::to_string(sol.retcode) +
                        ")");
  }
  d.observations = sol.saved_us;
  return d;
}

double l2_loss(const models::ModelSpec& model, std::span<const double> p, const Dataset& data,
               const ode::IntegratorConfig& cfg, std::string* diagnostic) {
  const auto& prob = model.problem;
  if (p.size() != prob.p.size()) throw ConfigError("l2_loss: parameter vector has the wrong size");
  ode::SolveOptions opts;
  opts.saveat = data.times;
  opts.dense = false;
  ode::Solution<double> sol;
  try {
    sol = ode::solve<double>(prob, prob.u0, std::vector<double>(p.begin(), p.end()), cfg, opts);
  } catch (const DomainError& e) {
    if (diagnostic) *diagnostic = e.what();
    return std::numeric_limits<double>::infinity();
  }
  if (!sol.success() || sol.saved_us.size() != data.times.size()) {
    if (diagnostic) *diagnostic = std::string("solve failed: ") + ode::to_string(sol.retcode);
    return std::numeric_limits<double>::infinity();
  }
  double c = 0.0;
  for (std::size_t k = 0; k < data.times.size(); ++k) {
    const auto& u = sol.saved_us[k];
    const auto& y = data.observations[k];
    for (std::size_t i = 0; i < u.size(); ++i) c += (u[i] - y[i]) * (u[i] - y[i]);
  }
  if (!std::isfinite(c)) {
    if (diagnostic) *diagnostic = "non-finite residual";
    return std::numeric_limits<double>::infinity();
  }
  return c;
}

}  // namespace odesens::est
