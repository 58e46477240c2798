#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "odesens/bench/bench.hpp"
#include "odesens/errors.hpp"

namespace odesens::bench {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

sens::SensitivityMethod checked_method(const models::ModelSpec& model, const std::string& name) {
  auto method = sens::SensitivityMethod::parse(name);
  if (method.needs_analytic_jacobian() && !model.has_analytic_jacobian()) {
    throw ConfigError("method " + name + " needs analytic Jacobians, which model " + model.name + " lacks");
  }
  return method;
}

void check_tol(double tol) {
  if (!(tol > 0.0 && tol < 1.0)) throw ConfigError("tolerance must be in (0, 1)");
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = std::abs(a[k] - b[k]);
    if (std::isnan(d)) return kNaN;
    m = std::max(m, d);
  }
  return m;
}

void fill_stats(BenchRecord& r, const sens::SensitivityStats& s) {
  r.nf = s.solver.nf;
  r.nJ = s.solver.nJ;
}

std::vector<double> gradient_start(const models::ModelSpec& m) {
  return m.estimation.initial_guess ? m.estimation.initial_guess(m.true_params) : m.true_params;
}

}  // namespace

models::ModelSpec resolve_model(const std::string& name, std::optional<std::size_t> grid) {
  if (grid && name != "bruss") throw ConfigError("--n only applies to the bruss model");
  if (grid && *grid < 2) throw ConfigError("bruss grid size must be at least 2");
  return models::make_model(name, grid.value_or(3));
}

SensRun run_sens(const SensOptions& opts) {
  check_tol(opts.tol);
  const auto model = resolve_model(opts.model, opts.grid);
  const auto method = checked_method(model, opts.method);
  const auto cfg = est::model_config(model, opts.tol);

  SensRun run;
  run.state_names = model.state_names;
  run.param_names = model.param_names;
  run.record.model = model.name;
  run.record.method = method.name();
  run.record.n_params = model.param_size();

  if (method.is_forward()) {
    const auto times = est::evenly_spaced(model.problem.t0, model.problem.tf, model.estimation.n_data_points);
    sens::SensitivityResult res;
    run.record.wall_time_s = median_time(
        [&] { res = sens::forward_sensitivities(model.problem, cfg, times, method); }, opts.timing.repeats,
        opts.timing.warmup);
    fill_stats(run.record, res.stats);
    run.record.retcode = ode::to_string(res.retcode);
    run.warnings = res.warnings;
    if (res.success()) {
      if (method.kind == sens::SensitivityMethod::Kind::dsaad) {
        run.record.max_err = 0.0;
      } else {
        const auto ref = sens::dsaad_forward(model.problem, cfg, times);
        run.record.max_err = ref.success() ? max_abs_diff(res.sens, ref.sens) : kNaN;
      }
    }
    run.result = std::move(res);
    return run;
  }

  const auto data = est::generate_data(model, model.estimation.n_data_points);
  const auto cost = data.cost();
  ode::ODEProblem prob = model.problem;
  prob.p = gradient_start(model);
  sens::GradientResult g;
  run.record.wall_time_s = median_time([&] { g = sens::loss_gradient(prob, cfg, cost, method); },
                                       opts.timing.repeats, opts.timing.warmup);
  fill_stats(run.record, g.stats);
  run.record.retcode = ode::to_string(g.retcode);
  run.warnings = g.warnings;
  if (g.success()) {
    const auto ref = sens::loss_gradient(prob, cfg, cost, sens::SensitivityMethod::dsaad());
    run.record.max_err = ref.success() ? relative_inf_diff(g.grad, ref.grad) : kNaN;
  }
  run.gradient = std::move(g);
  return run;
}

ScaleRun run_scale(const ScaleOptions& opts) {
  check_tol(opts.tol);
  if (opts.n_list.empty() || opts.methods.empty()) throw ConfigError("scale needs at least one N and one method");
  for (std::size_t n : opts.n_list) {
    if (n < 2) throw ConfigError("scale: every N must be at least 2");
  }
  std::vector<std::size_t> ns = opts.n_list;
  std::sort(ns.begin(), ns.end());
  ns.erase(std::unique(ns.begin(), ns.end()), ns.end());

  // Validate every name before spending time on any run.
  std::vector<sens::SensitivityMethod> methods;
  {
    const auto probe = models::bruss(2);
    for (const auto& name : opts.methods) methods.push_back(checked_method(probe, name));
  }
  const auto ref_it = std::find(opts.methods.begin(), opts.methods.end(), "dsaad");
  const bool has_ref = ref_it != opts.methods.end();
  const auto ref_index = static_cast<std::size_t>(ref_it - opts.methods.begin());

  ScaleRun run;
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> fits;
  for (std::size_t n : ns) {
    const auto model = models::bruss(n);
    const auto cfg = est::model_config(model, opts.tol);
    const auto data = est::generate_data(model, model.estimation.n_data_points);
    const auto cost = data.cost();
    ode::ODEProblem prob = model.problem;
    prob.p = gradient_start(model);

    // The reference runs first so the other rows can be compared against it.
    std::vector<std::size_t> order(methods.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    if (has_ref) std::stable_partition(order.begin(), order.end(), [&](std::size_t k) { return k == ref_index; });

    std::vector<BenchRecord> rows(methods.size());
    std::optional<std::vector<double>> ref_grad;
    for (std::size_t k : order) {
      BenchRecord& r = rows[k];
      r.model = "bruss";
      r.method = methods[k].name();
      r.n_params = model.param_size();
      sens::GradientResult g;
      try {
        r.wall_time_s = median_time([&] { g = sens::loss_gradient(prob, cfg, cost, methods[k]); }, opts.timing.repeats,
                                    opts.timing.warmup);
        r.retcode = ode::to_string(g.retcode);
      } catch (const Error&) {
        r.retcode = "error";
        continue;
      }
      fill_stats(r, g.stats);
      if (!g.success()) continue;
      if (has_ref && k == ref_index) {
        ref_grad = g.grad;
        r.max_err = 0.0;
      } else if (has_ref) {
        r.max_err = ref_grad ? relative_inf_diff(g.grad, *ref_grad) : kNaN;
      }
      auto& fit = fits[r.method];
      fit.first.push_back(static_cast<double>(r.n_params));
      fit.second.push_back(r.wall_time_s);
    }
    run.records.insert(run.records.end(), rows.begin(), rows.end());
  }
  for (const auto& m : methods) {
    const auto it = fits.find(m.name());
    if (it == fits.end() || it->second.first.size() < 2) continue;
    if (std::any_of(run.slopes.begin(), run.slopes.end(), [&](const auto& s) { return s.first == m.name(); })) continue;
    run.slopes.emplace_back(m.name(), loglog_slope(it->second.first, it->second.second));
  }
  return run;
}

EstimateRun run_estimate(const EstimateOptions& opts) {
  check_tol(opts.tol);
  if (!(opts.gtol > 0.0)) throw ConfigError("gtol must be positive");
  const auto model = resolve_model(opts.model, opts.grid);
  const auto method = checked_method(model, opts.method);
  if (!model.estimation.initial_guess) throw ConfigError("model " + model.name + " has no initial-guess rule");
  const auto cfg = est::model_config(model, opts.tol);
  const auto data = est::generate_data(model, model.estimation.n_data_points);

  EstimateRun run;
  run.truth = model.true_params;
  run.initial = model.estimation.initial_guess(model.true_params);
  run.param_names = model.param_names;
  est::BfgsOptions bo;
  bo.gtol = opts.gtol;
  run.record.wall_time_s =
      median_time([&] { run.opt = est::estimate_from(model, method, data, cfg, run.initial, bo); },
                  opts.timing.repeats, opts.timing.warmup);
  run.record.model = model.name;
  run.record.method = method.name();
  run.record.n_params = model.param_size();
  fill_stats(run.record, run.opt.stats);
  run.record.retcode = run.opt.converged ? "success" : "not_converged";
  double err = 0.0;
  for (std::size_t j = 0; j < run.truth.size(); ++j) {
    const double d = std::abs(run.opt.p_final[j] - run.truth[j]) / std::max(std::abs(run.truth[j]), 1e-300);
    err = std::isnan(d) ? kNaN : std::max(err, d);
  }
  run.record.max_err = err;
  return run;
}

}  // namespace odesens::bench
