#include <sstream>

#include "json.hpp"
#include "odesens/bench/bench.hpp"

namespace odesens::bench {

namespace {

using nlohmann::ordered_json;

// JSON has no NaN or infinity; those become null.
ordered_json number(double x) { return std::isfinite(x) ? ordered_json(x) : ordered_json(nullptr); }

ordered_json numbers(const std::vector<double>& xs) {
  ordered_json a = ordered_json::array();
  for (double x : xs) a.push_back(number(x));
  return a;
}

ordered_json record_json(const BenchRecord& r) {
  ordered_json j;
  j["model"] = r.model;
  j["method"] = r.method;
  j["n_params"] = r.n_params;
  j["wall_time_s"] = r.wall_time_s;
  j["nf"] = r.nf;
  j["nJ"] = r.nJ;
  j["max_err"] = r.max_err ? number(*r.max_err) : ordered_json(nullptr);
  j["retcode"] = r.retcode;
  return j;
}

}  // namespace

std::string sens_json(const SensRun& run, std::uint64_t seed) {
  ordered_json j;
  j["record"] = record_json(run.record);
  j["seed"] = seed;
  j["state_names"] = run.state_names;
  j["param_names"] = run.param_names;
  j["warnings"] = run.warnings;
  if (run.result) {
    const auto& r = *run.result;
    j["times"] = numbers(r.times);
    ordered_json values = ordered_json::array();
    for (const auto& v : r.values) values.push_back(numbers(v));
    j["values"] = values;
    // sensitivities[k][i][j] = d u_i(t_k) / d p_j
    ordered_json s = ordered_json::array();
    for (std::size_t k = 0; k < r.times.size(); ++k) {
      ordered_json rows = ordered_json::array();
      for (std::size_t i = 0; i < r.n_states; ++i) {
        ordered_json row = ordered_json::array();
        for (std::size_t p = 0; p < r.n_params; ++p) row.push_back(number(r.at(k, i, p)));
        rows.push_back(row);
      }
      s.push_back(rows);
    }
    j["sensitivities"] = s;
  }
  if (run.gradient) {
    j["cost"] = number(run.gradient->cost);
    j["gradient"] = numbers(run.gradient->grad);
  }
  return j.dump(2) + "\n";
}

std::string sens_trajectories_csv(const SensRun& run) {
  std::ostringstream os;
  if (run.result) {
    const auto& r = *run.result;
    os << "t,state,param,value,sensitivity\n";
    for (std::size_t k = 0; k < r.times.size(); ++k) {
      for (std::size_t i = 0; i < r.n_states; ++i) {
        for (std::size_t p = 0; p < r.n_params; ++p) {
          os << format_double(r.times[k]) << ',' << csv_field(run.state_names[i]) << ','
             << csv_field(run.param_names[p]) << ','
             << format_double(r.values[k][i]) << ',' << format_double(r.at(k, i, p)) << '\n';
        }
      }
    }
  } else if (run.gradient) {
    os << "param,gradient\n";
    for (std::size_t p = 0; p < run.gradient->grad.size(); ++p) {
      os << csv_field(run.param_names[p]) << ',' << format_double(run.gradient->grad[p]) << '\n';
    }
  }
  return os.str();
}

std::string scale_json(const ScaleRun& run) {
  ordered_json j;
  ordered_json recs = ordered_json::array();
  for (const auto& r : run.records) recs.push_back(record_json(r));
  j["records"] = recs;
  ordered_json slopes = ordered_json::object();
  for (const auto& [name, s] : run.slopes) slopes[name] = number(s);
  j["loglog_slopes"] = slopes;
  return j.dump(2) + "\n";
}

std::string estimate_json(const EstimateRun& run, std::uint64_t seed) {
  ordered_json j;
  j["record"] = record_json(run.record);
  j["seed"] = seed;
  j["param_names"] = run.param_names;
  j["initial"] = numbers(run.initial);
  j["truth"] = numbers(run.truth);
  ordered_json o;
  o["p_final"] = numbers(run.opt.p_final);
  o["cost_final"] = number(run.opt.cost_final);
  o["iterations"] = run.opt.iterations;
  o["evaluations"] = run.opt.evaluations;
  o["converged"] = run.opt.converged;
  o["grad_norm"] = number(run.opt.grad_norm);
  o["message"] = run.opt.message;
  o["cost_history"] = numbers(run.opt.cost_history);
  o["warnings"] = run.opt.warnings;
  j["result"] = o;
  return j.dump(2) + "\n";
}

std::string estimate_params_csv(const EstimateRun& run) {
  std::ostringstream os;
  os << "param,initial,final,truth\n";
  for (std::size_t p = 0; p < run.truth.size(); ++p) {
    os << csv_field(run.param_names[p]) << ',' << format_double(run.initial[p]) << ','
       << (p < run.opt.p_final.size() ? format_double(run.opt.p_final[p]) : std::string()) << ','
       << format_double(run.truth[p]) << '\n';
  }
  return os.str();
}

std::string verify_json(const VerifyReport& report) {
  ordered_json j;
  j["passed"] = report.all_passed();
  j["n_checks"] = report.checks.size();
  j["n_passed"] = report.passed_count();
  ordered_json checks = ordered_json::array();
  for (const auto& c : report.checks) {
    ordered_json e;
    e["name"] = c.name;
    e["passed"] = c.passed;
    e["value"] = number(c.value);
    e["tolerance"] = number(c.tolerance);
    if (!c.detail.empty()) e["detail"] = c.detail;
    checks.push_back(e);
  }
  j["checks"] = checks;
  ordered_json traces;
  traces["t"] = numbers(report.trace_times);
  for (const auto& t : report.traces) traces[t.label] = numbers(t.values);
  j["traces"] = traces;
  return j.dump(2) + "\n";
}

std::string verify_csv(const VerifyReport& report) {
  std::ostringstream os;
  os << "check,passed,value,tolerance\n";
  for (const auto& c : report.checks) {
    os << c.name << ',' << (c.passed ? "true" : "false") << ',' << format_double(c.value) << ','
       << format_double(c.tolerance) << '\n';
  }
  return os.str();
}

}  // namespace odesens::bench
