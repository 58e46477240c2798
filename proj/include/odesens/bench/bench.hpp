#pragma once

/**
 * @file bench.hpp
 * @brief Experiment drivers behind the command-line tool: sensitivity runs,
 *        the Brusselator scaling study, estimation runs and the verification suite.
 */

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "odesens/estimation/estimation.hpp"
#include "odesens/sensitivity/sensitivity.hpp"

namespace odesens::bench {

enum class OutputFormat { csv, json };

struct BenchRecord {
  std::string model;
  std::string method;
  std::size_t n_params = 0;
  double wall_time_s = 0.0;
  std::size_t nf = 0;
  std::size_t nJ = 0;
  /// Only set when a reference method (or generator) is designated.
  std::optional<double> max_err;
  std::string retcode = "success";
};

inline constexpr const char* kCsvHeader = "model,method,n_params,wall_time_s,nf,nJ,max_err,retcode";

/// Shortest decimal that round-trips to the same double.
[[nodiscard]] std::string format_double(double x);
/// Quotes a CSV field when it holds a comma or a quote.
[[nodiscard]] std::string csv_field(const std::string& s);
[[nodiscard]] std::string csv_row(const BenchRecord& r);
/// Header line, then one row per record, each terminated by '\n'.
[[nodiscard]] std::string to_csv(const std::vector<BenchRecord>& records);

/// Median wall time of `repeats` calls of f after `warmup` untimed calls.
template <class F>
double median_time(F&& f, std::size_t repeats = 5, std::size_t warmup = 1) {
  for (std::size_t i = 0; i < warmup; ++i) f();
  std::vector<double> t;
  for (std::size_t i = 0; i < std::max<std::size_t>(repeats, 1); ++i) {
    const auto a = std::chrono::steady_clock::now();
    f();
    t.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - a).count());
  }
  std::sort(t.begin(), t.end());
  const std::size_t m = t.size() / 2;
  return t.size() % 2 == 1 ? t[m] : 0.5 * (t[m - 1] + t[m]);
}

/// Least-squares slope of log(y) against log(x).
[[nodiscard]] double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

/// ||a - b||_inf / max(||a||_inf, ||b||_inf).
[[nodiscard]] double relative_inf_diff(const std::vector<double>& a, const std::vector<double>& b);

struct Timing {
  std::size_t repeats = 5;
  std::size_t warmup = 1;
};

struct SensOptions {
  std::string model = "lv";
  std::optional<std::size_t> grid;  // Brusselator N
  std::string method = "dsaad";
  double tol = 1e-6;
  std::uint64_t seed = 0;
  Timing timing;
};

/// Output of the `sens` command. Forward methods fill the trajectories;
/// adjoint methods fill the loss gradient at the model's initial guess.
struct SensRun {
  BenchRecord record;
  std::optional<sens::SensitivityResult> result;
  std::optional<sens::GradientResult> gradient;
  std::vector<std::string> state_names;
  std::vector<std::string> param_names;
  std::vector<std::string> warnings;
};

struct ScaleOptions {
  std::vector<std::size_t> n_list = {3, 4, 5, 6, 7};
  std::vector<std::string> methods = {"dsaad", "casa-user"};
  double tol = 1e-6;
  Timing timing;
};

struct ScaleRun {
  /// Sorted by n_params, then by method order.
  std::vector<BenchRecord> records;
  /// Fitted log-log slope of wall time against n_params, per method.
  std::vector<std::pair<std::string, double>> slopes;
};

struct EstimateOptions {
  std::string model = "lv";
  std::optional<std::size_t> grid;
  std::string method = "dsaad";
  double tol = 1e-6;
  double gtol = 1e-6;
  std::uint64_t seed = 0;
  Timing timing;
};

struct EstimateRun {
  BenchRecord record;
  est::OptResult opt;
  std::vector<double> initial;
  std::vector<double> truth;
  std::vector<std::string> param_names;
};

struct Check {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

struct Trace {
  std::string label;  // e.g. "dsaad d u[0,0]/d A[0,0]"
  std::vector<double> values;
};

struct VerifyOptions {
  /// Scales one entry of the analytic state Jacobians handed to continuous
  /// forward sensitivities, so the agreement checks have something to catch.
  bool inject_csa_fault = false;
};

struct VerifyReport {
  std::vector<Check> checks;
  std::vector<double> trace_times;
  std::vector<Trace> traces;
  [[nodiscard]] bool all_passed() const;
  [[nodiscard]] std::size_t passed_count() const;
};

/// Model by name; `grid` is only meaningful for bruss. Throws ConfigError.
[[nodiscard]] models::ModelSpec resolve_model(const std::string& name, std::optional<std::size_t> grid);

[[nodiscard]] SensRun run_sens(const SensOptions& opts);
[[nodiscard]] ScaleRun run_scale(const ScaleOptions& opts);
[[nodiscard]] EstimateRun run_estimate(const EstimateOptions& opts);
[[nodiscard]] VerifyReport run_verify(const VerifyOptions& opts);

/// Serialized artifacts. `sens_trajectories_csv` is the long table
/// t,state,param,value,sensitivity (or param,gradient for adjoint runs).
[[nodiscard]] std::string sens_json(const SensRun& run, std::uint64_t seed);
[[nodiscard]] std::string sens_trajectories_csv(const SensRun& run);
[[nodiscard]] std::string scale_json(const ScaleRun& run);
[[nodiscard]] std::string estimate_json(const EstimateRun& run, std::uint64_t seed);
[[nodiscard]] std::string estimate_params_csv(const EstimateRun& run);
[[nodiscard]] std::string verify_json(const VerifyReport& report);
[[nodiscard]] std::string verify_csv(const VerifyReport& report);

}  // namespace odesens::bench
