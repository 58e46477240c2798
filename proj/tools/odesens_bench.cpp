// odesens-bench: sensitivity, scaling, estimation and verification runs with
// machine-readable output. Exit codes: 0 success, 1 runtime or check failure,
// 2 usage error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "odesens/bench/bench.hpp"
#include "odesens/errors.hpp"

namespace fs = std::filesystem;
using namespace odesens;

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kUsage = 2;

struct Shared {
  std::string out;
  std::string format = "csv";
  std::uint64_t seed = 0;
  std::size_t repeats = 5;
  std::size_t warmup = 1;

  [[nodiscard]] bench::OutputFormat fmt() const {
    return format == "json" ? bench::OutputFormat::json : bench::OutputFormat::csv;
  }
  [[nodiscard]] bench::Timing timing() const { return {repeats, warmup}; }
};

void add_shared(CLI::App* cmd, Shared& s, bool timed) {
  cmd->add_option("--out", s.out, "Output path (stdout when omitted)");
  cmd->add_option("--format", s.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--seed", s.seed, "Seed recorded with the run (all runs are deterministic)");
  if (timed) {
    cmd->add_option("--repeats", s.repeats, "Timed repetitions; the median is reported")->check(CLI::PositiveNumber);
    cmd->add_option("--warmup", s.warmup, "Untimed warm-up repetitions");
  }
}

// Path next to `out` with the extension replaced, e.g. run.csv -> run.sens.csv.
fs::path sibling(const std::string& out, const std::string& suffix) {
  fs::path p(out);
  return p.parent_path() / (p.stem().string() + suffix);
}

void write(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw odesens::Error("cannot write " + path);
  f << text;
  if (!f) throw odesens::Error("failed writing " + path);
}

std::string traces_csv(const bench::VerifyReport& r) {
  std::string s = "t";
  for (const auto& t : r.traces) s += "," + bench::csv_field(t.label);
  s += "\n";
  for (std::size_t k = 0; k < r.trace_times.size(); ++k) {
    s += bench::format_double(r.trace_times[k]);
    for (const auto& t : r.traces) s += "," + bench::format_double(t.values[k]);
    s += "\n";
  }
  return s;
}

void print_warnings(const std::vector<std::string>& w) {
  for (const auto& m : w) std::cerr << "warning: " << m << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sensitivity analysis benchmarks for ODE solutions"};
  app.require_subcommand(1);

  Shared sh;
  std::string model;
  std::optional<std::size_t> grid;
  std::string method = "dsaad";
  double tol = 1e-6;

  auto* sens_cmd = app.add_subcommand("sens", "Sensitivity trajectories (or an adjoint loss gradient) for one model");
  sens_cmd->add_option("--model", model, "Model name")->required();
  sens_cmd->add_option("--n", grid, "Brusselator grid size");
  sens_cmd->add_option("--method", method, "Sensitivity method");
  sens_cmd->add_option("--tol", tol, "Relative and absolute solver tolerance");
  add_shared(sens_cmd, sh, true);

  std::vector<std::size_t> n_list = {3, 4, 5, 6, 7};
  std::vector<std::string> methods = {"dsaad", "casa-user"};
  std::string scale_model = "bruss";
  auto* scale_cmd = app.add_subcommand("scale", "Brusselator scaling study of loss-gradient cost");
  scale_cmd->add_option("--model", scale_model, "Only bruss is supported")->check(CLI::IsMember({"bruss"}));
  scale_cmd->add_option("--n-list", n_list, "Grid sizes")->delimiter(',');
  scale_cmd->add_option("--methods", methods, "Methods")->delimiter(',');
  scale_cmd->add_option("--tol", tol, "Solver tolerance");
  add_shared(scale_cmd, sh, true);

  double gtol = 1e-6;
  auto* est_cmd = app.add_subcommand("estimate", "Fit parameters to noise-free data with BFGS");
  est_cmd->add_option("--model", model, "Model name")->required();
  est_cmd->add_option("--n", grid, "Brusselator grid size");
  est_cmd->add_option("--method", method, "Gradient method");
  est_cmd->add_option("--tol", tol, "Solver tolerance");
  est_cmd->add_option("--gtol", gtol, "Gradient infinity-norm tolerance");
  add_shared(est_cmd, sh, true);

  bool inject = false;
  auto* verify_cmd = app.add_subcommand("verify", "Cross-method agreement suite");
  verify_cmd->add_flag("--inject-fault", inject, "Perturb the analytic Jacobian used by continuous sensitivities");
  add_shared(verify_cmd, sh, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  CLI::App* active = app.get_subcommands().front();
  try {
    if (active == sens_cmd) {
      bench::SensOptions o{model, grid, method, tol, sh.seed, sh.timing()};
      const auto run = bench::run_sens(o);
      print_warnings(run.warnings);
      if (sh.fmt() == bench::OutputFormat::json) {
        write(sh.out, bench::sens_json(run, sh.seed));
      } else {
        write(sh.out, bench::to_csv({run.record}));
        if (!sh.out.empty()) write(sibling(sh.out, ".sens.csv").string(), bench::sens_trajectories_csv(run));
      }
      return run.record.retcode == "success" ? kOk : kFailure;
    }
    if (active == scale_cmd) {
      bench::ScaleOptions o{n_list, methods, tol, sh.timing()};
      const auto run = bench::run_scale(o);
      write(sh.out, sh.fmt() == bench::OutputFormat::json ? bench::scale_json(run) : bench::to_csv(run.records));
      for (const auto& [name, s] : run.slopes) std::cerr << "log-log slope " << name << ": " << s << "\n";
      return kOk;
    }
    if (active == est_cmd) {
      bench::EstimateOptions o{model, grid, method, tol, gtol, sh.seed, sh.timing()};
      const auto run = bench::run_estimate(o);
      print_warnings(run.opt.warnings);
      if (sh.fmt() == bench::OutputFormat::json) {
        write(sh.out, bench::estimate_json(run, sh.seed));
      } else {
        write(sh.out, bench::to_csv({run.record}));
        if (!sh.out.empty()) write(sibling(sh.out, ".params.csv").string(), bench::estimate_params_csv(run));
      }
      if (!run.opt.converged) {
        std::cerr << "estimation did not converge: " << run.opt.message << "\n";
        return kFailure;
      }
      return kOk;
    }
    const auto report = bench::run_verify({inject});
    if (sh.fmt() == bench::OutputFormat::json) {
      write(sh.out, bench::verify_json(report));
    } else {
      write(sh.out, bench::verify_csv(report));
      if (!sh.out.empty()) write(sibling(sh.out, ".traces.csv").string(), traces_csv(report));
    }
    for (const auto& c : report.checks) {
      if (!c.passed) std::cerr << "FAILED " << c.name << " (value " << c.value << ", tolerance " << c.tolerance << ")\n";
    }
    std::cerr << report.passed_count() << "/" << report.checks.size() << " checks passed\n";
    return report.all_passed() ? kOk : kFailure;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << active->help();
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
}
