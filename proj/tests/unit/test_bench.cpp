#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "odesens/bench/bench.hpp"

using namespace odesens;
using namespace odesens::bench;

namespace {

const Timing kOnce{1, 0};

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  for (std::string l; std::getline(is, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST_CASE("record formatting") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1e-6) == "1e-06");
  CHECK(format_double(3.0) == "3");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
  CHECK(format_double(std::numeric_limits<double>::quiet_NaN()) == "nan");

  BenchRecord r{"lv", "dsaad", 3, 0.25, 100, 0, std::nullopt, "success"};
  CHECK(csv_row(r) == "lv,dsaad,3,0.25,100,0,,success");
  r.max_err = 1.5e-5;
  const auto csv = to_csv({r, r});
  const auto ls = lines(csv);
  REQUIRE(ls.size() == 3);
  CHECK(ls[0] == "model,method,n_params,wall_time_s,nf,nJ,max_err,retcode");
  CHECK(ls[1] == "lv,dsaad,3,0.25,100,0,1.5e-05,success");
}

TEST_CASE("numeric helpers") {
  const std::vector<double> x = {36, 64, 100, 144};
  std::vector<double> y;
  for (double v : x) y.push_back(0.5 * std::pow(v, 1.7));
  CHECK(loglog_slope(x, y) == doctest::Approx(1.7).epsilon(1e-12));
  CHECK_THROWS_AS((void)loglog_slope({1.0}, {1.0}), ConfigError);
  CHECK_THROWS_AS((void)loglog_slope({1.0, 2.0}, {1.0, -1.0}), ConfigError);

  CHECK(relative_inf_diff({1.0, -2.0}, {1.0, -2.0}) == 0.0);
  CHECK(relative_inf_diff({1.0, -2.0}, {1.0, -1.0}) == doctest::Approx(0.5));
  CHECK(relative_inf_diff({0.0}, {0.0}) == 0.0);

  int calls = 0;
  const double t = median_time([&] { ++calls; }, 5, 1);
  CHECK(calls == 6);
  CHECK(t >= 0.0);
}

TEST_CASE("sens runs") {
  SensOptions o;
  o.model = "hybrid";
  o.timing = kOnce;
  const auto h = run_sens(o);
  REQUIRE(h.result);
  CHECK(h.record.retcode == "success");
  CHECK(h.record.wall_time_s > 0.0);
  CHECK(*h.record.max_err == 0.0);
  const auto& r = *h.result;
  const std::size_t k = r.times.size() - 1;
  CHECK(r.times[k] == 1.0);
  CHECK(std::abs(r.at(k, 0, 0) + 1.0) < 1e-6);
  CHECK(std::abs(r.at(k, 1, 0) + 0.25) < 1e-6);
  CHECK(std::abs(r.at(k, 0, 1)) < 1e-6);
  CHECK(std::abs(r.at(k, 1, 1) - 0.5) < 1e-6);
  const auto table = lines(sens_trajectories_csv(h));
  CHECK(table[0] == "t,state,param,value,sensitivity");
  CHECK(table.size() == 1 + r.times.size() * 4);

  o.model = "lv";
  o.method = "csa-user";
  const auto c = run_sens(o);
  REQUIRE(c.record.max_err);
  CHECK(*c.record.max_err <= 5e-4);

  o.method = "casa-ad-vjp";
  const auto a = run_sens(o);
  REQUIRE(a.gradient);
  CHECK(*a.record.max_err <= 1e-4);
  CHECK(lines(sens_trajectories_csv(a)).size() == 4);
  const auto j = nlohmann::json::parse(sens_json(a, 3));
  CHECK(j["seed"] == 3);
  CHECK(j["gradient"].size() == 3);

  o.method = "adjoint";
  CHECK_THROWS_AS((void)run_sens(o), ConfigError);
  o.method = "dsaad";
  o.model = "nope";
  CHECK_THROWS_AS((void)run_sens(o), ConfigError);
  o.model = "lv";
  o.grid = 3;
  CHECK_THROWS_AS((void)run_sens(o), ConfigError);
  o.model = "pkpd";
  o.grid.reset();
  o.method = "csa-user";
  CHECK_NOTHROW((void)run_sens(o));
}

TEST_CASE("sens output is deterministic apart from timing") {
  SensOptions o;
  o.model = "lv";
  o.method = "csa-ad-jv";
  o.timing = kOnce;
  auto a = run_sens(o);
  auto b = run_sens(o);
  a.record.wall_time_s = b.record.wall_time_s = 1.0;
  CHECK(to_csv({a.record}) == to_csv({b.record}));
  CHECK(sens_trajectories_csv(a) == sens_trajectories_csv(b));
}

TEST_CASE("scale runs") {
  ScaleOptions o;
  o.n_list = {5, 3, 4};
  o.timing = kOnce;
  const auto run = run_scale(o);
  REQUIRE(run.records.size() == 6);
  const std::vector<std::size_t> np = {36, 36, 64, 64, 100, 100};
  for (std::size_t k = 0; k < 6; ++k) {
    CHECK(run.records[k].n_params == np[k]);
    CHECK(run.records[k].retcode == "success");
    REQUIRE(run.records[k].max_err);
    CHECK(*run.records[k].max_err <= 1e-4);
  }
  CHECK(run.records[0].method == "dsaad");
  CHECK(run.records[1].method == "casa-user");
  REQUIRE(run.slopes.size() == 2);
  const auto j = nlohmann::json::parse(scale_json(run));
  CHECK(j["records"].size() == 6);

  o.n_list = {1};
  CHECK_THROWS_AS((void)run_scale(o), ConfigError);
  o.n_list = {3};
  o.methods = {"dsaad", "bogus"};
  CHECK_THROWS_AS((void)run_scale(o), ConfigError);
}

TEST_CASE("estimate runs") {
  EstimateOptions o;
  o.timing = kOnce;
  const auto run = run_estimate(o);
  CHECK(run.opt.converged);
  CHECK(run.opt.grad_norm <= 1e-6);
  REQUIRE(run.opt.p_final.size() == 3);
  for (std::size_t j = 0; j < 3; ++j) CHECK(std::abs(run.opt.p_final[j] - run.truth[j]) <= 1e-4);
  CHECK(run.record.nf > 0);
  CHECK(run.record.retcode == "success");
  const auto params = lines(estimate_params_csv(run));
  CHECK(params[0] == "param,initial,final,truth");
  CHECK(params.size() == 4);
  const auto j = nlohmann::json::parse(estimate_json(run, 0));
  CHECK(j["result"]["converged"] == true);

  o.method = "csa-user";
  o.model = "pkpd";
  o.gtol = -1.0;
  CHECK_THROWS_AS((void)run_estimate(o), ConfigError);
}

TEST_CASE("verification suite") {
  const auto clean = run_verify({false});
  for (const auto& c : clean.checks) {
    CAPTURE(c.name);
    CAPTURE(c.value);
    CHECK(c.passed);
  }
  CHECK(clean.all_passed());
  CHECK(clean.passed_count() >= 10);
  CHECK(clean.trace_times.size() == 101);
  REQUIRE(clean.traces.size() == 18);
  CHECK(clean.traces[0].label == "u[0,0]");
  for (const auto& t : clean.traces) CHECK(t.values.size() == 101);
  const auto j = nlohmann::json::parse(verify_json(clean));
  CHECK(j["passed"] == true);

  const auto faulty = run_verify({true});
  CHECK_FALSE(faulty.all_passed());
  bool named = false;
  for (const auto& c : faulty.checks) named = named || (c.name == "lv-dsaad-vs-csa-user" && !c.passed);
  CHECK(named);
  CHECK(verify_csv(faulty).find("lv-dsaad-vs-csa-user,false") != std::string::npos);
}
