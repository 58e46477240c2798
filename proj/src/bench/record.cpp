#include <charconv>
#include <cmath>
#include <sstream>

#include "odesens/bench/bench.hpp"
#include "odesens/errors.hpp"

namespace odesens::bench {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

std::string csv_row(const BenchRecord& r) {
  std::ostringstream os;
  os << r.model << ',' << r.method << ',' << r.n_params << ',' << format_double(r.wall_time_s) << ',' << r.nf << ','
     << r.nJ << ',' << (r.max_err ? format_double(*r.max_err) : std::string()) << ',' << r.retcode;
  return os.str();
}

std::string to_csv(const std::vector<BenchRecord>& records) {
  std::string out = std::string(kCsvHeader) + "\n";
  for (const auto& r : records) out += csv_row(r) + "\n";
  return out;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ConfigError("loglog_slope: need at least two matching points");
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0 && y[i] > 0.0)) throw ConfigError("loglog_slope: values must be positive");
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  if (sxx == 0.0) throw ConfigError("loglog_slope: x values are all equal");
  return sxy / sxx;
}

double relative_inf_diff(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw ConfigError("relative_inf_diff: size mismatch");
  double d = 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::isnan(a[i]) || std::isnan(b[i])) return std::numeric_limits<double>::quiet_NaN();
    d = std::max(d, std::abs(a[i] - b[i]));
    s = std::max({s, std::abs(a[i]), std::abs(b[i])});
  }
  return s == 0.0 ? d : d / s;
}

bool VerifyReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

std::size_t VerifyReport::passed_count() const {
  return static_cast<std::size_t>(std::count_if(checks.begin(), checks.end(), [](const Check& c) { return c.passed; }));
}

}  // namespace odesens::bench
