#include <algorithm>
#include <cmath>
#include <memory>

#include "odesens/errors.hpp"
#include "odesens/sensitivity/sensitivity.hpp"

namespace odesens::sens {

const char* to_string(CsaJacobian j) noexcept {
  switch (j) {
    case CsaJacobian::user: return "user";
    case CsaJacobian::ad_full: return "ad-jac";
    case CsaJacobian::ad_jv: return "ad-jv";
  }
  return "?";
}

const char* to_string(NumdiffScheme s) noexcept {
  switch (s) {
    case NumdiffScheme::forward: return "forward";
    case NumdiffScheme::central: return "central";
  }
  return "?";
}

std::string SensitivityMethod::name() const {
  switch (kind) {
    case Kind::dsaad: return "dsaad";
    case Kind::csa: return std::string("csa-") + to_string(csa_jacobian);
    case Kind::casa:
      switch (vjp) {
        case VjpStrategy::user_jacobian_transpose: return "casa-user";
        case VjpStrategy::forward_full_jacobian_transpose: return "casa-ad-jac";
        case VjpStrategy::reverse_tape: return "casa-ad-vjp";
      }
      break;
    case Kind::numdiff: return std::string("numdiff-") + to_string(scheme);
  }
  return "?";
}

SensitivityMethod SensitivityMethod::parse(std::string_view name) {
  if (name == "dsaad") return dsaad();
  if (name == "csa-user") return csa(CsaJacobian::user);
  if (name == "csa-ad-jac") return csa(CsaJacobian::ad_full);
  if (name == "csa-ad-jv") return csa(CsaJacobian::ad_jv);
  if (name == "casa-user") return casa(VjpStrategy::user_jacobian_transpose);
  if (name == "casa-ad-jac") return casa(VjpStrategy::forward_full_jacobian_transpose);
  if (name == "casa-ad-vjp") return casa(VjpStrategy::reverse_tape);
  if (name == "numdiff-forward") return numdiff(NumdiffScheme::forward);
  if (name == "numdiff-central") return numdiff(NumdiffScheme::central);
  throw ConfigError("unknown sensitivity method '" + std::string(name) + "'");
}

std::vector<std::string> SensitivityMethod::names() {
  return {"dsaad",     "csa-user",    "csa-ad-jac",      "csa-ad-jv",      "casa-user",
          "casa-ad-jac", "casa-ad-vjp", "numdiff-forward", "numdiff-central"};
}

void CostSpec::validate(double t0, double tf) const {
  if (!cost || !gradient) throw ConfigError("cost: value and gradient functions are required");
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double t = times[i];
    if (!std::isfinite(t) || t < t0 || t > tf) throw ConfigError("cost: data time outside the time span");
    if (i > 0 && !(t > times[i - 1])) throw ConfigError("cost: data times must be strictly increasing");
  }
}

CostSpec l2_cost(std::vector<double> times, std::vector<std::vector<double>> observations) {
  if (times.size() != observations.size()) throw ConfigError("l2_cost: one observation per data time is required");
  CostSpec c;
  c.times = std::move(times);
  auto obs = std::make_shared<const std::vector<std::vector<double>>>(std::move(observations));
  c.cost = [obs](std::size_t i, std::span<const double> u) {
    const auto& y = (*obs)[i];
    if (y.size() != u.size()) throw ConfigError("l2_cost: observation has the wrong size");
    double s = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) s += (u[k] - y[k]) * (u[k] - y[k]);
    return s;
  };
  c.gradient = [obs](std::size_t i, std::span<const double> u, std::span<double> g) {
    const auto& y = (*obs)[i];
    if (y.size() != u.size()) throw ConfigError("l2_cost: observation has the wrong size");
    for (std::size_t k = 0; k < u.size(); ++k) g[k] = 2.0 * (u[k] - y[k]);
  };
  return c;
}

}  // namespace odesens::sens
