#pragma once

// Derivative consistency of model right-hand sides at randomized inputs:
// Dual Jacobians and tape pullbacks against central differences, and the
// tape pullback against the Dual Jacobian.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "odesens/ad/forward.hpp"
#include "odesens/ad/reverse.hpp"
#include "odesens/models/models.hpp"

namespace odesens::testing {

struct AdCheck {
  std::string model;
  double fd_rel = 0.0;       // worst column-relative gap: Dual Jacobian vs central differences, net of rounding
  double tape_fd_rel = 0.0;  // same for Jacobians assembled from tape pullbacks
  double vjp_rel = 0.0;      // tape v'J vs v' times the Dual Jacobian, relative to |v|'|J|
};

struct RandomPoint {
  std::vector<double> u;
  std::vector<double> p;
  double t = 0.0;
};

// u0 and p scaled by factors in [0.5, 1.5]; zero states get a value in (0, 1).
inline RandomPoint random_point(const models::ModelSpec& m, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> scale(0.5, 1.5);
  std::uniform_real_distribution<double> unit(0.05, 1.0);
  std::uniform_real_distribution<double> time(m.problem.t0, m.problem.tf);
  RandomPoint r;
  for (double x : m.problem.u0) r.u.push_back(x == 0.0 ? unit(rng) : x * scale(rng));
  for (double x : m.true_params) r.p.push_back(x == 0.0 ? unit(rng) : x * scale(rng));
  r.t = time(rng);
  return r;
}

inline Eigen::MatrixXd central_difference(const VectorField& f, const RandomPoint& x, JacobianWrt wrt) {
  const std::size_t n = x.u.size();
  const std::size_t cols = wrt == JacobianWrt::state ? n : x.p.size();
  Eigen::MatrixXd j(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(cols));
  std::vector<double> fp(n), fm(n);
  for (std::size_t c = 0; c < cols; ++c) {
    auto u = x.u;
    auto p = x.p;
    double& v = wrt == JacobianWrt::state ? u[c] : p[c];
    const double x0 = v;
    const double h = std::cbrt(std::numeric_limits<double>::epsilon()) * std::max(std::abs(x0), 1.0);
    v = x0 + h;
    f(std::span<double>(fp), std::span<const double>(u), std::span<const double>(p), x.t);
    v = x0 - h;
    f(std::span<double>(fm), std::span<const double>(u), std::span<const double>(p), x.t);
    for (std::size_t r = 0; r < n; ++r) {
      j(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = (fp[r] - fm[r]) / (2.0 * h);
    }
  }
  return j;
}

// Rounding floor of a central difference in each row: evaluating f_r loses
// about eps * (|f_r| + sum |df_r/dx_j| |x_j|), and the difference quotient
// divides that by the step. Terms this large dwarf the derivative in some
// POLLU rows at arbitrary states, where no finite difference can resolve it.
inline Eigen::VectorXd rounding_scale(const VectorField& f, const RandomPoint& x, const Eigen::MatrixXd& js,
                                      const Eigen::MatrixXd& jp) {
  std::vector<double> f0(x.u.size());
  f(std::span<double>(f0), std::span<const double>(x.u), std::span<const double>(x.p), x.t);
  Eigen::VectorXd s(static_cast<Eigen::Index>(x.u.size()));
  for (Eigen::Index r = 0; r < s.size(); ++r) {
    double t = std::abs(f0[static_cast<std::size_t>(r)]);
    for (Eigen::Index c = 0; c < js.cols(); ++c) t += std::abs(js(r, c) * x.u[static_cast<std::size_t>(c)]);
    for (Eigen::Index c = 0; c < jp.cols(); ++c) t += std::abs(jp(r, c) * x.p[static_cast<std::size_t>(c)]);
    s(r) = t;
  }
  return s;
}

// max over columns of the gap between a and the difference quotient fd, net
// of fd's rounding floor, relative to |a_c|_inf (all-zero columns absolutely).
inline double column_relative(const Eigen::MatrixXd& a, const Eigen::MatrixXd& fd, const Eigen::VectorXd& scale,
                              const std::vector<double>& x) {
  const double eps = std::numeric_limits<double>::epsilon();
  double worst = 0.0;
  for (Eigen::Index c = 0; c < a.cols(); ++c) {
    const double h = std::cbrt(eps) * std::max(std::abs(x[static_cast<std::size_t>(c)]), 1.0);
    const double s = a.col(c).lpNorm<Eigen::Infinity>();
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
      const double d = std::max(0.0, std::abs(a(r, c) - fd(r, c)) - 4.0 * eps * scale(r) / h);
      worst = std::max(worst, s > 0.0 ? d / s : d);
    }
  }
  return worst;
}

inline Eigen::MatrixXd tape_jacobian(const Tape& tape, std::size_t n, JacobianWrt wrt) {
  const std::size_t cols = wrt == JacobianWrt::state ? tape.state_count() : tape.param_count();
  Eigen::MatrixXd j(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(cols));
  std::vector<double> e(n, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    e[r] = 1.0;
    const auto res = vjp(tape, e);
    const auto& row = wrt == JacobianWrt::state ? res.state : res.params;
    for (std::size_t c = 0; c < cols; ++c) j(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c];
    e[r] = 0.0;
  }
  return j;
}

inline AdCheck check_model(const models::ModelSpec& m, std::size_t samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  AdCheck out;
  out.model = m.name;
  const VectorField& f = m.problem.rhs;
  for (std::size_t s = 0; s < samples; ++s) {
    const auto x = random_point(m, rng);
    const Tape tape = record(f, x.u, x.p, x.t);
    const Eigen::MatrixXd js = jacobian(f, x.u, x.p, x.t, JacobianWrt::state);
    const Eigen::MatrixXd jp = jacobian(f, x.u, x.p, x.t, JacobianWrt::params);
    const Eigen::VectorXd scale = rounding_scale(f, x, js, jp);
    for (auto wrt : {JacobianWrt::state, JacobianWrt::params}) {
      const Eigen::MatrixXd& jd = wrt == JacobianWrt::state ? js : jp;
      const auto& xs = wrt == JacobianWrt::state ? x.u : x.p;
      const Eigen::MatrixXd fd = central_difference(f, x, wrt);
      out.fd_rel = std::max(out.fd_rel, column_relative(jd, fd, scale, xs));
      out.tape_fd_rel = std::max(out.tape_fd_rel, column_relative(tape_jacobian(tape, x.u.size(), wrt), fd, scale, xs));

      std::vector<double> v(x.u.size());
      for (auto& vi : v) vi = normal(rng);
      const Eigen::Map<const Eigen::VectorXd> vm(v.data(), static_cast<Eigen::Index>(v.size()));
      const Eigen::VectorXd want = jd.transpose() * vm;
      const Eigen::VectorXd mag = jd.cwiseAbs().transpose() * vm.cwiseAbs();
      const auto res = vjp(tape, v);
      const auto& got = wrt == JacobianWrt::state ? res.state : res.params;
      for (Eigen::Index k = 0; k < want.size(); ++k) {
        const double d = std::abs(got[static_cast<std::size_t>(k)] - want(k));
        out.vjp_rel = std::max(out.vjp_rel, mag(k) > 0.0 ? d / mag(k) : d);
      }
    }
  }
  return out;
}

}  // namespace odesens::testing
