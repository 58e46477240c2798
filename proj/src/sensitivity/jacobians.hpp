#pragma once

// Dense df/du and df/dp, either from the problem's analytic functions or by
// forward-mode AD. Shared by the continuous forward and adjoint passes.

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "odesens/ad/forward.hpp"
#include "odesens/errors.hpp"
#include "odesens/ode/problem.hpp"

namespace odesens::sens::detail {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline Eigen::MatrixXd state_jacobian(const ode::ODEProblem& prob, std::span<const double> u,
                                      std::span<const double> p, double t, bool analytic) {
  const auto n = static_cast<Eigen::Index>(u.size());
  if (!analytic) return jacobian(prob.rhs, u, p, t, JacobianWrt::state);
  if (!prob.state_jacobian) throw ConfigError("problem has no analytic state Jacobian");
  RowMatrix j(n, n);
  prob.state_jacobian(std::span<double>(j.data(), static_cast<std::size_t>(j.size())), u, p, t);
  return j;
}

inline Eigen::MatrixXd param_jacobian(const ode::ODEProblem& prob, std::span<const double> u,
                                      std::span<const double> p, double t, bool analytic) {
  const auto n = static_cast<Eigen::Index>(u.size());
  const auto np = static_cast<Eigen::Index>(p.size());
  if (np == 0) return Eigen::MatrixXd(n, 0);
  if (!analytic) return jacobian(prob.rhs, u, p, t, JacobianWrt::params);
  if (!prob.param_jacobian) throw ConfigError("problem has no analytic parameter Jacobian");
  RowMatrix j(n, np);
  prob.param_jacobian(std::span<double>(j.data(), static_cast<std::size_t>(j.size())), u, p, t);
  return j;
}

}  // namespace odesens::sens::detail
