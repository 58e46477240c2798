#pragma once

/**
 * @file linear_solve.hpp
 * @brief Dense LU solves for the Rosenbrock iteration matrix, over double and Dual.
 */

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <vector>

#include "odesens/ad/dual.hpp"

namespace odesens::ode {

/// Partial-pivoting LU of a real matrix. Singular or non-finite factors throw SingularMatrix.
class DenseLU {
 public:
  void factorize(const Eigen::MatrixXd& a);
  /// Solves A x = b in place.
  void solve(std::span<double> b) const;
  void solve(Eigen::Ref<Eigen::MatrixXd> b) const;
  [[nodiscard]] std::size_t size() const noexcept { return n_; }

 private:
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
  std::size_t n_ = 0;
};

/**
 * Solves (A0 + sum_k eps_k A_k) x = b for Dual b by one LU of A0:
 * x0 = A0^-1 b0 and x_k = A0^-1 (b_k - A_k x0).
 */
class DualLU {
 public:
  /// `partials` holds A_k as (i*n + j)*width + k, or is empty when A is constant.
  void factorize(const Eigen::MatrixXd& a0, std::vector<double> partials, std::size_t width);
  void solve(std::span<Dual> b) const;
  [[nodiscard]] std::size_t size() const noexcept { return lu_.size(); }

 private:
  DenseLU lu_;
  std::vector<double> partials_;
  std::size_t width_ = 0;
};

}  // namespace odesens::ode
