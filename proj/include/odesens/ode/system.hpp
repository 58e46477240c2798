#pragma once

/**
 * @file system.hpp
 * @brief Adapter between an ODEProblem and the generic integrators.
 *
 * The integrators talk to a "system" with this interface:
 *
 *   using scalar_type;
 *   size(), event_state_size(), error_state_size(), params(), events()
 *   rhs(du, u, t)
 *   // stiff integrators additionally:
 *   update_jacobian(u, t), time_derivative(out, u, t), factorize(inv_hgamma), solve(rhs_inout)
 *
 * ProblemSystem<T> implements it for a plain problem; the forward-sensitivity
 * module provides an extended system with the same shape.
 */

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <type_traits>
#include <vector>

#include "odesens/ad/dual.hpp"
#include "odesens/ad/forward.hpp"
#include "odesens/ode/linear_solve.hpp"
#include "odesens/ode/problem.hpp"
#include "odesens/ode/solution.hpp"

namespace odesens::ode {

template <class T>
class ProblemSystem {
 public:
  using scalar_type = T;

  ProblemSystem(const ODEProblem& prob, std::vector<T> p) : prob_(&prob), p_(std::move(p)) {
    if (p_.size() != prob.p.size()) throw ConfigError("parameter vector has the wrong size");
  }

  [[nodiscard]] std::size_t size() const noexcept { return prob_->u0.size(); }
  [[nodiscard]] std::size_t event_state_size() const noexcept { return size(); }
  [[nodiscard]] std::size_t error_state_size() const noexcept { return size(); }
  [[nodiscard]] std::span<T> params() noexcept { return p_; }
  [[nodiscard]] std::span<const EventSpec> events() const noexcept { return prob_->events; }
  [[nodiscard]] const ODEProblem& problem() const noexcept { return *prob_; }

  void rhs(std::span<T> du, std::span<const T> u, double t) {
    prob_->rhs(du, u, std::span<const T>(p_), T(t));
  }

  /// Evaluates df/du at (u, t) for the next factorizations.
  void update_jacobian(std::span<const T> u, double t) {
    const std::size_t n = size();
    if constexpr (std::is_same_v<T, double>) {
      if (prob_->state_jacobian) {
        jac_.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        std::vector<double> buf(n * n);
        prob_->state_jacobian(std::span<double>(buf), u, std::span<const double>(p_), t);
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = 0; j < n; ++j) jac_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = buf[i * n + j];
        }
      } else {
        jac_ = jacobian(prob_->rhs, u, p_, t, JacobianWrt::state);
      }
    } else {
      const std::vector<double> uv = values_of(u);
      const std::vector<double> pv = values_of(std::span<const Dual>(p_));
      jac_partials_.clear();
      jac_width_ = 0;
      if (prob_->state_jacobian) {
        // Analytic Jacobian over Duals: the iteration matrix carries its own
        // parameter derivatives, so the discrete sensitivities are exact.
        std::vector<Dual> buf(n * n);
        prob_->state_jacobian(std::span<Dual>(buf), u, std::span<const Dual>(p_), Dual(t));
        jac_.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        for (const auto& x : buf) jac_width_ = std::max(jac_width_, x.width());
        if (jac_width_ > 0) jac_partials_.assign(n * n * jac_width_, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = 0; j < n; ++j) {
            const Dual& x = buf[i * n + j];
            jac_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = x.value();
            for (std::size_t k = 0; k < x.width(); ++k) jac_partials_[(i * n + j) * jac_width_ + k] = x.partial(k);
          }
        }
      } else {
        // W-approximation: the Jacobian is taken at the values with frozen partials.
        jac_ = jacobian(prob_->rhs, uv, pv, t, JacobianWrt::state);
      }
    }
  }

  void time_derivative(std::span<T> out, std::span<const T> u, double t, SolverStats& stats) {
    if (prob_->autonomous) {
      for (auto& x : out) x = T(0.0);
      return;
    }
    if constexpr (std::is_same_v<T, double>) {
      const auto ft = odesens::time_derivative(prob_->rhs, u, p_, t);
      std::copy(ft.begin(), ft.end(), out.begin());
      ++stats.nf;
    } else {
      const double dt = std::sqrt(std::numeric_limits<double>::epsilon()) * std::max(1.0, std::abs(t));
      std::vector<T> f0(size());
      rhs(std::span<T>(f0), u, t);
      rhs(out, u, t + dt);
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = (out[i] - f0[i]) / dt;
      stats.nf += 2;
    }
  }

  /// Factorizes W = inv_hgamma * I - J.
  void factorize(double inv_hgamma) {
    Eigen::MatrixXd w = -jac_;
    w.diagonal().array() += inv_hgamma;
    if constexpr (std::is_same_v<T, double>) {
      lu_.factorize(w);
    } else {
      std::vector<double> wp(jac_partials_.size());
      for (std::size_t k = 0; k < wp.size(); ++k) wp[k] = -jac_partials_[k];
      lu_.factorize(w, std::move(wp), jac_width_);
    }
  }

  void solve(std::span<T> b) { lu_.solve(b); }

 private:
  const ODEProblem* prob_;
  std::vector<T> p_;
  Eigen::MatrixXd jac_;
  std::vector<double> jac_partials_;
  std::size_t jac_width_ = 0;
  std::conditional_t<std::is_same_v<T, double>, DenseLU, DualLU> lu_;
};

}  // namespace odesens::ode
