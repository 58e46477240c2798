#pragma once

/**
 * @file gauss_kronrod.hpp
 * @brief Globally adaptive 7/15-point Gauss-Kronrod quadrature, scalar or vector valued.
 *
 * Vector integrands share one subdivision tree: every interval is split as a
 * whole and its error is the infinity norm of the per-component estimates.
 */

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "odesens/errors.hpp"

namespace odesens::quad {

/// Writes f(x) into `out` (size = integrand dimension).
using VectorIntegrand = std::function<void(double x, std::span<double> out)>;
using ScalarIntegrand = std::function<double(double x)>;

struct QuadResult {
  std::vector<double> value;
  double err_est = 0.0;
  std::size_t nevals = 0;

  [[nodiscard]] double scalar() const { return value.at(0); }
};

/// The integrand produced a non-finite value.
class IntegrandError : public DomainError {
 public:
  IntegrandError(const std::string& what, double abscissa) : DomainError(what), abscissa_(abscissa) {}
  [[nodiscard]] double abscissa() const noexcept { return abscissa_; }

 private:
  double abscissa_;
};

struct AdaptiveOptions {
  double rtol = 1e-8;
  double atol = 1e-12;
  std::size_t max_subdivisions = 2000;
  /// Reported back in QuadratureError when the budget runs out.
  std::size_t segment_id = 0;
};

/// Single 15-point Kronrod evaluation with the embedded 7-point Gauss error estimate.
[[nodiscard]] QuadResult gk15(const VectorIntegrand& f, std::size_t dim, double a, double b);
[[nodiscard]] QuadResult gk15(const ScalarIntegrand& f, double a, double b);

/// Bisects the interval with the largest error until the total error is
/// <= max(atol, rtol * |value|_inf). Throws QuadratureError on budget exhaustion.
[[nodiscard]] QuadResult adaptive(const VectorIntegrand& f, std::size_t dim, double a, double b,
                                  const AdaptiveOptions& opts = {});
[[nodiscard]] QuadResult adaptive(const ScalarIntegrand& f, double a, double b, double rtol, double atol);

}  // namespace odesens::quad
