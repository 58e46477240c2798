#pragma once

/**
 * @file dual.hpp
 * @brief Forward-mode dual numbers with a runtime partials width.
 *
 * A Dual carries a value and up to kMaxPartials directional derivatives.
 * The width is chosen per differentiation call (see SeedPlan); a Dual of
 * width zero is a constant and combines with Duals of any width. Mixing two
 * non-zero widths is a configuration error.
 *
 * Comparisons look at values only, so code that branches on Duals (step
 * acceptance, event sign checks) follows exactly the same control flow as the
 * plain double evaluation.
 */

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>

#include "odesens/errors.hpp"

namespace odesens {

inline constexpr std::size_t kMaxPartials = 32;

/// Counters for derivative policies that silently picked a value.
struct DualDiagnostics {
  std::size_t abs_at_zero = 0;
};

inline DualDiagnostics& dual_diagnostics() {
  thread_local DualDiagnostics diag;
  return diag;
}

class Dual {
 public:
  Dual() noexcept = default;
  Dual(double v) noexcept : value_(v) {}  // NOLINT: implicit constant embedding

  Dual(double v, std::span<const double> partials) : value_(v) {
    if (partials.size() > kMaxPartials) {
      throw ConfigError("Dual width " + std::to_string(partials.size()) + " exceeds capacity " +
                        std::to_string(kMaxPartials));
    }
    width_ = static_cast<std::uint32_t>(partials.size());
    std::copy(partials.begin(), partials.end(), d_.begin());
  }

  Dual(const Dual& o) noexcept : value_(o.value_), width_(o.width_) {
    std::copy_n(o.d_.data(), width_, d_.data());
  }
  Dual& operator=(const Dual& o) noexcept {
    value_ = o.value_;
    width_ = o.width_;
    std::copy_n(o.d_.data(), width_, d_.data());
    return *this;
  }

  /// Value `v` seeded with the unit direction `index` out of `width`.
  static Dual variable(double v, std::size_t width, std::size_t index) {
    Dual r = zeros(v, width);
    if (index >= width) throw ConfigError("seed index outside Dual width");
    r.d_[index] = 1.0;
    return r;
  }

  /// Value `v` with `width` explicit zero partials.
  static Dual zeros(double v, std::size_t width) {
    if (width > kMaxPartials) {
      throw ConfigError("Dual width " + std::to_string(width) + " exceeds capacity " +
                        std::to_string(kMaxPartials));
    }
    Dual r(v);
    r.width_ = static_cast<std::uint32_t>(width);
    std::fill_n(r.d_.data(), width, 0.0);
    return r;
  }

  [[nodiscard]] double value() const noexcept { return value_; }
  [[nodiscard]] std::size_t width() const noexcept { return width_; }
  [[nodiscard]] double partial(std::size_t k) const noexcept { return k < width_ ? d_[k] : 0.0; }
  [[nodiscard]] std::span<const double> partials() const noexcept { return {d_.data(), width_}; }
  [[nodiscard]] std::span<double> partials() noexcept { return {d_.data(), width_}; }

  void set_value(double v) noexcept { value_ = v; }

  /// Grows a constant to `width` zero partials; no-op when already that wide.
  void widen(std::size_t width) {
    if (width_ == width) return;
    if (width_ != 0) throw ConfigError("Dual partials width mismatch");
    *this = zeros(value_, width);
  }

  Dual operator-() const noexcept {
    Dual r;
    r.value_ = -value_;
    r.width_ = width_;
    for (std::uint32_t k = 0; k < width_; ++k) r.d_[k] = -d_[k];
    return r;
  }
  Dual operator+() const noexcept { return *this; }

  Dual& operator+=(const Dual& b) { return *this = *this + b; }
  Dual& operator-=(const Dual& b) { return *this = *this - b; }
  Dual& operator*=(const Dual& b) { return *this = *this * b; }
  Dual& operator/=(const Dual& b) { return *this = *this / b; }

  friend Dual operator+(const Dual& a, const Dual& b) {
    Dual r;
    r.value_ = a.value_ + b.value_;
    r.width_ = common_width(a, b);
    for (std::uint32_t k = 0; k < r.width_; ++k) r.d_[k] = a.at(k) + b.at(k);
    return r;
  }
  friend Dual operator-(const Dual& a, const Dual& b) {
    Dual r;
    r.value_ = a.value_ - b.value_;
    r.width_ = common_width(a, b);
    for (std::uint32_t k = 0; k < r.width_; ++k) r.d_[k] = a.at(k) - b.at(k);
    return r;
  }
  friend Dual operator*(const Dual& a, const Dual& b) {
    Dual r;
    r.value_ = a.value_ * b.value_;
    r.width_ = common_width(a, b);
    for (std::uint32_t k = 0; k < r.width_; ++k) r.d_[k] = a.at(k) * b.value_ + a.value_ * b.at(k);
    return r;
  }
  friend Dual operator/(const Dual& a, const Dual& b) {
    if (b.value_ == 0.0) throw ArithmeticError("Dual division by a zero value");
    Dual r;
    r.value_ = a.value_ / b.value_;
    r.width_ = common_width(a, b);
    const double inv = 1.0 / b.value_;
    for (std::uint32_t k = 0; k < r.width_; ++k) {
      r.d_[k] = (a.at(k) - r.value_ * b.at(k)) * inv;
    }
    return r;
  }

  // Mixed double overloads avoid building a temporary constant Dual.
  friend Dual operator+(const Dual& a, double b) noexcept {
    Dual r(a);
    r.value_ = a.value_ + b;
    return r;
  }
  friend Dual operator+(double a, const Dual& b) noexcept {
    Dual r(b);
    r.value_ = a + b.value_;
    return r;
  }
  friend Dual operator-(const Dual& a, double b) noexcept {
    Dual r(a);
    r.value_ = a.value_ - b;
    return r;
  }
  friend Dual operator-(double a, const Dual& b) noexcept {
    Dual r = -b;
    r.value_ = a - b.value_;
    return r;
  }
  friend Dual operator*(const Dual& a, double b) noexcept {
    Dual r;
    r.value_ = a.value_ * b;
    r.width_ = a.width_;
    for (std::uint32_t k = 0; k < r.width_; ++k) r.d_[k] = a.d_[k] * b;
    return r;
  }
  friend Dual operator*(double a, const Dual& b) noexcept {
    Dual r;
    r.value_ = a * b.value_;
    r.width_ = b.width_;
    for (std::uint32_t k = 0; k < r.width_; ++k) r.d_[k] = a * b.d_[k];
    return r;
  }
  friend Dual operator/(const Dual& a, double b) {
    if (b == 0.0) throw ArithmeticError("Dual division by a zero value");
    Dual r;
    r.value_ = a.value_ / b;
    r.width_ = a.width_;
    for (std::uint32_t k = 0; k < r.width_; ++k) r.d_[k] = a.d_[k] / b;
    return r;
  }
  friend Dual operator/(double a, const Dual& b) { return Dual(a) / b; }

  friend bool operator==(const Dual& a, const Dual& b) noexcept { return a.value_ == b.value_; }
  friend bool operator<(const Dual& a, const Dual& b) noexcept { return a.value_ < b.value_; }
  friend bool operator>(const Dual& a, const Dual& b) noexcept { return a.value_ > b.value_; }
  friend bool operator<=(const Dual& a, const Dual& b) noexcept { return a.value_ <= b.value_; }
  friend bool operator>=(const Dual& a, const Dual& b) noexcept { return a.value_ >= b.value_; }
  friend bool operator==(const Dual& a, double b) noexcept { return a.value_ == b; }
  friend bool operator<(const Dual& a, double b) noexcept { return a.value_ < b; }
  friend bool operator>(const Dual& a, double b) noexcept { return a.value_ > b; }
  friend bool operator<=(const Dual& a, double b) noexcept { return a.value_ <= b; }
  friend bool operator>=(const Dual& a, double b) noexcept { return a.value_ >= b; }
  friend bool operator<(double a, const Dual& b) noexcept { return a < b.value_; }
  friend bool operator>(double a, const Dual& b) noexcept { return a > b.value_; }
  friend bool operator<=(double a, const Dual& b) noexcept { return a <= b.value_; }
  friend bool operator>=(double a, const Dual& b) noexcept { return a >= b.value_; }

  /// Applies the chain rule: value `fv`, partials scaled by `scale`.
  [[nodiscard]] Dual chain(double fv, double scale) const noexcept {
    Dual r;
    r.value_ = fv;
    r.width_ = width_;
    if (std::isfinite(scale)) {
      for (std::uint32_t k = 0; k < width_; ++k) r.d_[k] = d_[k] * scale;
    } else {
      // Keep constant directions exactly zero where the derivative blows up.
      for (std::uint32_t k = 0; k < width_; ++k) r.d_[k] = d_[k] == 0.0 ? 0.0 : d_[k] * scale;
    }
    return r;
  }

  friend std::ostream& operator<<(std::ostream& os, const Dual& x) {
    os << '(' << x.value_ << ", [";
    for (std::uint32_t k = 0; k < x.width_; ++k) os << (k ? ", " : "") << x.d_[k];
    return os << "])";
  }

 private:
  static std::uint32_t common_width(const Dual& a, const Dual& b) {
    if (a.width_ == b.width_ || b.width_ == 0) return a.width_;
    if (a.width_ == 0) return b.width_;
    throw ConfigError("Dual partials width mismatch: " + std::to_string(a.width_) + " vs " +
                      std::to_string(b.width_));
  }
  [[nodiscard]] double at(std::uint32_t k) const noexcept { return k < width_ ? d_[k] : 0.0; }

  double value_ = 0.0;
  std::uint32_t width_ = 0;
  std::array<double, kMaxPartials> d_;
};

inline Dual exp(const Dual& a) {
  const double e = std::exp(a.value());
  return a.chain(e, e);
}

inline Dual log(const Dual& a) {
  if (!(a.value() > 0.0)) throw DomainError("log of non-positive value " + std::to_string(a.value()));
  return a.chain(std::log(a.value()), 1.0 / a.value());
}

inline Dual sin(const Dual& a) { return a.chain(std::sin(a.value()), std::cos(a.value())); }

inline Dual cos(const Dual& a) { return a.chain(std::cos(a.value()), -std::sin(a.value())); }

inline Dual tanh(const Dual& a) {
  const double th = std::tanh(a.value());
  return a.chain(th, 1.0 - th * th);
}

inline Dual sqrt(const Dual& a) {
  if (a.value() < 0.0) throw DomainError("sqrt of negative value " + std::to_string(a.value()));
  const double s = std::sqrt(a.value());
  return a.chain(s, 0.5 / s);
}

inline Dual pow(const Dual& a, double c) {
  if (c == 0.0) return Dual(1.0);
  if (a.value() < 0.0 && c != std::floor(c)) {
    throw DomainError("pow of negative value with non-integer exponent");
  }
  return a.chain(std::pow(a.value(), c), c * std::pow(a.value(), c - 1.0));
}

/// |a|; at a value of exactly zero the derivative is taken as 0 and counted.
inline Dual abs(const Dual& a) {
  if (a.value() == 0.0) {
    ++dual_diagnostics().abs_at_zero;
    return a.chain(0.0, 0.0);
  }
  return a.chain(std::abs(a.value()), a.value() > 0.0 ? 1.0 : -1.0);
}

inline double value_of(double x) noexcept { return x; }
inline double value_of(const Dual& x) noexcept { return x.value(); }

}  // namespace odesens
