#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <type_traits>
#include <utility>

#include "odesens/ad/dual.hpp"
#include "odesens/ad/tape.hpp"

namespace odesens {

/// du = f(u, p, t) evaluated over scalar T.
template <class T>
using RhsFunction = std::function<void(std::span<T> du, std::span<const T> u, std::span<const T> p, const T& t)>;

/// Row-major matrix-valued function of (u, p, t) over scalar T, e.g. an analytic Jacobian.
template <class T>
using MatrixFunction =
    std::function<void(std::span<T> out, std::span<const T> u, std::span<const T> p, const T& t)>;

/**
 * Right-hand side instantiated for every scalar the library differentiates
 * with: double, Dual (forward mode) and Var (tape recording). Construct it
 * from a callable with a templated call operator, such as a generic lambda.
 */
class VectorField {
 public:
  VectorField() = default;

  template <class F>
  explicit VectorField(F f) : real_(f), dual_(f), tracked_(std::move(f)) {}

  template <class T>
  void operator()(std::span<T> du, std::span<const T> u, std::span<const T> p, const T& t) const {
    get<T>()(du, u, p, t);
  }

  template <class T>
  [[nodiscard]] const RhsFunction<T>& get() const {
    if constexpr (std::is_same_v<T, double>) {
      return real_;
    } else if constexpr (std::is_same_v<T, Dual>) {
      return dual_;
    } else {
      static_assert(std::is_same_v<T, Var>, "unsupported scalar type");
      return tracked_;
    }
  }

  [[nodiscard]] explicit operator bool() const noexcept { return static_cast<bool>(real_); }

 private:
  RhsFunction<double> real_;
  RhsFunction<Dual> dual_;
  RhsFunction<Var> tracked_;
};

/// Matrix-valued function instantiated for double and Dual.
class GenericMatrixFunction {
 public:
  GenericMatrixFunction() = default;

  template <class F>
  explicit GenericMatrixFunction(F f) : real_(f), dual_(std::move(f)) {}

  template <class T>
  void operator()(std::span<T> out, std::span<const T> u, std::span<const T> p, const T& t) const {
    if constexpr (std::is_same_v<T, double>) {
      real_(out, u, p, t);
    } else {
      static_assert(std::is_same_v<T, Dual>, "unsupported scalar type");
      dual_(out, u, p, t);
    }
  }

  [[nodiscard]] explicit operator bool() const noexcept { return static_cast<bool>(real_); }

 private:
  MatrixFunction<double> real_;
  MatrixFunction<Dual> dual_;
};

}  // namespace odesens
