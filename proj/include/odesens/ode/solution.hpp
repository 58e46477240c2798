#pragma once

/**
 * @file solution.hpp
 * @brief Accepted steps, dense output and interpolation.
 */

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "odesens/ad/dual.hpp"
#include "odesens/errors.hpp"
#include "odesens/ode/tableaus.hpp"

namespace odesens::ode {

enum class ReturnCode { success, maxiters, dtmin, domain_error };

[[nodiscard]] const char* to_string(ReturnCode rc) noexcept;

struct SolverStats {
  std::size_t nf = 0;       // right-hand side evaluations by the integrator
  std::size_t nJ = 0;       // Jacobian evaluations
  std::size_t nsolve = 0;   // linear solves with the iteration matrix
  std::size_t naccept = 0;
  std::size_t nreject = 0;
  std::size_t nevents = 0;

  SolverStats& operator+=(const SolverStats& o) noexcept {
    nf += o.nf;
    nJ += o.nJ;
    nsolve += o.nsolve;
    naccept += o.naccept;
    nreject += o.nreject;
    nevents += o.nevents;
    return *this;
  }
};

enum class DenseKind { tsit5, rodas4 };

/**
 * Interpolation data for one accepted step starting at t0 with size h.
 * tsit5: coeffs = {u0, k1..k7}; rodas4: coeffs = {u0, u1, k1i, k2i}.
 */
template <class T>
struct DenseSegment {
  double t0 = 0.0;
  double h = 0.0;
  DenseKind kind = DenseKind::tsit5;
  std::vector<std::vector<T>> coeffs;

  void evaluate(double t, std::span<T> out) const {
    const double th = (t - t0) / h;
    const std::size_t n = out.size();
    if (kind == DenseKind::tsit5) {
      const auto b = Tsit5Tableau::dense_weights(th);
      for (std::size_t i = 0; i < n; ++i) {
        T acc = b[0] * coeffs[1][i];
        for (std::size_t s = 1; s < 7; ++s) acc += b[s] * coeffs[s + 1][i];
        out[i] = coeffs[0][i] + h * acc;
      }
    } else {
      const double om = 1.0 - th;
      for (std::size_t i = 0; i < n; ++i) {
        out[i] = om * coeffs[0][i] + th * (coeffs[1][i] + om * (coeffs[2][i] + th * coeffs[3][i]));
      }
    }
  }

  /// Value part only; used by event location on Dual solves.
  void evaluate_values(double t, std::span<double> out) const {
    const double th = (t - t0) / h;
    const std::size_t n = out.size();
    if (kind == DenseKind::tsit5) {
      const auto b = Tsit5Tableau::dense_weights(th);
      for (std::size_t i = 0; i < n; ++i) {
        double acc = b[0] * value_of(coeffs[1][i]);
        for (std::size_t s = 1; s < 7; ++s) acc += b[s] * value_of(coeffs[s + 1][i]);
        out[i] = value_of(coeffs[0][i]) + h * acc;
      }
    } else {
      const double om = 1.0 - th;
      for (std::size_t i = 0; i < n; ++i) {
        out[i] = om * value_of(coeffs[0][i]) +
                 th * (value_of(coeffs[1][i]) + om * (value_of(coeffs[2][i]) + th * value_of(coeffs[3][i])));
      }
    }
  }
};

template <class T>
struct Solution {
  /// Accepted times, strictly increasing. At an event time the stored state is post-event.
  std::vector<double> ts;
  std::vector<std::vector<T>> us;
  /// dense[k] interpolates on [ts[k], ts[k+1]].
  std::vector<DenseSegment<T>> dense;
  /// Output requested through SolveOptions::saveat.
  std::vector<double> saved_ts;
  std::vector<std::vector<T>> saved_us;
  std::vector<double> event_times;
  SolverStats stats;
  ReturnCode retcode = ReturnCode::success;

  [[nodiscard]] bool success() const noexcept { return retcode == ReturnCode::success; }
  [[nodiscard]] std::size_t state_size() const noexcept { return us.empty() ? 0 : us.front().size(); }
  [[nodiscard]] double t_start() const { return ts.front(); }
  [[nodiscard]] double t_end() const { return ts.back(); }
};

/// State at time t from the dense output; exact stored states at accepted times.
template <class T>
void interpolate(const Solution<T>& sol, double t, std::span<T> out) {
  if (sol.ts.empty()) throw RangeError("interpolate: empty solution");
  if (!(t >= sol.ts.front() && t <= sol.ts.back())) {
    throw RangeError("interpolate: t = " + std::to_string(t) + " outside [" + std::to_string(sol.ts.front()) +
                     ", " + std::to_string(sol.ts.back()) + "]");
  }
  if (out.size() != sol.state_size()) throw ConfigError("interpolate: output size mismatch");
  const auto it = std::lower_bound(sol.ts.begin(), sol.ts.end(), t);
  const auto k = static_cast<std::size_t>(it - sol.ts.begin());
  if (it != sol.ts.end() && *it == t) {
    std::copy(sol.us[k].begin(), sol.us[k].end(), out.begin());
    return;
  }
  if (sol.dense.size() + 1 != sol.ts.size()) throw ConfigError("interpolate: solution has no dense output");
  sol.dense[k - 1].evaluate(t, out);
}

template <class T>
[[nodiscard]] std::vector<T> interpolate(const Solution<T>& sol, double t) {
  std::vector<T> out(sol.state_size());
  interpolate(sol, t, std::span<T>(out));
  return out;
}

}  // namespace odesens::ode
