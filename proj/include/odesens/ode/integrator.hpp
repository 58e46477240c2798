#pragma once

/**
 * @file integrator.hpp
 * @brief Adaptive stepping, dense output and event handling over a generic scalar.
 *
 * Everything here is templated on a system (see system.hpp) whose scalar type
 * is double or Dual. Step control and event detection only ever look at
 * values, so a Dual solve follows the control flow of the matching real solve
 * apart from the partials' contribution to the error norm.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <type_traits>
#include <utility>
#include <vector>

#include "odesens/ad/dual.hpp"
#include "odesens/errors.hpp"
#include "odesens/ode/problem.hpp"
#include "odesens/ode/solution.hpp"
#include "odesens/ode/tableaus.hpp"

namespace odesens::ode {

/// Root of g on (t_lo, t_hi] given the endpoint values. Returns the
/// post-crossing end of the final bracket, or nullopt without a sign change.
/// root_tol <= 0 selects 10 eps max(|t_lo|, |t_hi|).
[[nodiscard]] std::optional<double> locate_root(const std::function<double(double)>& g, double t_lo, double t_hi,
                                                double g_lo, double g_hi, double root_tol);

/// Convenience overload evaluating g at the bracket ends.
[[nodiscard]] std::optional<double> locate_event(const std::function<double(double)>& g, double t_lo, double t_hi,
                                                 double root_tol = 0.0);

namespace detail {

template <class T>
double error_norm(std::span<const T> u0, std::span<const T> u1, std::span<const T> err, const IntegratorConfig& cfg) {
  const std::size_t n = err.size();
  if (n == 0) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double sc = cfg.abstol + cfg.reltol * std::max(std::abs(value_of(u0[i])), std::abs(value_of(u1[i])));
    const double e = value_of(err[i]) / sc;
    sum += e * e;
    if constexpr (std::is_same_v<T, Dual>) {
      if (cfg.norm_includes_partials) {
        const std::size_t w = err[i].width();
        for (std::size_t k = 0; k < w; ++k) {
          const double sck =
              cfg.abstol + cfg.reltol * std::max(std::abs(u0[i].partial(k)), std::abs(u1[i].partial(k)));
          const double ek = err[i].partial(k) / sck;
          sum += ek * ek;
        }
      }
    }
  }
  return std::sqrt(sum / static_cast<double>(n));
}

template <class T>
bool all_finite(std::span<const T> x) {
  for (const auto& v : x) {
    if (!std::isfinite(value_of(v))) return false;
    if constexpr (std::is_same_v<T, Dual>) {
      for (double d : v.partials()) {
        if (!std::isfinite(d)) return false;
      }
    }
  }
  return true;
}

inline double rms_scaled(std::span<const double> x, std::span<const double> scale) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = x[i] / scale[i];
    s += r * r;
  }
  return x.empty() ? 0.0 : std::sqrt(s / static_cast<double>(x.size()));
}

/// Hairer's starting step heuristic, computed on values.
template <class System>
double initial_step(System& sys, std::span<const typename System::scalar_type> u0,
                    std::span<const typename System::scalar_type> f0, double t0, double span_len, int order,
                    const IntegratorConfig& cfg, SolverStats& stats) {
  using T = typename System::scalar_type;
  const std::size_t n = u0.size();
  std::vector<double> sc(n), uv(n), fv(n);
  for (std::size_t i = 0; i < n; ++i) {
    uv[i] = value_of(u0[i]);
    fv[i] = value_of(f0[i]);
    sc[i] = cfg.abstol + std::abs(uv[i]) * cfg.reltol;
  }
  const double d0 = rms_scaled(uv, sc);
  const double d1 = rms_scaled(fv, sc);
  double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  h0 = std::min(h0, span_len);

  std::vector<T> u1(n), f1(n);
  for (std::size_t i = 0; i < n; ++i) u1[i] = u0[i] + h0 * f0[i];
  try {
    sys.rhs(std::span<T>(f1), std::span<const T>(u1), t0 + h0);
    ++stats.nf;
  } catch (const Error&) {
    return std::min(h0, cfg.dtmax);
  }
  std::vector<double> df(n);
  for (std::size_t i = 0; i < n; ++i) df[i] = value_of(f1[i]) - fv[i];
  const double d2 = rms_scaled(df, sc) / h0;
  const double dmax = std::max(d1, d2);
  double h1 = dmax <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dmax, 1.0 / order);
  if (!std::isfinite(h1)) h1 = h0;
  return std::min({100.0 * h0, h1, span_len, cfg.dtmax});
}

}  // namespace detail

/// Tsitouras 5(4) with FSAL and its free 4th-order interpolant.
template <class System>
class Tsit5Stepper {
 public:
  using T = typename System::scalar_type;
  static constexpr int order = 5;
  static constexpr int error_order = 4;

  explicit Tsit5Stepper(std::size_t n) : k_(7, std::vector<T>(n)), tmp_(n) {}

  void reset(System& sys, std::span<const T> u, double t, SolverStats& stats) {
    sys.rhs(std::span<T>(k_[0]), u, t);
    ++stats.nf;
  }

  [[nodiscard]] std::span<const T> f0() const noexcept { return k_[0]; }

  void step(System& sys, double t, double h, std::span<const T> u, std::span<T> unew, std::span<T> err,
            SolverStats& stats) {
    using TB = Tsit5Tableau;
    const std::size_t n = u.size();
    auto& k1 = k_[0];
    auto& k2 = k_[1];
    auto& k3 = k_[2];
    auto& k4 = k_[3];
    auto& k5 = k_[4];
    auto& k6 = k_[5];
    auto& k7 = k_[6];
    auto f = [&](std::vector<T>& out, double tt) {
      sys.rhs(std::span<T>(out), std::span<const T>(tmp_), tt);
      ++stats.nf;
    };
    for (std::size_t i = 0; i < n; ++i) tmp_[i] = u[i] + h * (TB::a21 * k1[i]);
    f(k2, t + TB::c2 * h);
    for (std::size_t i = 0; i < n; ++i) tmp_[i] = u[i] + h * (TB::a31 * k1[i] + TB::a32 * k2[i]);
    f(k3, t + TB::c3 * h);
    for (std::size_t i = 0; i < n; ++i) tmp_[i] = u[i] + h * (TB::a41 * k1[i] + TB::a42 * k2[i] + TB::a43 * k3[i]);
    f(k4, t + TB::c4 * h);
    for (std::size_t i = 0; i < n; ++i) {
      tmp_[i] = u[i] + h * (TB::a51 * k1[i] + TB::a52 * k2[i] + TB::a53 * k3[i] + TB::a54 * k4[i]);
    }
    f(k5, t + TB::c5 * h);
    for (std::size_t i = 0; i < n; ++i) {
      tmp_[i] = u[i] + h * (TB::a61 * k1[i] + TB::a62 * k2[i] + TB::a63 * k3[i] + TB::a64 * k4[i] + TB::a65 * k5[i]);
    }
    f(k6, t + h);
    for (std::size_t i = 0; i < n; ++i) {
      tmp_[i] = u[i] + h * (TB::a71 * k1[i] + TB::a72 * k2[i] + TB::a73 * k3[i] + TB::a74 * k4[i] +
                            TB::a75 * k5[i] + TB::a76 * k6[i]);
    }
    f(k7, t + h);
    const auto& bt = TB::btilde;
    for (std::size_t i = 0; i < n; ++i) {
      unew[i] = tmp_[i];
      err[i] = h * (bt[0] * k1[i] + bt[1] * k2[i] + bt[2] * k3[i] + bt[3] * k4[i] + bt[4] * k5[i] + bt[5] * k6[i] +
                    bt[6] * k7[i]);
    }
  }

  void accept(System&, std::span<const T>, double, SolverStats&) { std::swap(k_[0], k_[6]); }

  /// Dense segment of the step just taken (call before accept()).
  [[nodiscard]] DenseSegment<T> segment(double t, double h, std::span<const T> u, std::span<const T>) const {
    DenseSegment<T> seg;
    seg.t0 = t;
    seg.h = h;
    seg.kind = DenseKind::tsit5;
    seg.coeffs.reserve(8);
    seg.coeffs.emplace_back(u.begin(), u.end());
    for (const auto& k : k_) seg.coeffs.push_back(k);
    return seg;
  }

 private:
  std::vector<std::vector<T>> k_;
  std::vector<T> tmp_;
};

/// RODAS 4(3): stiffly accurate Rosenbrock method with a 3rd-order continuous extension.
template <class System>
class Rodas4Stepper {
 public:
  using T = typename System::scalar_type;
  static constexpr int order = 4;
  static constexpr int error_order = 3;

  explicit Rodas4Stepper(std::size_t n) : f0_(n), dT_(n), y_(n), fy_(n), k_(6, std::vector<T>(n)) {}

  void reset(System& sys, std::span<const T> u, double t, SolverStats& stats) {
    sys.rhs(std::span<T>(f0_), u, t);
    ++stats.nf;
    jac_current_ = false;
  }

  [[nodiscard]] std::span<const T> f0() const noexcept { return f0_; }

  void step(System& sys, double t, double h, std::span<const T> u, std::span<T> unew, std::span<T> err,
            SolverStats& stats) {
    using TB = Rodas4Tableau;
    const std::size_t n = u.size();
    if (!jac_current_) {
      sys.update_jacobian(u, t);
      ++stats.nJ;
      sys.time_derivative(std::span<T>(dT_), u, t, stats);
      jac_current_ = true;
    }
    sys.factorize(1.0 / (h * TB::gamma));
    const double ih = 1.0 / h;
    auto& k1 = k_[0];
    auto& k2 = k_[1];
    auto& k3 = k_[2];
    auto& k4 = k_[3];
    auto& k5 = k_[4];
    auto& k6 = k_[5];
    auto solve = [&](std::vector<T>& k) {
      sys.solve(std::span<T>(k));
      ++stats.nsolve;
    };
    auto f = [&](double tt) {
      sys.rhs(std::span<T>(fy_), std::span<const T>(y_), tt);
      ++stats.nf;
    };

    for (std::size_t i = 0; i < n; ++i) k1[i] = f0_[i] + (h * TB::d1) * dT_[i];
    solve(k1);

    for (std::size_t i = 0; i < n; ++i) y_[i] = u[i] + TB::a21 * k1[i];
    f(t + TB::c2 * h);
    for (std::size_t i = 0; i < n; ++i) k2[i] = fy_[i] + (h * TB::d2) * dT_[i] + (TB::C21 * ih) * k1[i];
    solve(k2);

    for (std::size_t i = 0; i < n; ++i) y_[i] = u[i] + (TB::a31 * k1[i] + TB::a32 * k2[i]);
    f(t + TB::c3 * h);
    for (std::size_t i = 0; i < n; ++i) {
      k3[i] = fy_[i] + (h * TB::d3) * dT_[i] + ih * (TB::C31 * k1[i] + TB::C32 * k2[i]);
    }
    solve(k3);

    for (std::size_t i = 0; i < n; ++i) y_[i] = u[i] + (TB::a41 * k1[i] + TB::a42 * k2[i] + TB::a43 * k3[i]);
    f(t + TB::c4 * h);
    for (std::size_t i = 0; i < n; ++i) {
      k4[i] = fy_[i] + (h * TB::d4) * dT_[i] + ih * (TB::C41 * k1[i] + TB::C42 * k2[i] + TB::C43 * k3[i]);
    }
    solve(k4);

    for (std::size_t i = 0; i < n; ++i) {
      y_[i] = u[i] + (TB::a51 * k1[i] + TB::a52 * k2[i] + TB::a53 * k3[i] + TB::a54 * k4[i]);
    }
    f(t + h);
    for (std::size_t i = 0; i < n; ++i) {
      k5[i] = fy_[i] + ih * (TB::C51 * k1[i] + TB::C52 * k2[i] + TB::C53 * k3[i] + TB::C54 * k4[i]);
    }
    solve(k5);

    for (std::size_t i = 0; i < n; ++i) y_[i] += k5[i];
    f(t + h);
    for (std::size_t i = 0; i < n; ++i) {
      k6[i] = fy_[i] + ih * (TB::C61 * k1[i] + TB::C62 * k2[i] + TB::C63 * k3[i] + TB::C64 * k4[i] + TB::C65 * k5[i]);
    }
    solve(k6);

    for (std::size_t i = 0; i < n; ++i) {
      unew[i] = y_[i] + k6[i];
      err[i] = k6[i];
    }
  }

  void accept(System& sys, std::span<const T> unew, double tnew, SolverStats& stats) { reset(sys, unew, tnew, stats); }

  [[nodiscard]] DenseSegment<T> segment(double t, double h, std::span<const T> u, std::span<const T> unew) const {
    using TB = Rodas4Tableau;
    const std::size_t n = u.size();
    DenseSegment<T> seg;
    seg.t0 = t;
    seg.h = h;
    seg.kind = DenseKind::rodas4;
    seg.coeffs.assign(4, std::vector<T>(n));
    for (std::size_t i = 0; i < n; ++i) {
      seg.coeffs[0][i] = u[i];
      seg.coeffs[1][i] = unew[i];
      T a = TB::h2[0] * k_[0][i];
      T b = TB::h3[0] * k_[0][i];
      for (std::size_t s = 1; s < 5; ++s) {
        a += TB::h2[s] * k_[s][i];
        b += TB::h3[s] * k_[s][i];
      }
      seg.coeffs[2][i] = a;
      seg.coeffs[3][i] = b;
    }
    return seg;
  }

 private:
  std::vector<T> f0_, dT_, y_, fy_;
  std::vector<std::vector<T>> k_;
  bool jac_current_ = false;
};

namespace detail {

/// Events whose condition changed sign over the last accepted step.
struct PendingEvent {
  std::size_t index;
  double time;
};

inline bool is_crossing(const EventSpec& ev, double g0, double g1) {
  if (g0 == 0.0) return false;
  const bool crossed = g1 == 0.0 || ((g0 < 0.0) != (g1 < 0.0));
  if (!crossed) return false;
  switch (ev.direction()) {
    case Crossing::up: return g0 < 0.0;
    case Crossing::down: return g0 > 0.0;
    case Crossing::any: return true;
  }
  return true;
}

/**
 * Applies the effect of event `ev` at t* to the pre-event state `u` in place.
 * For Dual states the crossing time's dependence on the seeded directions is
 * accounted for: the state is moved along f by the crossing-time derivative before the effect and
 * back along the post-event field afterwards.
 */
template <class System>
void apply_event(System& sys, const EventSpec& ev, std::span<typename System::scalar_type> u, double t_star,
                 EventControls& controls, SolverStats& stats) {
  using T = typename System::scalar_type;
  const std::size_t ne = sys.event_state_size();
  std::span<T> ue = u.subspan(0, ne);
  std::span<T> p = sys.params();
  if constexpr (std::is_same_v<T, Dual>) {
    const std::size_t n = u.size();
    std::vector<T> f_pre(n);
    sys.rhs(std::span<T>(f_pre), std::span<const T>(u), t_star);
    ++stats.nf;

    const T g = ev.condition<Dual>(std::span<const Dual>(ue.data(), ne), std::span<const Dual>(p), Dual(t_star));
    // dg/dt along the trajectory: seed u with f and t with 1 (values only).
    std::vector<Dual> us(ne), ps(p.size());
    for (std::size_t i = 0; i < ne; ++i) {
      const double fi = f_pre[i].value();
      us[i] = Dual(ue[i].value(), std::span<const double>(&fi, 1));
    }
    for (std::size_t j = 0; j < p.size(); ++j) ps[j] = Dual(p[j].value());
    const double one = 1.0;
    const Dual gt = ev.condition<Dual>(us, ps, Dual(t_star, std::span<const double>(&one, 1)));
    const double dgdt = gt.partial(0);
    const std::size_t w = g.width();
    std::vector<double> tau(w, 0.0);
    if (w > 0 && dgdt != 0.0 && std::isfinite(dgdt)) {
      for (std::size_t k = 0; k < w; ++k) tau[k] = -g.partial(k) / dgdt;
    }
    const bool shift = std::any_of(tau.begin(), tau.end(), [](double x) { return x != 0.0; });
    if (shift) {
      for (std::size_t i = 0; i < n; ++i) {
        u[i].widen(w);
        const double fi = f_pre[i].value();
        auto d = u[i].partials();
        for (std::size_t k = 0; k < w; ++k) d[k] += fi * tau[k];
      }
    }
    ev.effect<Dual>(ue, p, Dual(t_star), controls);
    if (shift) {
      std::vector<T> f_post(n);
      sys.rhs(std::span<T>(f_post), std::span<const T>(u), t_star);
      ++stats.nf;
      for (std::size_t i = 0; i < n; ++i) {
        u[i].widen(w);
        const double fi = f_post[i].value();
        auto d = u[i].partials();
        for (std::size_t k = 0; k < w; ++k) d[k] -= fi * tau[k];
      }
    }
  } else {
    ev.effect<double>(ue, p, t_star, controls);
  }
}

}  // namespace detail

/**
 * Integrates `sys` from (u, t0) to tf with step control from `cfg`, stepping
 * onto each time in `tstops` exactly and handling the system's events.
 */
template <template <class> class Stepper, class System>
Solution<typename System::scalar_type> integrate(System& sys, std::vector<typename System::scalar_type> u, double t0,
                                                 double tf, std::span<const double> tstops,
                                                 const IntegratorConfig& cfg, const SolveOptions& opts) {
  using T = typename System::scalar_type;
  using Step = Stepper<System>;
  cfg.validate();
  if (!(t0 < tf)) throw ConfigError("integrate: t0 must be less than tf");
  const std::size_t n = sys.size();
  if (u.size() != n) throw ConfigError("integrate: initial state has the wrong size");
  const std::size_t ne = sys.event_state_size();
  const std::size_t nerr = sys.error_state_size();
  const std::span<const EventSpec> events = sys.events();

  Solution<T> sol;
  SolverStats& stats = sol.stats;

  std::vector<double> stops;
  for (double s : tstops) {
    if (s > t0 && s < tf) stops.push_back(s);
  }
  stops.push_back(tf);
  std::sort(stops.begin(), stops.end());
  stops.erase(std::unique(stops.begin(), stops.end()), stops.end());

  std::vector<double> saveat(opts.saveat.begin(), opts.saveat.end());
  std::sort(saveat.begin(), saveat.end());
  if (!saveat.empty() && (saveat.front() < t0 || saveat.back() > tf)) {
    throw RangeError("saveat times must lie inside the integration interval");
  }
  std::size_t si = 0;
  auto emit = [&](double ts, std::span<const T> val) {
    sol.saved_ts.push_back(ts);
    sol.saved_us.emplace_back(val.begin(), val.end());
  };
  while (si < saveat.size() && saveat[si] == t0) emit(saveat[si++], u);

  if (opts.dense) {
    sol.ts.push_back(t0);
    sol.us.push_back(u);
  }

  std::vector<double> pvals(sys.params().size());
  auto refresh_pvals = [&] {
    auto p = sys.params();
    for (std::size_t j = 0; j < p.size(); ++j) pvals[j] = value_of(p[j]);
  };
  refresh_pvals();
  std::vector<double> uval(ne);
  auto eval_g = [&](std::size_t e, std::span<const double> uv, double tt) {
    return events[e].condition<double>(uv, pvals, tt);
  };
  auto values_into = [&](std::span<const T> x) {
    for (std::size_t i = 0; i < ne; ++i) uval[i] = value_of(x[i]);
  };

  std::vector<double> gprev(events.size());
  values_into(u);
  for (std::size_t e = 0; e < events.size(); ++e) gprev[e] = eval_g(e, uval, t0);

  Step stepper(n);
  stepper.reset(sys, u, t0, stats);

  auto fresh_step = [&](double tt) {
    if (cfg.dt_initial > 0.0) return std::min(cfg.dt_initial, cfg.dtmax);
    return detail::initial_step(sys, std::span<const T>(u), stepper.f0(), tt, tf - tt, Step::order, cfg, stats);
  };
  double h = fresh_step(t0);

  const double q1 = Step::error_order + 1.0;
  const double beta1 = cfg.controller.beta1 > 0.0 ? cfg.controller.beta1 : 0.7 / q1;
  const double beta2 = cfg.controller.beta2 > 0.0 ? cfg.controller.beta2 : 0.4 / q1;
  const double safety = cfg.controller.safety;
  double err_prev = 1e-4;
  bool last_rejected = false;
  std::size_t consecutive_failures = 0;
  std::size_t attempts = 0;

  std::vector<T> unew(n), err(n);
  std::size_t stop_idx = 0;
  double t = t0;

  while (t < tf) {
    while (stops[stop_idx] <= t) ++stop_idx;
    const double next_stop = stops[stop_idx];
    if (attempts >= cfg.max_steps) {
      sol.retcode = ReturnCode::maxiters;
      break;
    }
    h = std::min(h, cfg.dtmax);
    bool hit = false;
    if (t + h >= next_stop || next_stop - t <= h * (1.0 + 1e-7)) {
      h = next_stop - t;
      hit = true;
    }
    const double dtmin = cfg.dtmin > 0.0 ? cfg.dtmin : 1e-14 * std::max(1.0, std::abs(t));
    if (h < dtmin && !hit) {
      // Shrinking away from non-finite trial states is a domain failure, not stiffness.
      sol.retcode = consecutive_failures > 0 ? ReturnCode::domain_error : ReturnCode::dtmin;
      break;
    }
    ++attempts;

    bool ok = true;
    double en = 0.0;
    try {
      stepper.step(sys, t, h, std::span<const T>(u), std::span<T>(unew), std::span<T>(err), stats);
      en = detail::error_norm<T>(std::span<const T>(u).first(nerr), std::span<const T>(unew).first(nerr),
                                 std::span<const T>(err).first(nerr), cfg);
      ok = std::isfinite(en) && detail::all_finite<T>(unew);
    } catch (const DomainError&) {
      ok = false;
    } catch (const ArithmeticError&) {
      ok = false;
    } catch (const SingularMatrix&) {
      ok = false;
    }
    if (!ok) {
      ++stats.nreject;
      if (++consecutive_failures > 60) {
        sol.retcode = ReturnCode::domain_error;
        break;
      }
      h *= 0.25;
      last_rejected = true;
      continue;
    }
    consecutive_failures = 0;

    if (en > 1.0) {
      ++stats.nreject;
      h *= std::max(cfg.controller.qmin, safety * std::pow(en, -1.0 / q1));
      last_rejected = true;
      continue;
    }

    // Accepted.
    ++stats.naccept;
    const double t_new = hit ? next_stop : t + h;
    double fac = en == 0.0 ? cfg.controller.qmax : safety * std::pow(en, -beta1) * std::pow(err_prev, beta2);
    fac = std::clamp(fac, cfg.controller.qmin, cfg.controller.qmax);
    if (last_rejected) fac = std::min(fac, 1.0);
    const double h_next = h * fac;
    err_prev = std::max(en, 1e-4);
    last_rejected = false;

    const bool need_segment = opts.dense || !events.empty() || (si < saveat.size() && saveat[si] < t_new);
    std::optional<DenseSegment<T>> seg;
    if (need_segment) seg = stepper.segment(t, h, std::span<const T>(u), std::span<const T>(unew));

    // Event detection on the value trajectory.
    std::vector<detail::PendingEvent> pending;
    std::vector<double> gnew(events.size());
    if (!events.empty()) {
      values_into(unew);
      for (std::size_t e = 0; e < events.size(); ++e) gnew[e] = eval_g(e, uval, t_new);
      std::vector<double> useg(ne);
      for (std::size_t e = 0; e < events.size(); ++e) {
        if (!detail::is_crossing(events[e], gprev[e], gnew[e])) continue;
        auto g_of_t = [&](double s) {
          seg->evaluate_values(s, useg);
          return eval_g(e, useg, s);
        };
        const auto root = locate_root(g_of_t, t, t_new, gprev[e], gnew[e], events[e].root_tol());
        if (root) pending.push_back({e, *root});
      }
    }

    if (!pending.empty()) {
      double t_star = pending.front().time;
      for (const auto& pe : pending) t_star = std::min(t_star, pe.time);
      const double tol_fire = 10.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t_star));
      std::vector<T> upre(n);
      if (t_star == t_new) {
        upre = unew;
      } else {
        seg->evaluate(t_star, std::span<T>(upre));
      }
      while (si < saveat.size() && saveat[si] < t_star) {
        std::vector<T> tmp(n);
        seg->evaluate(saveat[si], std::span<T>(tmp));
        emit(saveat[si++], tmp);
      }

      EventControls controls;
      std::vector<std::size_t> fired;
      for (const auto& pe : pending) {
        if (pe.time <= t_star + tol_fire) {
          detail::apply_event(sys, events[pe.index], std::span<T>(upre), t_star, controls, stats);
          fired.push_back(pe.index);
          ++stats.nevents;
        }
      }
      sol.event_times.push_back(t_star);
      refresh_pvals();
      values_into(upre);
      for (std::size_t e = 0; e < events.size(); ++e) {
        const double g = eval_g(e, uval, t_star);
        if (std::find(fired.begin(), fired.end(), e) != fired.end()) {
          // Keep the post-crossing sign so the same root is not found again.
          const double post = gprev[e] < 0.0 ? 1.0 : -1.0;
          gprev[e] = (g * post > 0.0) ? g : post * std::numeric_limits<double>::min();
        } else {
          gprev[e] = g;
        }
      }
      if (opts.dense) {
        sol.dense.push_back(std::move(*seg));
        sol.ts.push_back(t_star);
        sol.us.push_back(upre);
      }
      while (si < saveat.size() && saveat[si] == t_star) emit(saveat[si++], upre);
      u = std::move(upre);
      t = t_star;
      if (controls.terminate) break;
      stepper.reset(sys, u, t, stats);
      if (t < tf) h = fresh_step(t);
      err_prev = 1e-4;
      continue;
    }

    while (si < saveat.size() && saveat[si] <= t_new) {
      if (saveat[si] == t_new) {
        emit(saveat[si++], unew);
      } else {
        std::vector<T> tmp(n);
        seg->evaluate(saveat[si], std::span<T>(tmp));
        emit(saveat[si++], tmp);
      }
    }
    if (opts.dense) {
      sol.dense.push_back(std::move(*seg));
      sol.ts.push_back(t_new);
      sol.us.push_back(unew);
    }
    for (std::size_t e = 0; e < events.size(); ++e) {
      if (gnew[e] != 0.0) gprev[e] = gnew[e];
    }
    std::swap(u, unew);
    t = t_new;
    stepper.accept(sys, std::span<const T>(u), t, stats);
    h = h_next;
  }

  if (!opts.dense) {
    // Keep at least the final state so callers can read the endpoint.
    sol.ts.push_back(t);
    sol.us.push_back(u);
  }
  return sol;
}

}  // namespace odesens::ode
