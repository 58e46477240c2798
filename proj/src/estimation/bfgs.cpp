#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "odesens/errors.hpp"
#include "odesens/estimation/estimation.hpp"

namespace odesens::est {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Point {
  double alpha = 0.0;
  double f = kInf;
  double df = 0.0;  // directional derivative g(x + alpha d)' d
  Eigen::VectorXd g;
};

// Minimizer of the cubic through (a, fa, da) and (b, fb, db), if it lies
// safely inside the bracket; bisection otherwise.
double interpolate(const Point& lo, const Point& hi) {
  const double a = lo.alpha;
  const double b = hi.alpha;
  const double mid = 0.5 * (a + b);
  if (!std::isfinite(hi.f)) return a + 0.25 * (b - a);
  const double d1 = lo.df + hi.df - 3.0 * (lo.f - hi.f) / (a - b);
  const double disc = d1 * d1 - lo.df * hi.df;
  if (disc < 0.0) return mid;
  const double d2 = std::copysign(std::sqrt(disc), b - a);
  const double x = b - (b - a) * (hi.df + d2 - d1) / (hi.df - lo.df + 2.0 * d2);
  const double lo_b = std::min(a, b);
  const double hi_b = std::max(a, b);
  const double margin = 0.1 * (hi_b - lo_b);
  if (!std::isfinite(x) || x < lo_b + margin || x > hi_b - margin) return mid;
  return x;
}

class LineSearch {
 public:
  LineSearch(const ObjectiveFn& fn, const Eigen::VectorXd& x, const Eigen::VectorXd& d, const Point& start,
             const BfgsOptions& opts, std::size_t& evals)
      : fn_(fn), x_(x), d_(d), start_(start), opts_(opts), evals_(evals) {}

  /// A point satisfying the strong Wolfe conditions, or the best point with
  /// sufficient decrease found on the way (found = false), or nothing.
  std::optional<Point> run(bool& wolfe) {
    wolfe = false;
    Point prev = start_;
    double alpha = 1.0;
    for (std::size_t i = 0; i < opts_.max_line_search; ++i) {
      Point cur = eval(alpha);
      if (!armijo(cur) || (i > 0 && cur.f >= prev.f)) return zoom(prev, cur, wolfe);
      if (std::abs(cur.df) <= -opts_.c2 * start_.df) {
        wolfe = true;
        return cur;
      }
      if (cur.df >= 0.0) return zoom(cur, prev, wolfe);
      prev = cur;
      alpha *= 2.0;
    }
    return best_;
  }

 private:
  Point eval(double alpha) {
    Point p;
    p.alpha = alpha;
    p.g.resize(x_.size());
    const Eigen::VectorXd xt = x_ + alpha * d_;
    ++evals_;
    double f = kInf;
    try {
      f = fn_(std::span<const double>(xt.data(), static_cast<std::size_t>(xt.size())),
              std::span<double>(p.g.data(), static_cast<std::size_t>(p.g.size())));
    } catch (const DomainError&) {
      f = kInf;
    }
    if (!std::isfinite(f) || !p.g.allFinite()) {
      p.f = kInf;
      p.df = 0.0;
      return p;
    }
    p.f = f;
    p.df = p.g.dot(d_);
    if (armijo(p) && (!best_ || p.f < best_->f)) best_ = p;
    return p;
  }

  [[nodiscard]] bool armijo(const Point& p) const {
    return std::isfinite(p.f) && p.f <= start_.f + opts_.c1 * p.alpha * start_.df;
  }

  std::optional<Point> zoom(Point lo, Point hi, bool& wolfe) {
    for (std::size_t i = 0; i < opts_.max_line_search; ++i) {
      const double alpha = interpolate(lo, hi);
      if (std::abs(hi.alpha - lo.alpha) <= 1e-16 * std::max(1.0, std::abs(lo.alpha))) break;
      Point cur = eval(alpha);
      if (!armijo(cur) || cur.f >= lo.f) {
        hi = cur;
        continue;
      }
      if (std::abs(cur.df) <= -opts_.c2 * start_.df) {
        wolfe = true;
        return cur;
      }
      if (cur.df * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
      lo = cur;
    }
    return best_;
  }

  const ObjectiveFn& fn_;
  const Eigen::VectorXd& x_;
  const Eigen::VectorXd& d_;
  const Point& start_;
  const BfgsOptions& opts_;
  std::size_t& evals_;
  std::optional<Point> best_;
};

}  // namespace

OptResult bfgs(const ObjectiveFn& fn, std::vector<double> p0, const BfgsOptions& opts) {
  if (!(opts.gtol >= 0.0) || !(opts.c1 > 0.0 && opts.c1 < opts.c2 && opts.c2 < 1.0)) {
    throw ConfigError("bfgs: need gtol >= 0 and 0 < c1 < c2 < 1");
  }
  const auto n = static_cast<Eigen::Index>(p0.size());
  OptResult res;
  Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(p0.data(), n);
  Point cur;
  cur.g.resize(n);
  cur.f = fn(std::span<const double>(x.data(), p0.size()), std::span<double>(cur.g.data(), p0.size()));
  res.evaluations = 1;
  if (!std::isfinite(cur.f) || !cur.g.allFinite()) throw ConfigError("bfgs: objective is not finite at the start");

  auto finish = [&](bool converged, std::string message) {
    res.p_final.assign(x.data(), x.data() + n);
    res.cost_final = cur.f;
    res.grad_norm = n == 0 ? 0.0 : cur.g.lpNorm<Eigen::Infinity>();
    res.converged = converged;
    res.message = std::move(message);
    return res;
  };

  res.cost_history.push_back(cur.f);
  const double g0 = cur.g.norm();
  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(n, n) / (g0 > 0.0 ? g0 : 1.0);

  for (;;) {
    if (n == 0 || cur.g.lpNorm<Eigen::Infinity>() <= opts.gtol) return finish(true, "gradient tolerance reached");
    if (res.iterations >= opts.max_iters) return finish(false, "iteration limit reached");

    Eigen::VectorXd d = -h * cur.g;
    cur.alpha = 0.0;
    cur.df = cur.g.dot(d);
    if (!(cur.df < 0.0)) {
      // Lost positive definiteness: restart from scaled steepest descent.
      h = Eigen::MatrixXd::Identity(n, n) / cur.g.norm();
      d = -h * cur.g;
      cur.df = cur.g.dot(d);
    }
    bool wolfe = false;
    LineSearch ls(fn, x, d, cur, opts, res.evaluations);
    const auto next = ls.run(wolfe);
    if (!next) return finish(false, "line search failed to find a decrease");

    const Eigen::VectorXd s = next->alpha * d;
    const Eigen::VectorXd y = next->g - cur.g;
    x += s;
    cur.f = next->f;
    cur.g = next->g;
    ++res.iterations;
    res.cost_history.push_back(cur.f);

    const double sy = s.dot(y);
    if (sy > std::numeric_limits<double>::epsilon() * s.norm() * y.norm()) {
      const double rho = 1.0 / sy;
      const Eigen::VectorXd hy = h * y;
      // (I - rho s y') H (I - rho y s') + rho s s', expanded.
      h += (rho * rho * y.dot(hy) + rho) * (s * s.transpose()) - rho * (hy * s.transpose() + s * hy.transpose());
    }
    if (!wolfe && s.lpNorm<Eigen::Infinity>() == 0.0) return finish(false, "line search stalled");
  }
}

}  // namespace odesens::est
