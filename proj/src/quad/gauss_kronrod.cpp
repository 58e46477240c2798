#include "odesens/quad/gauss_kronrod.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <string>

namespace odesens::quad {
namespace {

// Kronrod abscissae on [-1, 1] (positive half; xgk[7] is the centre).
// Odd indices are also the 7-point Gauss nodes.
constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};

constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};

constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Interval {
  double a;
  double b;
  std::vector<double> value;
  std::vector<double> err;  // per component
  double err_norm;
};

struct ByError {
  bool operator()(const Interval& x, const Interval& y) const { return x.err_norm < y.err_norm; }
};

void check_finite(std::span<const double> v, double x) {
  for (double c : v) {
    if (!std::isfinite(c)) throw IntegrandError("integrand is not finite at x = " + std::to_string(x), x);
  }
}

Interval kronrod(const VectorIntegrand& f, std::size_t dim, double a, double b) {
  constexpr double epmach = std::numeric_limits<double>::epsilon();
  constexpr double uflow = std::numeric_limits<double>::min();
  const double centr = 0.5 * (a + b);
  const double hlgth = 0.5 * (b - a);

  std::vector<double> fc(dim);
  std::array<std::vector<double>, 7> fv1;
  std::array<std::vector<double>, 7> fv2;
  f(centr, fc);
  check_finite(fc, centr);
  for (std::size_t j = 0; j < 7; ++j) {
    const double dx = hlgth * kXgk[j];
    fv1[j].resize(dim);
    fv2[j].resize(dim);
    f(centr - dx, fv1[j]);
    check_finite(fv1[j], centr - dx);
    f(centr + dx, fv2[j]);
    check_finite(fv2[j], centr + dx);
  }

  Interval out{a, b, std::vector<double>(dim), std::vector<double>(dim), 0.0};
  for (std::size_t c = 0; c < dim; ++c) {
    double resk = fc[c] * kWgk[7];
    double resg = fc[c] * kWg[3];
    double resabs = std::abs(resk);
    for (std::size_t j = 0; j < 7; ++j) {
      const double fsum = fv1[j][c] + fv2[j][c];
      resk += kWgk[j] * fsum;
      resabs += kWgk[j] * (std::abs(fv1[j][c]) + std::abs(fv2[j][c]));
      if (j % 2 == 1) resg += kWg[j / 2] * fsum;
    }
    const double reskh = resk * 0.5;
    double resasc = kWgk[7] * std::abs(fc[c] - reskh);
    for (std::size_t j = 0; j < 7; ++j) {
      resasc += kWgk[j] * (std::abs(fv1[j][c] - reskh) + std::abs(fv2[j][c] - reskh));
    }
    const double result = resk * hlgth;
    resabs *= std::abs(hlgth);
    resasc *= std::abs(hlgth);
    double abserr = std::abs((resk - resg) * hlgth);
    if (resasc != 0.0 && abserr != 0.0) abserr = resasc * std::min(1.0, std::pow(200.0 * abserr / resasc, 1.5));
    if (resabs > uflow / (50.0 * epmach)) abserr = std::max(epmach * 50.0 * resabs, abserr);
    out.value[c] = result;
    out.err[c] = abserr;
    out.err_norm = std::max(out.err_norm, abserr);
  }
  return out;
}

double inf_norm(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

QuadResult gk15(const VectorIntegrand& f, std::size_t dim, double a, double b) {
  if (!(a < b)) throw ConfigError("gk15 requires a < b");
  Interval iv = kronrod(f, dim, a, b);
  return QuadResult{std::move(iv.value), iv.err_norm, 15};
}

QuadResult gk15(const ScalarIntegrand& f, double a, double b) {
  return gk15([&f](double x, std::span<double> out) { out[0] = f(x); }, 1, a, b);
}

QuadResult adaptive(const VectorIntegrand& f, std::size_t dim, double a, double b, const AdaptiveOptions& opts) {
  if (!(a < b)) throw ConfigError("adaptive quadrature requires a < b");
  std::priority_queue<Interval, std::vector<Interval>, ByError> heap;
  heap.push(kronrod(f, dim, a, b));
  std::size_t nevals = 15;
  std::vector<double> total = heap.top().value;
  std::vector<double> total_err = heap.top().err;

  auto converged = [&]() {
    return inf_norm(total_err) <= std::max(opts.atol, opts.rtol * inf_norm(total));
  };

  std::size_t subdivisions = 0;
  while (!converged()) {
    if (subdivisions >= opts.max_subdivisions) {
      throw QuadratureError("adaptive quadrature: subdivision limit reached on segment " +
                                std::to_string(opts.segment_id) + " (error " + std::to_string(inf_norm(total_err)) +
                                ")",
                            opts.segment_id, total);
    }
    Interval worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(worst.a < mid && mid < worst.b)) {
      throw QuadratureError("adaptive quadrature: interval cannot be bisected further on segment " +
                                std::to_string(opts.segment_id),
                            opts.segment_id, total);
    }
    Interval left = kronrod(f, dim, worst.a, mid);
    Interval right = kronrod(f, dim, mid, worst.b);
    nevals += 30;
    for (std::size_t c = 0; c < dim; ++c) {
      total[c] += left.value[c] + right.value[c] - worst.value[c];
      total_err[c] += left.err[c] + right.err[c] - worst.err[c];
    }
    heap.push(std::move(left));
    heap.push(std::move(right));
    ++subdivisions;
  }

  // Re-sum from the leaves to shed the drift of the running updates.
  std::fill(total.begin(), total.end(), 0.0);
  std::fill(total_err.begin(), total_err.end(), 0.0);
  while (!heap.empty()) {
    const Interval& iv = heap.top();
    for (std::size_t c = 0; c < dim; ++c) {
      total[c] += iv.value[c];
      total_err[c] += iv.err[c];
    }
    heap.pop();
  }
  return QuadResult{std::move(total), inf_norm(total_err), nevals};
}

QuadResult adaptive(const ScalarIntegrand& f, double a, double b, double rtol, double atol) {
  AdaptiveOptions opts;
  opts.rtol = rtol;
  opts.atol = atol;
  return adaptive([&f](double x, std::span<double> out) { out[0] = f(x); }, 1, a, b, opts);
}

}  // namespace odesens::quad
