#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "odesens/quad/gauss_kronrod.hpp"

using namespace odesens;
using namespace odesens::quad;

namespace {

struct ClosedForm {
  const char* name;
  ScalarIntegrand f;
  double a;
  double b;
  double exact;
};

// Integrands with elementary antiderivatives, from smooth to sharply peaked.
std::vector<ClosedForm> suite() {
  const double pi = std::numbers::pi;
  return {
      {"x^2", [](double x) { return x * x; }, 0.0, 1.0, 1.0 / 3.0},
      {"x^5", [](double x) { return std::pow(x, 5); }, -1.0, 2.0, (64.0 - 1.0) / 6.0},
      {"exp", [](double x) { return std::exp(x); }, 0.0, 1.0, std::exp(1.0) - 1.0},
      {"exp(-x)", [](double x) { return std::exp(-x); }, 0.0, 10.0, 1.0 - std::exp(-10.0)},
      {"sin", [](double x) { return std::sin(x); }, 0.0, pi, 2.0},
      {"cos 5x", [](double x) { return std::cos(5.0 * x); }, 0.0, 1.0, std::sin(5.0) / 5.0},
      {"sin 20x", [](double x) { return std::sin(20.0 * x); }, 0.0, 1.0, (1.0 - std::cos(20.0)) / 20.0},
      {"1/(1+x^2)", [](double x) { return 1.0 / (1.0 + x * x); }, 0.0, 1.0, pi / 4.0},
      {"1/(1+25x^2)", [](double x) { return 1.0 / (1.0 + 25.0 * x * x); }, -1.0, 1.0, 0.4 * std::atan(5.0)},
      {"1/(1+100x^2)", [](double x) { return 1.0 / (1.0 + 100.0 * x * x); }, -1.0, 1.0, 0.2 * std::atan(10.0)},
      {"sqrt", [](double x) { return std::sqrt(x); }, 0.0, 1.0, 2.0 / 3.0},
      {"x sqrt x", [](double x) { return x * std::sqrt(x); }, 0.0, 1.0, 0.4},
      {"log(1+x)", [](double x) { return std::log1p(x); }, 0.0, 1.0, 2.0 * std::log(2.0) - 1.0},
      {"1/x", [](double x) { return 1.0 / x; }, 1.0, 10.0, std::log(10.0)},
      {"x exp(-x)", [](double x) { return x * std::exp(-x); }, 0.0, 5.0, 1.0 - 6.0 * std::exp(-5.0)},
      {"gauss", [](double x) { return std::exp(-x * x); }, -3.0, 3.0, std::sqrt(pi) * std::erf(3.0)},
      {"sech^2 10x", [](double x) { const double c = std::cosh(10.0 * x); return 1.0 / (c * c); }, -1.0, 1.0,
       0.2 * std::tanh(10.0)},
      {"|x|", [](double x) { return std::abs(x - 0.3); }, 0.0, 1.0, 0.5 * (0.09 + 0.49)},
      {"x^2 sin x", [](double x) { return x * x * std::sin(x); }, 0.0, pi, pi * pi - 4.0},
      {"exp(sin x)cos x", [](double x) { return std::exp(std::sin(x)) * std::cos(x); }, 0.0, 2.0,
       std::exp(std::sin(2.0)) - 1.0},
  };
}

}  // namespace

TEST_CASE("gk15 exactness") {
  auto r = gk15([](double x) { return x * x; }, 0.0, 1.0);
  CHECK(std::abs(r.scalar() - 1.0 / 3.0) <= 4 * std::numeric_limits<double>::epsilon());
  CHECK(r.nevals == 15);
  CHECK(r.err_est >= 0.0);
  r = gk15([](double) { return 3.25; }, -2.0, 5.0);
  CHECK(r.scalar() == doctest::Approx(3.25 * 7.0).epsilon(1e-15));

  // Degree 22 with every coefficient 1 on [0, 1]: sum 1/(k+1).
  double exact = 0.0;
  for (int k = 0; k <= 22; ++k) exact += 1.0 / (k + 1);
  const auto p22 = gk15(
      [](double x) {
        double s = 0.0;
        for (int k = 22; k >= 0; --k) s = s * x + 1.0;
        return s;
      },
      0.0, 1.0);
  CHECK(std::abs(p22.scalar() - exact) <= 1e-14 * exact);
}

TEST_CASE("adaptive quadrature examples") {
  const double e6 = 1e-6;
  const auto r = adaptive([e6](double x) { return 1.0 / std::sqrt(x + e6); }, 0.0, 1.0, 1e-8, 0.0);
  const double exact = 2.0 * (std::sqrt(1.0 + e6) - std::sqrt(e6));
  CHECK(std::abs(r.scalar() - exact) <= 1e-8 * exact);

  const auto s = adaptive([](double x) { return std::sin(x); }, 0.0, 2.0 * std::numbers::pi, 1e-10, 1e-12);
  CHECK(std::abs(s.scalar()) <= 1e-12);

  const auto e = adaptive([](double x) { return std::exp(x); }, 0.0, 1.0, 1e-10, 0.0);
  CHECK(std::abs(e.scalar() - (std::exp(1.0) - 1.0)) <= 1e-10 * (std::exp(1.0) - 1.0));
  CHECK(e.nevals >= 15);
}

TEST_CASE("vector integrands share one subdivision") {
  AdaptiveOptions o;
  o.rtol = 1e-10;
  o.atol = 0.0;
  const auto r = adaptive(
      [](double x, std::span<double> out) {
        out[0] = std::exp(x);
        out[1] = 1.0 / (1.0 + 100.0 * x * x);
      },
      2, -1.0, 1.0, o);
  CHECK(std::abs(r.value[0] - (std::exp(1.0) - std::exp(-1.0))) <= 1e-9);
  CHECK(std::abs(r.value[1] - 0.2 * std::atan(10.0)) <= 1e-9);
  CHECK(r.nevals % 15 == 0);
}

TEST_CASE("linearity") {
  const ScalarIntegrand f = [](double x) { return std::exp(-x) * std::sin(3.0 * x); };
  const ScalarIntegrand g = [](double x) { return 1.0 / (1.0 + 25.0 * x * x); };
  const double rtol = 1e-10;
  const double atol = 1e-13;
  const auto a = adaptive(f, 0.0, 2.0, rtol, atol);
  const auto b = adaptive(g, 0.0, 2.0, rtol, atol);
  const auto c = adaptive([&](double x) { return f(x) + g(x); }, 0.0, 2.0, rtol, atol);
  const double combined = a.err_est + b.err_est + c.err_est + 2.0 * atol;
  CHECK(std::abs(a.scalar() + b.scalar() - c.scalar()) <= std::max(combined, rtol * std::abs(c.scalar()) * 3.0));
}

TEST_CASE("error estimates are reliable on closed-form integrands") {
  int bounded = 0;
  int total = 0;
  for (const auto& c : suite()) {
    CAPTURE(c.name);
    const auto single = gk15(c.f, c.a, c.b);
    const auto adapt = adaptive(c.f, c.a, c.b, 1e-8, 1e-14);
    for (const auto* r : {&single, &adapt}) {
      const double err = std::abs(r->scalar() - c.exact);
      CHECK(r->err_est >= 0.0);
      CHECK(err <= 10.0 * r->err_est + 1e-15 * std::abs(c.exact));
      bounded += err <= r->err_est + 1e-15 * std::abs(c.exact) ? 1 : 0;
      ++total;
    }
    CHECK(std::abs(adapt.scalar() - c.exact) <= 1e-8 * std::abs(c.exact) + 1e-14);
  }
  CHECK(static_cast<double>(bounded) >= 0.95 * total);
}

TEST_CASE("quadrature failures") {
  try {
    (void)gk15([](double x) { return x > 0.5 ? std::nan("") : x; }, 0.0, 1.0);
    FAIL("expected an integrand error");
  } catch (const IntegrandError& e) {
    CHECK(e.abscissa() > 0.5);
  }
  AdaptiveOptions o;
  o.rtol = 1e-14;
  o.atol = 0.0;
  o.max_subdivisions = 5;
  o.segment_id = 7;
  try {
    (void)adaptive([](double x, std::span<double> out) { out[0] = std::sin(200.0 * x); }, 1, 0.0, 1.0, o);
    FAIL("expected a quadrature error");
  } catch (const QuadratureError& e) {
    CHECK(e.segment() == 7);
    REQUIRE(e.best_estimate().size() == 1);
    CHECK(std::isfinite(e.best_estimate()[0]));
  }
}
