#include <array>
#include <cmath>
#include <string>
#include <type_traits>

#include "odesens/models/models.hpp"

namespace odesens::models {

double bruss_forcing(double x, double y, double t) noexcept {
  const double dx = x - 0.3;
  const double dy = y - 0.6;
  return (dx * dx + dy * dy <= 0.01 && t >= 1.1) ? 5.0 : 0.0;
}

namespace {

struct Grid {
  std::size_t n;
  double h;
  double inv_h2;

  // Neighbours of (i, j) in the order left, right, down, up, with no-flux reflection at the walls.
  [[nodiscard]] std::array<std::size_t, 4> neighbours(std::size_t i, std::size_t j) const noexcept {
    const std::size_t il = i == 0 ? 1 : i - 1;
    const std::size_t ir = i == n - 1 ? n - 2 : i + 1;
    const std::size_t jd = j == 0 ? 1 : j - 1;
    const std::size_t ju = j == n - 1 ? n - 2 : j + 1;
    return {bruss_index(n, il, j), bruss_index(n, ir, j), bruss_index(n, i, jd), bruss_index(n, i, ju)};
  }

  [[nodiscard]] bool in_disc(std::size_t i, std::size_t j) const noexcept {
    const double dx = static_cast<double>(i) * h - 0.3;
    const double dy = static_cast<double>(j) * h - 0.6;
    return dx * dx + dy * dy <= 0.01;
  }

  template <class S>
  [[nodiscard]] S laplacian(S center, std::span<const S> field, std::size_t i, std::size_t j) const {
    const auto nb = neighbours(i, j);
    return (field[nb[0]] + field[nb[1]] + field[nb[2]] + field[nb[3]] - 4.0 * center) * inv_h2;
  }
};

}  // namespace

ModelSpec bruss(std::size_t n) {
  if (n < 2) throw ConfigError("bruss: grid size must be at least 2, got " + std::to_string(n));
  const std::size_t nn = n * n;
  const Grid grid{n, 1.0 / static_cast<double>(n - 1), static_cast<double>((n - 1) * (n - 1))};

  ModelSpec m;
  m.name = "bruss";
  auto& prob = m.problem;

  prob.rhs = VectorField([grid, nn](auto du, auto u, auto p, const auto& t) {
    using T = std::decay_t<decltype(u[0])>;
    const std::size_t n = grid.n;
    const auto uu = u.subspan(0, nn);
    const auto vv = u.subspan(nn, nn);
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t k = bruss_index(n, i, j);
        const T& a = p[k];
        const T& b = p[nn + k];
        const T& alpha = p[2 * nn + k];
        const T& beta = p[3 * nn + k];
        const T uk = uu[k];
        const T vk = vv[k];
        const T u2v = uk * uk * vk;
        T fu = b + u2v - (a + 1.0) * uk + alpha * grid.laplacian(uk, uu, i, j);
        if (grid.in_disc(i, j) && t >= 1.1) fu += 5.0;
        du[k] = fu;
        du[nn + k] = a * uk - u2v + beta * grid.laplacian(vk, vv, i, j);
      }
    }
  });

  prob.state_jacobian = GenericMatrixFunction([grid, nn](auto J, auto u, auto p, const auto&) {
    using T = std::decay_t<decltype(u[0])>;
    const std::size_t n = grid.n;
    const std::size_t dim = 2 * nn;
    for (auto& x : J) x = T(0.0);
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t k = bruss_index(n, i, j);
        const T& a = p[k];
        const T& alpha = p[2 * nn + k];
        const T& beta = p[3 * nn + k];
        const T& uk = u[k];
        const T& vk = u[nn + k];
        const std::size_t ru = k * dim;
        const std::size_t rv = (nn + k) * dim;
        J[ru + k] += 2.0 * uk * vk - (a + 1.0) - 4.0 * grid.inv_h2 * alpha;
        J[ru + nn + k] += uk * uk;
        J[rv + k] += a - 2.0 * uk * vk;
        J[rv + nn + k] += -(uk * uk) - 4.0 * grid.inv_h2 * beta;
        for (std::size_t nb : grid.neighbours(i, j)) {
          J[ru + nb] += grid.inv_h2 * alpha;
          J[rv + nn + nb] += grid.inv_h2 * beta;
        }
      }
    }
  });

  prob.param_jacobian = GenericMatrixFunction([grid, nn](auto J, auto u, auto, const auto&) {
    using T = std::decay_t<decltype(u[0])>;
    const std::size_t n = grid.n;
    const std::size_t np = 4 * nn;
    for (auto& x : J) x = T(0.0);
    const auto uu = u.subspan(0, nn);
    const auto vv = u.subspan(nn, nn);
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t k = bruss_index(n, i, j);
        const std::size_t ru = k * np;
        const std::size_t rv = (nn + k) * np;
        J[ru + k] = -uu[k];
        J[ru + nn + k] = T(1.0);
        J[ru + 2 * nn + k] = grid.laplacian(uu[k], uu, i, j);
        J[rv + k] = uu[k];
        J[rv + 3 * nn + k] = grid.laplacian(vv[k], vv, i, j);
      }
    }
  });

  prob.u0.assign(2 * nn, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      const double x = static_cast<double>(i) * grid.h;
      const double y = static_cast<double>(j) * grid.h;
      const std::size_t k = bruss_index(n, i, j);
      prob.u0[k] = 22.0 * std::pow(y * (1.0 - y), 1.5);
      prob.u0[nn + k] = 27.0 * std::pow(x * (1.0 - x), 1.5);
    }
  }
  prob.p.resize(4 * nn);
  const double defaults[4] = {3.4, 1.0, 10.0, 10.0};
  for (std::size_t q = 0; q < 4; ++q) {
    for (std::size_t k = 0; k < nn; ++k) prob.p[q * nn + k] = defaults[q];
  }
  prob.t0 = 0.0;
  prob.tf = 10.0;
  prob.tstops = {1.1};
  // The forcing is piecewise constant in t and the switch is a tstop.
  prob.autonomous = true;

  m.true_params = prob.p;
  m.recommended_solver = SolverKind::stiff;
  m.estimation.n_data_points = 20;
  m.estimation.initial_guess = [](std::span<const double> p) {
    std::vector<double> g(p.begin(), p.end());
    for (auto& x : g) x *= 0.9;
    return g;
  };
  for (const char* s : {"u", "v"}) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t i = 0; i < n; ++i) m.state_names.push_back(std::string(s) + "[" + std::to_string(i) + "," + std::to_string(j) + "]");
    }
  }
  for (const char* s : {"A", "B", "alpha", "beta"}) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t i = 0; i < n; ++i) m.param_names.push_back(std::string(s) + "[" + std::to_string(i) + "," + std::to_string(j) + "]");
    }
  }
  return m;
}

}  // namespace odesens::models
