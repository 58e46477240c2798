#include "odesens/ad/forward.hpp"

#include <algorithm>
#include <string>

namespace odesens {

void SeedPlan::validate() const {
  if (chunk_size < 1) throw ConfigError("SeedPlan: chunk_size must be at least 1");
  if (chunk_size > total_params) throw ConfigError("SeedPlan: chunk_size exceeds total_params");
  if (chunk_size > kMaxPartials) {
    throw ConfigError("SeedPlan: chunk_size " + std::to_string(chunk_size) + " exceeds Dual capacity " +
                      std::to_string(kMaxPartials));
  }
  if (chunk_index * chunk_size >= total_params) throw ConfigError("SeedPlan: chunk_index out of range");
}

std::size_t SeedPlan::width() const noexcept {
  const std::size_t start = first();
  return start >= total_params ? 0 : std::min(chunk_size, total_params - start);
}

std::size_t SeedPlan::default_chunk(std::size_t total) noexcept {
  return std::max<std::size_t>(1, std::min({total, std::size_t{12}, kMaxPartials}));
}

std::vector<Dual> to_duals(std::span<const double> x) { return {x.begin(), x.end()}; }

std::vector<double> values_of(std::span<const Dual> x) {
  std::vector<double> out(x.size());
  std::transform(x.begin(), x.end(), out.begin(), [](const Dual& d) { return d.value(); });
  return out;
}

std::vector<double> jvp(const VectorField& f, std::span<const double> u, std::span<const double> p, double t,
                        std::span<const double> v) {
  if (v.size() != u.size()) throw ConfigError("jvp: direction and state dimensions differ");
  std::vector<Dual> ud(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) ud[i] = Dual(u[i], std::span<const double>(&v[i], 1));
  const std::vector<Dual> pd = to_duals(p);
  std::vector<Dual> du(u.size());
  f(std::span<Dual>(du), std::span<const Dual>(ud), std::span<const Dual>(pd), Dual(t));
  std::vector<double> out(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) out[i] = du[i].partial(0);
  return out;
}

Eigen::MatrixXd jacobian(const VectorField& f, std::span<const double> u, std::span<const double> p, double t,
                         JacobianWrt wrt, std::size_t chunk_size) {
  const std::size_t cols = wrt == JacobianWrt::state ? u.size() : p.size();
  const std::size_t rows = u.size();
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  if (cols == 0) return jac;
  if (chunk_size == 0) chunk_size = SeedPlan::default_chunk(cols);

  std::vector<Dual> ud = to_duals(u);
  std::vector<Dual> pd = to_duals(p);
  std::vector<Dual>& seeded = wrt == JacobianWrt::state ? ud : pd;
  std::span<const double> base = wrt == JacobianWrt::state ? u : p;
  std::vector<Dual> du(rows);

  const std::size_t nchunks = SeedPlan::chunk_count(cols, chunk_size);
  for (std::size_t c = 0; c < nchunks; ++c) {
    const SeedPlan plan{cols, chunk_size, c};
    plan.validate();
    const std::size_t first = plan.first();
    const std::size_t width = plan.width();
    for (std::size_t j = 0; j < width; ++j) seeded[first + j] = Dual::variable(base[first + j], width, j);
    f(std::span<Dual>(du), std::span<const Dual>(ud), std::span<const Dual>(pd), Dual(t));
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < width; ++j) {
        jac(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(first + j)) = du[i].partial(j);
      }
    }
    for (std::size_t j = 0; j < width; ++j) seeded[first + j] = Dual(base[first + j]);
  }
  return jac;
}

std::vector<double> time_derivative(const VectorField& f, std::span<const double> u, std::span<const double> p,
                                    double t) {
  const std::vector<Dual> ud = to_duals(u);
  const std::vector<Dual> pd = to_duals(p);
  std::vector<Dual> du(u.size());
  f(std::span<Dual>(du), std::span<const Dual>(ud), std::span<const Dual>(pd), Dual::variable(t, 1, 0));
  std::vector<double> out(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) out[i] = du[i].partial(0);
  return out;
}

}  // namespace odesens
