#pragma once

/**
 * @file forward.hpp
 * @brief Jacobian actions and chunked Jacobians computed with Dual seeding.
 */

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <vector>

#include "odesens/ad/dual.hpp"
#include "odesens/ad/vector_field.hpp"

namespace odesens {

/// One chunk of a chunked seeding sweep over `total_params` directions.
struct SeedPlan {
  std::size_t total_params = 0;
  std::size_t chunk_size = 1;
  std::size_t chunk_index = 0;

  /// Throws ConfigError unless chunk_size >= 1, chunk_size <= total_params
  /// (and <= kMaxPartials), and the chunk starts inside the range.
  void validate() const;
  [[nodiscard]] std::size_t first() const noexcept { return chunk_index * chunk_size; }
  /// Number of directions seeded by this chunk (the last one may be short).
  [[nodiscard]] std::size_t width() const noexcept;

  [[nodiscard]] static std::size_t chunk_count(std::size_t total, std::size_t chunk_size) noexcept {
    return chunk_size == 0 ? 0 : (total + chunk_size - 1) / chunk_size;
  }
  /// Default chunk size: min(total, 12), clamped to the Dual capacity.
  [[nodiscard]] static std::size_t default_chunk(std::size_t total) noexcept;
};

enum class JacobianWrt { state, params };

/// (df/du) v from a single Dual evaluation of f with partials seeded to v.
[[nodiscard]] std::vector<double> jvp(const VectorField& f, std::span<const double> u, std::span<const double> p,
                                      double t, std::span<const double> v);

/// Full df/du or df/dp assembled from ceil(cols / chunk_size) seeded sweeps.
/// chunk_size == 0 selects SeedPlan::default_chunk.
[[nodiscard]] Eigen::MatrixXd jacobian(const VectorField& f, std::span<const double> u, std::span<const double> p,
                                       double t, JacobianWrt wrt, std::size_t chunk_size = 0);

/// df/dt by seeding the time argument.
[[nodiscard]] std::vector<double> time_derivative(const VectorField& f, std::span<const double> u,
                                                  std::span<const double> p, double t);

/// Constant (width-zero) Duals from plain values.
[[nodiscard]] std::vector<Dual> to_duals(std::span<const double> x);

/// Value parts of a Dual vector.
[[nodiscard]] std::vector<double> values_of(std::span<const Dual> x);

}  // namespace odesens
