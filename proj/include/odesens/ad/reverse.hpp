#pragma once

/**
 * @file reverse.hpp
 * @brief Recording a right-hand side onto a Tape and pulling vectors back through it.
 */

#include <span>

#include "odesens/ad/tape.hpp"
#include "odesens/ad/vector_field.hpp"

namespace odesens {

/// How the adjoint pass obtains v'(df/du) and v'(df/dp).
enum class VjpStrategy {
  user_jacobian_transpose,          // analytic Jacobians, transposed
  forward_full_jacobian_transpose,  // Dual-assembled Jacobians, transposed
  reverse_tape,                     // one reverse sweep over a recorded tape
};

[[nodiscard]] const char* to_string(VjpStrategy s) noexcept;

/// Records f(u, p, t) onto a fresh tape. Throws RecordingError if f uses an
/// operation outside the recordable set.
[[nodiscard]] Tape record(const VectorField& f, std::span<const double> u, std::span<const double> p, double t);

/// v'(df/du), v'(df/dp) from one reverse sweep.
[[nodiscard]] VjpResult vjp(const Tape& tape, std::span<const double> v);

/// Refreshes `tape` at a new point, keeping its structure. Throws
/// TapeInvalidated if a recorded branch guard flips.
void reuse_tape(Tape& tape, std::span<const double> u, std::span<const double> p, double t);

/**
 * Keeps one tape per right-hand side and refreshes it between calls,
 * re-recording only when a branch guard changes.
 */
class TapeCache {
 public:
  explicit TapeCache(const VectorField& f) : f_(&f) {}

  /// Tape evaluated at (u, p, t).
  Tape& at(std::span<const double> u, std::span<const double> p, double t);

  [[nodiscard]] std::size_t recordings() const noexcept { return recordings_; }
  [[nodiscard]] std::size_t refreshes() const noexcept { return refreshes_; }

 private:
  const VectorField* f_;
  Tape tape_;
  bool valid_ = false;
  std::size_t recordings_ = 0;
  std::size_t refreshes_ = 0;
};

}  // namespace odesens
