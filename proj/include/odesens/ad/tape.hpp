#pragma once

/**
 * @file tape.hpp
 * @brief Tape-based reverse-mode AD scoped to a single right-hand-side call.
 *
 * A Var is a tracked real. Arithmetic on Vars appends nodes (operation kind,
 * operand indices, forward value, local partials) to the Tape the operands
 * belong to. Operands that are plain constants never create nodes; mixed
 * Var/constant operations are stored as single "_c" nodes carrying the
 * constant inline.
 *
 * Comparisons involving a Var are recorded as branch guards. A tape may be
 * refreshed at a new input point without re-recording as long as every guard
 * evaluates the same way; otherwise refresh throws TapeInvalidated.
 */

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "odesens/errors.hpp"

namespace odesens {

enum class TapeOp : std::uint8_t {
  input,
  add,
  sub,
  mul,
  div,
  neg,
  add_c,   // a + c
  sub_c,   // a - c
  rsub_c,  // c - a
  mul_c,   // a * c
  div_c,   // a / c
  rdiv_c,  // c / a
  exp,
  log,
  sin,
  cos,
  sqrt,
  pow_c,  // a ^ c
  abs,
};

[[nodiscard]] const char* to_string(TapeOp op) noexcept;

enum class CompareOp : std::uint8_t { lt, le, gt, ge, eq, ne };

struct TapeNode {
  TapeOp op = TapeOp::input;
  std::int32_t a = -1;
  std::int32_t b = -1;
  double c = 0.0;
  double value = 0.0;
  double da = 0.0;
  double db = 0.0;
};

struct BranchGuard {
  CompareOp op;
  std::int32_t lhs;  // node index, or -1 for the constant lhs_c
  std::int32_t rhs;
  double lhs_c;
  double rhs_c;
  bool outcome;
};

struct VjpResult {
  std::vector<double> state;
  std::vector<double> params;
  double time = 0.0;
};

class Var;

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) noexcept = default;
  Tape& operator=(Tape&&) noexcept = default;

  [[nodiscard]] std::size_t node_count() const noexcept { return nodes_.size(); }
  /// Nodes that are arithmetic or elementary operations (excludes inputs).
  [[nodiscard]] std::size_t op_count() const noexcept;
  [[nodiscard]] bool branch_free() const noexcept { return guards_.empty(); }
  [[nodiscard]] std::size_t state_count() const noexcept { return state_inputs_.size(); }
  [[nodiscard]] std::size_t param_count() const noexcept { return param_inputs_.size(); }
  [[nodiscard]] std::size_t output_count() const noexcept { return outputs_.size(); }
  [[nodiscard]] const std::vector<TapeNode>& nodes() const noexcept { return nodes_; }
  [[nodiscard]] const std::vector<BranchGuard>& guards() const noexcept { return guards_; }

  /// Forward values of the outputs as last recorded or refreshed.
  [[nodiscard]] std::vector<double> outputs() const;

  /// Replays the recorded structure from the current input values.
  [[nodiscard]] std::vector<double> replay() const;

  /// One reverse sweep: returns v'(df/du), v'(df/dp) and v'(df/dt).
  [[nodiscard]] VjpResult vjp(std::span<const double> v) const;

  /// Re-evaluates values and local partials in place at a new input point.
  void refresh(std::span<const double> u, std::span<const double> p, double t);

  // Recording interface, used by Var and record().
  Var make_input(double value);
  void mark_state_input(const Var& v);
  void mark_param_input(const Var& v);
  void mark_time_input(const Var& v);
  void add_output(const Var& v);
  Var push(TapeOp op, std::int32_t a, std::int32_t b, double c, double value, double da, double db);
  void push_guard(const BranchGuard& g) { guards_.push_back(g); }

 private:
  void evaluate_node(TapeNode& n) const;
  [[nodiscard]] bool evaluate_guard(const BranchGuard& g) const;

  std::vector<TapeNode> nodes_;
  std::vector<BranchGuard> guards_;
  std::vector<std::int32_t> state_inputs_;
  std::vector<std::int32_t> param_inputs_;
  std::int32_t time_input_ = -1;
  std::vector<std::int32_t> outputs_;     // -1 marks a constant output
  std::vector<double> output_constants_;  // value used when outputs_[k] == -1
};

/// Tracked real. Either a constant (no tape) or a handle to a tape node.
class Var {
 public:
  Var() noexcept = default;
  Var(double v) noexcept : value_(v) {}  // NOLINT: implicit constant embedding
  Var(Tape* tape, std::int32_t index, double value) noexcept : tape_(tape), index_(index), value_(value) {}

  [[nodiscard]] double value() const noexcept { return value_; }
  [[nodiscard]] bool is_constant() const noexcept { return tape_ == nullptr; }
  [[nodiscard]] std::int32_t index() const noexcept { return index_; }
  [[nodiscard]] Tape* tape() const noexcept { return tape_; }

  Var& operator+=(const Var& b) { return *this = *this + b; }
  Var& operator-=(const Var& b) { return *this = *this - b; }
  Var& operator*=(const Var& b) { return *this = *this * b; }
  Var& operator/=(const Var& b) { return *this = *this / b; }

  Var operator-() const {
    if (is_constant()) return Var(-value_);
    return tape_->push(TapeOp::neg, index_, -1, 0.0, -value_, -1.0, 0.0);
  }
  Var operator+() const { return *this; }

  friend Var operator+(const Var& a, const Var& b) {
    if (a.is_constant() && b.is_constant()) return Var(a.value_ + b.value_);
    if (b.is_constant()) return a.tape_->push(TapeOp::add_c, a.index_, -1, b.value_, a.value_ + b.value_, 1.0, 0.0);
    if (a.is_constant()) return b.tape_->push(TapeOp::add_c, b.index_, -1, a.value_, a.value_ + b.value_, 1.0, 0.0);
    return same_tape(a, b)->push(TapeOp::add, a.index_, b.index_, 0.0, a.value_ + b.value_, 1.0, 1.0);
  }
  friend Var operator-(const Var& a, const Var& b) {
    if (a.is_constant() && b.is_constant()) return Var(a.value_ - b.value_);
    if (b.is_constant()) return a.tape_->push(TapeOp::sub_c, a.index_, -1, b.value_, a.value_ - b.value_, 1.0, 0.0);
    if (a.is_constant()) return b.tape_->push(TapeOp::rsub_c, b.index_, -1, a.value_, a.value_ - b.value_, -1.0, 0.0);
    return same_tape(a, b)->push(TapeOp::sub, a.index_, b.index_, 0.0, a.value_ - b.value_, 1.0, -1.0);
  }
  friend Var operator*(const Var& a, const Var& b) {
    if (a.is_constant() && b.is_constant()) return Var(a.value_ * b.value_);
    if (b.is_constant()) return a.tape_->push(TapeOp::mul_c, a.index_, -1, b.value_, a.value_ * b.value_, b.value_, 0.0);
    if (a.is_constant()) return b.tape_->push(TapeOp::mul_c, b.index_, -1, a.value_, a.value_ * b.value_, a.value_, 0.0);
    return same_tape(a, b)->push(TapeOp::mul, a.index_, b.index_, 0.0, a.value_ * b.value_, b.value_, a.value_);
  }
  friend Var operator/(const Var& a, const Var& b) {
    if (b.value_ == 0.0) throw ArithmeticError("tracked division by a zero value");
    const double q = a.value_ / b.value_;
    if (a.is_constant() && b.is_constant()) return Var(q);
    if (b.is_constant()) return a.tape_->push(TapeOp::div_c, a.index_, -1, b.value_, q, 1.0 / b.value_, 0.0);
    if (a.is_constant()) return b.tape_->push(TapeOp::rdiv_c, b.index_, -1, a.value_, q, -q / b.value_, 0.0);
    return same_tape(a, b)->push(TapeOp::div, a.index_, b.index_, 0.0, q, 1.0 / b.value_, -q / b.value_);
  }

  friend bool operator<(const Var& a, const Var& b) { return compare(CompareOp::lt, a, b); }
  friend bool operator<=(const Var& a, const Var& b) { return compare(CompareOp::le, a, b); }
  friend bool operator>(const Var& a, const Var& b) { return compare(CompareOp::gt, a, b); }
  friend bool operator>=(const Var& a, const Var& b) { return compare(CompareOp::ge, a, b); }
  friend bool operator==(const Var& a, const Var& b) { return compare(CompareOp::eq, a, b); }
  friend bool operator!=(const Var& a, const Var& b) { return compare(CompareOp::ne, a, b); }

  /// Elementary op on this Var: value `fv`, local partial `d`, constant payload `c`.
  [[nodiscard]] Var unary(TapeOp op, double fv, double d, double c = 0.0) const {
    if (is_constant()) return Var(fv);
    return tape_->push(op, index_, -1, c, fv, d, 0.0);
  }

 private:
  static Tape* same_tape(const Var& a, const Var& b) {
    if (a.tape_ != b.tape_) throw ConfigError("tracked values from different tapes were combined");
    return a.tape_;
  }
  static bool compare(CompareOp op, const Var& a, const Var& b);

  Tape* tape_ = nullptr;
  std::int32_t index_ = -1;
  double value_ = 0.0;
};

[[nodiscard]] bool evaluate_compare(CompareOp op, double lhs, double rhs) noexcept;

inline bool Var::compare(CompareOp op, const Var& a, const Var& b) {
  const bool outcome = evaluate_compare(op, a.value_, b.value_);
  if (!a.is_constant() || !b.is_constant()) {
    Tape* tape = a.is_constant() ? b.tape_ : a.tape_;
    tape->push_guard(BranchGuard{op, a.index_, b.index_, a.value_, b.value_, outcome});
  }
  return outcome;
}

Var exp(const Var& a);
Var log(const Var& a);
Var sin(const Var& a);
Var cos(const Var& a);
Var sqrt(const Var& a);
Var pow(const Var& a, double c);
Var abs(const Var& a);

// Outside the recordable op set: these raise RecordingError naming the op.
Var tanh(const Var& a);
Var atan(const Var& a);
Var floor(const Var& a);

inline double value_of(const Var& x) noexcept { return x.value(); }

}  // namespace odesens
