#include "odesens/ad/tape.hpp"

#include <algorithm>

namespace odesens {

const char* to_string(TapeOp op) noexcept {
  switch (op) {
    case TapeOp::input: return "input";
    case TapeOp::add: return "add";
    case TapeOp::sub: return "sub";
    case TapeOp::mul: return "mul";
    case TapeOp::div: return "div";
    case TapeOp::neg: return "neg";
    case TapeOp::add_c: return "add_c";
    case TapeOp::sub_c: return "sub_c";
    case TapeOp::rsub_c: return "rsub_c";
    case TapeOp::mul_c: return "mul_c";
    case TapeOp::div_c: return "div_c";
    case TapeOp::rdiv_c: return "rdiv_c";
    case TapeOp::exp: return "exp";
    case TapeOp::log: return "log";
    case TapeOp::sin: return "sin";
    case TapeOp::cos: return "cos";
    case TapeOp::sqrt: return "sqrt";
    case TapeOp::pow_c: return "pow_c";
    case TapeOp::abs: return "abs";
  }
  return "?";
}

bool evaluate_compare(CompareOp op, double lhs, double rhs) noexcept {
  switch (op) {
    case CompareOp::lt: return lhs < rhs;
    case CompareOp::le: return lhs <= rhs;
    case CompareOp::gt: return lhs > rhs;
    case CompareOp::ge: return lhs >= rhs;
    case CompareOp::eq: return lhs == rhs;
    case CompareOp::ne: return lhs != rhs;
  }
  return false;
}

std::size_t Tape::op_count() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const TapeNode& n) { return n.op != TapeOp::input; }));
}

Var Tape::make_input(double value) {
  TapeNode n;
  n.op = TapeOp::input;
  n.value = value;
  nodes_.push_back(n);
  return Var(this, static_cast<std::int32_t>(nodes_.size() - 1), value);
}

void Tape::mark_state_input(const Var& v) { state_inputs_.push_back(v.index()); }
void Tape::mark_param_input(const Var& v) { param_inputs_.push_back(v.index()); }
void Tape::mark_time_input(const Var& v) { time_input_ = v.index(); }

void Tape::add_output(const Var& v) {
  if (v.is_constant()) {
    outputs_.push_back(-1);
    output_constants_.push_back(v.value());
  } else {
    if (v.tape() != this) throw ConfigError("output recorded on a different tape");
    outputs_.push_back(v.index());
    output_constants_.push_back(0.0);
  }
}

Var Tape::push(TapeOp op, std::int32_t a, std::int32_t b, double c, double value, double da, double db) {
  nodes_.push_back(TapeNode{op, a, b, c, value, da, db});
  return Var(this, static_cast<std::int32_t>(nodes_.size() - 1), value);
}

std::vector<double> Tape::outputs() const {
  std::vector<double> out(outputs_.size());
  for (std::size_t k = 0; k < outputs_.size(); ++k) {
    out[k] = outputs_[k] < 0 ? output_constants_[k] : nodes_[static_cast<std::size_t>(outputs_[k])].value;
  }
  return out;
}

void Tape::evaluate_node(TapeNode& n) const {
  const double a = n.a >= 0 ? nodes_[static_cast<std::size_t>(n.a)].value : 0.0;
  const double b = n.b >= 0 ? nodes_[static_cast<std::size_t>(n.b)].value : 0.0;
  switch (n.op) {
    case TapeOp::input:
      return;
    case TapeOp::add:
      n.value = a + b;
      n.da = 1.0;
      n.db = 1.0;
      return;
    case TapeOp::sub:
      n.value = a - b;
      n.da = 1.0;
      n.db = -1.0;
      return;
    case TapeOp::mul:
      n.value = a * b;
      n.da = b;
      n.db = a;
      return;
    case TapeOp::div:
      if (b == 0.0) throw ArithmeticError("tracked division by a zero value");
      n.value = a / b;
      n.da = 1.0 / b;
      n.db = -n.value / b;
      return;
    case TapeOp::neg:
      n.value = -a;
      n.da = -1.0;
      return;
    case TapeOp::add_c:
      n.value = a + n.c;
      n.da = 1.0;
      return;
    case TapeOp::sub_c:
      n.value = a - n.c;
      n.da = 1.0;
      return;
    case TapeOp::rsub_c:
      n.value = n.c - a;
      n.da = -1.0;
      return;
    case TapeOp::mul_c:
      n.value = a * n.c;
      n.da = n.c;
      return;
    case TapeOp::div_c:
      n.value = a / n.c;
      n.da = 1.0 / n.c;
      return;
    case TapeOp::rdiv_c:
      if (a == 0.0) throw ArithmeticError("tracked division by a zero value");
      n.value = n.c / a;
      n.da = -n.value / a;
      return;
    case TapeOp::exp:
      n.value = std::exp(a);
      n.da = n.value;
      return;
    case TapeOp::log:
      if (!(a > 0.0)) throw DomainError("log of non-positive value on tape replay");
      n.value = std::log(a);
      n.da = 1.0 / a;
      return;
    case TapeOp::sin:
      n.value = std::sin(a);
      n.da = std::cos(a);
      return;
    case TapeOp::cos:
      n.value = std::cos(a);
      n.da = -std::sin(a);
      return;
    case TapeOp::sqrt:
      if (a < 0.0) throw DomainError("sqrt of negative value on tape replay");
      n.value = std::sqrt(a);
      n.da = 0.5 / n.value;
      return;
    case TapeOp::pow_c:
      n.value = std::pow(a, n.c);
      n.da = n.c * std::pow(a, n.c - 1.0);
      return;
    case TapeOp::abs:
      n.value = std::abs(a);
      n.da = a > 0.0 ? 1.0 : (a < 0.0 ? -1.0 : 0.0);
      return;
  }
}

bool Tape::evaluate_guard(const BranchGuard& g) const {
  const double lhs = g.lhs >= 0 ? nodes_[static_cast<std::size_t>(g.lhs)].value : g.lhs_c;
  const double rhs = g.rhs >= 0 ? nodes_[static_cast<std::size_t>(g.rhs)].value : g.rhs_c;
  return evaluate_compare(g.op, lhs, rhs);
}

std::vector<double> Tape::replay() const {
  Tape copy;
  copy.nodes_ = nodes_;
  for (auto& n : copy.nodes_) copy.evaluate_node(n);
  copy.outputs_ = outputs_;
  copy.output_constants_ = output_constants_;
  return copy.outputs();
}

void Tape::refresh(std::span<const double> u, std::span<const double> p, double t) {
  if (u.size() != state_inputs_.size() || p.size() != param_inputs_.size()) {
    throw ConfigError("tape refresh: input dimensions do not match the recording");
  }
  for (std::size_t i = 0; i < u.size(); ++i) nodes_[static_cast<std::size_t>(state_inputs_[i])].value = u[i];
  for (std::size_t i = 0; i < p.size(); ++i) nodes_[static_cast<std::size_t>(param_inputs_[i])].value = p[i];
  if (time_input_ >= 0) nodes_[static_cast<std::size_t>(time_input_)].value = t;
  for (auto& n : nodes_) evaluate_node(n);
  for (const auto& g : guards_) {
    if (evaluate_guard(g) != g.outcome) {
      throw TapeInvalidated("branch guard changed outcome; the tape must be re-recorded");
    }
  }
}

VjpResult Tape::vjp(std::span<const double> v) const {
  if (v.size() != outputs_.size()) {
    throw ConfigError("vjp: vector has " + std::to_string(v.size()) + " entries, tape has " +
                      std::to_string(outputs_.size()) + " outputs");
  }
  std::vector<double> adj(nodes_.size(), 0.0);
  for (std::size_t k = 0; k < outputs_.size(); ++k) {
    if (outputs_[k] >= 0) adj[static_cast<std::size_t>(outputs_[k])] += v[k];
  }
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    const TapeNode& n = nodes_[i];
    const double w = adj[i];
    if (w == 0.0 || n.op == TapeOp::input) continue;
    adj[static_cast<std::size_t>(n.a)] += w * n.da;
    if (n.b >= 0) adj[static_cast<std::size_t>(n.b)] += w * n.db;
  }
  VjpResult r;
  r.state.resize(state_inputs_.size());
  r.params.resize(param_inputs_.size());
  for (std::size_t i = 0; i < state_inputs_.size(); ++i) r.state[i] = adj[static_cast<std::size_t>(state_inputs_[i])];
  for (std::size_t i = 0; i < param_inputs_.size(); ++i) r.params[i] = adj[static_cast<std::size_t>(param_inputs_[i])];
  r.time = time_input_ >= 0 ? adj[static_cast<std::size_t>(time_input_)] : 0.0;
  return r;
}

Var exp(const Var& a) {
  const double e = std::exp(a.value());
  return a.unary(TapeOp::exp, e, e);
}

Var log(const Var& a) {
  if (!(a.value() > 0.0)) throw DomainError("log of non-positive value " + std::to_string(a.value()));
  return a.unary(TapeOp::log, std::log(a.value()), 1.0 / a.value());
}

Var sin(const Var& a) { return a.unary(TapeOp::sin, std::sin(a.value()), std::cos(a.value())); }

Var cos(const Var& a) { return a.unary(TapeOp::cos, std::cos(a.value()), -std::sin(a.value())); }

Var sqrt(const Var& a) {
  if (a.value() < 0.0) throw DomainError("sqrt of negative value " + std::to_string(a.value()));
  const double s = std::sqrt(a.value());
  return a.unary(TapeOp::sqrt, s, 0.5 / s);
}

Var pow(const Var& a, double c) {
  if (c == 0.0) return Var(1.0);
  if (a.value() < 0.0 && c != std::floor(c)) throw DomainError("pow of negative value with non-integer exponent");
  return a.unary(TapeOp::pow_c, std::pow(a.value(), c), c * std::pow(a.value(), c - 1.0), c);
}

Var abs(const Var& a) {
  const double v = a.value();
  return a.unary(TapeOp::abs, std::abs(v), v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0));
}

Var tanh(const Var& a) {
  if (a.is_constant()) return Var(std::tanh(a.value()));
  throw RecordingError("tanh");
}

Var atan(const Var& a) {
  if (a.is_constant()) return Var(std::atan(a.value()));
  throw RecordingError("atan");
}

Var floor(const Var& a) {
  if (a.is_constant()) return Var(std::floor(a.value()));
  throw RecordingError("floor");
}

}  // namespace odesens
