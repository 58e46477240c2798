#include "odesens/ad/reverse.hpp"

#include <vector>

namespace odesens {

const char* to_string(VjpStrategy s) noexcept {
  switch (s) {
    case VjpStrategy::user_jacobian_transpose: return "user_jacobian_transpose";
    case VjpStrategy::forward_full_jacobian_transpose: return "forward_full_jacobian_transpose";
    case VjpStrategy::reverse_tape: return "reverse_tape";
  }
  return "?";
}

Tape record(const VectorField& f, std::span<const double> u, std::span<const double> p, double t) {
  Tape tape;
  std::vector<Var> uv;
  std::vector<Var> pv;
  uv.reserve(u.size());
  pv.reserve(p.size());
  for (double x : u) {
    uv.push_back(tape.make_input(x));
    tape.mark_state_input(uv.back());
  }
  for (double x : p) {
    pv.push_back(tape.make_input(x));
    tape.mark_param_input(pv.back());
  }
  const Var tv = tape.make_input(t);
  tape.mark_time_input(tv);

  std::vector<Var> du(u.size());
  f(std::span<Var>(du), std::span<const Var>(uv), std::span<const Var>(pv), tv);
  for (const Var& out : du) tape.add_output(out);
  return tape;
}

VjpResult vjp(const Tape& tape, std::span<const double> v) { return tape.vjp(v); }

void reuse_tape(Tape& tape, std::span<const double> u, std::span<const double> p, double t) { tape.refresh(u, p, t); }

Tape& TapeCache::at(std::span<const double> u, std::span<const double> p, double t) {
  if (valid_) {
    try {
      tape_.refresh(u, p, t);
      ++refreshes_;
      return tape_;
    } catch (const TapeInvalidated&) {
      valid_ = false;
    }
  }
  tape_ = record(*f_, u, p, t);
  valid_ = true;
  ++recordings_;
  return tape_;
}

}  // namespace odesens
