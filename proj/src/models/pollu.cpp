#include <array>
#include <type_traits>

#include "odesens/models/models.hpp"

namespace odesens::models {

namespace {

constexpr std::size_t kStates = 20;
constexpr std::size_t kRates = 25;

// Reaction k has rate p[k] times the product of its reactant species
// (0-based indices; -1 marks an unused slot).
struct Reaction {
  int r1;
  int r2;
};

constexpr std::array<Reaction, kRates> kReactions = {{
    {0, -1},   // r1  = p1 u1
    {1, 3},    // r2  = p2 u2 u4
    {4, 1},    // r3  = p3 u5 u2
    {6, -1},   // r4  = p4 u7
    {6, -1},   // r5  = p5 u7
    {6, 5},    // r6  = p6 u7 u6
    {8, -1},   // r7  = p7 u9
    {8, 5},    // r8  = p8 u9 u6
    {10, 1},   // r9  = p9 u11 u2
    {10, 0},   // r10 = p10 u11 u1
    {12, -1},  // r11 = p11 u13
    {9, 1},    // r12 = p12 u10 u2
    {13, -1},  // r13 = p13 u14
    {0, 5},    // r14 = p14 u1 u6
    {2, -1},   // r15 = p15 u3
    {3, -1},   // r16 = p16 u4
    {3, -1},   // r17 = p17 u4
    {15, -1},  // r18 = p18 u16
    {15, -1},  // r19 = p19 u16
    {16, 5},   // r20 = p20 u17 u6
    {18, -1},  // r21 = p21 u19
    {18, -1},  // r22 = p22 u19
    {0, 3},    // r23 = p23 u1 u4
    {18, 0},   // r24 = p24 u19 u1
    {19, -1},  // r25 = p25 u20
}};

// Net stoichiometry: kStoich[species][reaction].
constexpr std::array<std::array<int, kRates>, kStates> kStoich = [] {
  std::array<std::array<int, kRates>, kStates> s{};
  auto add = [&s](int species, std::initializer_list<int> reactions, int sign) {
    for (int r : reactions) s[species - 1][r - 1] += sign;
  };
  add(1, {1, 10, 14, 23, 24}, -1);
  add(1, {2, 3, 9, 11, 12, 22, 25}, +1);
  add(2, {2, 3, 9, 12}, -1);
  add(2, {1, 21}, +1);
  add(3, {15}, -1);
  add(3, {1, 17, 19, 22}, +1);
  add(4, {2, 16, 17, 23}, -1);
  add(4, {15}, +1);
  add(5, {3}, -1);
  add(5, {4, 4, 6, 7, 13, 20}, +1);
  add(6, {6, 8, 14, 20}, -1);
  add(6, {3, 18, 18}, +1);
  add(7, {4, 5, 6}, -1);
  add(7, {13}, +1);
  add(8, {4, 5, 6, 7}, +1);
  add(9, {7, 8}, -1);
  add(10, {12}, -1);
  add(10, {7, 9}, +1);
  add(11, {9, 10}, -1);
  add(11, {8, 11}, +1);
  add(12, {9}, +1);
  add(13, {11}, -1);
  add(13, {10}, +1);
  add(14, {13}, -1);
  add(14, {12}, +1);
  add(15, {14}, +1);
  add(16, {18, 19}, -1);
  add(16, {16}, +1);
  add(17, {20}, -1);
  add(18, {20}, +1);
  add(19, {21, 22, 24}, -1);
  add(19, {23, 25}, +1);
  add(20, {25}, -1);
  add(20, {24}, +1);
  return s;
}();

}  // namespace

ModelSpec pollu() {
  ModelSpec m;
  m.name = "pollu";
  auto& prob = m.problem;

  prob.rhs = VectorField([](auto du, auto u, auto p, const auto&) {
    du[0] = -p[0] * u[0] - p[9] * u[10] * u[0] - p[13] * u[0] * u[5] - p[22] * u[0] * u[3] -
            p[23] * u[18] * u[0] + p[1] * u[1] * u[3] + p[2] * u[4] * u[1] + p[8] * u[10] * u[1] +
            p[10] * u[12] + p[11] * u[9] * u[1] + p[21] * u[18] + p[24] * u[19];
    du[1] = -p[1] * u[1] * u[3] - p[2] * u[4] * u[1] - p[8] * u[10] * u[1] - p[11] * u[9] * u[1] + p[0] * u[0] +
            p[20] * u[18];
    du[2] = -p[14] * u[2] + p[0] * u[0] + p[16] * u[3] + p[18] * u[15] + p[21] * u[18];
    du[3] = -p[1] * u[1] * u[3] - p[15] * u[3] - p[16] * u[3] - p[22] * u[0] * u[3] + p[14] * u[2];
    du[4] = -p[2] * u[4] * u[1] + p[3] * u[6] + p[3] * u[6] + p[5] * u[6] * u[5] + p[6] * u[8] + p[12] * u[13] +
            p[19] * u[16] * u[5];
    du[5] = -p[5] * u[6] * u[5] - p[7] * u[8] * u[5] - p[13] * u[0] * u[5] - p[19] * u[16] * u[5] +
            p[2] * u[4] * u[1] + p[17] * u[15] + p[17] * u[15];
    du[6] = -p[3] * u[6] - p[4] * u[6] - p[5] * u[6] * u[5] + p[12] * u[13];
    du[7] = p[3] * u[6] + p[4] * u[6] + p[5] * u[6] * u[5] + p[6] * u[8];
    du[8] = -p[6] * u[8] - p[7] * u[8] * u[5];
    du[9] = -p[11] * u[9] * u[1] + p[6] * u[8] + p[8] * u[10] * u[1];
    du[10] = -p[8] * u[10] * u[1] - p[9] * u[10] * u[0] + p[7] * u[8] * u[5] + p[10] * u[12];
    du[11] = p[8] * u[10] * u[1];
    du[12] = -p[10] * u[12] + p[9] * u[10] * u[0];
    du[13] = -p[12] * u[13] + p[11] * u[9] * u[1];
    du[14] = p[13] * u[0] * u[5];
    du[15] = -p[17] * u[15] - p[18] * u[15] + p[15] * u[3];
    du[16] = -p[19] * u[16] * u[5];
    du[17] = p[19] * u[16] * u[5];
    du[18] = -p[20] * u[18] - p[21] * u[18] - p[23] * u[18] * u[0] + p[22] * u[0] * u[3] + p[24] * u[19];
    du[19] = -p[24] * u[19] + p[23] * u[18] * u[0];
  });

  // Jacobians from the reaction table: d r_k / d u and d r_k / d p_k, scattered by stoichiometry.
  prob.state_jacobian = GenericMatrixFunction([](auto J, auto u, auto p, const auto&) {
    using T = std::decay_t<decltype(u[0])>;
    for (auto& x : J) x = T(0.0);
    for (std::size_t k = 0; k < kRates; ++k) {
      const auto [a, b] = kReactions[k];
      // d r_k / d u_a and d r_k / d u_b
      const T dra = b < 0 ? p[k] : p[k] * u[static_cast<std::size_t>(b)];
      const T drb = b < 0 ? T(0.0) : p[k] * u[static_cast<std::size_t>(a)];
      for (std::size_t s = 0; s < kStates; ++s) {
        const int c = kStoich[s][k];
        if (c == 0) continue;
        J[s * kStates + static_cast<std::size_t>(a)] += static_cast<double>(c) * dra;
        if (b >= 0) J[s * kStates + static_cast<std::size_t>(b)] += static_cast<double>(c) * drb;
      }
    }
  });
  prob.param_jacobian = GenericMatrixFunction([](auto J, auto u, auto, const auto&) {
    using T = std::decay_t<decltype(u[0])>;
    for (auto& x : J) x = T(0.0);
    for (std::size_t k = 0; k < kRates; ++k) {
      const auto [a, b] = kReactions[k];
      const T mass = b < 0 ? u[static_cast<std::size_t>(a)] : u[static_cast<std::size_t>(a)] * u[static_cast<std::size_t>(b)];
      for (std::size_t s = 0; s < kStates; ++s) {
        const int c = kStoich[s][k];
        if (c != 0) J[s * kRates + k] = static_cast<double>(c) * mass;
      }
    }
  });

  prob.u0 = {0.0, 0.2, 0.0, 0.04, 0.0, 0.0, 0.1, 0.3, 0.01, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.007, 0.0, 0.0, 0.0};
  prob.p = {0.35,   26.6,  12300.0, 0.00086, 0.00082, 15000.0, 0.00013, 24000.0, 16500.0, 9000.0, 0.022, 12000.0, 1.88,
            16300.0, 4.8e6, 0.00035, 0.0175,  1e9,     4.44e11, 1240.0,  2.1,     5.78,   0.0474,  1780.0, 3.12};
  prob.t0 = 0.0;
  prob.tf = 60.0;
  prob.autonomous = true;

  m.true_params = prob.p;
  m.recommended_solver = SolverKind::stiff;
  m.estimation.n_data_points = 10;
  m.estimation.initial_guess = [](std::span<const double> p) {
    std::vector<double> g(p.begin(), p.end());
    for (auto& x : g) x *= 0.9;
    return g;
  };
  for (std::size_t s = 1; s <= kStates; ++s) m.state_names.push_back("u" + std::to_string(s));
  for (std::size_t k = 1; k <= kRates; ++k) m.param_names.push_back("p" + std::to_string(k));
  return m;
}

}  // namespace odesens::models
