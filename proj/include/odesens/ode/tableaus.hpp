#pragma once

/**
 * @file tableaus.hpp
 * @brief Coefficients of the Tsitouras 5(4) pair and the RODAS 4(3) Rosenbrock method.
 */

#include <array>

namespace odesens::ode {

struct Tsit5Tableau {
  static constexpr double c2 = 0.161;
  static constexpr double c3 = 0.327;
  static constexpr double c4 = 0.9;
  static constexpr double c5 = 0.9800255409045097;

  static constexpr double a21 = 0.161;
  static constexpr double a31 = -0.008480655492356989;
  static constexpr double a32 = 0.335480655492357;
  static constexpr double a41 = 2.897153057105493;
  static constexpr double a42 = -6.359448489975075;
  static constexpr double a43 = 4.3622954328695815;
  static constexpr double a51 = 5.325864828439257;
  static constexpr double a52 = -11.748883564062828;
  static constexpr double a53 = 7.4955393428898365;
  static constexpr double a54 = -0.09249506636175525;
  static constexpr double a61 = 5.86145544294642;
  static constexpr double a62 = -12.92096931784711;
  static constexpr double a63 = 8.159367898576159;
  static constexpr double a64 = -0.071584973281401;
  static constexpr double a65 = -0.028269050394068383;
  // Solution weights (FSAL: these are also row 7 of A).
  static constexpr double a71 = 0.09646076681806523;
  static constexpr double a72 = 0.01;
  static constexpr double a73 = 0.4798896504144996;
  static constexpr double a74 = 1.379008574103742;
  static constexpr double a75 = -3.290069515436081;
  static constexpr double a76 = 2.324710524099774;

  // b - bhat
  static constexpr std::array<double, 7> btilde = {
      -0.00178001105222577714, -0.0008164344596567469, 0.007880878010261995, -0.1447110071732629,
      0.5823571654525552,      -0.45808210592918697,   1.0 / 66.0};

  /// Interpolation weights b_i(theta), with b_i(1) equal to the solution weights.
  static std::array<double, 7> dense_weights(double th) noexcept {
    const double th2 = th * th;
    return {
        -1.0530884977290216 * th * (th - 1.3299890189751412) * (th2 - 1.4364028541716351 * th + 0.7139816917074209),
        0.1017 * th2 * (th2 - 2.1966568338249754 * th + 1.2949852507374631),
        2.490627285651252793 * th2 * (th2 - 2.38535645472061657 * th + 1.57803468208092486),
        -16.54810288924490272 * (th - 1.21712927295533244) * (th - 0.61620406037800089) * th2,
        47.37952196281928122 * (th - 1.203071208372362603) * (th - 0.658047292653547382) * th2,
        -34.87065786149660974 * (th - 1.2) * (th - 0.666666666666666667) * th2,
        2.5 * (th - 1.0) * (th - 0.6) * th2,
    };
  }
};

/// Hairer & Wanner's RODAS, in the W-transformed form of their Fortran code.
struct Rodas4Tableau {
  static constexpr double gamma = 0.25;

  static constexpr double c2 = 0.386;
  static constexpr double c3 = 0.21;
  static constexpr double c4 = 0.63;

  static constexpr double d1 = 0.25;
  static constexpr double d2 = -0.1043;
  static constexpr double d3 = 0.1035;
  static constexpr double d4 = -0.0362;

  static constexpr double a21 = 1.544;
  static constexpr double a31 = 0.9466785280815826;
  static constexpr double a32 = 0.2557011698983284;
  static constexpr double a41 = 3.314825187068521;
  static constexpr double a42 = 2.896124015972201;
  static constexpr double a43 = 0.9986419139977817;
  static constexpr double a51 = 1.221224509226641;
  static constexpr double a52 = 6.019134481288629;
  static constexpr double a53 = 12.53708332932087;
  static constexpr double a54 = -0.6878860361058950;

  static constexpr double C21 = -5.6688;
  static constexpr double C31 = -2.430093356833875;
  static constexpr double C32 = -0.2063599157091915;
  static constexpr double C41 = -0.1073529058151375;
  static constexpr double C42 = -9.594562251023355;
  static constexpr double C43 = -20.47028614809616;
  static constexpr double C51 = 7.496443313967647;
  static constexpr double C52 = -10.24680431464352;
  static constexpr double C53 = -33.99990352819905;
  static constexpr double C54 = 11.70890893206160;
  static constexpr double C61 = 8.083246795921522;
  static constexpr double C62 = -7.981132988064893;
  static constexpr double C63 = -31.52159432874371;
  static constexpr double C64 = 16.31930543123136;
  static constexpr double C65 = -6.058818238834054;

  // Continuous extension: u(theta) = (1-theta) u0 + theta (u1 + (1-theta)(k1i + theta k2i)).
  static constexpr std::array<double, 5> h2 = {10.12623508344586, -7.487995877610167, -34.80091861555747,
                                               -7.992771707568823, 1.025137723295662};
  static constexpr std::array<double, 5> h3 = {-0.6762803392801253, 6.087714651678606, 16.43084320892478,
                                               24.76722511418386, -6.594389125716872};
};

}  // namespace odesens::ode
