// Copyright 2026 The tracerflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

namespace tracerflow {

/// Branch-free sine and cosine with Cody-Waite reduction by pi/2.
///
/// Written so that loops calling it auto-vectorize (no libm calls, no
/// data-dependent branches). Accurate to about one ulp for |x| < 1e8,
/// which covers every phase k.x + theta t reached by the simulator.
inline void sincos_fast(double x, double& s, double& c) noexcept {
  constexpr double two_over_pi = 0.63661977236758134308;
  constexpr double pio2_1 = 1.57079625129699707031;
  constexpr double pio2_2 = 7.54978941586159635336e-8;
  constexpr double pio2_3 = 5.39030285815811905290e-15;
  // Adding and subtracting 1.5 * 2^52 rounds to nearest without a libm call.
  constexpr double round_magic = 6755399441055744.0;

  const double q = (x * two_over_pi + round_magic) - round_magic;
  const double r = ((x - q * pio2_1) - q * pio2_2) - q * pio2_3;
  const double z = r * r;

  double ps = 1.58962301576546568060e-10;
  ps = ps * z - 2.50507477628578072866e-8;
  ps = ps * z + 2.75573136213857245213e-6;
  ps = ps * z - 1.98412698295895385996e-4;
  ps = ps * z + 8.33333333332211858878e-3;
  ps = ps * z - 1.66666666666666307295e-1;
  const double sr = r + r * z * ps;

  double pc = -1.13585365213876817300e-11;
  pc = pc * z + 2.08757008419747316778e-9;
  pc = pc * z - 2.75573141792967388112e-7;
  pc = pc * z + 2.48015872888517045348e-5;
  pc = pc * z - 1.38888888888730564116e-3;
  pc = pc * z + 4.16666666666665929218e-2;
  const double cr = 1.0 - 0.5 * z + z * z * pc;

  const auto quadrant = static_cast<std::int64_t>(q);
  const bool odd = (quadrant & 1) != 0;
  const double ss = odd ? cr : sr;
  const double cc = odd ? sr : cr;
  s = (quadrant & 2) ? -ss : ss;
  c = ((quadrant + 1) & 2) ? -cc : cc;
}

}  // namespace tracerflow
