// Copyright 2026 The tracerflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <type_traits>

namespace tracerflow {

/// Position, velocity or wavevector in Dim dimensions.
template <int Dim>
using Vec = std::array<double, Dim>;

/// Vec<Dim> in a non-deduced context, for functions whose dimension is
/// taken from another argument.
template <int Dim>
using VecArg = std::type_identity_t<Vec<Dim>>;

/// Row-major Dim x Dim matrix; `m[i][j]` is row i, column j.
template <int Dim>
using Mat = std::array<std::array<double, Dim>, Dim>;

template <std::size_t Dim>
constexpr std::array<double, Dim> operator+(const std::array<double, Dim>& a,
                                              const std::array<double, Dim>& b) noexcept {
  std::array<double, Dim> r;
  for (std::size_t i = 0; i < Dim; ++i) r[i] = a[i] + b[i];
  return r;
}

template <std::size_t Dim>
constexpr std::array<double, Dim> operator-(const std::array<double, Dim>& a,
                                              const std::array<double, Dim>& b) noexcept {
  std::array<double, Dim> r;
  for (std::size_t i = 0; i < Dim; ++i) r[i] = a[i] - b[i];
  return r;
}

template <std::size_t Dim>
constexpr std::array<double, Dim> operator*(double s,
                                              const std::array<double, Dim>& a) noexcept {
  std::array<double, Dim> r;
  for (std::size_t i = 0; i < Dim; ++i) r[i] = s * a[i];
  return r;
}

template <std::size_t Dim>
constexpr double dot(const std::array<double, Dim>& a,
                     const std::array<double, Dim>& b) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < Dim; ++i) s += a[i] * b[i];
  return s;
}

template <std::size_t Dim>
double norm2(const std::array<double, Dim>& a) noexcept {
  return std::sqrt(dot(a, a));
}

template <std::size_t Dim>
double norm_inf(const std::array<double, Dim>& a) noexcept {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

inline Vec<3> cross(const Vec<3>& a, const Vec<3>& b) noexcept {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2],
          a[0] * b[1] - a[1] * b[0]};
}

template <int Dim>
double determinant(const Mat<Dim>& m) noexcept {
  static_assert(Dim == 2 || Dim == 3);
  if constexpr (Dim == 2) {
    return m[0][0] * m[1][1] - m[0][1] * m[1][0];
  } else {
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
           m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
           m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  }
}

template <int Dim>
double trace(const Mat<Dim>& m) noexcept {
  double s = 0.0;
  for (int i = 0; i < Dim; ++i) s += m[i][i];
  return s;
}

}  // namespace tracerflow
