// Copyright 2026 The tracerflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <string>

#include "tracerflow/errors.hpp"
#include "tracerflow/field.hpp"
#include "tracerflow/vec.hpp"

namespace tracerflow {

enum class Scheme { StructurePreserving, EulerMaruyama };

/// Time argument used for v inside the implicit midpoint substeps.
enum class MidpointTime { StepStart, StepMid };

struct SchemeConfig {
  Scheme scheme = Scheme::StructurePreserving;
  double dt = 0.1;
  double d0 = 0.0;  // molecular diffusivity, sigma^2 / 2
  double fp_tol = 1e-12;
  int fp_max_iters = 100;
  MidpointTime midpoint_time = MidpointTime::StepMid;

  double sigma() const noexcept { return std::sqrt(2.0 * d0); }

  void validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) {
      throw ConfigError("dt", "dt must be a positive finite number");
    }
    if (!(d0 >= 0.0) || !std::isfinite(d0)) {
      throw ConfigError("d0", "d0 must be a nonnegative finite number");
    }
    if (!(fp_tol > 0.0)) throw ConfigError("fp_tol", "fp_tol must be > 0");
    if (fp_max_iters < 1) {
      throw ConfigError("fp_max_iters", "fp_max_iters must be >= 1");
    }
  }
};

inline const char* scheme_tag(Scheme s) noexcept {
  return s == Scheme::StructurePreserving ? "sp" : "em";
}

/// Euler-Maruyama: x + dt v(x, t) + sigma sqrt(dt) noise.
template <int Dim>
Vec<Dim> em_step(const FieldRealization<Dim>& field, const VecArg<Dim>& x,
                 double t, const SchemeConfig& cfg, const VecArg<Dim>& noise) {
  const Vec<Dim> v = field.velocity(x, t);
  const double amp = cfg.sigma() * std::sqrt(cfg.dt);
  Vec<Dim> out;
  for (int d = 0; d < Dim; ++d) out[d] = x[d] + cfg.dt * v[d] + amp * noise[d];
  return out;
}

/// Deterministic part of em_step.
template <int Dim>
Vec<Dim> em_advect(const FieldRealization<Dim>& field, const VecArg<Dim>& x,
                   double t, double dt) {
  return x + dt * field.velocity(x, t);
}

/// Implicit midpoint substep x* = x + dt v((x* + x)/2, t_eval) for a
/// velocity callable `v(x, t)`, solved by fixed-point iteration from
/// x*_0 = x + dt v(x). Volume-preserving whenever the velocity is
/// divergence-free in a coordinate plane and constant across it.
///
/// Converges when dt times the Lipschitz constant of v is below 2; throws
/// FixedPointDiverged otherwise so that the caller can shrink dt.
/// `iterations`, when given, receives the number of fixed-point updates.
template <int Dim, class Velocity>
Vec<Dim> sp_advect_planar(const Velocity& v, const VecArg<Dim>& x, double t,
                          double dt, const SchemeConfig& cfg,
                          int* iterations = nullptr) {
  const double t_eval =
      cfg.midpoint_time == MidpointTime::StepMid ? t + 0.5 * dt : t;
  Vec<Dim> xs = x + dt * v(x, t_eval);
  double residual = 0.0;
  for (int m = 1; m <= cfg.fp_max_iters; ++m) {
    const Vec<Dim> vm = v(0.5 * (xs + x), t_eval);
    Vec<Dim> next;
    residual = 0.0;
    for (int d = 0; d < Dim; ++d) {
      next[d] = x[d] + dt * vm[d];
      residual = std::max(residual, std::abs(next[d] - xs[d]));
    }
    xs = next;
    if (residual <= cfg.fp_tol) {
      if (iterations) *iterations = m;
      return xs;
    }
    if (!std::isfinite(residual)) break;
  }
  if (iterations) *iterations = cfg.fp_max_iters;
  throw FixedPointDiverged(
      "implicit midpoint iteration did not converge (residual " +
          std::to_string(residual) + "); reduce dt",
      residual, cfg.fp_max_iters);
}

/// Deterministic (advection) part of the structure-preserving step. In 3D
/// the field is split as v = v_1 + v_2 and the planar substeps are applied
/// in the order v_1, v_2.
template <int Dim>
Vec<Dim> sp_advect(const FieldRealization<Dim>& field, const VecArg<Dim>& x,
                   double t, const SchemeConfig& cfg, double dt,
                   int* iterations = nullptr) {
  if constexpr (Dim == 2) {
    auto v = [&field](const Vec<2>& p, double s) {
      return field.velocity(p, s);
    };
    return sp_advect_planar<2>(v, x, t, dt, cfg, iterations);
  } else {
    auto v1 = [&field](const Vec<3>& p, double s) {
      return field.sub_velocity(1, p, s);
    };
    auto v2 = [&field](const Vec<3>& p, double s) {
      return field.sub_velocity(2, p, s);
    };
    int it1 = 0, it2 = 0;
    const Vec<3> x1 = sp_advect_planar<3>(v1, x, t, dt, cfg, &it1);
    const Vec<3> x2 = sp_advect_planar<3>(v2, x1, t, dt, cfg, &it2);
    if (iterations) *iterations = std::max(it1, it2);
    return x2;
  }
}

/// Lie-Trotter structure-preserving step: midpoint advection followed by
/// the exact Brownian increment sigma sqrt(dt) noise.
template <int Dim>
Vec<Dim> sp_step(const FieldRealization<Dim>& field, const VecArg<Dim>& x,
                 double t, const SchemeConfig& cfg, const VecArg<Dim>& noise,
                 int* iterations = nullptr) {
  const Vec<Dim> xs = sp_advect<Dim>(field, x, t, cfg, cfg.dt, iterations);
  const double amp = cfg.sigma() * std::sqrt(cfg.dt);
  Vec<Dim> out;
  for (int d = 0; d < Dim; ++d) out[d] = xs[d] + amp * noise[d];
  return out;
}

template <int Dim>
Vec<Dim> step(const FieldRealization<Dim>& field, const VecArg<Dim>& x, double t,
              const SchemeConfig& cfg, const VecArg<Dim>& noise) {
  return cfg.scheme == Scheme::StructurePreserving
             ? sp_step(field, x, t, cfg, noise)
             : em_step(field, x, t, cfg, noise);
}

/// Central-difference Jacobian of a deterministic map.
template <int Dim, class Map>
Mat<Dim> jacobian_fd(const Map& map, const VecArg<Dim>& x, double h) {
  if (!(h > 0.0)) throw Error("jacobian_fd: step must be positive");
  Mat<Dim> jac{};
  for (int j = 0; j < Dim; ++j) {
    Vec<Dim> xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    const Vec<Dim> fp = map(xp);
    const Vec<Dim> fm = map(xm);
    for (int i = 0; i < Dim; ++i) jac[i][j] = (fp[i] - fm[i]) / (2.0 * h);
  }
  return jac;
}

template <int Dim, class Map>
double jacobian_det_fd(const Map& map, const VecArg<Dim>& x, double h) {
  return determinant<Dim>(jacobian_fd<Dim>(map, x, h));
}

}  // namespace tracerflow
