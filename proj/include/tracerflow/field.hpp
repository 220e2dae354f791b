// Copyright 2026 The tracerflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "tracerflow/errors.hpp"
#include "tracerflow/fast_trig.hpp"
#include "tracerflow/spectrum.hpp"
#include "tracerflow/vec.hpp"

namespace tracerflow {

/// How mode amplitudes scale with the wavenumber.
///
/// Standard: u_n = xi_n k_n^perp (2D) or xi_n x k_n (3D), so a mode's
/// velocity grows like |k_n|; used with E1-E4, whose wavevectors are drawn
/// with density E(k)/k^2.
/// PowerLawStream: the stream function carries 1/|k_n|, i.e. unit-size
/// velocity amplitudes; used whenever |k_n| is drawn with density E(k)
/// (power laws and the low-k families E5-E7).
enum class AmplitudeKind { Standard, PowerLawStream };

/// Random amplitudes of one mode: scalars in 2D (index 0), 3-vectors in 3D.
struct ModeDraw {
  Vec<3> xi{};
  Vec<3> zeta{};
};

/// One mode in array-of-structs form, for inspection and tests.
template <int Dim>
struct Mode {
  Vec<Dim> k{};
  Vec<Dim> u{};
  Vec<Dim> w{};
  double theta = 0.0;
  ModeDraw draw;
};

/// A frozen realization of the random Fourier-mode velocity field
///
///   v(x, t) = N^-1/2 sum_n [u_n cos(k_n.x + theta_n t) + w_n sin(...)].
///
/// Mode data is stored structure-of-arrays so the O(N) evaluation loops
/// vectorize. Immutable after construction; any number of threads may
/// evaluate it concurrently.
template <int Dim>
class FieldRealization {
  static_assert(Dim == 2 || Dim == 3);

 public:
  FieldRealization() = default;

  /// Builds a realization from explicit modes. Amplitudes are scaled by 1
  /// (Standard) or 1/|k_n| (PowerLawStream).
  FieldRealization(const std::vector<Vec<Dim>>& ks,
                   const std::vector<ModeDraw>& draws,
                   const std::vector<double>& thetas, AmplitudeKind kind,
                   double theta0)
      : kind_(kind), theta0_(theta0) {
    const std::size_t n = ks.size();
    if (draws.size() != n || thetas.size() != n) {
      throw Error("FieldRealization: mode arrays differ in length");
    }
    for (auto& a : k_) a.resize(n);
    theta_.resize(n);
    full_.resize(n);
    stream_a_.resize(n);
    stream_b_.resize(n);
    draws_ = draws;
    if constexpr (Dim == 3) {
      sub1_.resize(n);
      sub2_.resize(n);
    }
    for (std::size_t i = 0; i < n; ++i) {
      const auto& k = ks[i];
      for (int d = 0; d < Dim; ++d) k_[d][i] = k[d];
      theta_[i] = thetas[i];
      const double kn = norm2<Dim>(k);
      const double s = kind == AmplitudeKind::Standard ? 1.0 : 1.0 / kn;
      const auto& dr = draws[i];
      if constexpr (Dim == 2) {
        const Vec<2> kp{-k[1], k[0]};
        full_.set(i, s * dr.xi[0] * kp, s * dr.zeta[0] * kp);
        stream_a_[i] = s * dr.xi[0];
        stream_b_[i] = s * dr.zeta[0];
      } else {
        full_.set(i, s * cross(dr.xi, k), s * cross(dr.zeta, k));
        sub1_.set(i, s * split12(dr.xi, k), s * split12(dr.zeta, k));
        sub2_.set(i, s * split23(dr.xi, k), s * split23(dr.zeta, k));
      }
    }
    scale_ = n > 0 ? 1.0 / std::sqrt(static_cast<double>(n)) : 0.0;
  }

  int n_modes() const noexcept { return static_cast<int>(theta_.size()); }
  AmplitudeKind amplitude_kind() const noexcept { return kind_; }
  double theta0() const noexcept { return theta0_; }

  Mode<Dim> mode(int n) const {
    Mode<Dim> m;
    for (int d = 0; d < Dim; ++d) {
      m.k[d] = k_[d][n];
      m.u[d] = full_.u[d][n];
      m.w[d] = full_.w[d][n];
    }
    m.theta = theta_[n];
    m.draw = draws_[n];
    return m;
  }

  Vec<Dim> velocity(const Vec<Dim>& x, double t) const noexcept {
    return evaluate(full_, x, t);
  }

  /// 3D only: v_1 (j = 1, Hamiltonian in x1, x2, zero third component) or
  /// v_2 (j = 2, Hamiltonian in x2, x3, zero first component). v_1 + v_2
  /// equals `velocity`.
  Vec<Dim> sub_velocity(int j, const Vec<Dim>& x, double t) const {
    if constexpr (Dim == 2) {
      throw WrongDimension("sub-velocities exist for 3D fields only");
    } else {
      if (j == 1) return evaluate(sub1_, x, t);
      if (j == 2) return evaluate(sub2_, x, t);
      throw Error("sub_velocity: index must be 1 or 2");
    }
  }

  /// Exact Jacobian Dv, entry [i][j] = d v_i / d x_j.
  Mat<Dim> velocity_gradient(const Vec<Dim>& x, double t) const noexcept {
    Mat<Dim> g{};
    const int n = n_modes();
    for (int m = 0; m < n; ++m) {
      double s, c;
      sincos_fast(phase(m, x, t), s, c);
      for (int i = 0; i < Dim; ++i) {
        const double a = -full_.u[i][m] * s + full_.w[i][m] * c;
        for (int j = 0; j < Dim; ++j) g[i][j] += a * k_[j][m];
      }
    }
    for (auto& row : g) {
      for (auto& e : row) e *= scale_;
    }
    return g;
  }

  /// 2D stream function Psi with v = (-dPsi/dx2, dPsi/dx1), evaluated at
  /// the phases k.x + theta t.
  double stream_function_at(const Vec<Dim>& x, double t) const {
    if constexpr (Dim == 3) {
      throw WrongDimension("stream function exists for 2D fields only");
    } else {
      const int n = n_modes();
      const double* k1 = k_[0].data();
      const double* k2 = k_[1].data();
      const double* th = theta_.data();
      const double* a = stream_a_.data();
      const double* b = stream_b_.data();
      double acc = 0.0;
#pragma omp simd reduction(+ : acc)
      for (int m = 0; m < n; ++m) {
        double s, c;
        sincos_fast(k1[m] * x[0] + k2[m] * x[1] + th[m] * t, s, c);
        acc += a[m] * s - b[m] * c;
      }
      return scale_ * acc;
    }
  }

  double stream_function(const Vec<Dim>& x) const {
    return stream_function_at(x, 0.0);
  }

  /// 2D Hessian of Psi, entry [i][j] = d^2 Psi / dx_i dx_j.
  Mat<Dim> stream_hessian(const Vec<Dim>& x, double t = 0.0) const {
    if constexpr (Dim == 3) {
      throw WrongDimension("stream function exists for 2D fields only");
    } else {
      Mat<2> h{};
      for (int m = 0; m < n_modes(); ++m) {
        double s, c;
        sincos_fast(phase(m, x, t), s, c);
        const double a = -stream_a_[m] * s + stream_b_[m] * c;
        for (int i = 0; i < 2; ++i) {
          for (int j = 0; j < 2; ++j) h[i][j] += a * k_[i][m] * k_[j][m];
        }
      }
      for (auto& row : h) {
        for (auto& e : row) e *= scale_;
      }
      return h;
    }
  }

 private:
  struct Amplitudes {
    std::array<std::vector<double>, Dim> u;
    std::array<std::vector<double>, Dim> w;
    void resize(std::size_t n) {
      for (auto& a : u) a.assign(n, 0.0);
      for (auto& a : w) a.assign(n, 0.0);
    }
    void set(std::size_t i, const Vec<Dim>& uu, const Vec<Dim>& ww) {
      for (int d = 0; d < Dim; ++d) {
        u[d][i] = uu[d];
        w[d][i] = ww[d];
      }
    }
  };

  // split12 + split23 == xi x k; split12 is divergence-free in (x1, x2)
  // and split23 in (x2, x3). Both divide by k_2.
  static Vec<3> split12(const Vec<3>& xi, const Vec<3>& k) noexcept {
    return {xi[1] * k[2] - xi[2] * k[1],
            xi[2] * k[0] - xi[1] * k[0] * k[2] / k[1], 0.0};
  }
  static Vec<3> split23(const Vec<3>& xi, const Vec<3>& k) noexcept {
    return {0.0, xi[1] * k[0] * k[2] / k[1] - xi[0] * k[2],
            xi[0] * k[1] - xi[1] * k[0]};
  }

  double phase(int m, const Vec<Dim>& x, double t) const noexcept {
    double p = theta_[m] * t;
    for (int d = 0; d < Dim; ++d) p += k_[d][m] * x[d];
    return p;
  }

  Vec<Dim> evaluate(const Amplitudes& amp, const Vec<Dim>& x,
                    double t) const noexcept {
    const int n = n_modes();
    const double* th = theta_.data();
    if constexpr (Dim == 2) {
      const double* k1 = k_[0].data();
      const double* k2 = k_[1].data();
      const double* u1 = amp.u[0].data();
      const double* u2 = amp.u[1].data();
      const double* w1 = amp.w[0].data();
      const double* w2 = amp.w[1].data();
      const double x1 = x[0], x2 = x[1];
      double a1 = 0.0, a2 = 0.0;
#pragma omp simd reduction(+ : a1, a2)
      for (int m = 0; m < n; ++m) {
        double s, c;
        sincos_fast(k1[m] * x1 + k2[m] * x2 + th[m] * t, s, c);
        a1 += u1[m] * c + w1[m] * s;
        a2 += u2[m] * c + w2[m] * s;
      }
      return {scale_ * a1, scale_ * a2};
    } else {
      const double* k1 = k_[0].data();
      const double* k2 = k_[1].data();
      const double* k3 = k_[2].data();
      const double* u1 = amp.u[0].data();
      const double* u2 = amp.u[1].data();
      const double* u3 = amp.u[2].data();
      const double* w1 = amp.w[0].data();
      const double* w2 = amp.w[1].data();
      const double* w3 = amp.w[2].data();
      const double x1 = x[0], x2 = x[1], x3 = x[2];
      double a1 = 0.0, a2 = 0.0, a3 = 0.0;
#pragma omp simd reduction(+ : a1, a2, a3)
      for (int m = 0; m < n; ++m) {
        double s, c;
        sincos_fast(k1[m] * x1 + k2[m] * x2 + k3[m] * x3 + th[m] * t, s, c);
        a1 += u1[m] * c + w1[m] * s;
        a2 += u2[m] * c + w2[m] * s;
        a3 += u3[m] * c + w3[m] * s;
      }
      return {scale_ * a1, scale_ * a2, scale_ * a3};
    }
  }

  AmplitudeKind kind_ = AmplitudeKind::Standard;
  double theta0_ = 0.0;
  double scale_ = 0.0;
  std::array<std::vector<double>, Dim> k_;
  std::vector<double> theta_;
  Amplitudes full_;
  Amplitudes sub1_;
  Amplitudes sub2_;
  std::vector<double> stream_a_;
  std::vector<double> stream_b_;
  std::vector<ModeDraw> draws_;
};

/// Modes with |k_2| below this fraction of |k| are redrawn in 3D, since the
/// planar splitting divides by k_2.
inline constexpr double kDegenerateK2Fraction = 1e-3;
inline constexpr int kDegenerateResamples = 100;

/// Draws a realization with `n_modes` i.i.d. modes: wavevectors from the
/// spectrum sampler, standard Gaussian xi/zeta (scalars in 2D, vectors in
/// 3D) and theta_n ~ N(0, theta0^2). The draw order per mode is
/// k, xi, zeta, theta, so realizations replay exactly from the generator.
template <int Dim, class Rng>
FieldRealization<Dim> generate_field(const WavevectorSampler& sampler,
                                     int n_modes, double theta0, Rng& rng) {
  if (n_modes < 0) throw ConfigError("modes", "n_modes must be >= 0");
  if (!(theta0 >= 0.0)) throw ConfigError("theta0", "theta0 must be >= 0");
  const auto kind = samples_energy_density(sampler.spec().family)
                        ? AmplitudeKind::PowerLawStream
                        : AmplitudeKind::Standard;
  std::normal_distribution<double> normal;
  std::vector<Vec<Dim>> ks;
  std::vector<ModeDraw> draws;
  std::vector<double> thetas;
  ks.reserve(n_modes);
  draws.reserve(n_modes);
  thetas.reserve(n_modes);
  for (int n = 0; n < n_modes; ++n) {
    Vec<Dim> k = sampler.template sample<Dim>(rng);
    if constexpr (Dim == 3) {
      int attempts = 0;
      while (std::abs(k[1]) < kDegenerateK2Fraction * norm2<3>(k)) {
        if (++attempts > kDegenerateResamples) {
          throw DegenerateMode("could not draw a mode with usable k_2");
        }
        k = sampler.template sample<Dim>(rng);
      }
    }
    ModeDraw d;
    const int comps = Dim == 2 ? 1 : 3;
    for (int c = 0; c < comps; ++c) d.xi[c] = normal(rng);
    for (int c = 0; c < comps; ++c) d.zeta[c] = normal(rng);
    ks.push_back(k);
    draws.push_back(d);
    thetas.push_back(theta0 * normal(rng));
  }
  return FieldRealization<Dim>(ks, draws, thetas, kind, theta0);
}

template <int Dim, class Rng>
FieldRealization<Dim> generate_field(const SpectrumSpec& spec, int n_modes,
                                     double theta0, Rng& rng) {
  return generate_field<Dim>(WavevectorSampler(spec), n_modes, theta0, rng);
}

}  // namespace tracerflow
