// Copyright 2026 The tracerflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <type_traits>
#include <vector>

#include "tracerflow/errors.hpp"
#include "tracerflow/field.hpp"
#include "tracerflow/integrator.hpp"
#include "tracerflow/rng.hpp"
#include "tracerflow/spectrum.hpp"

namespace tracerflow {

struct CheckResult {
  std::string name;
  bool passed = false;
  double worst = 0.0;      // largest observed error
  double threshold = 0.0;  // pass iff worst < threshold
  long probes = 0;
};

struct VerifyOptions {
  std::uint64_t seed = 20260101;
  long probes_2d = 100;
  long probes_3d = 50;
  long divergence_probes = 1000;
  int n_modes = 100;
  double fd_step = 1e-5;
  /// Replaces the probe time steps {0.05, 0.1, 0.2}; used to exercise the
  /// solver-range failure path.
  std::optional<double> dt;
};

struct VerifyReport {
  std::vector<CheckResult> checks;
  /// Set when the implicit solver left its convergence range; the checks
  /// are then incomplete.
  std::optional<std::string> solver_failure;

  bool passed() const {
    if (solver_failure) return false;
    for (const auto& c : checks) {
      if (!c.passed) return false;
    }
    return true;
  }
};

namespace detail {

inline SpectrumSpec probe_spectrum(int dim, std::uint64_t pick) {
  static const SpectrumFamily fam2[] = {SpectrumFamily::E1, SpectrumFamily::E2,
                                        SpectrumFamily::E5, SpectrumFamily::E6,
                                        SpectrumFamily::PowerLaw2D};
  static const SpectrumFamily fam3[] = {SpectrumFamily::E3, SpectrumFamily::E4,
                                        SpectrumFamily::E7,
                                        SpectrumFamily::PowerLaw3D};
  static const double alphas[] = {0.25, 0.5, 0.75};
  const SpectrumFamily f = dim == 2 ? fam2[pick % 5] : fam3[pick % 4];
  if (is_power_law(f)) {
    return SpectrumSpec::power_law(dim, alphas[(pick / 5) % 3], 1.0);
  }
  SpectrumSpec s;
  s.family = f;
  return s;
}

struct Accum {
  CheckResult r;
  void see(double err) {
    r.worst = std::max(r.worst, std::isfinite(err) ? err
                                                   : std::numeric_limits<double>::infinity());
    ++r.probes;
  }
  CheckResult done() {
    r.passed = r.worst < r.threshold;
    return r;
  }
};

template <int Dim, class Rng>
Vec<Dim> probe_point(Rng& rng, double half_width) {
  std::uniform_real_distribution<double> u(-half_width, half_width);
  Vec<Dim> x;
  for (auto& c : x) c = u(rng);
  return x;
}

}  // namespace detail

/// Volume preservation of the SP advection map (2D and 3D), the EM
/// determinant law in 2D, analytic divergence for every family, the 3D
/// decomposition v1 + v2 = v, analytic against finite-difference velocity
/// gradients, and time reversibility of the 2D SP map.
inline VerifyReport run_verification(const VerifyOptions& opt = {}) {
  VerifyReport rep;
  const double dts[] = {0.05, 0.1, 0.2};
  const double h = opt.fd_step;
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  detail::Accum sp2{{"sp-volume-2d", false, 0.0, 1e-6, 0}};
  detail::Accum em2{{"em-determinant-2d", false, 0.0, 1e-6, 0}};
  detail::Accum rev{{"sp-reversibility-2d", false, 0.0, 1e-11, 0}};
  detail::Accum sp3{{"sp-volume-3d", false, 0.0, 1e-6, 0}};
  detail::Accum div{{"divergence", false, 0.0, 1e-10, 0}};
  detail::Accum dec{{"decomposition-3d", false, 0.0, 1e-12, 0}};
  detail::Accum grad{{"gradient", false, 0.0, 1e-6, 0}};

  try {
    for (long p = 0; p < opt.probes_2d; ++p) {
      Philox4x32 rng(opt.seed, static_cast<std::uint64_t>(p),
                     StreamPurpose::Probe);
      const auto spec = detail::probe_spectrum(2, rng());
      const double theta0 = (rng() & 1) ? 1.0 : 0.0;
      const auto field = generate_field<2>(spec, opt.n_modes, theta0, rng);
      const double dt = opt.dt.value_or(dts[rng() % 3]);
      const double t = 10.0 * unit(rng);
      const Vec<2> x = detail::probe_point<2>(rng, 5.0);
      SchemeConfig cfg;
      cfg.dt = dt;

      auto sp_map = [&](const Vec<2>& y) {
        return sp_advect<2>(field, y, t, cfg, dt);
      };
      sp2.see(std::abs(jacobian_det_fd<2>(sp_map, x, h) - 1.0));

      auto em_map = [&](const Vec<2>& y) {
        return em_advect<2>(field, y, t, dt);
      };
      const double det_h = determinant<2>(field.stream_hessian(x, t));
      em2.see(std::abs(jacobian_det_fd<2>(em_map, x, h) -
                       (1.0 + dt * dt * det_h)));

      // Forward step from t, then a step of -dt from t + dt: same t_eval.
      const Vec<2> fwd = sp_advect<2>(field, x, t, cfg, dt);
      const Vec<2> back = sp_advect<2>(field, fwd, t + dt, cfg, -dt);
      rev.see(norm_inf<2>(back - x));
    }

    for (long p = 0; p < opt.probes_3d; ++p) {
      Philox4x32 rng(opt.seed, (1u << 16) + static_cast<std::uint64_t>(p),
                     StreamPurpose::Probe);
      const auto spec = detail::probe_spectrum(3, rng());
      const double theta0 = (rng() & 1) ? 1.0 : 0.0;
      const auto field = generate_field<3>(spec, opt.n_modes, theta0, rng);
      const double dt = opt.dt.value_or(dts[rng() % 3]);
      const double t = 10.0 * unit(rng);
      const Vec<3> x = detail::probe_point<3>(rng, 5.0);
      SchemeConfig cfg;
      cfg.dt = dt;
      auto sp_map = [&](const Vec<3>& y) {
        return sp_advect<3>(field, y, t, cfg, dt);
      };
      sp3.see(std::abs(jacobian_det_fd<3>(sp_map, x, h) - 1.0));
    }
  } catch (const FixedPointDiverged& e) {
    rep.solver_failure = std::string("solver range exceeded: ") + e.what();
  }

  // Divergence, decomposition and gradient checks do not step the solver.
  static const SpectrumFamily all[] = {
      SpectrumFamily::E1, SpectrumFamily::E2, SpectrumFamily::E3,
      SpectrumFamily::E4, SpectrumFamily::E5, SpectrumFamily::E6,
      SpectrumFamily::E7, SpectrumFamily::PowerLaw2D,
      SpectrumFamily::PowerLaw3D};
  std::uint64_t stream = 1u << 20;
  for (SpectrumFamily f : all) {
    SpectrumSpec spec;
    spec.family = f;
    if (is_power_law(f)) spec = SpectrumSpec::power_law(spec.dim(), 0.5, 1.0);
    Philox4x32 rng(opt.seed, stream++, StreamPurpose::Probe);
    auto visit = [&](auto dim_tag) {
      constexpr int D = decltype(dim_tag)::value;
      const auto field = generate_field<D>(spec, opt.n_modes, 1.0, rng);
      for (long p = 0; p < opt.divergence_probes; ++p) {
        const Vec<D> x = detail::probe_point<D>(rng, 20.0);
        const double t = 10.0 * unit(rng);
        const Mat<D> g = field.velocity_gradient(x, t);
        div.see(std::abs(trace<D>(g)));
        if (p % 50 == 0) {
          Mat<D> fd{};
          for (int j = 0; j < D; ++j) {
            Vec<D> xp = x, xm = x;
            xp[j] += h;
            xm[j] -= h;
            const Vec<D> vp = field.velocity(xp, t);
            const Vec<D> vm = field.velocity(xm, t);
            for (int i = 0; i < D; ++i) fd[i][j] = (vp[i] - vm[i]) / (2 * h);
          }
          double scale = 1.0;
          for (int i = 0; i < D; ++i) {
            for (int j = 0; j < D; ++j) scale = std::max(scale, std::abs(g[i][j]));
          }
          double err = 0.0;
          for (int i = 0; i < D; ++i) {
            for (int j = 0; j < D; ++j) {
              err = std::max(err, std::abs(fd[i][j] - g[i][j]) / scale);
            }
          }
          grad.see(err);
        }
        if constexpr (D == 3) {
          const Vec<3> v = field.velocity(x, t);
          const Vec<3> s = field.sub_velocity(1, x, t) +
                           field.sub_velocity(2, x, t);
          dec.see(norm_inf<3>(s - v));
        }
      }
    };
    if (spec.dim() == 2) {
      visit(std::integral_constant<int, 2>{});
    } else {
      visit(std::integral_constant<int, 3>{});
    }
  }

  rep.checks = {sp2.done(), sp3.done(), em2.done(), rev.done(),
                div.done(), dec.done(), grad.done()};
  return rep;
}

}  // namespace tracerflow
