// Copyright 2026 The tracerflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "tracerflow/ensemble.hpp"
#include "tracerflow/errors.hpp"

namespace tracerflow {

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 1.0;
  double stderr_slope = 0.0;
  std::size_t n = 0;
};

/// Ordinary least squares y = intercept + slope x. Needs two points; the
/// slope standard error needs three.
inline LinearFit linear_fit(const std::vector<double>& x,
                            const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) {
    throw InsufficientPoints("linear fit needs at least two points");
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw InsufficientPoints("fit abscissae are all equal");
  LinearFit f;
  f.n = n;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (f.intercept + f.slope * x[i]);
    ssr += r * r;
  }
  // A flat response is fitted perfectly; call that r^2 = 1.
  f.r_squared = syy > 0.0 ? std::clamp(1.0 - ssr / syy, 0.0, 1.0) : 1.0;
  f.stderr_slope = n > 2 ? std::sqrt(ssr / static_cast<double>(n - 2) / sxx)
                         : 0.0;
  return f;
}

struct PowerLawFit {
  double mu = 0.0;
  double log_prefactor = 0.0;
  std::pair<double, double> window{0.0, 0.0};
  double r_squared = 0.0;
  double stderr_mu = 0.0;
  std::size_t n_points = 0;
};

namespace detail {
inline bool in_window(double t, double lo, double hi) {
  const double eps = 1e-9 * std::max(std::abs(lo), std::abs(hi));
  return t >= lo - eps && t <= hi + eps;
}
}  // namespace detail

/// Last decade of the series, [t_end / 10, t_end].
inline std::pair<double, double> last_decade(const DispersionSeries& s) {
  if (s.times.empty()) throw InsufficientPoints("series is empty");
  return {s.times.back() / 10.0, s.times.back()};
}

/// OLS of log(trace <dx dx^T>) on log t inside `window` (default: last
/// decade). mu is the dispersion exponent.
inline PowerLawFit power_law_fit(
    const DispersionSeries& s,
    std::optional<std::pair<double, double>> window = std::nullopt) {
  const auto w = window.value_or(last_decade(s));
  if (!(w.first < w.second)) {
    throw InsufficientPoints("fit window must satisfy t_lo < t_hi");
  }
  std::vector<double> lx, ly;
  for (std::size_t r = 0; r < s.times.size(); ++r) {
    const double t = s.times[r];
    if (!detail::in_window(t, w.first, w.second)) continue;
    const double m = s.trace(r);
    if (!(m > 0.0) || !(t > 0.0)) {
      throw NonPositiveMoment("second moment is not positive at t=" +
                              format_double(t));
    }
    lx.push_back(std::log(t));
    ly.push_back(std::log(m));
  }
  if (lx.size() < 3) {
    throw InsufficientPoints("power-law fit needs at least 3 record times "
                             "in the window, found " +
                             std::to_string(lx.size()));
  }
  const LinearFit f = linear_fit(lx, ly);
  PowerLawFit out;
  out.mu = f.slope;
  out.log_prefactor = f.intercept;
  out.window = w;
  out.r_squared = f.r_squared;
  out.stderr_mu = f.stderr_slope;
  out.n_points = f.n;
  return out;
}

enum class Trend { Flat, Increasing, Decreasing };

inline const char* trend_tag(Trend t) noexcept {
  switch (t) {
    case Trend::Increasing: return "increasing";
    case Trend::Decreasing: return "decreasing";
    default: return "flat";
  }
}

/// Outcome of the long-time limit test on D_ij(t). `value` and `stderr_`
/// are meaningful in either case; `converged` tells whether the curve has
/// settled.
struct DiffusivityLimit {
  bool converged = false;
  double value = 0.0;
  double stderr_ = 0.0;
  double rel_drift = 0.0;  // |slope * window width| / |value|
  double t_stat = 0.0;     // |drift| / joint stderr of the window endpoints
  Trend trend = Trend::Flat;
  std::pair<double, double> window{0.0, 0.0};
  std::size_t n_points = 0;
};

inline constexpr double kDriftTolerance = 0.05;
inline constexpr double kDriftTStat = 2.0;
inline constexpr std::size_t kMinRecordTimes = 8;

/// Tail test on D_ij(t) over the last factor of two of time: converged iff
/// the relative drift is below 5% and the drift t-statistic below 2.
inline DiffusivityLimit diffusivity_limit(const DispersionSeries& s, int i,
                                          int j) {
  if (s.times.size() < kMinRecordTimes) {
    throw InsufficientPoints("diffusivity_limit needs at least 8 record "
                             "times");
  }
  const auto curve = effective_diffusivity(s, i, j);
  const double t_hi = s.times.back();
  const double t_lo = t_hi / 2.0;
  std::vector<double> ts, ds;
  std::vector<double> ses;
  for (const auto& p : curve) {
    if (!detail::in_window(p.t, t_lo, t_hi)) continue;
    ts.push_back(p.t);
    ds.push_back(p.value);
    ses.push_back(p.stderr_);
  }
  DiffusivityLimit out;
  out.window = {t_lo, t_hi};
  out.n_points = ts.size();
  if (ts.size() < 2) return out;
  double mean = 0.0;
  for (double d : ds) mean += d;
  mean /= static_cast<double>(ds.size());
  out.value = mean;
  // The tail points share particles, so they are far from independent.
  // Quote the standard error of the last point, a conservative choice.
  out.stderr_ = ses.back();

  const LinearFit f = linear_fit(ts, ds);
  const double drift = f.slope * (ts.back() - ts.front());
  out.rel_drift = mean != 0.0 ? std::abs(drift / mean)
                              : std::numeric_limits<double>::infinity();
  const double joint = std::hypot(ses.front(), ses.back());
  out.t_stat = joint > 0.0 ? std::abs(drift) / joint
                           : (drift == 0.0 ? 0.0
                                           : std::numeric_limits<double>::infinity());
  out.trend = out.t_stat < kDriftTStat && out.rel_drift < kDriftTolerance
                  ? Trend::Flat
                  : (drift > 0.0 ? Trend::Increasing : Trend::Decreasing);
  out.converged = out.rel_drift < kDriftTolerance && out.t_stat < kDriftTStat;
  return out;
}

struct PsiDecayFit {
  double rate = 0.0;  // positive when |E[psi]| decays
  double r_squared = 0.0;
  double log_amplitude = 0.0;
  double t_end = 0.0;  // last time inside the fit window
  std::size_t n_points = 0;
};

inline constexpr double kPsiSignalRatio = 5.0;
inline constexpr double kPsiInitialRatio = 3.0;

/// Fits log|E[psi(t)]| = a - rate t over the initial run of record times
/// where |E[psi]| exceeds five standard errors. The t = 0 value is used
/// when the series carries it.
inline PsiDecayFit psi_decay_fit(const DispersionSeries& s) {
  if (!s.mean_stream || !s.stream_stderr) {
    throw SignalTooWeak("series has no stream-function column");
  }
  std::vector<double> ts, ys;
  if (s.mean_stream0) {
    const double m0 = *s.mean_stream0;
    const double e0 = s.stream0_stderr.value_or(0.0);
    if (!(std::abs(m0) > kPsiInitialRatio * e0) || m0 == 0.0) {
      throw SignalTooWeak("mean psi(0) is not resolved from zero");
    }
    ts.push_back(0.0);
    ys.push_back(std::log(std::abs(m0)));
  }
  const auto& mean = *s.mean_stream;
  const auto& err = *s.stream_stderr;
  for (std::size_t r = 0; r < s.times.size(); ++r) {
    const double m = std::abs(mean[r]);
    if (!(m > kPsiSignalRatio * err[r]) || m == 0.0) break;
    ts.push_back(s.times[r]);
    ys.push_back(std::log(m));
  }
  if (ts.size() < 3) {
    throw SignalTooWeak("only " + std::to_string(ts.size()) +
                        " points with |E[psi]| above 5 standard errors");
  }
  const LinearFit f = linear_fit(ts, ys);
  PsiDecayFit out;
  out.rate = -f.slope;
  out.r_squared = f.r_squared;
  out.log_amplitude = f.intercept;
  out.t_end = ts.back();
  out.n_points = f.n;
  return out;
}

}  // namespace tracerflow
