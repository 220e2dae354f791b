// Copyright 2026 The tracerflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "tracerflow/errors.hpp"
#include "tracerflow/vec.hpp"

namespace tracerflow {

/// Isotropic energy spectrum families.
///
///   E1  delta(k - k0)                                   2D shell
///   E2  9/2 k^3 k0^-4 exp(-3/2 k^2/k0^2)                2D
///   E3  3/2 delta(k - k0)                               3D shell
///   E4  16 sqrt(2/pi) k^4 k0^-5 exp(-2 k^2/k0^2)        3D
///   E5  sqrt(6/pi) k0^-1 exp(-3 k^2/(2 k0^2))           2D, low-k excitation
///   E6  54^(1/4)/Gamma(3/4) k0^-1.5 k^0.5 exp(...)      2D, low-k excitation
///   E7  6 k0^-2 k exp(-2 k^2/k0^2)                      3D, low-k excitation
///   PowerLaw2D/3D  E(k) ~ k^(1-2 alpha) on (0, L]
enum class SpectrumFamily {
  E1,
  E2,
  E3,
  E4,
  E5,
  E6,
  E7,
  PowerLaw2D,
  PowerLaw3D,
};

enum class DiffusionClass { Diffusive, Anomalous };

inline bool is_power_law(SpectrumFamily f) noexcept {
  return f == SpectrumFamily::PowerLaw2D || f == SpectrumFamily::PowerLaw3D;
}

inline bool is_shell(SpectrumFamily f) noexcept {
  return f == SpectrumFamily::E1 || f == SpectrumFamily::E3;
}

/// Families whose wavenumber magnitudes are drawn with density E(k) itself
/// and whose modes therefore carry unit (1/|k|-scaled) amplitudes.
inline bool samples_energy_density(SpectrumFamily f) noexcept {
  return is_power_law(f) || f == SpectrumFamily::E5 ||
         f == SpectrumFamily::E6 || f == SpectrumFamily::E7;
}

inline int family_dimension(SpectrumFamily f) noexcept {
  switch (f) {
    case SpectrumFamily::E3:
    case SpectrumFamily::E4:
    case SpectrumFamily::E7:
    case SpectrumFamily::PowerLaw3D:
      return 3;
    default:
      return 2;
  }
}

inline std::string_view family_tag(SpectrumFamily f) noexcept {
  switch (f) {
    case SpectrumFamily::E1: return "e1";
    case SpectrumFamily::E2: return "e2";
    case SpectrumFamily::E3: return "e3";
    case SpectrumFamily::E4: return "e4";
    case SpectrumFamily::E5: return "e5";
    case SpectrumFamily::E6: return "e6";
    case SpectrumFamily::E7: return "e7";
    case SpectrumFamily::PowerLaw2D: return "powerlaw2d";
    case SpectrumFamily::PowerLaw3D: return "powerlaw3d";
  }
  return "?";
}

inline std::optional<SpectrumFamily> parse_family(std::string_view tag) {
  for (auto f : {SpectrumFamily::E1, SpectrumFamily::E2, SpectrumFamily::E3,
                 SpectrumFamily::E4, SpectrumFamily::E5, SpectrumFamily::E6,
                 SpectrumFamily::E7, SpectrumFamily::PowerLaw2D,
                 SpectrumFamily::PowerLaw3D}) {
    if (family_tag(f) == tag) return f;
  }
  return std::nullopt;
}

struct SpectrumSpec {
  SpectrumFamily family = SpectrumFamily::E1;
  double k0 = 1.0;
  std::optional<double> alpha;     // power laws only, 0 < alpha < 1
  std::optional<double> cutoff_L;  // power laws only

  int dim() const noexcept { return family_dimension(family); }

  /// Throws ConfigError when an invariant is violated.
  void validate() const {
    if (!(k0 > 0.0) || !std::isfinite(k0)) {
      throw ConfigError("k0", "k0 must be a positive finite number");
    }
    if (is_power_law(family)) {
      if (!alpha) throw ConfigError("alpha", "power-law spectra need alpha");
      if (!(*alpha > 0.0 && *alpha < 1.0)) {
        throw ConfigError("alpha", "alpha must lie in (0, 1)");
      }
      if (!cutoff_L || !(*cutoff_L > 0.0)) {
        throw ConfigError("cutoff", "power-law spectra need cutoff L > 0");
      }
    } else {
      if (alpha) throw ConfigError("alpha", "alpha applies to power laws only");
      if (cutoff_L) {
        throw ConfigError("cutoff", "cutoff applies to power laws only");
      }
    }
  }

  static SpectrumSpec make(SpectrumFamily family, double k0 = 1.0) {
    SpectrumSpec s{family, k0, std::nullopt, std::nullopt};
    s.validate();
    return s;
  }

  static SpectrumSpec power_law(int dim, double alpha, double cutoff_L = 1.0) {
    SpectrumSpec s{dim == 3 ? SpectrumFamily::PowerLaw3D
                            : SpectrumFamily::PowerLaw2D,
                   1.0, alpha, cutoff_L};
    s.validate();
    return s;
  }
};

/// Closed-form E(k) of a continuous family. Power laws are normalized to
/// unit total energy on (0, L].
inline double evaluate_density(const SpectrumSpec& spec, double k) {
  if (is_shell(spec.family)) {
    throw SingularSpectrum(std::string(family_tag(spec.family)) +
                           " is a delta shell and has no pointwise density");
  }
  if (!(k > 0.0)) {
    throw NonPositiveWavenumber("wavenumber must be positive");
  }
  const double k0 = spec.k0;
  const double q = k / k0;
  // Gaussian tails underflow long before the polynomial prefactors overflow.
  if (!is_power_law(spec.family) && q > 40.0) return 0.0;
  switch (spec.family) {
    case SpectrumFamily::E2:
      return 4.5 * k * k * k / (k0 * k0 * k0 * k0) * std::exp(-1.5 * q * q);
    case SpectrumFamily::E4:
      return 16.0 * std::sqrt(2.0 / std::numbers::pi) * std::pow(k, 4) /
             std::pow(k0, 5) * std::exp(-2.0 * q * q);
    case SpectrumFamily::E5:
      return std::sqrt(6.0 / std::numbers::pi) / k0 * std::exp(-1.5 * q * q);
    case SpectrumFamily::E6:
      return std::pow(54.0, 0.25) / std::tgamma(0.75) * std::pow(k0, -1.5) *
             std::sqrt(k) * std::exp(-1.5 * q * q);
    case SpectrumFamily::E7:
      return 6.0 / (k0 * k0) * k * std::exp(-2.0 * q * q);
    case SpectrumFamily::PowerLaw2D:
    case SpectrumFamily::PowerLaw3D: {
      const double L = *spec.cutoff_L;
      if (k > L) return 0.0;
      const double beta = 2.0 - 2.0 * *spec.alpha;
      return beta * std::pow(k, 1.0 - 2.0 * *spec.alpha) / std::pow(L, beta);
    }
    default:
      break;
  }
  return 0.0;
}

/// mu = 2 / (2 - alpha), the dispersion exponent of the power-law fields.
inline double theoretical_exponent(const SpectrumSpec& spec) {
  if (!is_power_law(spec.family) || !spec.alpha) {
    throw NotPowerLaw("theoretical exponent is defined for power laws only");
  }
  return 2.0 / (2.0 - *spec.alpha);
}

namespace detail {

template <class Rng>
Vec<3> random_unit_3d(Rng& rng) {
  std::normal_distribution<double> normal;
  for (;;) {
    Vec<3> g{normal(rng), normal(rng), normal(rng)};
    const double n = norm2<3>(g);
    if (n > 1e-300) return (1.0 / n) * g;
  }
}

template <class Rng>
Vec<2> random_unit_circle(Rng& rng) {
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  const double a = angle(rng);
  return {std::cos(a), std::sin(a)};
}

}  // namespace detail

/// Draws wavevectors distributed according to a spectrum family.
///
/// E1/E3: uniform on the circle/sphere of radius k0. E2/E4: Gaussian
/// components with standard deviation k0/sqrt(3) and k0/2. Power laws:
/// |k| by inverse CDF of k^(1-2 alpha) on [1e-6 L, L]. E5/E6/E7: |k| from
/// a 4096-point inverse-CDF table of the normalized E(k) over
/// [1e-6 k0, 12 k0]. Directions are isotropic in every case.
///
/// Immutable after construction; `sample` may run concurrently as long as
/// each caller owns its generator.
class WavevectorSampler {
 public:
  static constexpr int kTablePoints = 4096;
  static constexpr double kTableLow = 1e-6;
  static constexpr double kTableHigh = 12.0;
  static constexpr double kPowerLawLow = 1e-6;

  explicit WavevectorSampler(const SpectrumSpec& spec) : spec_(spec) {
    spec_.validate();
    if (spec_.family == SpectrumFamily::E5 ||
        spec_.family == SpectrumFamily::E6 ||
        spec_.family == SpectrumFamily::E7) {
      build_table();
    }
  }

  const SpectrumSpec& spec() const noexcept { return spec_; }

  /// Magnitude of a sampled wavevector. Shells and Gaussian families are
  /// sampled through `sample` only; this is for the radial families.
  template <class Rng>
  double sample_magnitude(Rng& rng) const {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double u = unif(rng);
    if (is_power_law(spec_.family)) {
      const double L = *spec_.cutoff_L;
      const double beta = 2.0 - 2.0 * *spec_.alpha;
      const double lo = std::pow(kPowerLawLow * L, beta);
      const double hi = std::pow(L, beta);
      return std::pow(lo + u * (hi - lo), 1.0 / beta);
    }
    if (!table_k_.empty()) {
      auto it = std::upper_bound(table_cdf_.begin(), table_cdf_.end(), u);
      if (it == table_cdf_.begin()) return table_k_.front();
      if (it == table_cdf_.end()) return table_k_.back();
      const auto i = static_cast<std::size_t>(it - table_cdf_.begin());
      const double c0 = table_cdf_[i - 1];
      const double c1 = table_cdf_[i];
      const double w = c1 > c0 ? (u - c0) / (c1 - c0) : 0.0;
      return table_k_[i - 1] + w * (table_k_[i] - table_k_[i - 1]);
    }
    throw Error("sample_magnitude: family has no radial sampler");
  }

  template <int Dim, class Rng>
  Vec<Dim> sample(Rng& rng) const {
    if (Dim != spec_.dim()) {
      throw WrongDimension("sampler dimension does not match spectrum");
    }
    const double k0 = spec_.k0;
    Vec<Dim> k{};
    switch (spec_.family) {
      case SpectrumFamily::E1:
      case SpectrumFamily::E3:
        k = k0 * unit_direction<Dim>(rng);
        break;
      case SpectrumFamily::E2:
      case SpectrumFamily::E4: {
        const double sd = spec_.family == SpectrumFamily::E2
                              ? k0 / std::sqrt(3.0)
                              : k0 / 2.0;
        std::normal_distribution<double> normal(0.0, sd);
        for (;;) {
          for (auto& c : k) c = normal(rng);
          if (norm2<Dim>(k) > 0.0) break;
        }
        break;
      }
      default: {
        const double mag = sample_magnitude(rng);
        k = mag * unit_direction<Dim>(rng);
        break;
      }
    }
    return k;
  }

  /// Tabulated (k, CDF) pairs for the E5/E6/E7 inverse-CDF sampler.
  const std::vector<double>& table_k() const noexcept { return table_k_; }
  const std::vector<double>& table_cdf() const noexcept { return table_cdf_; }

 private:
  template <int Dim, class Rng>
  static Vec<Dim> unit_direction(Rng& rng) {
    if constexpr (Dim == 2) {
      return detail::random_unit_circle(rng);
    } else {
      return detail::random_unit_3d(rng);
    }
  }

  void build_table() {
    const double lo = kTableLow * spec_.k0;
    const double hi = kTableHigh * spec_.k0;
    table_k_.resize(kTablePoints);
    table_cdf_.resize(kTablePoints);
    const double ratio = std::log(hi / lo);
    for (int i = 0; i < kTablePoints; ++i) {
      table_k_[i] = lo * std::exp(ratio * i / (kTablePoints - 1));
    }
    table_k_.back() = hi;
    auto density = [this](double k) { return evaluate_density(spec_, k); };
    using boost::math::quadrature::gauss;
    table_cdf_[0] = 0.0;
    for (int i = 1; i < kTablePoints; ++i) {
      table_cdf_[i] = table_cdf_[i - 1] + gauss<double, 15>::integrate(
                                              density, table_k_[i - 1],
                                              table_k_[i]);
    }
    const double total = table_cdf_.back();
    for (auto& c : table_cdf_) c /= total;
    table_cdf_.back() = 1.0;
  }

  SpectrumSpec spec_;
  std::vector<double> table_k_;
  std::vector<double> table_cdf_;
};

/// Convenience wrapper; builds a sampler per call, so prefer
/// WavevectorSampler in loops over the E5/E6/E7 families.
template <int Dim, class Rng>
Vec<Dim> sample_wavevector(const SpectrumSpec& spec, Rng& rng) {
  return WavevectorSampler(spec).sample<Dim>(rng);
}

/// Outcome of the normal-diffusion test on int E(k)/k^2 dk.
struct SharpCondition {
  DiffusionClass cls = DiffusionClass::Diffusive;
  double integral = 0.0;  // +inf when divergent
  bool analytic = false;
};

struct QuadratureBudget {
  int decades = 14;  // inner cutoffs k0 * 10^-1 ... k0 * 10^-decades
  double rel_tol = 1e-8;
  double growth_factor = 1e3;
};

/// Evaluates the integral int_0^inf E(k)/k^2 dk that decides normal versus
/// anomalous diffusion. In 3D the iterated integral is reduced with
/// int_0^inf sin(k r) dr = 1/k, which leaves the same one-dimensional
/// integral. Shells and power laws are handled analytically; the rest by
/// adaptive Gauss-Kronrod over shrinking inner cutoffs.
inline SharpCondition evaluate_sharp_condition(const SpectrumSpec& spec,
                                               QuadratureBudget budget = {}) {
  spec.validate();
  constexpr double inf = std::numeric_limits<double>::infinity();
  switch (spec.family) {
    case SpectrumFamily::E1:
      return {DiffusionClass::Diffusive, 1.0 / (spec.k0 * spec.k0), true};
    case SpectrumFamily::E3:
      return {DiffusionClass::Diffusive, 1.5 / (spec.k0 * spec.k0), true};
    case SpectrumFamily::PowerLaw2D:
    case SpectrumFamily::PowerLaw3D:
      // k^(1 - 2 alpha) / k^2 = k^(-1 - 2 alpha), not integrable at 0.
      return {DiffusionClass::Anomalous, inf, true};
    default:
      break;
  }

  auto integrand = [&spec](double k) {
    return evaluate_density(spec, k) / (k * k);
  };
  using boost::math::quadrature::gauss_kronrod;
  auto integrate = [&](double a, double b) {
    double err = 0.0;
    const double v = gauss_kronrod<double, 31>::integrate(
        integrand, a, b, 15, budget.rel_tol, &err);
    if (!std::isfinite(v)) throw QuadratureFailure("non-finite partial integral");
    return v;
  };

  double cutoff = 0.1 * spec.k0;
  double total = integrate(cutoff, inf);
  const double first = total;
  std::vector<double> increments;
  for (int j = 0; j < budget.decades; ++j) {
    const double next = cutoff * 0.1;
    const double inc = integrate(next, cutoff);
    increments.push_back(inc);
    total += inc;
    cutoff = next;
    if (first > 0.0 && total / first > budget.growth_factor) {
      return {DiffusionClass::Anomalous, inf, false};
    }
  }
  const std::size_t n = increments.size();
  if (n >= 4) {
    // Increments that stop shrinking mean a log or power divergence.
    bool stalled = true;
    for (std::size_t i = n - 3; i < n; ++i) {
      if (increments[i] < 0.5 * increments[i - 1]) stalled = false;
    }
    if (stalled) return {DiffusionClass::Anomalous, inf, false};
    if (increments.back() <= budget.rel_tol * total) {
      return {DiffusionClass::Diffusive, total, false};
    }
  }
  throw QuadratureFailure("sharp-condition integral undecided within budget");
}

inline DiffusionClass classify_diffusion(const SpectrumSpec& spec,
                                         QuadratureBudget budget = {}) {
  return evaluate_sharp_condition(spec, budget).cls;
}

}  // namespace tracerflow
