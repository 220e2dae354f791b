// Copyright 2026 The tracerflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "tracerflow/ensemble.hpp"
#include "tracerflow/errors.hpp"
#include "tracerflow/spectrum.hpp"

namespace tracerflow {

/// One `key = value` assignment and where it came from.
struct Setting {
  std::string key;
  std::string value;
  std::string origin;  // "file:LINE", "flag" ...
};

namespace detail {

inline std::string trim(std::string_view v) {
  const auto b = v.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = v.find_last_not_of(" \t\r\n");
  return std::string(v.substr(b, e - b + 1));
}

inline double parse_real(const Setting& s) {
  const std::string v = trim(s.value);
  double out = 0.0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end || v.empty()) {
    throw ConfigError(s.key, s.origin + ": '" + s.key +
                                 "' expects a number, got '" + s.value + "'");
  }
  return out;
}

template <class Int>
Int parse_int(const Setting& s) {
  const std::string v = trim(s.value);
  Int out = 0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end || v.empty()) {
    throw ConfigError(s.key, s.origin + ": '" + s.key +
                                 "' expects an integer, got '" + s.value +
                                 "'");
  }
  return out;
}

inline bool parse_bool(const Setting& s) {
  const std::string v = trim(s.value);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(s.key, s.origin + ": '" + s.key +
                               "' expects true or false, got '" + s.value +
                               "'");
}

}  // namespace detail

/// Parses a flat `key = value` file. Blank lines and lines starting with
/// '#' are ignored. Errors carry the line number.
inline std::vector<Setting> parse_config_text(std::istream& is,
                                              const std::string& name =
                                                  "config") {
  std::vector<Setting> out;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    const std::string origin = name + ":" + std::to_string(lineno);
    if (eq == std::string::npos) {
      throw ConfigError("", origin + ": expected 'key = value', got '" + t +
                                "'");
    }
    Setting s{detail::trim(t.substr(0, eq)), detail::trim(t.substr(eq + 1)),
              origin};
    if (s.key.empty()) throw ConfigError("", origin + ": empty key");
    out.push_back(std::move(s));
  }
  return out;
}

/// Keys accepted by apply_setting, in canonical order.
inline const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{
      "spectrum",      "k0",           "alpha",      "cutoff",
      "theta0",        "scheme",       "dt",         "d0",
      "fp_tol",        "fp_max_iters", "midpoint_time", "tmax",
      "particles",     "modes",        "field_mode", "record_points",
      "record_spacing", "record_times", "seed",      "track_stream"};
  return keys;
}

inline Scheme parse_scheme(const Setting& s) {
  const std::string v = detail::trim(s.value);
  if (v == "sp") return Scheme::StructurePreserving;
  if (v == "em") return Scheme::EulerMaruyama;
  throw ConfigError(s.key, s.origin + ": scheme must be 'sp' or 'em', got '" +
                               s.value + "'");
}

/// Applies one setting; throws ConfigError naming the key on unknown keys
/// or malformed values.
inline void apply_setting(ExperimentConfig& cfg, const Setting& s) {
  const std::string& k = s.key;
  const std::string v = detail::trim(s.value);
  if (k == "spectrum") {
    const auto f = parse_family(v);
    if (!f) {
      throw ConfigError(k, s.origin + ": unknown spectrum '" + v +
                               "' (e1..e7, powerlaw2d, powerlaw3d)");
    }
    cfg.spectrum.family = *f;
    if (is_power_law(*f) && !cfg.spectrum.cutoff_L) {
      cfg.spectrum.cutoff_L = 1.0;
    }
  } else if (k == "k0") {
    cfg.spectrum.k0 = detail::parse_real(s);
  } else if (k == "alpha") {
    cfg.spectrum.alpha = detail::parse_real(s);
  } else if (k == "cutoff") {
    cfg.spectrum.cutoff_L = detail::parse_real(s);
  } else if (k == "theta0") {
    cfg.theta0 = detail::parse_real(s);
  } else if (k == "scheme") {
    cfg.scheme_cfg.scheme = parse_scheme(s);
  } else if (k == "dt") {
    cfg.scheme_cfg.dt = detail::parse_real(s);
  } else if (k == "d0") {
    cfg.scheme_cfg.d0 = detail::parse_real(s);
  } else if (k == "fp_tol") {
    cfg.scheme_cfg.fp_tol = detail::parse_real(s);
  } else if (k == "fp_max_iters") {
    cfg.scheme_cfg.fp_max_iters = detail::parse_int<int>(s);
  } else if (k == "midpoint_time") {
    if (v == "mid") {
      cfg.scheme_cfg.midpoint_time = MidpointTime::StepMid;
    } else if (v == "start") {
      cfg.scheme_cfg.midpoint_time = MidpointTime::StepStart;
    } else {
      throw ConfigError(k, s.origin + ": midpoint_time must be mid or start");
    }
  } else if (k == "tmax") {
    cfg.t_max = detail::parse_real(s);
  } else if (k == "particles") {
    cfg.n_particles = detail::parse_int<long>(s);
  } else if (k == "modes") {
    cfg.n_modes = detail::parse_int<int>(s);
  } else if (k == "field_mode") {
    if (v == "per-particle") {
      cfg.field_mode = FieldMode::PerParticle;
    } else if (v == "shared") {
      cfg.field_mode = FieldMode::Shared;
    } else {
      throw ConfigError(k, s.origin +
                               ": field_mode must be per-particle or shared");
    }
  } else if (k == "record_points") {
    cfg.record_points = detail::parse_int<int>(s);
  } else if (k == "record_spacing") {
    if (v == "log") {
      cfg.record_spacing = RecordSpacing::Log;
    } else if (v == "linear") {
      cfg.record_spacing = RecordSpacing::Linear;
    } else {
      throw ConfigError(k, s.origin + ": record_spacing must be log or linear");
    }
  } else if (k == "record_times") {
    std::vector<double> ts;
    std::string list = v;
    std::replace(list.begin(), list.end(), ',', ' ');
    std::stringstream ss(list);
    std::string tok;
    while (ss >> tok) {
      ts.push_back(detail::parse_real(Setting{k, tok, s.origin}));
    }
    cfg.record_times = std::move(ts);
  } else if (k == "seed") {
    cfg.master_seed = detail::parse_int<std::uint64_t>(s);
  } else if (k == "track_stream") {
    cfg.track_stream = detail::parse_bool(s);
  } else {
    throw ConfigError(k, s.origin + ": unknown key '" + k + "'");
  }
}

// ---------------------------------------------------------------------------
// Presets

/// A named experiment: one or more labelled runs (e.g. both schemes).
struct Preset {
  std::string name;
  std::string description;
  std::vector<std::pair<std::string, ExperimentConfig>> runs;
};

namespace detail {

inline ExperimentConfig e1_trapping(Scheme s, double dt) {
  ExperimentConfig c;
  c.spectrum.family = SpectrumFamily::E1;
  c.theta0 = 0.0;
  c.scheme_cfg.scheme = s;
  c.scheme_cfg.dt = dt;
  c.scheme_cfg.d0 = 0.0;
  c.n_particles = 5000;
  c.n_modes = 100;
  c.t_max = 1000.0;
  return c;
}

inline ExperimentConfig anomalous(SpectrumFamily f) {
  ExperimentConfig c;
  c.spectrum.family = f;
  c.scheme_cfg.scheme = Scheme::StructurePreserving;
  c.scheme_cfg.dt = 0.1;
  c.scheme_cfg.d0 = 0.1;
  c.n_particles = 2000;
  c.n_modes = 100;
  c.t_max = 1000.0;
  return c;
}

inline ExperimentConfig power_law(SpectrumFamily f, double alpha, Scheme s) {
  ExperimentConfig c;
  c.spectrum.family = f;
  c.spectrum.alpha = alpha;
  c.spectrum.cutoff_L = 1.0;
  c.scheme_cfg.scheme = s;
  c.scheme_cfg.dt = 0.05;
  c.scheme_cfg.d0 = 0.01;
  c.n_particles = f == SpectrumFamily::PowerLaw2D ? 1000 : 500;
  c.n_modes = 200;
  c.t_max = 2000.0;
  return c;
}

inline ExperimentConfig stream_probe(Scheme s, double d0) {
  ExperimentConfig c;
  c.spectrum.family = SpectrumFamily::E1;
  c.field_mode = FieldMode::Shared;
  c.track_stream = true;
  c.record_spacing = RecordSpacing::Linear;
  c.scheme_cfg.scheme = s;
  c.scheme_cfg.d0 = d0;
  c.n_modes = 100;
  if (d0 > 0.0) {
    c.scheme_cfg.dt = 0.05;
    c.n_particles = 20000;
    c.t_max = 20.0;
    c.record_points = 40;
  } else {
    // Without noise every particle follows the same path.
    c.scheme_cfg.dt = 0.1;
    c.n_particles = 2;
    c.t_max = 100.0;
    c.record_points = 1000;
  }
  return c;
}

inline std::string fmt_short(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

inline std::vector<Preset> build_presets() {
  std::vector<Preset> out;
  const Scheme sp = Scheme::StructurePreserving;
  const Scheme em = Scheme::EulerMaruyama;
  for (Scheme s : {sp, em}) {
    for (double dt : {0.1, 0.05, 0.02}) {
      const std::string tag = scheme_tag(s);
      out.push_back({"fig1-" + tag + "-dt" + fmt_short(dt),
                     "2D E1, theta0=0, D0=0, " + tag + ", dt=" +
                         fmt_short(dt),
                     {{tag, e1_trapping(s, dt)}}});
    }
  }
  for (const char* name : {"fig1", "fig3"}) {
    out.push_back({name, "2D E1 trapping, both schemes at dt=0.1",
                   {{"sp", e1_trapping(sp, 0.1)}, {"em", e1_trapping(em, 0.1)}}});
  }
  for (double d0 : {0.1, 0.01, 0.001}) {
    Preset p{"fig2-d" + fmt_short(d0),
             "2D E1, theta0=0, dt=0.1, D0=" + fmt_short(d0) + ", both schemes",
             {}};
    for (Scheme s : {sp, em}) {
      auto c = e1_trapping(s, 0.1);
      c.scheme_cfg.d0 = d0;
      p.runs.emplace_back(scheme_tag(s), c);
    }
    out.push_back(std::move(p));
  }
  for (double th : {0.0, 1.0}) {
    for (double d0 : {0.1, 0.5}) {
      ExperimentConfig c;
      c.spectrum.family = SpectrumFamily::E1;
      c.theta0 = th;
      c.scheme_cfg.scheme = sp;
      c.scheme_cfg.dt = 0.05;
      c.scheme_cfg.d0 = d0;
      c.n_particles = 5000;
      c.n_modes = 100;
      c.t_max = 200.0;
      out.push_back({"fig4-th" + fmt_short(th) + "-d" + fmt_short(d0),
                     "2D E1 effective diffusivity, theta0=" + fmt_short(th) +
                         ", D0=" + fmt_short(d0),
                     {{"sp", c}}});
    }
  }
  for (double th : {0.0, 1.0}) {
    ExperimentConfig c;
    c.spectrum.family = SpectrumFamily::E3;
    c.theta0 = th;
    c.scheme_cfg.scheme = sp;
    c.scheme_cfg.dt = 0.05;
    c.scheme_cfg.d0 = 0.1;
    c.n_particles = 2000;
    c.n_modes = 100;
    c.t_max = 200.0;
    out.push_back({"fig5-th" + fmt_short(th),
                   "3D E3 effective diffusivity, theta0=" + fmt_short(th),
                   {{"sp", c}}});
  }
  out.push_back({"fig6", "2D E5 dispersion, SP, D0=0.1",
                 {{"sp", anomalous(SpectrumFamily::E5)}}});
  out.push_back({"fig7", "2D E6 dispersion, SP, D0=0.1",
                 {{"sp", anomalous(SpectrumFamily::E6)}}});
  for (double a : {0.25, 0.5, 0.75}) {
    out.push_back({"fig8-alpha" + fmt_short(a),
                   "2D power law alpha=" + fmt_short(a) + ", both schemes",
                   {{"sp", power_law(SpectrumFamily::PowerLaw2D, a, sp)},
                    {"em", power_law(SpectrumFamily::PowerLaw2D, a, em)}}});
  }
  out.push_back({"fig9", "3D E7 dispersion, SP, D0=0.1",
                 {{"sp", anomalous(SpectrumFamily::E7)}}});
  for (double a : {0.5, 0.75}) {
    out.push_back({"fig10-alpha" + fmt_short(a),
                   "3D power law alpha=" + fmt_short(a) + ", both schemes",
                   {{"sp", power_law(SpectrumFamily::PowerLaw3D, a, sp)},
                    {"em", power_law(SpectrumFamily::PowerLaw3D, a, em)}}});
  }
  out.push_back({"psi-decay",
                 "shared 2D E1 field, D0=0.2, SP: decay of E[psi(t)]",
                 {{"sp", stream_probe(sp, 0.2)}}});
  out.push_back({"psi-drift",
                 "shared 2D E1 field, D0=0: psi drift along one path",
                 {{"sp", stream_probe(sp, 0.0)}, {"em", stream_probe(em, 0.0)}}});
  return out;
}

}  // namespace detail

inline const std::vector<Preset>& presets() {
  static const std::vector<Preset> table = detail::build_presets();
  return table;
}

inline const Preset* find_preset(std::string_view name) {
  for (const auto& p : presets()) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

inline const char* const kRequiredKeys[] = {"scheme", "spectrum", "dt",
                                            "tmax"};

/// Builds the runs for a preset (or a bare configuration) with `settings`
/// applied on top, in order. Without a preset the keys scheme, spectrum,
/// dt and tmax are required. Every resulting configuration is validated.
inline std::vector<std::pair<std::string, ExperimentConfig>> resolve_config(
    const std::optional<std::string>& preset_name,
    const std::vector<Setting>& settings) {
  std::vector<std::pair<std::string, ExperimentConfig>> runs;
  if (preset_name) {
    const Preset* p = find_preset(*preset_name);
    if (!p) {
      throw ConfigError("preset", "unknown preset '" + *preset_name + "'");
    }
    runs = p->runs;
    // A scheme override on a two-scheme preset selects that run.
    std::optional<Scheme> wanted;
    for (const auto& s : settings) {
      if (s.key == "scheme") wanted = parse_scheme(s);
    }
    if (wanted && runs.size() > 1) {
      std::vector<std::pair<std::string, ExperimentConfig>> kept;
      for (auto& r : runs) {
        if (r.second.scheme_cfg.scheme == *wanted) kept.push_back(r);
      }
      if (kept.empty()) kept.push_back(runs.front());
      runs = std::move(kept);
    }
  } else {
    std::set<std::string> seen;
    for (const auto& s : settings) seen.insert(s.key);
    for (const char* key : kRequiredKeys) {
      if (!seen.count(key)) {
        throw ConfigError(key, std::string("missing required field '") + key +
                                   "'");
      }
    }
    runs.emplace_back("", ExperimentConfig{});
  }
  for (auto& [label, cfg] : runs) {
    for (const auto& s : settings) apply_setting(cfg, s);
    label = scheme_tag(cfg.scheme_cfg.scheme);
    cfg.validate();
  }
  return runs;
}

}  // namespace tracerflow
