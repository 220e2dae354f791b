// Copyright 2026 The tracerflow Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end: run, classify, verify, fit.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tracerflow/tracerflow.hpp"

namespace tf = tracerflow;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRunFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitVerify = 3;

std::string iso_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string g17(double v) { return tf::format_double(v); }

/// Flags that map one-to-one onto configuration keys.
struct ConfigFlags {
  std::optional<std::string> preset, config_file;
  std::optional<std::string> scheme, spectrum, field_mode, record_spacing,
      midpoint_time;
  std::optional<double> alpha, k0, cutoff, theta0, d0, dt, tmax, fp_tol;
  std::optional<long> particles;
  std::optional<int> modes, record_points, fp_max_iters;
  std::optional<std::uint64_t> seed;
  bool track_stream = false;

  void attach(CLI::App* app) {
    app->add_option("--preset", preset, "named experiment preset");
    app->add_option("--config", config_file, "key = value configuration file");
    app->add_option("--scheme", scheme, "integrator")
        ->check(CLI::IsMember({"sp", "em"}));
    app->add_option("--spectrum", spectrum,
                    "spectrum tag: e1..e7, powerlaw2d, powerlaw3d");
    app->add_option("--alpha", alpha, "power-law exponent alpha in (0,1)");
    app->add_option("--k0", k0, "characteristic wavenumber");
    app->add_option("--cutoff", cutoff, "power-law cutoff L");
    app->add_option("--theta0", theta0, "time-decorrelation strength");
    app->add_option("--d0", d0, "molecular diffusivity D0 = sigma^2 / 2");
    app->add_option("--dt", dt, "time step");
    app->add_option("--tmax", tmax, "final time");
    app->add_option("--particles", particles, "number of particles");
    app->add_option("--modes", modes, "Fourier modes per realization");
    app->add_option("--seed", seed, "master seed");
    app->add_option("--field-mode", field_mode, "field sharing")
        ->check(CLI::IsMember({"per-particle", "shared"}));
    app->add_flag("--track-stream", track_stream,
                  "record the ensemble mean of the stream function (2D)");
    app->add_option("--record-points", record_points,
                    "number of record times");
    app->add_option("--record-spacing", record_spacing, "record spacing")
        ->check(CLI::IsMember({"log", "linear"}));
    app->add_option("--midpoint-time", midpoint_time,
                    "time argument of the midpoint velocity")
        ->check(CLI::IsMember({"mid", "start"}));
    app->add_option("--fp-tol", fp_tol, "fixed-point residual tolerance");
    app->add_option("--fp-max-iters", fp_max_iters,
                    "fixed-point iteration cap");
  }

  std::vector<tf::Setting> settings() const {
    std::vector<tf::Setting> out;
    if (config_file) {
      std::ifstream in(*config_file);
      if (!in) {
        throw tf::ConfigError("config",
                              "cannot open config file '" + *config_file + "'");
      }
      out = tf::parse_config_text(in, *config_file);
    }
    auto put = [&](const char* key, const std::string& v) {
      out.push_back({key, v, std::string("--") + key});
    };
    auto put_real = [&](const char* key, const std::optional<double>& v) {
      if (v) put(key, g17(*v));
    };
    if (scheme) put("scheme", *scheme);
    if (spectrum) put("spectrum", *spectrum);
    put_real("alpha", alpha);
    put_real("k0", k0);
    put_real("cutoff", cutoff);
    put_real("theta0", theta0);
    put_real("d0", d0);
    put_real("dt", dt);
    put_real("tmax", tmax);
    put_real("fp_tol", fp_tol);
    if (particles) put("particles", std::to_string(*particles));
    if (modes) put("modes", std::to_string(*modes));
    if (record_points) put("record_points", std::to_string(*record_points));
    if (fp_max_iters) put("fp_max_iters", std::to_string(*fp_max_iters));
    if (seed) put("seed", std::to_string(*seed));
    if (field_mode) put("field_mode", *field_mode);
    if (record_spacing) put("record_spacing", *record_spacing);
    if (midpoint_time) put("midpoint_time", *midpoint_time);
    if (track_stream) put("track_stream", "true");
    return out;
  }
};

std::string output_path_for(const std::string& base, const std::string& label,
                            bool multi) {
  if (!multi) return base;
  std::filesystem::path p(base);
  const std::string stem = p.stem().string();
  const std::string ext = p.has_extension() ? p.extension().string() : ".csv";
  return (p.parent_path() / (stem + "-" + label + ext)).string();
}

void print_fit_summary(std::ostream& os, const tf::DispersionSeries& s,
                       const tf::ExperimentConfig* cfg) {
  try {
    const auto lim = tf::diffusivity_limit(s, 0, 0);
    os << "  D11 limit: " << (lim.converged ? "converged" : "not converged")
       << " value=" << lim.value << " stderr=" << lim.stderr_
       << " rel_drift=" << lim.rel_drift << " t_stat=" << lim.t_stat
       << " trend=" << tf::trend_tag(lim.trend) << "\n";
  } catch (const tf::Error& e) {
    os << "  D11 limit: unavailable (" << e.what() << ")\n";
  }
  try {
    const auto f = tf::power_law_fit(s);
    os << "  power law on [" << f.window.first << ", " << f.window.second
       << "]: mu=" << g17(f.mu) << " stderr=" << f.stderr_mu
       << " r2=" << f.r_squared;
    if (cfg && tf::is_power_law(cfg->spectrum.family)) {
      os << " theory=" << tf::theoretical_exponent(cfg->spectrum);
    }
    os << "\n";
  } catch (const tf::Error& e) {
    os << "  power law: unavailable (" << e.what() << ")\n";
  }
  if (s.mean_stream) {
    try {
      const auto p = tf::psi_decay_fit(s);
      os << "  psi decay: rate=" << g17(p.rate) << " r2=" << p.r_squared
         << " points=" << p.n_points << " t_end=" << p.t_end << "\n";
    } catch (const tf::Error& e) {
      os << "  psi decay: unavailable (" << e.what() << ")\n";
    }
  }
}

int cmd_run(const ConfigFlags& flags, const std::optional<std::string>& out,
            int threads) {
  const auto runs = tf::resolve_config(flags.preset, flags.settings());
  const std::string base =
      out.value_or((flags.preset ? *flags.preset : std::string("run")) +
                   ".csv");
  const bool multi = runs.size() > 1;
  for (const auto& [label, cfg] : runs) {
    const std::string path = output_path_for(base, label, multi);
    const std::string started = iso_now();
    std::cout << (flags.preset ? *flags.preset : std::string("run")) << " ["
              << label << "] -> " << path << "\n";
    const auto series = tf::run(cfg, tf::RunOptions{threads});

    auto echo = tf::config_echo(cfg);
    if (flags.preset) echo.insert(echo.begin(), {"preset", *flags.preset});
    std::ostringstream csv;
    tf::write_csv(csv, series, echo);
    const std::string bytes = csv.str();
    {
      std::ofstream f(path, std::ios::binary);
      if (!f) throw tf::ConfigError("out", "cannot write '" + path + "'");
      f << bytes;
    }

    nlohmann::ordered_json manifest;
    nlohmann::ordered_json jc;
    for (const auto& [k, v] : tf::config_echo(cfg)) jc[k] = v;
    manifest["config"] = jc;
    manifest["output_path"] = path;
    manifest["preset_name"] =
        flags.preset ? nlohmann::ordered_json(*flags.preset) : nullptr;
    manifest["started"] = started;
    manifest["finished"] = iso_now();
    manifest["artifact_digests"] = {{"csv_fnv1a64", fnv1a_hex(bytes)},
                                    {"config_fnv1a64", series.config_digest}};
    std::ofstream(path + ".manifest.json") << manifest.dump(2) << "\n";

    print_fit_summary(std::cout, series, &cfg);
  }
  return kExitOk;
}

int cmd_classify(const std::string& tag, std::optional<double> alpha,
                 std::optional<double> k0, std::optional<double> cutoff) {
  const auto fam = tf::parse_family(tag);
  if (!fam) {
    throw tf::ConfigError("spectrum", "unknown spectrum '" + tag + "'");
  }
  tf::SpectrumSpec spec;
  spec.family = *fam;
  if (k0) spec.k0 = *k0;
  spec.alpha = alpha;
  if (tf::is_power_law(*fam)) spec.cutoff_L = cutoff.value_or(1.0);
  spec.validate();
  const auto sc = tf::evaluate_sharp_condition(spec);
  std::cout << "spectrum: " << tf::family_tag(*fam) << "\n"
            << "class: "
            << (sc.cls == tf::DiffusionClass::Diffusive ? "Diffusive"
                                                        : "Anomalous")
            << "\n"
            << "sharp integral: " << g17(sc.integral) << " ("
            << (sc.analytic ? "analytic" : "numeric") << ")\n";
  if (tf::is_power_law(*fam)) {
    std::cout << "mu: " << tf::theoretical_exponent(spec) << "\n";
  }
  return kExitOk;
}

int cmd_verify(std::optional<double> dt, std::optional<std::uint64_t> seed) {
  tf::VerifyOptions opt;
  opt.dt = dt;
  if (seed) opt.seed = *seed;
  const auto rep = tf::run_verification(opt);
  for (const auto& c : rep.checks) {
    std::printf("%-4s %-22s worst=%.3e threshold=%.1e probes=%ld\n",
                c.passed ? "PASS" : "FAIL", c.name.c_str(), c.worst,
                c.threshold, c.probes);
  }
  if (rep.solver_failure) {
    std::printf("FAIL solver-range: %s\n", rep.solver_failure->c_str());
    return kExitRunFailure;
  }
  return rep.passed() ? kExitOk : kExitVerify;
}

int cmd_fit(const std::string& path, std::optional<double> t_lo,
            std::optional<double> t_hi) {
  std::ifstream in(path);
  if (!in) throw tf::ConfigError("csv", "cannot open '" + path + "'");
  const auto s = tf::read_csv(in);
  std::optional<std::pair<double, double>> window;
  if (t_lo || t_hi) {
    const auto d = tf::last_decade(s);
    window = std::make_pair(t_lo.value_or(d.first), t_hi.value_or(d.second));
  }
  const auto f = tf::power_law_fit(s, window);
  std::cout << "record,mu,log_prefactor,t_lo,t_hi,r_squared,stderr_mu\n"
            << "power_law_fit," << g17(f.mu) << "," << g17(f.log_prefactor)
            << "," << g17(f.window.first) << "," << g17(f.window.second)
            << "," << g17(f.r_squared) << "," << g17(f.stderr_mu) << "\n";
  print_fit_summary(std::cout, s, nullptr);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tracerflow: passive tracer transport in random flows"};
  app.require_subcommand(1);

  ConfigFlags run_flags;
  std::optional<std::string> out;
  int threads = 0;
  auto* run = app.add_subcommand("run", "run an ensemble and write a CSV");
  run_flags.attach(run);
  run->add_option("--out", out, "output CSV path");
  run->add_option("--threads", threads, "worker threads (0: all cores)");

  std::string tag;
  std::optional<double> c_alpha, c_k0, c_cutoff;
  auto* classify = app.add_subcommand("classify", "classify a spectrum");
  classify->add_option("spectrum", tag, "spectrum tag")->required();
  classify->add_option("--alpha", c_alpha, "power-law exponent");
  classify->add_option("--k0", c_k0, "characteristic wavenumber");
  classify->add_option("--cutoff", c_cutoff, "power-law cutoff L");

  std::optional<double> v_dt;
  std::optional<std::uint64_t> v_seed;
  auto* verify = app.add_subcommand("verify", "run the verification suites");
  verify->add_option("--dt", v_dt, "override the probe time step");
  verify->add_option("--seed", v_seed, "probe seed");

  std::string csv;
  std::optional<double> t_lo, t_hi;
  auto* fit = app.add_subcommand("fit", "re-fit an existing CSV");
  fit->add_option("csv", csv, "dispersion CSV")->required();
  fit->add_option("--t-lo", t_lo, "fit window start");
  fit->add_option("--t-hi", t_hi, "fit window end");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*run) return cmd_run(run_flags, out, threads);
    if (*classify) return cmd_classify(tag, c_alpha, c_k0, c_cutoff);
    if (*verify) return cmd_verify(v_dt, v_seed);
    if (*fit) return cmd_fit(csv, t_lo, t_hi);
  } catch (const tf::ConfigError& e) {
    std::cerr << "config error";
    if (!e.field().empty()) std::cerr << " [" << e.field() << "]";
    std::cerr << ": " << e.what() << "\n";
    return kExitConfig;
  } catch (const tf::Error& e) {
    std::cerr << "run failure: " << e.what() << "\n";
    return kExitRunFailure;
  } catch (const std::exception& e) {
    std::cerr << "run failure: " << e.what() << "\n";
    return kExitRunFailure;
  }
  return kExitOk;
}
