// Copyright 2026 The tracerflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "tracerflow/errors.hpp"
#include "tracerflow/field.hpp"
#include "tracerflow/integrator.hpp"
#include "tracerflow/rng.hpp"
#include "tracerflow/spectrum.hpp"

namespace tracerflow {

/// PerParticle: every particle sees its own realization (annealed average
/// over fields and Brownian paths). Shared: one realization for all.
enum class FieldMode { PerParticle, Shared };
enum class RecordSpacing { Log, Linear };

struct ExperimentConfig {
  SpectrumSpec spectrum;
  double theta0 = 0.0;
  SchemeConfig scheme_cfg;
  double t_max = 1000.0;
  long n_particles = 5000;
  int n_modes = 100;
  FieldMode field_mode = FieldMode::PerParticle;
  /// Explicit record times; when empty, `record_points` times spaced per
  /// `record_spacing` between dt and t_max are used.
  std::vector<double> record_times;
  int record_points = 64;
  RecordSpacing record_spacing = RecordSpacing::Log;
  std::uint64_t master_seed = 1;
  bool track_stream = false;

  int dim() const noexcept { return spectrum.dim(); }

  void validate() const {
    spectrum.validate();
    scheme_cfg.validate();
    if (!(theta0 >= 0.0) || !std::isfinite(theta0)) {
      throw ConfigError("theta0", "theta0 must be a nonnegative number");
    }
    if (!(t_max > 0.0) || !std::isfinite(t_max)) {
      throw ConfigError("tmax", "t_max must be positive");
    }
    if (t_max < scheme_cfg.dt) {
      throw ConfigError("tmax", "t_max must be at least one time step");
    }
    if (n_particles < 2) {
      throw ConfigError("particles", "need at least two particles");
    }
    if (n_modes < 0) throw ConfigError("modes", "n_modes must be >= 0");
    if (record_times.empty() && record_points < 2) {
      throw ConfigError("record_points", "need at least two record points");
    }
    for (std::size_t i = 0; i < record_times.size(); ++i) {
      const double t = record_times[i];
      if (!(t > 0.0 && t <= t_max) ||
          (i > 0 && !(t > record_times[i - 1]))) {
        throw ConfigError("record_times",
                          "record times must increase strictly within "
                          "(0, t_max]");
      }
    }
    if (track_stream && dim() != 2) {
      throw ConfigError("track_stream", "stream tracking is 2D only");
    }
  }
};

/// Number of integration steps and the step indices at which moments are
/// recorded. Record times snap to the nearest step; the last is t_max.
struct RecordPlan {
  long total_steps = 0;
  std::vector<long> steps;
};

inline RecordPlan make_record_plan(const ExperimentConfig& cfg) {
  const double dt = cfg.scheme_cfg.dt;
  RecordPlan plan;
  plan.total_steps = std::max(1L, std::lround(cfg.t_max / dt));
  std::vector<double> wanted = cfg.record_times;
  if (wanted.empty()) {
    const int p = cfg.record_points;
    wanted.resize(p);
    for (int i = 0; i < p; ++i) {
      const double f = static_cast<double>(i) / (p - 1);
      wanted[i] = cfg.record_spacing == RecordSpacing::Log
                      ? dt * std::pow(cfg.t_max / dt, f)
                      : dt + f * (cfg.t_max - dt);
    }
  }
  for (double t : wanted) {
    const long s = std::clamp(std::lround(t / dt), 1L, plan.total_steps);
    if (plan.steps.empty() || s > plan.steps.back()) plan.steps.push_back(s);
  }
  if (plan.steps.back() != plan.total_steps) {
    plan.steps.push_back(plan.total_steps);
  }
  return plan;
}

/// Compensated (Neumaier) summation.
struct CompensatedSum {
  double sum = 0.0;
  double comp = 0.0;

  void add(double v) noexcept {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      comp += (sum - t) + v;
    } else {
      comp += (v - t) + sum;
    }
    sum = t;
  }
  void merge(const CompensatedSum& o) noexcept {
    add(o.sum);
    add(o.comp);
  }
  double value() const noexcept { return sum + comp; }
};

/// Ensemble moments over record times.
struct DispersionSeries {
  int dim = 2;
  std::vector<double> times;
  /// Symmetric matrices <dx_i dx_j>, only the leading dim x dim block used.
  std::vector<Mat<3>> second_moments;
  /// Standard error of each diagonal entry.
  std::vector<Vec<3>> stderr_diag;
  std::optional<std::vector<double>> mean_stream;
  std::optional<std::vector<double>> stream_stderr;
  std::optional<double> mean_stream0;
  std::optional<double> stream0_stderr;
  long n_particles = 0;
  std::string config_digest;

  double trace(std::size_t r) const noexcept {
    double s = 0.0;
    for (int i = 0; i < dim; ++i) s += second_moments[r][i][i];
    return s;
  }
};

/// Per-record sums of displacement products; mergeable in a fixed order so
/// results do not depend on how particles were scheduled.
class MomentAccumulator {
 public:
  MomentAccumulator(int dim, std::size_t n_records)
      : dim_(dim), records_(n_records) {}

  void add(std::size_t r, const Vec<3>& dx,
           std::optional<double> psi = std::nullopt) {
    auto& rec = records_[r];
    int p = 0;
    for (int i = 0; i < dim_; ++i) {
      for (int j = i; j < dim_; ++j) rec.products[p++].add(dx[i] * dx[j]);
      const double sq = dx[i] * dx[i];
      rec.fourth[i].add(sq * sq);
    }
    if (psi) {
      rec.psi.add(*psi);
      rec.psi_sq.add(*psi * *psi);
    }
    if (r == 0) ++count_;
  }

  void add_initial_stream(double psi0) {
    psi0_.add(psi0);
    psi0_sq_.add(psi0 * psi0);
  }

  void merge(const MomentAccumulator& o) {
    for (std::size_t r = 0; r < records_.size(); ++r) {
      auto& a = records_[r];
      const auto& b = o.records_[r];
      for (std::size_t p = 0; p < a.products.size(); ++p) {
        a.products[p].merge(b.products[p]);
      }
      for (int i = 0; i < 3; ++i) a.fourth[i].merge(b.fourth[i]);
      a.psi.merge(b.psi);
      a.psi_sq.merge(b.psi_sq);
    }
    psi0_.merge(o.psi0_);
    psi0_sq_.merge(o.psi0_sq_);
    count_ += o.count_;
  }

  long count() const noexcept { return count_; }

  DispersionSeries finish(const std::vector<double>& times,
                          bool with_stream) const {
    DispersionSeries s;
    s.dim = dim_;
    s.times = times;
    s.n_particles = count_;
    const double n = static_cast<double>(count_);
    auto sem = [n](double mean, double mean_sq) {
      if (n < 2) return 0.0;
      const double var = std::max(0.0, (mean_sq - mean * mean) * n / (n - 1));
      return std::sqrt(var / n);
    };
    for (const auto& rec : records_) {
      Mat<3> m{};
      Vec<3> se{};
      int p = 0;
      for (int i = 0; i < dim_; ++i) {
        for (int j = i; j < dim_; ++j) {
          m[i][j] = m[j][i] = rec.products[p++].value() / n;
        }
        se[i] = sem(m[i][i], rec.fourth[i].value() / n);
      }
      s.second_moments.push_back(m);
      s.stderr_diag.push_back(se);
    }
    if (with_stream) {
      std::vector<double> mean, err;
      for (const auto& rec : records_) {
        const double mu = rec.psi.value() / n;
        mean.push_back(mu);
        err.push_back(sem(mu, rec.psi_sq.value() / n));
      }
      s.mean_stream = std::move(mean);
      s.stream_stderr = std::move(err);
      s.mean_stream0 = psi0_.value() / n;
      s.stream0_stderr = sem(*s.mean_stream0, psi0_sq_.value() / n);
    }
    return s;
  }

 private:
  struct Record {
    std::array<CompensatedSum, 6> products;  // 11 12 13 22 23 33 (or 11 12 22)
    std::array<CompensatedSum, 3> fourth;
    CompensatedSum psi;
    CompensatedSum psi_sq;
  };
  int dim_;
  std::vector<Record> records_;
  CompensatedSum psi0_;
  CompensatedSum psi0_sq_;
  long count_ = 0;
};

/// Canonical key/value echo of a configuration; also the input of the
/// configuration digest.
inline std::vector<std::pair<std::string, std::string>> config_echo(
    const ExperimentConfig& cfg) {
  auto num = [](double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  std::vector<std::pair<std::string, std::string>> kv;
  kv.emplace_back("spectrum", std::string(family_tag(cfg.spectrum.family)));
  kv.emplace_back("k0", num(cfg.spectrum.k0));
  if (cfg.spectrum.alpha) kv.emplace_back("alpha", num(*cfg.spectrum.alpha));
  if (cfg.spectrum.cutoff_L) {
    kv.emplace_back("cutoff", num(*cfg.spectrum.cutoff_L));
  }
  kv.emplace_back("theta0", num(cfg.theta0));
  kv.emplace_back("scheme", scheme_tag(cfg.scheme_cfg.scheme));
  kv.emplace_back("dt", num(cfg.scheme_cfg.dt));
  kv.emplace_back("d0", num(cfg.scheme_cfg.d0));
  kv.emplace_back("fp_tol", num(cfg.scheme_cfg.fp_tol));
  kv.emplace_back("fp_max_iters", std::to_string(cfg.scheme_cfg.fp_max_iters));
  kv.emplace_back("midpoint_time",
                  cfg.scheme_cfg.midpoint_time == MidpointTime::StepMid
                      ? "mid"
                      : "start");
  kv.emplace_back("tmax", num(cfg.t_max));
  kv.emplace_back("particles", std::to_string(cfg.n_particles));
  kv.emplace_back("modes", std::to_string(cfg.n_modes));
  kv.emplace_back("field_mode", cfg.field_mode == FieldMode::PerParticle
                                    ? "per-particle"
                                    : "shared");
  if (cfg.record_times.empty()) {
    kv.emplace_back("record_points", std::to_string(cfg.record_points));
    kv.emplace_back("record_spacing",
                    cfg.record_spacing == RecordSpacing::Log ? "log"
                                                             : "linear");
  } else {
    std::string list;
    for (double t : cfg.record_times) {
      if (!list.empty()) list += ' ';
      list += num(t);
    }
    kv.emplace_back("record_times", list);
  }
  kv.emplace_back("seed", std::to_string(cfg.master_seed));
  kv.emplace_back("track_stream", cfg.track_stream ? "true" : "false");
  return kv;
}

/// 64-bit FNV-1a over the canonical echo, as 16 hex digits.
inline std::string config_digest(const ExperimentConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& [k, v] : config_echo(cfg)) {
    for (char c : k + "=" + v + "\n") {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ULL;
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct RunOptions {
  int threads = 0;  // 0: hardware concurrency
  /// Particles per accumulation block. Fixed independently of `threads`,
  /// which is what keeps the output bit-identical across worker counts.
  long block_size = 64;
};

namespace detail {

template <int Dim>
void simulate_block(const ExperimentConfig& cfg, const RecordPlan& plan,
                    const WavevectorSampler& sampler,
                    const FieldRealization<Dim>* shared, long first,
                    long last, MomentAccumulator& acc) {
  const auto& sc = cfg.scheme_cfg;
  const double dt = sc.dt;
  const bool noisy = sc.d0 > 0.0;
  for (long p = first; p < last; ++p) {
    FieldRealization<Dim> own;
    if (!shared) {
      Philox4x32 frng(cfg.master_seed, static_cast<std::uint64_t>(p),
                      StreamPurpose::Field);
      own = generate_field<Dim>(sampler, cfg.n_modes, cfg.theta0, frng);
    }
    const FieldRealization<Dim>& field = shared ? *shared : own;
    Philox4x32 nrng(cfg.master_seed, static_cast<std::uint64_t>(p),
                    StreamPurpose::Noise);
    std::normal_distribution<double> normal;

    Vec<Dim> x{};
    if (cfg.track_stream) {
      if constexpr (Dim == 2) acc.add_initial_stream(field.stream_function_at(x, 0.0));
    }
    Vec<Dim> noise{};
    std::size_t next = 0;
    for (long s = 1; s <= plan.total_steps; ++s) {
      const double t = static_cast<double>(s - 1) * dt;
      if (noisy) {
        for (auto& z : noise) z = normal(nrng);
      }
      try {
        x = sc.scheme == Scheme::StructurePreserving
                ? sp_step(field, x, t, sc, noise)
                : em_step(field, x, t, sc, noise);
      } catch (const FixedPointDiverged& e) {
        throw StepFailure("particle " + std::to_string(p) + " at t=" +
                              std::to_string(t) + ": " + e.what(),
                          p, t);
      }
      if (s == plan.steps[next]) {
        Vec<3> dx{};
        for (int d = 0; d < Dim; ++d) dx[d] = x[d];
        std::optional<double> psi;
        if constexpr (Dim == 2) {
          if (cfg.track_stream) {
            psi = field.stream_function_at(x, static_cast<double>(s) * dt);
          }
        }
        acc.add(next, dx, psi);
        ++next;
      }
    }
  }
}

template <int Dim>
DispersionSeries run_impl(const ExperimentConfig& cfg, const RunOptions& opt) {
  const RecordPlan plan = make_record_plan(cfg);
  const WavevectorSampler sampler(cfg.spectrum);
  std::optional<FieldRealization<Dim>> shared;
  if (cfg.field_mode == FieldMode::Shared) {
    Philox4x32 frng(cfg.master_seed, 0, StreamPurpose::Field);
    shared = generate_field<Dim>(sampler, cfg.n_modes, cfg.theta0, frng);
  }

  const long block = std::max(1L, opt.block_size);
  const long n_blocks = (cfg.n_particles + block - 1) / block;
  std::vector<MomentAccumulator> partial(
      n_blocks, MomentAccumulator(Dim, plan.steps.size()));

  int threads = opt.threads > 0
                    ? opt.threads
                    : static_cast<int>(std::thread::hardware_concurrency());
  threads = static_cast<int>(std::clamp<long>(threads, 1, n_blocks));

  std::atomic<long> next_block{0};
  std::atomic<bool> abort{false};
  std::mutex err_mu;
  long err_block = std::numeric_limits<long>::max();
  std::exception_ptr err;

  auto worker = [&]() {
    for (;;) {
      const long b = next_block.fetch_add(1);
      if (b >= n_blocks || abort.load()) return;
      const long first = b * block;
      const long last = std::min(cfg.n_particles, first + block);
      try {
        simulate_block<Dim>(cfg, plan, sampler, shared ? &*shared : nullptr,
                            first, last, partial[b]);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        // Keep the failure of the lowest block so reports are reproducible.
        if (b < err_block) {
          err_block = b;
          err = std::current_exception();
        }
        abort.store(true);
        return;
      }
    }
  };

  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (err) std::rethrow_exception(err);

  MomentAccumulator total(Dim, plan.steps.size());
  for (const auto& part : partial) total.merge(part);

  std::vector<double> times;
  times.reserve(plan.steps.size());
  for (long s : plan.steps) {
    times.push_back(static_cast<double>(s) * cfg.scheme_cfg.dt);
  }
  DispersionSeries series = total.finish(times, cfg.track_stream);
  series.config_digest = config_digest(cfg);
  return series;
}

}  // namespace detail

/// Runs the Monte Carlo ensemble. Every particle starts at the origin and
/// draws its field (PerParticle) and Brownian increments from Philox
/// substreams keyed by (master_seed, particle id, purpose). Output is
/// bit-identical for any thread count.
inline DispersionSeries run(const ExperimentConfig& cfg,
                            const RunOptions& opt = {}) {
  cfg.validate();
  return cfg.dim() == 2 ? detail::run_impl<2>(cfg, opt)
                        : detail::run_impl<3>(cfg, opt);
}

struct CurvePoint {
  double t = 0.0;
  double value = 0.0;
  double stderr_ = 0.0;  // only for diagonal entries
};

/// D_ij(t) = <dx_i dx_j> / (2t).
inline std::vector<CurvePoint> effective_diffusivity(
    const DispersionSeries& series, int i, int j) {
  if (i < 0 || j < 0 || i >= series.dim || j >= series.dim) {
    throw Error("effective_diffusivity: index out of range");
  }
  std::vector<CurvePoint> out;
  out.reserve(series.times.size());
  for (std::size_t r = 0; r < series.times.size(); ++r) {
    const double t = series.times[r];
    CurvePoint p;
    p.t = t;
    p.value = series.second_moments[r][i][j] / (2.0 * t);
    p.stderr_ = i == j ? series.stderr_diag[r][i] / (2.0 * t) : 0.0;
    out.push_back(p);
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV

inline std::vector<std::string> csv_columns(int dim, bool with_stream) {
  std::vector<std::string> cols{"t", "m11", "m22"};
  if (dim == 3) cols.push_back("m33");
  cols.push_back("m12");
  if (dim == 3) {
    cols.push_back("m13");
    cols.push_back("m23");
  }
  cols.push_back("se11");
  cols.push_back("se22");
  if (dim == 3) cols.push_back("se33");
  if (with_stream) {
    cols.push_back("mean_psi");
    cols.push_back("se_psi");
  }
  return cols;
}

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Writes a series: '#'-prefixed preamble (the `preamble` pairs, then the
/// digest and particle count), a header row, and one row per record time.
inline void write_csv(
    std::ostream& os, const DispersionSeries& s,
    const std::vector<std::pair<std::string, std::string>>& preamble) {
  os << "# tracerflow dispersion series\n";
  for (const auto& [k, v] : preamble) os << "# " << k << " = " << v << "\n";
  os << "# digest = " << s.config_digest << "\n";
  os << "# n_particles = " << s.n_particles << "\n";
  const bool stream = s.mean_stream.has_value();
  if (stream && s.mean_stream0) {
    os << "# mean_psi0 = " << format_double(*s.mean_stream0) << "\n";
    os << "# se_psi0 = " << format_double(s.stream0_stderr.value_or(0.0))
       << "\n";
  }
  const auto cols = csv_columns(s.dim, stream);
  for (std::size_t c = 0; c < cols.size(); ++c) {
    os << (c ? "," : "") << cols[c];
  }
  os << "\n";
  for (std::size_t r = 0; r < s.times.size(); ++r) {
    const auto& m = s.second_moments[r];
    std::vector<double> row{s.times[r], m[0][0], m[1][1]};
    if (s.dim == 3) row.push_back(m[2][2]);
    row.push_back(m[0][1]);
    if (s.dim == 3) {
      row.push_back(m[0][2]);
      row.push_back(m[1][2]);
    }
    for (int i = 0; i < s.dim; ++i) row.push_back(s.stderr_diag[r][i]);
    if (stream) {
      row.push_back((*s.mean_stream)[r]);
      row.push_back((*s.stream_stderr)[r]);
    }
    for (std::size_t c = 0; c < row.size(); ++c) {
      os << (c ? "," : "") << format_double(row[c]);
    }
    os << "\n";
  }
}

/// Parses a CSV written by write_csv. Columns are located by header name;
/// throws Error naming the first missing or malformed column.
inline DispersionSeries read_csv(std::istream& is) {
  DispersionSeries s;
  std::string line;
  std::vector<std::string> header;
  auto trim = [](std::string v) {
    const auto b = v.find_first_not_of(" \t\r");
    const auto e = v.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : v.substr(b, e - b + 1);
  };
  auto split = [&](const std::string& l) {
    std::vector<std::string> out;
    std::stringstream ss(l);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
    return out;
  };
  std::vector<std::vector<double>> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = trim(line.substr(1, eq - 1));
      const std::string val = trim(line.substr(eq + 1));
      if (key == "digest") s.config_digest = val;
      if (key == "n_particles") s.n_particles = std::stol(val);
      if (key == "mean_psi0") s.mean_stream0 = std::stod(val);
      if (key == "se_psi0") s.stream0_stderr = std::stod(val);
      continue;
    }
    if (header.empty()) {
      header = split(line);
      continue;
    }
    std::vector<double> row;
    for (const auto& cell : split(line)) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw Error("malformed CSV value '" + cell + "'");
      }
    }
    if (row.size() != header.size()) {
      throw Error("CSV row has " + std::to_string(row.size()) +
                  " fields, header has " + std::to_string(header.size()));
    }
    rows.push_back(std::move(row));
  }
  auto col = [&](const std::string& name) -> std::optional<std::size_t> {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (header[c] == name) return c;
    }
    return std::nullopt;
  };
  auto need = [&](const std::string& name) {
    auto c = col(name);
    if (!c) throw Error("CSV is missing column '" + name + "'");
    return *c;
  };
  s.dim = col("m33") ? 3 : 2;
  const auto want = csv_columns(s.dim, col("mean_psi").has_value());
  for (const auto& name : want) need(name);
  const bool stream = col("mean_psi").has_value();
  if (stream) {
    s.mean_stream.emplace();
    s.stream_stderr.emplace();
  }
  const std::string diag[3] = {"m11", "m22", "m33"};
  const std::string se[3] = {"se11", "se22", "se33"};
  for (const auto& row : rows) {
    s.times.push_back(row[need("t")]);
    Mat<3> m{};
    Vec<3> e{};
    for (int i = 0; i < s.dim; ++i) {
      m[i][i] = row[need(diag[i])];
      e[i] = row[need(se[i])];
    }
    m[0][1] = m[1][0] = row[need("m12")];
    if (s.dim == 3) {
      m[0][2] = m[2][0] = row[need("m13")];
      m[1][2] = m[2][1] = row[need("m23")];
    }
    s.second_moments.push_back(m);
    s.stderr_diag.push_back(e);
    if (stream) {
      s.mean_stream->push_back(row[need("mean_psi")]);
      s.stream_stderr->push_back(row[need("se_psi")]);
    }
  }
  if (s.times.empty()) throw Error("CSV contains no data rows");
  return s;
}

}  // namespace tracerflow
