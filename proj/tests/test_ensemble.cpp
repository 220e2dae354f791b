// Copyright 2026 The tracerflow Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "test_util.hpp"

namespace tf = tracerflow;
using tf::ExperimentConfig;
using tf::SpectrumFamily;
using tf::SpectrumSpec;

namespace {

ExperimentConfig small_config(SpectrumFamily f = SpectrumFamily::E1) {
  ExperimentConfig c;
  c.spectrum = SpectrumSpec::make(f);
  c.theta0 = 1.0;
  c.scheme_cfg.dt = 0.1;
  c.scheme_cfg.d0 = 0.1;
  c.t_max = 20.0;
  c.n_particles = 200;
  c.n_modes = 32;
  c.record_points = 16;
  return c;
}

std::string csv_of(const tf::DispersionSeries& s) {
  std::ostringstream os;
  tf::write_csv(os, s, {});
  return os.str();
}

tf::Vec<3> v3(double a, double b, double c) { return {a, b, c}; }

}  // namespace

TEST(RecordPlan, LogSpacingSnapsAndEndsAtTmax) {
  ExperimentConfig c = small_config();
  c.t_max = 1000.0;
  c.record_points = 64;
  const auto plan = tf::make_record_plan(c);
  EXPECT_EQ(plan.total_steps, 10000);
  EXPECT_EQ(plan.steps.front(), 1);
  EXPECT_EQ(plan.steps.back(), 10000);
  EXPECT_TRUE(std::is_sorted(plan.steps.begin(), plan.steps.end()));
  EXPECT_EQ(std::adjacent_find(plan.steps.begin(), plan.steps.end()), plan.steps.end());
  EXPECT_LE(plan.steps.size(), 64u);
}

TEST(RecordPlan, ExplicitTimesSnapToSteps) {
  ExperimentConfig c = small_config();
  c.scheme_cfg.dt = 0.5;
  c.t_max = 10.0;
  c.record_times = {0.6, 0.7, 3.0, 7.26};
  const auto plan = tf::make_record_plan(c);
  EXPECT_EQ(plan.steps, (std::vector<long>{1, 6, 15, 20}));
}

TEST(Config, ValidationNamesTheField) {
  auto expect_field = [](ExperimentConfig c, const std::string& field) {
    try {
      c.validate();
      ADD_FAILURE() << field;
    } catch (const tf::ConfigError& e) {
      EXPECT_EQ(e.field(), field);
    }
  };
  ExperimentConfig c = small_config();
  c.n_particles = 1;
  expect_field(c, "particles");
  c = small_config();
  c.theta0 = -1.0;
  expect_field(c, "theta0");
  c = small_config();
  c.t_max = 0.0;
  expect_field(c, "tmax");
  c = small_config();
  c.record_times = {2.0, 1.0};
  expect_field(c, "record_times");
  c = small_config();
  c.spectrum = SpectrumSpec::make(SpectrumFamily::E3);
  c.track_stream = true;
  expect_field(c, "track_stream");
}

TEST(Accumulator, InvariantUnderParticleOrder) {
  tf::Philox4x32 rng(1, 0);
  std::normal_distribution<double> g;
  std::vector<tf::Vec<3>> dx(1000);
  for (auto& d : dx) d = v3(g(rng) * 1e3, g(rng), g(rng) * 1e-3);
  auto moments = [&](const std::vector<int>& order, std::size_t chunk) {
    std::vector<tf::MomentAccumulator> parts;
    for (std::size_t i = 0; i < order.size(); i += chunk) {
      tf::MomentAccumulator a(3, 1);
      for (std::size_t j = i; j < std::min(order.size(), i + chunk); ++j) a.add(0, dx[order[j]]);
      parts.push_back(a);
    }
    tf::MomentAccumulator total(3, 1);
    for (const auto& p : parts) total.merge(p);
    return total.finish({1.0}, false);
  };
  std::vector<int> order(dx.size());
  std::iota(order.begin(), order.end(), 0);
  const auto a = moments(order, 64);
  std::shuffle(order.begin(), order.end(), rng);
  const auto b = moments(order, 37);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const double x = a.second_moments[0][i][j], y = b.second_moments[0][i][j];
      EXPECT_NEAR(x, y, 1e-12 * std::abs(x)) << i << j;
    }
  }
  EXPECT_EQ(a.n_particles, 1000);
}

TEST(Accumulator, StandardErrorOfKnownSample) {
  tf::MomentAccumulator a(2, 1);
  // dx1^2 takes values 1 and 9: mean 5, sample variance 32, se sqrt(32/2).
  a.add(0, v3(1.0, 0.0, 0.0));
  a.add(0, v3(-3.0, 0.0, 0.0));
  const auto s = a.finish({2.0}, false);
  EXPECT_DOUBLE_EQ(s.second_moments[0][0][0], 5.0);
  EXPECT_NEAR(s.stderr_diag[0][0], 4.0, 1e-14);
}

TEST(Ensemble, BrownianOnlyRecoversMolecularDiffusivity) {
  ExperimentConfig c = small_config();
  c.n_modes = 0;
  c.scheme_cfg.d0 = 0.25;
  c.n_particles = 4000;
  c.t_max = 10.0;
  for (auto scheme : {tf::Scheme::StructurePreserving, tf::Scheme::EulerMaruyama}) {
    c.scheme_cfg.scheme = scheme;
    const auto s = tf::run(c);
    for (const auto& p : tf::effective_diffusivity(s, 0, 0)) {
      EXPECT_NEAR(p.value, 0.25, 3.0 * p.stderr_) << "t=" << p.t;
    }
  }
}

TEST(Ensemble, DeterministicAcrossThreadCounts) {
  ExperimentConfig c = small_config();
  c.n_particles = 300;  // several blocks, the last one partial
  tf::RunOptions one{1}, many{8};
  EXPECT_EQ(csv_of(tf::run(c, one)), csv_of(tf::run(c, many)));
  c.field_mode = tf::FieldMode::Shared;
  c.track_stream = true;
  EXPECT_EQ(csv_of(tf::run(c, one)), csv_of(tf::run(c, many)));
  c = small_config(SpectrumFamily::E4);
  c.n_particles = 130;
  EXPECT_EQ(csv_of(tf::run(c, one)), csv_of(tf::run(c, many)));
}

TEST(Ensemble, SeedChangesResults) {
  ExperimentConfig c = small_config();
  const auto a = tf::run(c);
  c.master_seed = 2;
  const auto b = tf::run(c);
  EXPECT_NE(a.second_moments.back()[0][0], b.second_moments.back()[0][0]);
  EXPECT_NE(a.config_digest, b.config_digest);
}

TEST(Ensemble, SharedFieldInitialStream) {
  ExperimentConfig c = small_config();
  c.field_mode = tf::FieldMode::Shared;
  c.track_stream = true;
  c.scheme_cfg.d0 = 0.0;
  const auto s = tf::run(c);
  tf::Philox4x32 rng(c.master_seed, 0, tf::StreamPurpose::Field);
  const auto f = tf::generate_field<2>(c.spectrum, c.n_modes, c.theta0, rng);
  ASSERT_TRUE(s.mean_stream0.has_value());
  EXPECT_NEAR(*s.mean_stream0, f.stream_function({0.0, 0.0}), 1e-12);
  // Without noise every particle follows one path.
  EXPECT_LT(s.stderr_diag.back()[0], 1e-6 * (1 + s.second_moments.back()[0][0]));
}

TEST(Ensemble, SharedStreamConservedWithoutNoise) {
  ExperimentConfig c = small_config();
  c.field_mode = tf::FieldMode::Shared;
  c.track_stream = true;
  c.scheme_cfg.d0 = 0.0;
  c.t_max = 100.0;
  c.theta0 = 0.0;
  const auto s = tf::run(c);
  for (double m : *s.mean_stream) EXPECT_NEAR(m, *s.mean_stream0, 1e-3);
}

TEST(Ensemble, StepFailureNamesParticle) {
  ExperimentConfig c = small_config(SpectrumFamily::E2);
  c.scheme_cfg.dt = 20.0;
  c.t_max = 200.0;
  c.n_modes = 100;
  try {
    tf::run(c, tf::RunOptions{1});
    FAIL() << "expected a step failure";
  } catch (const tf::StepFailure& e) {
    EXPECT_GE(e.particle(), 0);
    EXPECT_LT(e.particle(), c.n_particles);
    EXPECT_GE(e.time(), 0.0);
    EXPECT_LT(e.time(), c.t_max);
  }
}

TEST(Ensemble, StepFailureIndependentOfThreads) {
  ExperimentConfig c = small_config(SpectrumFamily::E2);
  c.scheme_cfg.dt = 20.0;
  c.t_max = 200.0;
  c.n_modes = 100;
  auto failing = [&](int threads) {
    try {
      tf::run(c, tf::RunOptions{threads});
    } catch (const tf::StepFailure& e) {
      return e.particle();
    }
    return -1L;
  };
  EXPECT_EQ(failing(1), failing(4));
}

TEST(Ensemble, IsotropicDispersion) {
  ExperimentConfig c = small_config();
  c.n_particles = 2000;
  c.t_max = 50.0;
  const auto s = tf::run(c);
  const auto d11 = tf::effective_diffusivity(s, 0, 0).back();
  const auto d22 = tf::effective_diffusivity(s, 1, 1).back();
  EXPECT_LT(std::abs(d11.value - d22.value), 4.0 * std::hypot(d11.stderr_, d22.stderr_));
}

TEST(Ensemble, ConvectionEnhancesDiffusion) {
  struct Case {
    SpectrumFamily f;
    double theta0, d0;
  };
  for (const Case& k : {Case{SpectrumFamily::E1, 1.0, 0.1}, Case{SpectrumFamily::E1, 0.0, 0.5},
                        Case{SpectrumFamily::E2, 1.0, 0.1}, Case{SpectrumFamily::E3, 1.0, 0.1},
                        Case{SpectrumFamily::E4, 0.0, 0.1}}) {
    ExperimentConfig c = small_config(k.f);
    c.theta0 = k.theta0;
    c.scheme_cfg.d0 = k.d0;
    c.scheme_cfg.dt = 0.05;
    c.n_particles = 300;
    c.t_max = 50.0;
    const auto s = tf::run(c);
    for (int i = 0; i < s.dim; ++i) {
      const auto late = tf::effective_diffusivity(s, i, i).back();
      EXPECT_GE(late.value, k.d0 - 3.0 * late.stderr_) << tf::family_tag(k.f);
    }
  }
}

TEST(Csv, RoundTripIsExact) {
  ExperimentConfig c = small_config();
  c.field_mode = tf::FieldMode::Shared;
  c.track_stream = true;
  const auto s = tf::run(c);
  std::istringstream in(csv_of(s));
  const auto r = tf::read_csv(in);
  EXPECT_EQ(r.times, s.times);
  EXPECT_EQ(r.dim, 2);
  EXPECT_EQ(r.n_particles, s.n_particles);
  EXPECT_EQ(r.config_digest, s.config_digest);
  for (std::size_t i = 0; i < s.times.size(); ++i) {
    EXPECT_EQ(r.second_moments[i], s.second_moments[i]);
    EXPECT_EQ(r.stderr_diag[i], s.stderr_diag[i]);
  }
  EXPECT_EQ(*r.mean_stream, *s.mean_stream);
  EXPECT_EQ(*r.mean_stream0, *s.mean_stream0);
}

TEST(Csv, ThreeDimensionalColumns) {
  const auto s = tf::run(small_config(SpectrumFamily::E3));
  const std::string text = csv_of(s);
  EXPECT_NE(text.find("t,m11,m22,m33,m12,m13,m23,se11,se22,se33\n"), std::string::npos);
  std::istringstream in(text);
  const auto r = tf::read_csv(in);
  EXPECT_EQ(r.dim, 3);
  EXPECT_EQ(r.second_moments.back(), s.second_moments.back());
}

TEST(Csv, MissingColumnIsNamed) {
  std::istringstream in("t,m11,m12,se11,se22\n1,2,3,4,5\n");
  try {
    tf::read_csv(in);
    FAIL();
  } catch (const tf::Error& e) {
    EXPECT_NE(std::string(e.what()).find("m22"), std::string::npos) << e.what();
  }
}
