// Copyright 2026 The tracerflow Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <sstream>

#include "test_util.hpp"

namespace tf = tracerflow;

namespace {

std::vector<tf::Setting> parse(const std::string& text) {
  std::istringstream in(text);
  return tf::parse_config_text(in, "test.cfg");
}

std::string field_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const tf::ConfigError& e) {
    return e.field();
  }
  return "<no error>";
}

const char* kMinimal =
    "# comment\n"
    "scheme = sp\n"
    "spectrum = e2\n"
    "dt = 0.05\n"
    "\n"
    "tmax = 10\n";

}  // namespace

TEST(ConfigText, ParsesKeyValueLines) {
  const auto s = parse(kMinimal);
  ASSERT_EQ(s.size(), 4u);
  EXPECT_EQ(s[0].key, "scheme");
  EXPECT_EQ(s[0].value, "sp");
  EXPECT_EQ(s[3].origin, "test.cfg:6");
}

TEST(ConfigText, MalformedLineReportsLocation) {
  try {
    parse("dt = 0.1\nnot a setting\n");
    FAIL();
  } catch (const tf::ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("test.cfg:2"), std::string::npos);
  }
}

TEST(Resolve, MinimalConfig) {
  const auto runs = tf::resolve_config(std::nullopt, parse(kMinimal));
  ASSERT_EQ(runs.size(), 1u);
  const auto& c = runs[0].second;
  EXPECT_EQ(runs[0].first, "sp");
  EXPECT_EQ(c.spectrum.family, tf::SpectrumFamily::E2);
  EXPECT_DOUBLE_EQ(c.scheme_cfg.dt, 0.05);
  EXPECT_DOUBLE_EQ(c.t_max, 10.0);
}

TEST(Resolve, MissingRequiredFieldIsNamed) {
  auto s = parse("scheme = sp\nspectrum = e1\ntmax = 10\n");
  EXPECT_EQ(field_of([&] { tf::resolve_config(std::nullopt, s); }), "dt");
  try {
    tf::resolve_config(std::nullopt, s);
  } catch (const tf::ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("missing required field 'dt'"), std::string::npos);
  }
}

TEST(Resolve, UnknownKeyAndBadValues) {
  auto base = parse(kMinimal);
  auto with = [&](const std::string& k, const std::string& v) {
    auto s = base;
    s.push_back({k, v, "flag"});
    return s;
  };
  EXPECT_EQ(field_of([&] { tf::resolve_config(std::nullopt, with("bogus", "1")); }), "bogus");
  EXPECT_EQ(field_of([&] { tf::resolve_config(std::nullopt, with("dt", "fast")); }), "dt");
  EXPECT_EQ(field_of([&] { tf::resolve_config(std::nullopt, with("dt", "-1")); }), "dt");
  EXPECT_EQ(field_of([&] { tf::resolve_config(std::nullopt, with("scheme", "rk4")); }), "scheme");
  EXPECT_EQ(field_of([&] { tf::resolve_config(std::nullopt, with("particles", "1")); }), "particles");
  EXPECT_EQ(field_of([&] { tf::resolve_config(std::nullopt, with("alpha", "0.5")); }), "alpha");
  EXPECT_EQ(field_of([&] { tf::resolve_config(std::string("nope"), {}); }), "preset");
}

TEST(Resolve, EveryKeyIsAccepted) {
  const std::map<std::string, std::string> values{
      {"spectrum", "powerlaw2d"}, {"k0", "1"}, {"alpha", "0.5"}, {"cutoff", "2"},
      {"theta0", "1"}, {"scheme", "em"}, {"dt", "0.1"}, {"d0", "0.1"},
      {"fp_tol", "1e-11"}, {"fp_max_iters", "50"}, {"midpoint_time", "start"},
      {"tmax", "5"}, {"particles", "10"}, {"modes", "8"}, {"field_mode", "shared"},
      {"record_points", "9"}, {"record_spacing", "linear"}, {"record_times", "1, 2, 5"},
      {"seed", "7"}, {"track_stream", "true"}};
  std::vector<tf::Setting> s;
  for (const auto& k : tf::config_keys()) {
    ASSERT_TRUE(values.count(k)) << k;
    s.push_back({k, values.at(k), "test"});
  }
  const auto c = tf::resolve_config(std::nullopt, s).at(0).second;
  EXPECT_EQ(c.spectrum.family, tf::SpectrumFamily::PowerLaw2D);
  EXPECT_DOUBLE_EQ(*c.spectrum.cutoff_L, 2.0);
  EXPECT_EQ(c.scheme_cfg.scheme, tf::Scheme::EulerMaruyama);
  EXPECT_EQ(c.scheme_cfg.midpoint_time, tf::MidpointTime::StepStart);
  EXPECT_EQ(c.field_mode, tf::FieldMode::Shared);
  EXPECT_EQ(c.record_times, (std::vector<double>{1, 2, 5}));
  EXPECT_EQ(c.master_seed, 7u);
  EXPECT_TRUE(c.track_stream);
}

TEST(Resolve, EchoReappliesToSameConfig) {
  const auto c = tf::resolve_config(std::string("fig8-alpha0.5"), {}).at(0).second;
  std::vector<tf::Setting> s;
  for (const auto& [k, v] : tf::config_echo(c)) s.push_back({k, v, "echo"});
  const auto d = tf::resolve_config(std::nullopt, s).at(0).second;
  EXPECT_EQ(tf::config_digest(c), tf::config_digest(d));
}

TEST(Presets, TrappingPreset) {
  const auto runs = tf::resolve_config(std::string("fig1-sp-dt0.1"), {});
  ASSERT_EQ(runs.size(), 1u);
  const auto& c = runs[0].second;
  EXPECT_EQ(c.spectrum.family, tf::SpectrumFamily::E1);
  EXPECT_EQ(c.theta0, 0.0);
  EXPECT_EQ(c.scheme_cfg.d0, 0.0);
  EXPECT_EQ(c.scheme_cfg.scheme, tf::Scheme::StructurePreserving);
  EXPECT_DOUBLE_EQ(c.scheme_cfg.dt, 0.1);
  EXPECT_EQ(c.n_particles, 5000);
  EXPECT_EQ(c.n_modes, 100);
  EXPECT_DOUBLE_EQ(c.t_max, 1000.0);
}

TEST(Presets, PowerLawPresetRunsBothSchemes) {
  const auto runs = tf::resolve_config(std::string("fig8-alpha0.5"), {});
  ASSERT_EQ(runs.size(), 2u);
  EXPECT_EQ(runs[0].first, "sp");
  EXPECT_EQ(runs[1].first, "em");
  for (const auto& [label, c] : runs) {
    EXPECT_EQ(c.spectrum.family, tf::SpectrumFamily::PowerLaw2D);
    EXPECT_DOUBLE_EQ(*c.spectrum.alpha, 0.5);
  }
  const auto em = tf::resolve_config(std::string("fig8-alpha0.5"), {{"scheme", "em", "flag"}});
  ASSERT_EQ(em.size(), 1u);
  EXPECT_EQ(em[0].first, "em");
}

TEST(Presets, OverridesApplyOnTop) {
  const auto c = tf::resolve_config(std::string("fig1-sp-dt0.1"),
                                    {{"particles", "64", "flag"}, {"tmax", "5", "flag"}})
                     .at(0)
                     .second;
  EXPECT_EQ(c.n_particles, 64);
  EXPECT_DOUBLE_EQ(c.t_max, 5.0);
}

TEST(Presets, AllValidateAndArePure) {
  for (const auto& p : tf::presets()) {
    const auto a = tf::resolve_config(p.name, {});
    const auto b = tf::resolve_config(p.name, {});
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_EQ(tf::config_echo(a[i].second), tf::config_echo(b[i].second)) << p.name;
    }
  }
  for (const char* name : {"fig1", "fig2-d0.1", "fig3", "fig4-th1-d0.1", "fig5-th0",
                           "fig6", "fig7", "fig9", "fig10-alpha0.75", "psi-decay",
                           "psi-drift"}) {
    EXPECT_NE(tf::find_preset(name), nullptr) << name;
  }
}
