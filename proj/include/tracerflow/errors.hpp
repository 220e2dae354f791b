// Copyright 2026 The tracerflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace tracerflow {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// spectrum
class SingularSpectrum : public Error {
 public:
  using Error::Error;
};
class NonPositiveWavenumber : public Error {
 public:
  using Error::Error;
};
class QuadratureFailure : public Error {
 public:
  using Error::Error;
};
class NotPowerLaw : public Error {
 public:
  using Error::Error;
};

// field
class DegenerateMode : public Error {
 public:
  using Error::Error;
};
class WrongDimension : public Error {
 public:
  using Error::Error;
};

// integrator
class FixedPointDiverged : public Error {
 public:
  FixedPointDiverged(const std::string& what, double residual, int iterations)
      : Error(what), residual_(residual), iterations_(iterations) {}
  double residual() const noexcept { return residual_; }
  int iterations() const noexcept { return iterations_; }

 private:
  double residual_;
  int iterations_;
};

// ensemble
class StepFailure : public Error {
 public:
  StepFailure(const std::string& what, long particle, double time)
      : Error(what), particle_(particle), time_(time) {}
  long particle() const noexcept { return particle_; }
  double time() const noexcept { return time_; }

 private:
  long particle_;
  double time_;
};

// stats
class InsufficientPoints : public Error {
 public:
  using Error::Error;
};
class NonPositiveMoment : public Error {
 public:
  using Error::Error;
};
class SignalTooWeak : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration value; `field()` names the offending key.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& field, const std::string& what)
      : Error(what), field_(field) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace tracerflow
