// Copyright 2026 The tracerflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "tracerflow/config.hpp"
#include "tracerflow/ensemble.hpp"
#include "tracerflow/errors.hpp"
#include "tracerflow/field.hpp"
#include "tracerflow/integrator.hpp"
#include "tracerflow/rng.hpp"
#include "tracerflow/spectrum.hpp"
#include "tracerflow/stats.hpp"
#include "tracerflow/vec.hpp"
#include "tracerflow/verify.hpp"
