// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The boostedprob Authors

// Umbrella header for the library (everything except the CLI).
#pragma once

#include "boostedprob/cluster.hpp"
#include "boostedprob/compare.hpp"
#include "boostedprob/corpus_io.hpp"
#include "boostedprob/distribution.hpp"
#include "boostedprob/entropy.hpp"
#include "boostedprob/eval.hpp"
#include "boostedprob/parallel.hpp"
#include "boostedprob/scoring.hpp"
#include "boostedprob/synthlab.hpp"
