//
// Copyright 2026 The streamprune Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#pragma once

#include "streamprune/config.hpp"
#include "streamprune/error.hpp"
#include "streamprune/flowsim.hpp"
#include "streamprune/matching.hpp"
#include "streamprune/metrics.hpp"
#include "streamprune/pruning.hpp"
#include "streamprune/results_csv.hpp"
#include "streamprune/rng.hpp"
#include "streamprune/synth.hpp"
#include "streamprune/time.hpp"
#include "streamprune/trace.hpp"
#include "streamprune/trace_csv.hpp"

namespace streamprune {
inline constexpr const char* kVersion = "0.1.0";
}  // namespace streamprune
