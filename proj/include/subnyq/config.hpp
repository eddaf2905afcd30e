// SPDX-License-Identifier: Apache-2.0
//
// subnyq: joint DOA and carrier estimation for sub-Nyquist array receivers
// Copyright (C) 2026 The subnyq authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef SUBNYQ_CONFIG_HPP
#define SUBNYQ_CONFIG_HPP

#include "subnyq/harness.hpp"

#include <json.hpp>

#include <filesystem>

// JSON scenario and sweep files. A scenario object:
//
//   {
//     "array":   {"sensors": 8, "spacing": 0.5, "propagation_speed": 1.0},
//     "pattern": {"L": 13, "offsets": [0, 2, 3, 5, 8], "nyquist_rate": 1.0},
//     "sources": [{"phase": 0.2, "carrier": 0.35, "amplitude": [1, 0],
//                  "envelope": "tone"}],
//     "snr_db": 20, "noiseless": false, "snapshots": 4096, "seed": 1,
//     "snap_carriers": true
//   }
//
// A source gives either "doa" (rad) or "phase" (spatial phase, rad). The
// envelope is "tone" or "filtered-noise" with a "bandwidth" in Hz (default
// f_N / (10 L), a tenth of one band). Carriers are moved onto the
// f_N / (N L) synthesis grid unless snap_carriers is false.
//
// A sweep file wraps a scenario:
//
//   {"scenario": {...}, "sweep": {"variable": "snr_db", "values": [10, 20]},
//    "trials": 500, "algorithms": ["JDFPI", "JDFSDPJ"], "seed": 7,
//    "grid_step": 0.001}
namespace subnyq
{
    ScenarioConfig scenario_from_json(const nlohmann::json &j);
    nlohmann::json to_json(const ScenarioConfig &c);

    // Missing fields fall back to default_sweep(fallback).
    SweepConfig sweep_from_json(const nlohmann::json &j, SweepVariable fallback);
    nlohmann::json to_json(const SweepConfig &c);

    // Throws std::runtime_error if unreadable, ConfigError if not valid JSON.
    nlohmann::json load_json(const std::filesystem::path &path);
}

#endif
