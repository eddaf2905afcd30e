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

#ifndef SUBNYQ_HARNESS_HPP
#define SUBNYQ_HARNESS_HPP

#include "subnyq/estimators.hpp"
#include "subnyq/siggen.hpp"

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace subnyq
{
    enum class SweepVariable
    {
        snr_db,
        n_sources
    };

    const char *to_string(SweepVariable v);
    SweepVariable sweep_variable_from_string(const std::string &name);

    struct SweepConfig
    {
        ScenarioConfig base;
        SweepVariable variable = SweepVariable::snr_db;
        std::vector<double> values;
        int trials = 500;
        std::vector<Algorithm> algorithms{Algorithm::jdfpi, Algorithm::jdfsdpj};
        std::uint64_t master_seed = 1;
        EstimatorOptions options;

        void validate() const;
    };

    // Matched per-source errors for one trial.
    struct TrialRecord
    {
        double sweep_value = 0.0;
        Algorithm algorithm = Algorithm::jdfpi;
        int trial = 0;
        std::uint64_t seed = 0;
        std::vector<double> phase_errors; // rad, wrapped to (-pi, pi]
        std::vector<double> freq_errors;  // Hz
        bool failed = false;
        std::string failure_step;
        std::string failure_message;
    };

    struct Matching
    {
        std::vector<int> assignment; // truth k -> estimate assignment[k]
        std::vector<double> phase_errors;
        std::vector<double> freq_errors;
        double cost = 0.0;
    };

    // Exhaustive assignment minimizing sum((dphi / pi)^2 + (df / (f_N / L))^2).
    Matching match_estimates(const ScenarioConfig &truth, const EstimationResult &result);

    // One seeded trial. Estimation failures are recorded, config errors throw.
    TrialRecord run_trial(const ScenarioConfig &scenario, Algorithm algorithm, std::uint64_t seed,
                          const EstimatorOptions &opt = {});

    enum class Metric
    {
        phase_rmse,
        freq_rmse
    };

    const char *to_string(Metric m);

    struct ResultRow
    {
        double sweep_value = 0.0;
        std::string algorithm;
        std::string metric;
        double rmse = 0.0; // phase in rad, frequency as a fraction of f_N
        double crb = 0.0;  // matching square-root bound, same units
        int n_success = 0;
        int n_trials = 0;

        bool operator==(const ResultRow &) const = default;
    };

    struct ResultTable
    {
        SweepVariable variable = SweepVariable::snr_db;
        std::vector<ResultRow> rows;
    };

    struct RunControl
    {
        int threads = 1;
        const std::atomic<bool> *stop = nullptr;  // checked between trials
        std::vector<TrialRecord> *records = nullptr; // optional raw trial output
    };

    // Scenario at one sweep point: SNR replaced, or the first K sources kept.
    ScenarioConfig scenario_at(const SweepConfig &config, double value);

    std::uint64_t trial_seed(std::uint64_t master, int sweep_index, int algorithm_index, int trial);

    // RMSE over successful trials and the matching bounds for every
    // (sweep value, algorithm). Output is independent of the thread count.
    ResultTable run_sweep(const SweepConfig &config, const RunControl &control = {});

    std::string to_csv(const ResultTable &table);
    void emit_csv(const ResultTable &table, const std::filesystem::path &path);
    ResultTable parse_csv(std::istream &is);

    ScenarioConfig default_scenario();
    SweepConfig default_sweep(SweepVariable variable);
}

#endif
