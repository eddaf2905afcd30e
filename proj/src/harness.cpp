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

#include "subnyq/harness.hpp"
#include "subnyq/crb.hpp"
#include "subnyq/errors.hpp"
#include "subnyq/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <set>
#include <thread>

namespace subnyq
{
    const char *to_string(SweepVariable v)
    {
        return v == SweepVariable::snr_db ? "snr_db" : "n_sources";
    }

    SweepVariable sweep_variable_from_string(const std::string &name)
    {
        if (name == "snr_db")
            return SweepVariable::snr_db;
        if (name == "n_sources")
            return SweepVariable::n_sources;
        throw ConfigError("unknown sweep variable '" + name + "' (expected snr_db or n_sources)");
    }

    const char *to_string(Metric m)
    {
        return m == Metric::phase_rmse ? "phase_rmse" : "freq_rmse";
    }

    void SweepConfig::validate() const
    {
        if (trials < 1)
            throw ConfigError("need at least one trial");
        if (values.empty())
            throw ConfigError("sweep needs at least one value");
        if (algorithms.empty())
            throw ConfigError("sweep needs at least one algorithm");
        for (double v : values)
        {
            const ScenarioConfig s = scenario_at(*this, v);
            s.validate();
            for (auto a : algorithms)
                if (a == Algorithm::jdfpi && s.K() > s.pattern.P() - 1)
                    throw ConfigError("JDFPI needs K <= P - 1");
        }
    }

    ScenarioConfig scenario_at(const SweepConfig &config, double value)
    {
        ScenarioConfig s = config.base;
        if (config.variable == SweepVariable::snr_db)
        {
            s.snr_db = value;
            s.noiseless = false;
        }
        else
        {
            const double k = std::round(value);
            if (k != value || k < 1 || k > config.base.K())
                throw ConfigError("source count " + std::to_string(value) + " must be an integer in [1, " +
                                  std::to_string(config.base.K()) + "]");
            s.sources.resize(static_cast<std::size_t>(k));
        }
        return s;
    }

    Matching match_estimates(const ScenarioConfig &truth, const EstimationResult &result)
    {
        const int K = truth.K();
        if (static_cast<int>(result.sources.size()) != K)
            throw EstimationError(EstimationFailure::size_mismatch,
                                  "estimate has " + std::to_string(result.sources.size()) + " sources, truth has " +
                                      std::to_string(K));
        const double fband = truth.pattern.sub_rate();
        RMatrix dphi(K, K), dfreq(K, K), cost(K, K);
        for (int i = 0; i < K; ++i)
            for (int j = 0; j < K; ++j)
            {
                dphi(i, j) = wrap_phase(result.sources[j].phi - truth.spatial_phase(i));
                dfreq(i, j) = result.sources[j].f - truth.sources[i].carrier;
                cost(i, j) = std::pow(dphi(i, j) / kPi, 2) + std::pow(dfreq(i, j) / fband, 2);
            }

        std::vector<int> perm(K);
        std::iota(perm.begin(), perm.end(), 0);
        Matching best;
        best.cost = std::numeric_limits<double>::infinity();
        do
        {
            double c = 0.0;
            for (int i = 0; i < K; ++i)
                c += cost(i, perm[i]);
            if (c < best.cost)
            {
                best.cost = c;
                best.assignment = perm;
            }
        } while (std::next_permutation(perm.begin(), perm.end()));

        for (int i = 0; i < K; ++i)
        {
            best.phase_errors.push_back(dphi(i, best.assignment[i]));
            best.freq_errors.push_back(dfreq(i, best.assignment[i]));
        }
        return best;
    }

    TrialRecord run_trial(const ScenarioConfig &scenario, Algorithm algorithm, std::uint64_t seed,
                          const EstimatorOptions &opt)
    {
        ScenarioConfig s = scenario;
        s.seed = seed;
        s.validate();
        if (algorithm == Algorithm::jdfpi && s.K() > s.pattern.P() - 1)
            throw ConfigError("JDFPI needs K <= P - 1");

        TrialRecord rec;
        rec.algorithm = algorithm;
        rec.seed = seed;
        try
        {
            const ReceiverSetup setup = ReceiverSetup::from(s);
            EstimationResult est;
            switch (algorithm)
            {
            case Algorithm::jdfpi:
                est = jdfpi(assemble_snapshots(s), setup, opt);
                break;
            case Algorithm::jdfsdpj:
                est = jdfsdpj(assemble_snapshots(s), setup, opt);
                break;
            case Algorithm::jdfsd_full:
                est = jdfsd_full(assemble_full_snapshots(s), setup, opt);
                break;
            }
            const Matching m = match_estimates(s, est);
            rec.phase_errors = m.phase_errors;
            rec.freq_errors = m.freq_errors;
        }
        catch (const EstimationError &e)
        {
            rec.failed = true;
            rec.failure_step = e.step().empty() ? to_string(e.kind()) : e.step();
            rec.failure_message = e.what();
        }
        return rec;
    }

    std::uint64_t trial_seed(std::uint64_t master, int sweep_index, int algorithm_index, int trial)
    {
        return derive_seed(master, {static_cast<std::uint64_t>(sweep_index), static_cast<std::uint64_t>(algorithm_index),
                                    static_cast<std::uint64_t>(trial)});
    }

    namespace
    {
        struct Bounds
        {
            double phase = std::numeric_limits<double>::quiet_NaN();
            double freq = std::numeric_limits<double>::quiet_NaN(); // fraction of f_N
        };

        Bounds bounds_for(const ScenarioConfig &s, Structure structure)
        {
            Bounds b;
            if (s.noise_power() == 0.0)
                return {0.0, 0.0};
            try
            {
                const CrbResult r = crb_phase(crb_input(s, structure));
                b.phase = std::sqrt(r.crb.diagonal().mean());
            }
            catch (const EstimationError &)
            {
            }
            const bool tones = std::all_of(s.sources.begin(), s.sources.end(),
                                           [](const SourceTruth &x) { return x.envelope == Envelope::pure_tone; });
            if (tones)
            {
                try
                {
                    const ToneCrb t = tone_crb_numerical(s, structure);
                    b.freq = std::sqrt(t.frequency_var.mean()) / s.pattern.nyquist_rate();
                }
                catch (const EstimationError &)
                {
                }
            }
            return b;
        }
    }

    ResultTable run_sweep(const SweepConfig &config, const RunControl &control)
    {
        config.validate();
        const int nv = static_cast<int>(config.values.size());
        const int na = static_cast<int>(config.algorithms.size());
        const int nt = config.trials;

        std::vector<ScenarioConfig> scenarios;
        for (double v : config.values)
            scenarios.push_back(scenario_at(config, v));

        struct Task
        {
            int v, a, t;
            std::uint64_t seed;
        };
        std::vector<Task> tasks;
        std::set<std::uint64_t> seen;
        for (int v = 0; v < nv; ++v)
            for (int a = 0; a < na; ++a)
                for (int t = 0; t < nt; ++t)
                {
                    const std::uint64_t seed = trial_seed(config.master_seed, v, a, t);
                    if (!seen.insert(seed).second)
                        throw ConfigError("trial seed collision; choose another master seed");
                    tasks.push_back({v, a, t, seed});
                }

        std::vector<TrialRecord> records(tasks.size());
        std::vector<char> done(tasks.size(), 0);
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (;;)
            {
                if (control.stop && control.stop->load())
                    return;
                const std::size_t i = next.fetch_add(1);
                if (i >= tasks.size())
                    return;
                const Task &task = tasks[i];
                records[i] = run_trial(scenarios[task.v], config.algorithms[task.a], task.seed, config.options);
                records[i].sweep_value = config.values[task.v];
                records[i].trial = task.t;
                done[i] = 1;
            }
        };
        const int threads = std::max(1, control.threads);
        if (threads == 1)
            worker();
        else
        {
            std::vector<std::jthread> pool;
            for (int i = 0; i < threads; ++i)
                pool.emplace_back(worker);
        }

        ResultTable table;
        table.variable = config.variable;
        for (int v = 0; v < nv; ++v)
        {
            const Bounds simplified = bounds_for(scenarios[v], Structure::simplified);
            std::optional<Bounds> full;
            for (int a = 0; a < na; ++a)
            {
                const Algorithm alg = config.algorithms[a];
                Bounds b = simplified;
                if (alg == Algorithm::jdfsd_full)
                {
                    if (!full)
                        full = bounds_for(scenarios[v], Structure::full);
                    b = *full;
                }

                double sp = 0.0, sf = 0.0;
                std::size_t count = 0;
                int success = 0, attempted = 0;
                for (int t = 0; t < nt; ++t)
                {
                    const std::size_t i = (static_cast<std::size_t>(v) * na + a) * nt + t;
                    if (!done[i])
                        continue;
                    ++attempted;
                    if (records[i].failed)
                        continue;
                    ++success;
                    for (std::size_t k = 0; k < records[i].phase_errors.size(); ++k)
                    {
                        sp += records[i].phase_errors[k] * records[i].phase_errors[k];
                        sf += records[i].freq_errors[k] * records[i].freq_errors[k];
                        ++count;
                    }
                }
                const double nan = std::numeric_limits<double>::quiet_NaN();
                const double fN = scenarios[v].pattern.nyquist_rate();
                const double rp = count ? std::sqrt(sp / count) : nan;
                const double rf = count ? std::sqrt(sf / count) / fN : nan;
                table.rows.push_back({config.values[v], to_string(alg), to_string(Metric::phase_rmse), rp, b.phase,
                                      success, attempted});
                table.rows.push_back({config.values[v], to_string(alg), to_string(Metric::freq_rmse), rf, b.freq,
                                      success, attempted});
            }
        }
        std::stable_sort(table.rows.begin(), table.rows.end(), [](const ResultRow &x, const ResultRow &y) {
            if (x.sweep_value != y.sweep_value)
                return x.sweep_value < y.sweep_value;
            if (x.algorithm != y.algorithm)
                return x.algorithm < y.algorithm;
            return x.metric < y.metric;
        });

        if (control.records)
        {
            control.records->clear();
            for (std::size_t i = 0; i < tasks.size(); ++i)
                if (done[i])
                    control.records->push_back(records[i]);
        }
        return table;
    }

    ScenarioConfig default_scenario()
    {
        ScenarioConfig s;
        s.geom = {8, 0.5, 1.0};
        s.pattern = MultiCosetPattern(13, {0, 2, 3, 5, 8}, 1.0);
        s.snapshots = 4096;
        s.snr_db = 20.0;
        s.seed = 1;

        // (band, residual bin out of N, spatial phase)
        struct Spec
        {
            int band;
            int bin;
            double phi;
        };
        const Spec specs[] = {{4, 1100, 0.2}, {7, 2300, 0.5}, {10, 3000, 0.8}};
        const double grid = s.carrier_grid();
        for (const auto &sp : specs)
        {
            SourceTruth src;
            src.carrier = (static_cast<double>(sp.band) * s.snapshots + sp.bin) * grid;
            src.doa = doa_from_phase(sp.phi, src.carrier, s.geom);
            s.sources.push_back(src);
        }
        return s;
    }

    SweepConfig default_sweep(SweepVariable variable)
    {
        SweepConfig c;
        c.base = default_scenario();
        c.variable = variable;
        if (variable == SweepVariable::snr_db)
            for (int snr = -10; snr <= 30; snr += 5)
                c.values.push_back(snr);
        else
            c.values = {1, 2, 3};
        c.trials = 500;
        c.master_seed = 1;
        return c;
    }
}
