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

#include "subnyq/config.hpp"
#include "subnyq/errors.hpp"
#include "subnyq/harness.hpp"
#include "support.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

using namespace subnyq;

namespace
{
    EstimationResult estimates_from(const ScenarioConfig &c, const std::vector<int> &order)
    {
        EstimationResult r;
        for (int k : order)
        {
            SourceEstimate e;
            e.phi = c.spatial_phase(k);
            e.band = c.band(k);
            e.f = c.sources[k].carrier;
            e.f_residual = c.residual_frequency(k);
            r.sources.push_back(e);
        }
        return r;
    }

    SweepConfig small_sweep()
    {
        SweepConfig s = default_sweep(SweepVariable::snr_db);
        s.base.snapshots = 256;
        s.base = s.base.with_grid_carriers();
        s.values = {10.0, 20.0};
        s.trials = 4;
        s.options.grid_step = 4e-3;
        return s;
    }
}

TEST_CASE("match_estimates")
{
    std::mt19937_64 g(1);
    SUBCASE("single source is matched to itself")
    {
        const ScenarioConfig c = testing::random_scenario(g, 1, 128);
        const auto m = match_estimates(c, estimates_from(c, {0}));
        CHECK(m.assignment == std::vector<int>{0});
        CHECK(m.cost == 0.0);
    }
    SUBCASE("permuted truth is recovered exactly")
    {
        const ScenarioConfig c = testing::random_separated_scenario(g, 3, 128, 0.3);
        const auto m = match_estimates(c, estimates_from(c, {2, 0, 1}));
        CHECK(m.assignment == std::vector<int>{1, 2, 0});
        CHECK(m.cost == 0.0);
        for (int k = 0; k < 3; ++k)
        {
            CHECK(m.phase_errors[k] == 0.0);
            CHECK(m.freq_errors[k] == 0.0);
        }
    }
    SUBCASE("near-swap cases agree with a brute-force search and are logged against greedy")
    {
        int greedy_disagreements = 0;
        for (int t = 0; t < 200; ++t)
        {
            const ScenarioConfig c = testing::random_separated_scenario(g, 3, 128, 0.3);
            EstimationResult r = estimates_from(c, {0, 1, 2});
            for (auto &e : r.sources)
            {
                e.phi += testing::uniform(g, -0.3, 0.3);
                e.f += testing::uniform(g, -1.5, 1.5) * c.pattern.sub_rate();
            }
            const auto m = match_estimates(c, r);

            auto cost = [&](int i, int j) {
                const double dp = wrap_phase(r.sources[j].phi - c.spatial_phase(i)) / kPi;
                const double df = (r.sources[j].f - c.sources[i].carrier) / c.pattern.sub_rate();
                return dp * dp + df * df;
            };
            double best = 1e300;
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b)
                    for (int d = 0; d < 3; ++d)
                        if (a != b && b != d && a != d)
                            best = std::min(best, cost(0, a) + cost(1, b) + cost(2, d));
            CHECK(m.cost == doctest::Approx(best).epsilon(1e-14));

            std::vector<int> greedy;
            double gcost = 0.0;
            for (int i = 0; i < 3; ++i)
            {
                int pick = -1;
                for (int j = 0; j < 3; ++j)
                    if (std::find(greedy.begin(), greedy.end(), j) == greedy.end() &&
                        (pick < 0 || cost(i, j) < cost(i, pick)))
                        pick = j;
                greedy.push_back(pick);
                gcost += cost(i, pick);
            }
            CHECK(m.cost <= gcost + 1e-15);
            if (greedy != m.assignment)
                ++greedy_disagreements;
        }
        MESSAGE("greedy matching disagreed with the exhaustive one in " << greedy_disagreements << " of 200 cases");
    }
    SUBCASE("size mismatch")
    {
        const ScenarioConfig c = testing::random_separated_scenario(g, 2, 128, 0.3);
        CHECK_THROWS_AS(match_estimates(c, estimates_from(c, {0})), EstimationError);
    }
}

TEST_CASE("run_trial")
{
    ScenarioConfig s = default_scenario();
    s.snapshots = 256;
    s = s.with_grid_carriers();
    EstimatorOptions o;
    o.grid_step = 2e-3;

    SUBCASE("deterministic in the seed")
    {
        const auto a = run_trial(s, Algorithm::jdfsdpj, 42, o);
        const auto b = run_trial(s, Algorithm::jdfsdpj, 42, o);
        CHECK(a.phase_errors == b.phase_errors);
        CHECK(a.freq_errors == b.freq_errors);
        CHECK(a.seed == 42);
        const auto c = run_trial(s, Algorithm::jdfsdpj, 43, o);
        CHECK(c.phase_errors != a.phase_errors);
    }
    SUBCASE("noiseless scenario is recovered by every algorithm")
    {
        s.noiseless = true;
        for (auto alg : {Algorithm::jdfpi, Algorithm::jdfsdpj, Algorithm::jdfsd_full})
        {
            const auto r = run_trial(s, alg, 1, o);
            REQUIRE(!r.failed);
            for (std::size_t k = 0; k < r.phase_errors.size(); ++k)
            {
                CHECK(std::abs(r.phase_errors[k]) < 1e-4);
                CHECK(std::abs(r.freq_errors[k]) < 1e-6 * s.pattern.nyquist_rate());
            }
        }
    }
    SUBCASE("coincident phases fail JDFPI in the spatial step")
    {
        s.noiseless = true;
        for (int k = 1; k < s.K(); ++k)
            s.sources[k].doa = doa_from_phase(s.spatial_phase(0), s.sources[k].carrier, s.geom);
        const auto r = run_trial(s, Algorithm::jdfpi, 1, o);
        CHECK(r.failed);
        CHECK(r.failure_step == "music_spatial");
        CHECK(!r.failure_message.empty());
    }
    SUBCASE("configuration errors propagate")
    {
        s.geom.sensors = 3;
        CHECK_THROWS_AS(run_trial(s, Algorithm::jdfsdpj, 1, o), ConfigError);
        s = default_scenario();
        s.pattern = MultiCosetPattern(13, {0, 2, 5}, 1.0);
        CHECK_THROWS_AS(run_trial(s, Algorithm::jdfpi, 1, o), ConfigError);
    }
}

TEST_CASE("trial seeds are distinct")
{
    std::set<std::uint64_t> seen;
    for (int v = 0; v < 9; ++v)
        for (int a = 0; a < 3; ++a)
            for (int t = 0; t < 500; ++t)
                CHECK(seen.insert(trial_seed(1, v, a, t)).second);
    CHECK(trial_seed(1, 0, 0, 0) != trial_seed(2, 0, 0, 0));
}

TEST_CASE("scenario_at")
{
    SweepConfig s = default_sweep(SweepVariable::n_sources);
    const ScenarioConfig k2 = scenario_at(s, 2.0);
    CHECK(k2.K() == 2);
    CHECK(k2.sources[1].carrier == s.base.sources[1].carrier);
    CHECK_THROWS_AS(scenario_at(s, 2.5), ConfigError);
    CHECK_THROWS_AS(scenario_at(s, 4.0), ConfigError);

    s.variable = SweepVariable::snr_db;
    CHECK(scenario_at(s, -3.0).snr_db == -3.0);
    CHECK(std::string(to_string(SweepVariable::n_sources)) == "n_sources");
    CHECK(sweep_variable_from_string("snr_db") == SweepVariable::snr_db);
    CHECK_THROWS_AS(sweep_variable_from_string("k"), ConfigError);
}

TEST_CASE("run_sweep")
{
    SUBCASE("minimal sweep has two metric rows per algorithm")
    {
        SweepConfig s = small_sweep();
        s.values = {20.0};
        s.trials = 1;
        const auto t = run_sweep(s);
        REQUIRE(t.rows.size() == 4);
        for (const auto &r : t.rows)
        {
            CHECK(r.n_trials == 1);
            CHECK(r.crb > 0.0);
        }
        CHECK(t.rows[0].algorithm == "JDFPI");
        CHECK(t.rows[0].metric == "freq_rmse");
        CHECK(t.rows[1].metric == "phase_rmse");
    }
    SUBCASE("source order in the config does not matter")
    {
        SweepConfig s = small_sweep();
        SweepConfig r = s;
        std::reverse(r.base.sources.begin(), r.base.sources.end());
        const auto a = run_sweep(s), b = run_sweep(r);
        REQUIRE(a.rows.size() == b.rows.size());
        for (std::size_t i = 0; i < a.rows.size(); ++i)
        {
            CHECK(a.rows[i].rmse == doctest::Approx(b.rows[i].rmse).epsilon(1e-6));
            CHECK(a.rows[i].crb == doctest::Approx(b.rows[i].crb).epsilon(1e-9));
        }
    }
    SUBCASE("thread count and repetition do not change the table")
    {
        SweepConfig s = small_sweep();
        s.algorithms = {Algorithm::jdfpi, Algorithm::jdfsdpj, Algorithm::jdfsd_full};
        const std::string a = to_csv(run_sweep(s, {1}));
        CHECK(to_csv(run_sweep(s, {1})) == a);
        CHECK(to_csv(run_sweep(s, {3})) == a);
    }
    SUBCASE("a raised stop flag leaves no attempted trials")
    {
        const std::atomic<bool> stop{true};
        std::vector<TrialRecord> records;
        const auto t = run_sweep(small_sweep(), {1, &stop, &records});
        CHECK(records.empty());
        for (const auto &r : t.rows)
            CHECK(r.n_trials == 0);
    }
    SUBCASE("records carry the sweep coordinates")
    {
        std::vector<TrialRecord> records;
        run_sweep(small_sweep(), {1, nullptr, &records});
        CHECK(records.size() == 2 * 2 * 4);
        CHECK(records.front().sweep_value == 10.0);
        CHECK(records.back().trial == 3);
    }
    SUBCASE("invalid sweeps")
    {
        SweepConfig s = small_sweep();
        s.trials = 0;
        CHECK_THROWS_AS(run_sweep(s), ConfigError);
        s = small_sweep();
        s.values.clear();
        CHECK_THROWS_AS(run_sweep(s), ConfigError);
        s = small_sweep();
        s.algorithms.clear();
        CHECK_THROWS_AS(run_sweep(s), ConfigError);
    }
}

TEST_CASE("csv")
{
    ResultTable empty;
    CHECK(to_csv(empty) == "sweep_var,sweep_value,algorithm,metric,rmse,crb,n_success,n_trials\n");

    ResultTable t;
    t.variable = SweepVariable::n_sources;
    t.rows.push_back({1.0, "JDFPI", "phase_rmse", 1.0 / 3.0, 2e-5, 499, 500});
    t.rows.push_back({2.0, "JDFSDPJ", "freq_rmse", std::numeric_limits<double>::quiet_NaN(), 0.1, 0, 500});
    const std::string text = to_csv(t);
    CHECK(to_csv(t) == text);

    std::istringstream is(text);
    const ResultTable back = parse_csv(is);
    CHECK(back.variable == SweepVariable::n_sources);
    REQUIRE(back.rows.size() == 2);
    CHECK(back.rows[0] == t.rows[0]);
    CHECK(std::isnan(back.rows[1].rmse));
    CHECK(back.rows[1].crb == t.rows[1].crb);
    CHECK(to_csv(back) == text);

    const auto path = std::filesystem::temp_directory_path() / "subnyq_table.csv";
    emit_csv(t, path);
    std::ifstream f(path);
    std::stringstream ss;
    ss << f.rdbuf();
    CHECK(ss.str() == text);
    std::filesystem::remove(path);

    CHECK_THROWS(emit_csv(t, "/nonexistent-dir/x/table.csv"));
    std::istringstream bad("a,b\n");
    CHECK_THROWS(parse_csv(bad));
    std::istringstream short_row("sweep_var,sweep_value,algorithm,metric,rmse,crb,n_success,n_trials\nsnr_db,1,JDFPI\n");
    CHECK_THROWS(parse_csv(short_row));
}

TEST_CASE("json configuration")
{
    const auto j = nlohmann::json::parse(R"({
        "array": {"sensors": 6, "spacing": 0.5, "propagation_speed": 1.0},
        "pattern": {"L": 7, "offsets": [0, 1, 3, 5], "nyquist_rate": 2.0},
        "sources": [{"phase": 0.3, "carrier": 0.95, "amplitude": [0.6, 0.8]},
                    {"doa": -0.2, "carrier": 1.5, "envelope": "filtered-noise"}],
        "snr_db": 12.5, "snapshots": 300, "seed": 18446744073709551615
    })");
    const ScenarioConfig c = scenario_from_json(j);
    CHECK(c.geom.sensors == 6);
    CHECK(c.pattern.L() == 7);
    CHECK(c.pattern.nyquist_rate() == 2.0);
    CHECK(c.K() == 2);
    CHECK(c.seed == 18446744073709551615ULL);
    CHECK(c.snr_db == 12.5);
    CHECK(c.spatial_phase(0) == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(c.sources[0].amplitude == cplx(0.6, 0.8));
    CHECK(c.sources[1].envelope == Envelope::filtered_noise);
    CHECK(c.sources[1].bandwidth == doctest::Approx(0.1 * 2.0 / 7));
    const double q = c.sources[0].carrier / c.carrier_grid();
    CHECK(std::abs(q - std::round(q)) < 1e-9);

    const ScenarioConfig again = scenario_from_json(to_json(c));
    CHECK(again.seed == c.seed);
    CHECK(again.pattern == c.pattern);
    CHECK(again.geom == c.geom);
    REQUIRE(again.K() == 2);
    for (int k = 0; k < 2; ++k)
    {
        CHECK(again.sources[k].carrier == c.sources[k].carrier);
        CHECK(again.sources[k].doa == c.sources[k].doa);
        CHECK(again.sources[k].amplitude == c.sources[k].amplitude);
        CHECK(again.sources[k].bandwidth == c.sources[k].bandwidth);
    }

    auto broken = j;
    broken["colour"] = 1;
    CHECK_THROWS_AS(scenario_from_json(broken), ConfigError);
    broken = j;
    broken["sources"][0]["doa"] = 0.1;
    CHECK_THROWS_AS(scenario_from_json(broken), ConfigError);
    broken = j;
    broken["sources"][0]["envelope"] = "chirp";
    CHECK_THROWS_AS(scenario_from_json(broken), ConfigError);
    broken = j;
    broken["snapshots"] = "many";
    CHECK_THROWS_AS(scenario_from_json(broken), ConfigError);
    broken = j;
    broken["pattern"]["offsets"] = {3, 1};
    CHECK_THROWS_AS(scenario_from_json(broken), ConfigError);
    broken = j;
    broken["sources"][0]["phase"] = 3.0; // aliased at this carrier
    CHECK_THROWS_AS(scenario_from_json(broken), ConfigError);

    // sources may be omitted only with the default array and pattern
    const ScenarioConfig d = scenario_from_json(nlohmann::json::parse(R"({"snr_db": 5})"));
    CHECK(d.K() == default_scenario().K());
    CHECK(d.snr_db == 5.0);
    CHECK_THROWS_AS(scenario_from_json(nlohmann::json::parse(R"({"array": {"sensors": 5}})")), ConfigError);

    const auto sj = nlohmann::json::parse(R"({
        "sweep": {"variable": "n_sources", "values": [1, 2]},
        "trials": 7, "algorithms": ["JDFSDPJ", "JDFSD-full"], "seed": 9, "grid_step": 0.002
    })");
    const SweepConfig s = sweep_from_json(sj, SweepVariable::snr_db);
    CHECK(s.variable == SweepVariable::n_sources);
    CHECK(s.values == std::vector<double>{1, 2});
    CHECK(s.trials == 7);
    CHECK(s.algorithms == std::vector<Algorithm>{Algorithm::jdfsdpj, Algorithm::jdfsd_full});
    CHECK(s.master_seed == 9);
    CHECK(s.options.grid_step == 0.002);
    const SweepConfig s2 = sweep_from_json(to_json(s), SweepVariable::snr_db);
    CHECK(to_json(s2) == to_json(s));

    const SweepConfig dflt = sweep_from_json(nlohmann::json::object(), SweepVariable::n_sources);
    CHECK(dflt.values == default_sweep(SweepVariable::n_sources).values);

    const auto path = std::filesystem::temp_directory_path() / "subnyq_cfg.json";
    {
        std::ofstream f(path);
        f << "{ not json";
    }
    CHECK_THROWS_AS(load_json(path), ConfigError);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(load_json(path), std::runtime_error);
}

TEST_CASE("default scenario")
{
    const ScenarioConfig s = default_scenario();
    CHECK_NOTHROW(s.validate());
    CHECK(s.K() == 3);
    CHECK(s.geom.sensors == 8);
    CHECK(s.pattern.L() == 13);
    CHECK(s.pattern.P() == 5);
    std::set<int> bands;
    for (int k = 0; k < s.K(); ++k)
        bands.insert(s.band(k));
    CHECK(bands.size() == 3);
    CHECK(default_sweep(SweepVariable::snr_db).values.size() == 9);
    CHECK(default_sweep(SweepVariable::n_sources).values == std::vector<double>{1, 2, 3});
}
