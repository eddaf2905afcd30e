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

#include <fstream>
#include <set>

namespace subnyq
{
    using nlohmann::json;

    namespace
    {
        void allow_keys(const json &j, std::initializer_list<const char *> keys, const std::string &where)
        {
            if (!j.is_object())
                throw ConfigError(where + " must be a JSON object");
            const std::set<std::string> ok(keys.begin(), keys.end());
            for (const auto &item : j.items())
                if (!ok.count(item.key()))
                    throw ConfigError("unknown key '" + item.key() + "' in " + where);
        }

        template <typename T>
        T get_or(const json &j, const char *key, T fallback)
        {
            if (!j.contains(key))
                return fallback;
            try
            {
                return j.at(key).get<T>();
            }
            catch (const json::exception &e)
            {
                throw ConfigError(std::string("field '") + key + "': " + e.what());
            }
        }

        cplx parse_amplitude(const json &j)
        {
            if (j.is_number())
                return {j.get<double>(), 0.0};
            if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
                return {j[0].get<double>(), j[1].get<double>()};
            throw ConfigError("amplitude must be a number or [re, im]");
        }
    }

    ScenarioConfig scenario_from_json(const json &j)
    {
        allow_keys(j, {"array", "pattern", "sources", "snr_db", "noiseless", "snapshots", "seed", "snap_carriers"},
                   "scenario");
        const ScenarioConfig def = default_scenario();
        ScenarioConfig c;

        const json arr = j.value("array", json::object());
        allow_keys(arr, {"sensors", "spacing", "propagation_speed"}, "array");
        c.geom.sensors = get_or(arr, "sensors", def.geom.sensors);
        c.geom.spacing = get_or(arr, "spacing", def.geom.spacing);
        c.geom.propagation_speed = get_or(arr, "propagation_speed", def.geom.propagation_speed);

        const json pat = j.value("pattern", json::object());
        allow_keys(pat, {"L", "offsets", "nyquist_rate"}, "pattern");
        c.pattern = MultiCosetPattern(get_or(pat, "L", def.pattern.L()), get_or(pat, "offsets", def.pattern.offsets()),
                                      get_or(pat, "nyquist_rate", def.pattern.nyquist_rate()));

        c.snr_db = get_or(j, "snr_db", def.snr_db);
        c.noiseless = get_or(j, "noiseless", false);
        c.snapshots = get_or(j, "snapshots", def.snapshots);
        c.seed = get_or<std::uint64_t>(j, "seed", def.seed);
        if (c.snapshots < 1)
            throw ConfigError("snapshots must be positive");

        if (!j.contains("sources"))
        {
            if (!(c.geom == def.geom) || !(c.pattern == def.pattern))
                throw ConfigError("sources are required when the array or pattern differ from the defaults");
            c.sources = def.sources;
            if (c.snapshots != def.snapshots)
                c = c.with_grid_carriers();
            c.validate();
            return c;
        }
        if (!j["sources"].is_array())
            throw ConfigError("sources must be an array");

        std::vector<std::optional<double>> phases;
        for (const auto &js : j["sources"])
        {
            allow_keys(js, {"doa", "phase", "carrier", "amplitude", "envelope", "bandwidth"}, "source");
            SourceTruth s;
            if (!js.contains("carrier"))
                throw ConfigError("source needs a carrier");
            s.carrier = get_or(js, "carrier", 0.0);
            if (js.contains("amplitude"))
                s.amplitude = parse_amplitude(js["amplitude"]);
            const std::string env = get_or<std::string>(js, "envelope", "tone");
            if (env == "tone")
                s.envelope = Envelope::pure_tone;
            else if (env == "filtered-noise")
                s.envelope = Envelope::filtered_noise;
            else
                throw ConfigError("envelope must be 'tone' or 'filtered-noise'");
            s.bandwidth = get_or(js, "bandwidth", s.envelope == Envelope::filtered_noise ? 0.1 * c.pattern.sub_rate() : 0.0);
            if (js.contains("doa") == js.contains("phase"))
                throw ConfigError("source needs exactly one of 'doa' and 'phase'");
            s.doa = get_or(js, "doa", 0.0);
            phases.push_back(js.contains("phase") ? std::optional<double>(js["phase"].get<double>()) : std::nullopt);
            c.sources.push_back(s);
        }
        if (get_or(j, "snap_carriers", true))
            c = c.with_grid_carriers();
        for (std::size_t k = 0; k < phases.size(); ++k)
            if (phases[k])
            {
                try
                {
                    c.sources[k].doa = doa_from_phase(*phases[k], c.sources[k].carrier, c.geom);
                }
                catch (const std::domain_error &e)
                {
                    throw ConfigError("source " + std::to_string(k) + ": " + e.what());
                }
            }
        c.validate();
        return c;
    }

    json to_json(const ScenarioConfig &c)
    {
        json j;
        j["array"] = {{"sensors", c.geom.sensors},
                      {"spacing", c.geom.spacing},
                      {"propagation_speed", c.geom.propagation_speed}};
        j["pattern"] = {{"L", c.pattern.L()}, {"offsets", c.pattern.offsets()}, {"nyquist_rate", c.pattern.nyquist_rate()}};
        j["sources"] = json::array();
        for (const auto &s : c.sources)
        {
            json js = {{"doa", s.doa},
                       {"carrier", s.carrier},
                       {"amplitude", {s.amplitude.real(), s.amplitude.imag()}},
                       {"envelope", s.envelope == Envelope::pure_tone ? "tone" : "filtered-noise"}};
            if (s.envelope == Envelope::filtered_noise)
                js["bandwidth"] = s.bandwidth;
            j["sources"].push_back(js);
        }
        j["snr_db"] = c.snr_db;
        j["noiseless"] = c.noiseless;
        j["snapshots"] = c.snapshots;
        j["seed"] = c.seed;
        j["snap_carriers"] = false;
        return j;
    }

    SweepConfig sweep_from_json(const json &j, SweepVariable fallback)
    {
        allow_keys(j, {"scenario", "sweep", "trials", "algorithms", "seed", "grid_step"}, "sweep file");
        SweepConfig c = default_sweep(fallback);
        if (j.contains("scenario"))
            c.base = scenario_from_json(j["scenario"]);
        if (j.contains("sweep"))
        {
            const json &sw = j["sweep"];
            allow_keys(sw, {"variable", "values"}, "sweep");
            if (sw.contains("variable"))
            {
                const SweepVariable v = sweep_variable_from_string(sw["variable"].get<std::string>());
                if (v != c.variable)
                    c.values = default_sweep(v).values;
                c.variable = v;
            }
            if (sw.contains("values"))
                c.values = get_or(sw, "values", c.values);
        }
        c.trials = get_or(j, "trials", c.trials);
        c.master_seed = get_or<std::uint64_t>(j, "seed", c.master_seed);
        c.options.grid_step = get_or(j, "grid_step", c.options.grid_step);
        if (j.contains("algorithms"))
        {
            c.algorithms.clear();
            for (const auto &name : get_or(j, "algorithms", std::vector<std::string>{}))
                c.algorithms.push_back(algorithm_from_string(name));
        }
        return c;
    }

    json to_json(const SweepConfig &c)
    {
        json j;
        j["scenario"] = to_json(c.base);
        j["sweep"] = {{"variable", to_string(c.variable)}, {"values", c.values}};
        j["trials"] = c.trials;
        j["algorithms"] = json::array();
        for (auto a : c.algorithms)
            j["algorithms"].push_back(to_string(a));
        j["seed"] = c.master_seed;
        j["grid_step"] = c.options.grid_step;
        return j;
    }

    json load_json(const std::filesystem::path &path)
    {
        std::ifstream is(path);
        if (!is)
            throw std::runtime_error("cannot open " + path.string());
        try
        {
            return json::parse(is);
        }
        catch (const json::parse_error &e)
        {
            throw ConfigError(path.string() + ": " + e.what());
        }
    }
}
