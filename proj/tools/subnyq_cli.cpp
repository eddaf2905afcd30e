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
#include "subnyq/crb.hpp"
#include "subnyq/errors.hpp"
#include "subnyq/harness.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <cstdio>
#include <iostream>
#include <sstream>

using namespace subnyq;

namespace
{
    enum Exit
    {
        kOk = 0,
        kConfig = 2,
        kEstimation = 3,
        kIo = 4
    };

    std::atomic<bool> g_stop{false};

    extern "C" void on_interrupt(int)
    {
        g_stop.store(true);
    }

    struct IoError : std::runtime_error
    {
        using std::runtime_error::runtime_error;
    };

    nlohmann::json read_config(const std::string &path)
    {
        try
        {
            return load_json(path);
        }
        catch (const ConfigError &)
        {
            throw;
        }
        catch (const std::exception &e)
        {
            throw IoError(e.what());
        }
    }

    bool is_sweep_file(const nlohmann::json &j)
    {
        for (const char *k : {"scenario", "sweep", "trials", "algorithms", "grid_step"})
            if (j.contains(k))
                return true;
        return false;
    }

    ScenarioConfig load_scenario(const std::string &path)
    {
        if (path.empty())
            return default_scenario();
        const auto j = read_config(path);
        if (is_sweep_file(j))
            return sweep_from_json(j, SweepVariable::snr_db).base;
        return scenario_from_json(j);
    }

    std::vector<Algorithm> parse_algorithms(const std::string &list)
    {
        std::vector<Algorithm> out;
        std::stringstream ss(list);
        std::string name;
        while (std::getline(ss, name, ','))
            if (!name.empty())
                out.push_back(algorithm_from_string(name));
        if (out.empty())
            throw ConfigError("empty algorithm list");
        return out;
    }

    std::string fmt(const char *f, double v)
    {
        char buf[64];
        std::snprintf(buf, sizeof buf, f, v);
        return buf;
    }

    int cmd_single(const std::string &config, const std::string &algorithms, std::optional<std::uint64_t> seed)
    {
        ScenarioConfig s = load_scenario(config);
        if (seed)
            s.seed = *seed;
        s.validate();
        const auto algs = algorithms.empty() ? std::vector<Algorithm>{Algorithm::jdfpi, Algorithm::jdfsdpj}
                                             : parse_algorithms(algorithms);

        std::cout << "truth (seed " << s.seed << ", K = " << s.K() << ", SNR "
                  << (s.noiseless ? std::string("inf") : fmt("%.1f", s.snr_db)) << " dB)\n";
        for (int k = 0; k < s.K(); ++k)
            std::cout << "  phi " << fmt("%+.6f", s.spatial_phase(k)) << "  band " << s.band(k) << "  f "
                      << fmt("%.9e", s.sources[k].carrier) << "  theta " << fmt("%+.6f", s.sources[k].doa) << '\n';

        int status = kOk;
        for (auto a : algs)
        {
            std::cout << to_string(a) << '\n';
            try
            {
                const ReceiverSetup setup = ReceiverSetup::from(s);
                EstimationResult r = a == Algorithm::jdfsd_full ? jdfsd_full(assemble_full_snapshots(s), setup)
                                     : a == Algorithm::jdfpi    ? jdfpi(assemble_snapshots(s), setup)
                                                                : jdfsdpj(assemble_snapshots(s), setup);
                for (const auto &e : r.sources)
                {
                    std::cout << "  phi " << fmt("%+.6f", e.phi) << "  band " << e.band << "  f " << fmt("%.9e", e.f)
                              << "  theta " << (e.theta ? fmt("%+.6f", *e.theta) : std::string("n/a")) << '\n';
                }
                if (r.pairing_ambiguous)
                    std::cout << "  warning: pairing ambiguous\n";
            }
            catch (const std::invalid_argument &e)
            {
                throw ConfigError(e.what());
            }
            catch (const EstimationError &e)
            {
                std::cout << "  failed at " << e.step() << ": " << e.what() << '\n';
                status = kEstimation;
            }
        }
        return status;
    }

    int cmd_sweep(SweepVariable var, const std::string &config, const std::string &out, std::optional<int> trials,
                  std::optional<std::uint64_t> seed, const std::string &algorithms, int threads)
    {
        SweepConfig c = default_sweep(var);
        if (!config.empty())
        {
            const auto j = read_config(config);
            if (is_sweep_file(j))
                c = sweep_from_json(j, var);
            else
                c.base = scenario_from_json(j);
            if (c.variable != var)
                throw ConfigError(std::string("config sweeps ") + to_string(c.variable) + ", command sweeps " +
                                  to_string(var));
        }
        if (trials)
            c.trials = *trials;
        if (seed)
            c.master_seed = *seed;
        if (!algorithms.empty())
            c.algorithms = parse_algorithms(algorithms);
        c.validate();

        std::signal(SIGINT, on_interrupt);
        const ResultTable table = run_sweep(c, {threads, &g_stop, nullptr});
        if (g_stop.load())
            std::cerr << "interrupted; writing partial results\n";
        if (out.empty())
            std::cout << to_csv(table);
        else
        {
            try
            {
                emit_csv(table, out);
            }
            catch (const std::exception &e)
            {
                throw IoError(e.what());
            }
        }
        return kOk;
    }

    int cmd_crb(const std::string &config)
    {
        const ScenarioConfig s = load_scenario(config);
        if (s.noiseless)
            throw ConfigError("bounds need a finite SNR");
        const CrbResult simp = crb_phase(crb_input(s, Structure::simplified));
        const CrbResult full = crb_phase(crb_input(s, Structure::full));
        std::optional<ToneCrb> tone_s, tone_f;
        if (std::all_of(s.sources.begin(), s.sources.end(), [](auto &x) { return x.envelope == Envelope::pure_tone; }))
        {
            tone_s = tone_crb_numerical(s, Structure::simplified);
            tone_f = tone_crb_numerical(s, Structure::full);
        }
        std::cout << "source,phi,band,phase_std_simplified,phase_std_full,freq_std_simplified,freq_std_full\n";
        for (int k = 0; k < s.K(); ++k)
        {
            std::cout << k << ',' << fmt("%.9e", s.spatial_phase(k)) << ',' << s.band(k) << ','
                      << fmt("%.9e", simp.per_source_std(k)) << ',' << fmt("%.9e", full.per_source_std(k)) << ','
                      << (tone_s ? fmt("%.9e", std::sqrt(tone_s->frequency_var(k))) : "nan") << ','
                      << (tone_f ? fmt("%.9e", std::sqrt(tone_f->frequency_var(k))) : "nan") << '\n';
        }
        return kOk;
    }

    int cmd_dump(const std::string &config, const std::string &out, std::optional<std::uint64_t> seed, bool full)
    {
        ScenarioConfig s = load_scenario(config);
        if (seed)
            s.seed = *seed;
        const CMatrix W = full ? assemble_full_snapshots(s) : assemble_snapshots(s).W();
        try
        {
            write_snapshots(out, W, s.seed);
        }
        catch (const std::exception &e)
        {
            throw IoError(e.what());
        }
        std::cout << "wrote " << W.rows() << " x " << W.cols() << " snapshots to " << out << '\n';
        return kOk;
    }
}

int main(int argc, char **argv)
{
    CLI::App app{"Joint DOA and carrier estimation on a simplified sub-Nyquist array receiver"};
    app.require_subcommand(1);

    std::string config, out, algorithms;
    std::optional<int> trials;
    std::optional<std::uint64_t> seed;
    int threads = 1;
    bool full = false;

    auto *single = app.add_subcommand("single", "Run one trial and print the estimates");
    auto *sweep_snr = app.add_subcommand("sweep-snr", "Monte Carlo RMSE versus SNR");
    auto *sweep_k = app.add_subcommand("sweep-k", "Monte Carlo RMSE versus source count");
    auto *crb = app.add_subcommand("crb", "Print phase and frequency bounds for a scenario");
    auto *dump = app.add_subcommand("dump-snapshots", "Write the receiver output to a binary file");

    for (auto *sub : {single, sweep_snr, sweep_k, crb, dump})
        sub->add_option("--config", config, "JSON scenario or sweep file (defaults to the built-in scenario)");
    for (auto *sub : {single, sweep_snr, sweep_k, dump})
        sub->add_option("--seed", seed, "Seed (scenario seed, or master seed for sweeps)");
    for (auto *sub : {single, sweep_snr, sweep_k})
        sub->add_option("--algorithms", algorithms, "Comma list of JDFPI, JDFSDPJ, JDFSD-full");
    for (auto *sub : {sweep_snr, sweep_k})
    {
        sub->add_option("--out", out, "CSV output path (stdout when omitted)");
        sub->add_option("--trials", trials, "Trials per sweep point")->check(CLI::PositiveNumber);
        sub->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
    }
    dump->add_option("--out", out, "Output path")->required();
    dump->add_flag("--full", full, "Dump every branch of every sensor instead of the simplified output");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError &e)
    {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfig;
    }

    try
    {
        if (*single)
            return cmd_single(config, algorithms, seed);
        if (*sweep_snr)
            return cmd_sweep(SweepVariable::snr_db, config, out, trials, seed, algorithms, threads);
        if (*sweep_k)
            return cmd_sweep(SweepVariable::n_sources, config, out, trials, seed, algorithms, threads);
        if (*crb)
            return cmd_crb(config);
        if (*dump)
            return cmd_dump(config, out, seed, full);
    }
    catch (const ConfigError &e)
    {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    }
    catch (const IoError &e)
    {
        std::cerr << "i/o error: " << e.what() << '\n';
        return kIo;
    }
    catch (const EstimationError &e)
    {
        std::cerr << "estimation error: " << e.what() << '\n';
        return kEstimation;
    }
    catch (const std::invalid_argument &e)
    {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    }
    return kOk;
}
