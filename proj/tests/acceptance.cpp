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

#include "subnyq/crb.hpp"
#include "subnyq/harness.hpp"
#include "support.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <thread>

using namespace subnyq;
using subnyq::testing::max_abs;

namespace
{
    constexpr double kIdentityTol = 1e-10;
    constexpr double kPhaseTol = 1e-4;     // rad, noiseless recovery
    constexpr double kFreqTol = 1e-6;      // fraction of f_N, noiseless recovery
    constexpr double kFimTol = 1e-4;       // relative, analytic vs numerical bound
    constexpr double kWithinDb = 3.0;      // RMSE against sqrt(CRB), in dB of power
    constexpr double kOrderingMargin = 0.05;
    constexpr double kVariationDb = 3.0;
    constexpr int kTrials = 500;

    struct Line
    {
        int id;
        bool pass;
        std::string text;
    };

    std::vector<Line> g_lines;
    std::ofstream g_report;

    void report(int id, bool pass, const std::string &what, double seconds)
    {
        char buf[64];
        std::snprintf(buf, sizeof buf, " [%.1f s]", seconds);
        const std::string line = std::string(pass ? "PASS" : "FAIL") + "  criterion " + std::to_string(id) + ": " + what + buf;
        std::printf("%s\n", line.c_str());
        std::fflush(stdout);
        if (g_report)
            g_report << line << '\n';
        g_lines.push_back({id, pass, line});
    }

    void note(const std::string &text)
    {
        std::printf("      %s\n", text.c_str());
        if (g_report)
            g_report << "      " << text << '\n';
    }

    std::string fmt(const char *f, double a)
    {
        char buf[96];
        std::snprintf(buf, sizeof buf, f, a);
        return buf;
    }

    double db(double rmse, double crb)
    {
        return 20.0 * std::log10(rmse / crb);
    }

    class Timer
    {
    public:
        double seconds() const
        {
            return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
        }

    private:
        std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
    };

    int threads()
    {
        return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    }

    const ResultRow &row(const ResultTable &t, double value, const std::string &alg, const std::string &metric)
    {
        for (const auto &r : t.rows)
            if (r.sweep_value == value && r.algorithm == alg && r.metric == metric)
                return r;
        throw std::logic_error("missing row " + alg + " " + metric);
    }

    std::vector<double> true_phases(const ScenarioConfig &c)
    {
        std::vector<double> p;
        for (int k = 0; k < c.K(); ++k)
            p.push_back(c.spatial_phase(k));
        return p;
    }

    std::vector<int> true_bands(const ScenarioConfig &c)
    {
        std::vector<int> b;
        for (int k = 0; k < c.K(); ++k)
            b.push_back(c.band(k));
        return b;
    }

    void criterion_1()
    {
        Timer t;
        std::mt19937_64 g(1001);
        double worst = 0.0;
        for (int i = 0; i < 100; ++i)
        {
            const int K = testing::uniform_int(g, 1, 3);
            const ScenarioConfig c = testing::random_scenario(g, K, 64, 0.0);
            const int M = c.geom.sensors, P = c.pattern.P();
            const CMatrix B = build_B(c.pattern);
            const RMatrix J = build_J(M, P);
            worst = std::max(worst, max_abs(B * B.adjoint() - CMatrix::Identity(P, P)));
            worst = std::max(worst, (J * J.transpose() - RMatrix::Identity(M + P - 1, M + P - 1)).cwiseAbs().maxCoeff());

            const auto phis = true_phases(c);
            const CMatrix H = build_H(phis, c.geom, c.pattern);
            const CMatrix JG = J.cast<cplx>() * kron(build_A(phis, M), B);
            worst = std::max(worst, max_abs(H - JG));
            for (int k = 0; k < K; ++k)
                for (int l = 0; l < c.pattern.L(); ++l)
                    worst = std::max(worst,
                                     max_abs(H.col(k * c.pattern.L() + l) - joint_steering(phis[k], l, c.geom, c.pattern)));

            const CMatrix Hs = build_H_selected(phis, true_bands(c), c.geom, c.pattern);
            const auto n = Hs.rows();
            const CMatrix Pp = CMatrix::Identity(n, n) - Hs * (Hs.adjoint() * Hs).inverse() * Hs.adjoint();
            worst = std::max({worst, max_abs(Pp * Pp - Pp), max_abs(Pp - Pp.adjoint()), max_abs(Pp * Hs)});
        }
        const double s = t.seconds();
        report(1, worst < kIdentityTol && s < 10.0,
               "structural identities over 100 random configurations, worst deviation " + fmt("%.2e", worst) +
                   " (limit 1e-10, < 10 s)",
               s);
    }

    void criterion_2()
    {
        Timer t;
        ScenarioConfig c = default_scenario();
        c.sources.clear();
        c.snapshots = 100000;
        c.snr_db = 0.0;
        c.seed = 2002;
        const CMatrix W = assemble_snapshots(c).W();
        const double sigma2 = c.noise_power();
        const auto n = W.rows();
        const CMatrix R = W * W.adjoint() / static_cast<double>(W.cols());
        const double dev = max_abs(R - sigma2 * CMatrix::Identity(n, n));
        const double limit = 5.0 * sigma2 / std::sqrt(static_cast<double>(c.snapshots));
        const double s = t.seconds();
        report(2, dev < limit && s < 30.0,
               "noise whiteness at N = 1e5, max |R - sigma^2 I| = " + fmt("%.3e", dev) + " vs 5 sigma^2/sqrt(N) = " +
                   fmt("%.3e", limit) + " (< 30 s)",
               s);
    }

    void criterion_3()
    {
        Timer t;
        std::mt19937_64 g(3003);
        double wp = 0.0, wf = 0.0;
        int failures = 0;
        for (int i = 0; i < 50; ++i)
        {
            const int K = 1 + i % 3;
            const ScenarioConfig c = testing::random_separated_scenario(g, K, 512, 0.25);
            for (auto alg : {Algorithm::jdfpi, Algorithm::jdfsdpj})
            {
                const TrialRecord r = run_trial(c, alg, c.seed);
                if (r.failed)
                {
                    ++failures;
                    note(std::string(to_string(alg)) + " failed on scenario " + std::to_string(i) + " at " +
                         r.failure_step + ": " + r.failure_message);
                    continue;
                }
                for (std::size_t k = 0; k < r.phase_errors.size(); ++k)
                {
                    wp = std::max(wp, std::abs(r.phase_errors[k]));
                    wf = std::max(wf, std::abs(r.freq_errors[k]) / c.pattern.nyquist_rate());
                }
            }
        }
        const double s = t.seconds();
        report(3, failures == 0 && wp < kPhaseTol && wf < kFreqTol && s < 120.0,
               "noiseless recovery, 50 scenarios x {JDFPI, JDFSDPJ}: worst |dphi| " + fmt("%.2e", wp) +
                   " rad, worst |df| " + fmt("%.2e", wf) + " f_N, " + std::to_string(failures) +
                   " failures (< 2 min)",
               s);
    }

    void criterion_4()
    {
        Timer t;
        std::mt19937_64 g(4004);
        double worst = 0.0;
        for (int i = 0; i < 20; ++i)
        {
            ScenarioConfig c = testing::random_separated_scenario(g, 1 + i % 3, 128, 0.2);
            c.noiseless = false;
            c.snr_db = testing::uniform(g, -5.0, 25.0);
            for (auto s : {Structure::simplified, Structure::full})
            {
                const CrbInput in = crb_input(c, s);
                const RMatrix crb = crb_phase(in).crb;
                const RMatrix inv = fim_numerical(in).inverse();
                worst = std::max(worst, (inv - crb).norm() / crb.norm());
            }
        }
        const double s = t.seconds();
        report(4, worst < kFimTol && s < 60.0,
               "analytic bound vs inverse numerical FIM on 20 scenarios (both structures), worst relative error " +
                   fmt("%.2e", worst) + " (limit 1e-4, < 1 min)",
               s);
    }

    ResultTable snr_table;
    double snr_seconds = 0.0;

    void run_snr_sweep()
    {
        Timer t;
        SweepConfig sw = default_sweep(SweepVariable::snr_db);
        sw.values = {10.0, 20.0, 30.0};
        sw.trials = kTrials;
        sw.algorithms = {Algorithm::jdfpi, Algorithm::jdfsdpj};
        snr_table = run_sweep(sw, {threads()});
        snr_seconds = t.seconds();
        note("SNR sweep {10, 20, 30} dB, 500 trials, JDFPI and JDFSDPJ: " + fmt("%.1f s", snr_seconds));
        for (const auto &r : snr_table.rows)
            note(r.algorithm + " " + r.metric + " @ " + fmt("%g dB", r.sweep_value) + ": rmse " + fmt("%.4e", r.rmse) +
                 ", bound " + fmt("%.4e", r.crb) + " (" + fmt("%+.2f dB", db(r.rmse, r.crb)) + "), " +
                 std::to_string(r.n_success) + "/" + std::to_string(r.n_trials) + " ok");
    }

    void criterion_5()
    {
        bool pass = snr_seconds < 600.0;
        std::string detail;
        for (double v : {20.0, 30.0})
        {
            const auto &r = row(snr_table, v, "JDFSDPJ", "phase_rmse");
            const double d = db(r.rmse, r.crb);
            pass = pass && std::isfinite(d) && d <= kWithinDb;
            detail += fmt(" %+.2f dB", d) + fmt(" @ %g dB;", v);
        }
        const double r10 = row(snr_table, 10.0, "JDFSDPJ", "phase_rmse").rmse;
        const double r20 = row(snr_table, 20.0, "JDFSDPJ", "phase_rmse").rmse;
        const double r30 = row(snr_table, 30.0, "JDFSDPJ", "phase_rmse").rmse;
        pass = pass && r10 > r20 && r20 > r30;
        report(5, pass,
               "JDFSDPJ phase RMSE improves with SNR and sits within 3 dB of the simplified-structure bound:" + detail +
                   " (< 10 min)",
               snr_seconds);
    }

    void criterion_6()
    {
        const double a = row(snr_table, 10.0, "JDFSDPJ", "phase_rmse").rmse;
        const double b = row(snr_table, 10.0, "JDFPI", "phase_rmse").rmse;
        const bool pass = std::isfinite(a) && std::isfinite(b) && a < (1.0 - kOrderingMargin) * b;
        report(6, pass,
               "at 10 dB JDFSDPJ phase RMSE " + fmt("%.4e", a) + " vs JDFPI " + fmt("%.4e", b) + " (ratio " +
                   fmt("%.3f", a / b) + ", need < 0.95)",
               0.0);
    }

    void criterion_7()
    {
        Timer t;
        std::mt19937_64 g(7007);
        int nonstrict = 0, violations = 0;
        double worst_ratio = 0.0;
        for (int i = 0; i < 20; ++i)
        {
            ScenarioConfig c = testing::random_separated_scenario(g, 1 + i % 3, 256, 0.2);
            c.noiseless = false;
            c.snr_db = testing::uniform(g, -5.0, 25.0);
            const RVector simp = crb_phase(crb_input(c, Structure::simplified)).crb.diagonal();
            const RVector full = crb_phase(crb_input(c, Structure::full)).crb.diagonal();
            bool strict = false;
            for (Eigen::Index k = 0; k < simp.size(); ++k)
            {
                if (full(k) > simp(k))
                    ++violations;
                if (full(k) < simp(k) * (1.0 - 1e-9))
                    strict = true;
                worst_ratio = std::max(worst_ratio, full(k) / simp(k));
            }
            if (!strict)
                ++nonstrict;
        }
        const double s = t.seconds();
        report(7, violations == 0 && nonstrict == 0 && s < 60.0,
               "full-structure bound <= simplified bound on 20 scenarios: " + std::to_string(violations) +
                   " violations, " + std::to_string(nonstrict) + " scenarios without a strict entry, max ratio " +
                   fmt("%.4f", worst_ratio) + " (< 1 min)",
               s);
    }

    void criterion_8()
    {
        Timer t;
        SweepConfig sw = default_sweep(SweepVariable::n_sources);
        sw.base.snr_db = 20.0;
        sw.values = {1.0, 2.0, 3.0};
        sw.trials = kTrials;
        sw.algorithms = {Algorithm::jdfpi, Algorithm::jdfsdpj};
        const ResultTable tab = run_sweep(sw, {threads()});
        const double s = t.seconds();

        double lo = 1e300, hi = 0.0;
        bool near_bound = true;
        std::string detail;
        for (double k : sw.values)
        {
            const auto &r = row(tab, k, "JDFSDPJ", "phase_rmse");
            lo = std::min(lo, r.rmse);
            hi = std::max(hi, r.rmse);
            const double d = db(r.rmse, r.crb);
            near_bound = near_bound && std::isfinite(d) && d <= kWithinDb;
            detail += fmt(" K=%g:", k) + fmt(" %.3e", r.rmse) + fmt(" (%+.2f dB)", d);
            const auto &p = row(tab, k, "JDFPI", "phase_rmse");
            note(fmt("K = %g: ", k) + "JDFSDPJ " + fmt("%.4e", r.rmse) + ", JDFPI " + fmt("%.4e", p.rmse) +
                 " rad, bound " + fmt("%.4e", r.crb) + ", JDFPI " + std::to_string(p.n_success) + "/" +
                 std::to_string(p.n_trials) + " ok");
        }
        const double var_db = 20.0 * std::log10(hi / lo);
        const double p1 = row(tab, 1.0, "JDFPI", "phase_rmse").rmse, p3 = row(tab, 3.0, "JDFPI", "phase_rmse").rmse;
        note("JDFPI degradation from K = 1 to K = 3: " + fmt("%+.2f dB", 20.0 * std::log10(p3 / p1)) +
             " (logged, no threshold)");
        report(8, var_db < kVariationDb && near_bound,
               "JDFSDPJ over K = 1..3 at 20 dB varies by " + fmt("%.2f dB", var_db) + " (need < 3) and tracks its bound:" +
                   detail,
               s);
    }

    void criterion_9()
    {
        bool pass = true;
        std::string detail;
        for (const char *alg : {"JDFPI", "JDFSDPJ"})
            for (double v : {20.0, 30.0})
            {
                const auto &r = row(snr_table, v, alg, "freq_rmse");
                const double d = db(r.rmse, r.crb);
                pass = pass && std::isfinite(d) && d <= kWithinDb;
                detail += std::string(" ") + alg + fmt(" @ %g dB", v) + fmt(" %+.2f dB;", d);
            }
        report(9, pass, "frequency RMSE within 3 dB of the numerical tone bound:" + detail, 0.0);
    }

    void criterion_10()
    {
        Timer t;
        SweepConfig sw = default_sweep(SweepVariable::snr_db);
        sw.values = {0.0, 15.0};
        sw.trials = 12;
        sw.master_seed = 1010;
        sw.algorithms = {Algorithm::jdfpi, Algorithm::jdfsdpj, Algorithm::jdfsd_full};
        const auto dir = std::filesystem::temp_directory_path();
        const auto p1 = dir / "subnyq_acc_a.csv", p2 = dir / "subnyq_acc_b.csv", p3 = dir / "subnyq_acc_c.csv";
        emit_csv(run_sweep(sw, {1}), p1);
        emit_csv(run_sweep(sw, {1}), p2);
        emit_csv(run_sweep(sw, {4}), p3);
        auto slurp = [](const std::filesystem::path &p) {
            std::ifstream is(p, std::ios::binary);
            std::stringstream ss;
            ss << is.rdbuf();
            return ss.str();
        };
        const std::string a = slurp(p1), b = slurp(p2), c = slurp(p3);
        for (const auto &p : {p1, p2, p3})
            std::filesystem::remove(p);
        report(10, !a.empty() && a == b && a == c,
               "CSV bytes identical across two sequential runs and a 4-thread run (" + std::to_string(a.size()) +
                   " bytes)",
               t.seconds());
    }
}

int main(int argc, char **argv)
{
    if (argc > 1)
        g_report.open(argv[1]);
    const Timer total;
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    run_snr_sweep();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10();

    int failed = 0;
    for (const auto &l : g_lines)
        failed += l.pass ? 0 : 1;
    std::printf("%d of %zu criteria passed in %.1f s\n", static_cast<int>(g_lines.size()) - failed, g_lines.size(),
                total.seconds());
    if (g_report)
        g_report << static_cast<int>(g_lines.size()) - failed << " of " << g_lines.size() << " criteria passed\n";
    return failed == 0 ? 0 : 1;
}
