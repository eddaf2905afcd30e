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

#ifndef SUBNYQ_TESTS_SUPPORT_HPP
#define SUBNYQ_TESTS_SUPPORT_HPP

#include "subnyq/model.hpp"
#include "subnyq/siggen.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace subnyq::testing
{
    inline int uniform_int(std::mt19937_64 &g, int lo, int hi)
    {
        return std::uniform_int_distribution<int>(lo, hi)(g);
    }

    inline double uniform(std::mt19937_64 &g, double lo, double hi)
    {
        return std::uniform_real_distribution<double>(lo, hi)(g);
    }

    // Random valid pattern with P branches over a prime L.
    inline MultiCosetPattern random_pattern(std::mt19937_64 &g, int min_P, int max_P)
    {
        static const int primes[] = {5, 7, 11, 13, 17};
        int L = primes[uniform_int(g, 0, 4)];
        while (L < min_P)
            L = primes[uniform_int(g, 0, 4)];
        const int P = uniform_int(g, min_P, std::min(L, max_P));
        std::vector<int> all(L);
        for (int i = 0; i < L; ++i)
            all[i] = i;
        std::shuffle(all.begin(), all.end(), g);
        std::vector<int> offsets(all.begin(), all.begin() + P);
        std::sort(offsets.begin(), offsets.end());
        return MultiCosetPattern(L, offsets, 1.0);
    }

    // K pure tones in distinct bands (band >= 1), on the synthesis grid, with
    // spatial phases at least min_sep apart and residual bins well inside the band.
    inline ScenarioConfig random_scenario(std::mt19937_64 &g, int K, int N = 512, double min_sep = 0.25)
    {
        ScenarioConfig c;
        c.pattern = random_pattern(g, K + 1, 6);
        c.geom.sensors = uniform_int(g, std::max(K + 2, 4), 8);
        c.snapshots = N;
        c.noiseless = true;
        c.seed = g();

        const int L = c.pattern.L();
        std::vector<int> bands;
        while (static_cast<int>(bands.size()) < K)
        {
            const int b = uniform_int(g, 1, L - 1);
            if (std::find(bands.begin(), bands.end(), b) == bands.end())
                bands.push_back(b);
        }
        std::vector<int> bins;
        while (static_cast<int>(bins.size()) < K)
        {
            const int q = uniform_int(g, N / 20, N - N / 20);
            if (std::all_of(bins.begin(), bins.end(), [&](int o) { return std::abs(o - q) >= 2; }))
                bins.push_back(q);
        }

        const double grid = c.carrier_grid();
        std::vector<double> phis;
        for (int k = 0; k < K; ++k)
        {
            const double f = (static_cast<double>(bands[k]) * N + bins[k]) * grid;
            const double lim = 0.9 * kPi * f; // |phi| < 2 pi d f / c with d = 0.5, c = 1
            double phi = 0.0;
            for (int tries = 0; tries < 1000; ++tries)
            {
                phi = uniform(g, -lim, lim);
                if (std::all_of(phis.begin(), phis.end(), [&](double o) { return std::abs(o - phi) >= min_sep; }))
                    break;
            }
            phis.push_back(phi);
            SourceTruth s;
            s.carrier = f;
            s.doa = doa_from_phase(phi, f, c.geom);
            s.amplitude = std::polar(uniform(g, 0.5, 2.0), uniform(g, -kPi, kPi));
            c.sources.push_back(s);
        }
        return c;
    }

    inline bool phases_separated(const ScenarioConfig &c, double min_sep)
    {
        for (int i = 0; i < c.K(); ++i)
            for (int j = i + 1; j < c.K(); ++j)
                if (std::abs(c.spatial_phase(i) - c.spatial_phase(j)) < min_sep)
                    return false;
        return true;
    }

    // Random scenario whose phases honor min_sep (redrawn until they do).
    inline ScenarioConfig random_separated_scenario(std::mt19937_64 &g, int K, int N = 512, double min_sep = 0.25)
    {
        for (;;)
        {
            ScenarioConfig c = random_scenario(g, K, N, min_sep);
            if (phases_separated(c, min_sep * 0.999))
                return c;
        }
    }

    inline double max_abs(const CMatrix &m)
    {
        return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
    }
}

#endif
