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

#ifndef SUBNYQ_SIGGEN_HPP
#define SUBNYQ_SIGGEN_HPP

#include "subnyq/model.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace subnyq
{
    enum class Envelope
    {
        pure_tone,
        filtered_noise
    };

    struct SourceTruth
    {
        double doa = 0.0;     // theta [rad], in (-pi/2, pi/2)
        double carrier = 0.0; // f_c [Hz], in [0, f_N)
        cplx amplitude{1.0, 0.0};
        Envelope envelope = Envelope::pure_tone;
        double bandwidth = 0.0; // one-sided envelope bandwidth above the carrier [Hz]

        double power() const { return std::norm(amplitude); } // envelopes have unit power
    };

    struct ScenarioConfig
    {
        ArrayGeometry geom;
        MultiCosetPattern pattern;
        std::vector<SourceTruth> sources;
        double snr_db = 20.0; // SNR of a unit-power source against sigma^2
        bool noiseless = false;
        int snapshots = 4096; // N, samples per coset
        std::uint64_t seed = 0;

        int K() const { return static_cast<int>(sources.size()); }
        double noise_power() const;
        double spatial_phase(int k) const;
        int band(int k) const;
        double residual_frequency(int k) const;

        // Spacing of the Nyquist synthesis grid, f_N / (N L). Carriers on this
        // grid make the coset alignment in assemble_snapshots exact.
        double carrier_grid() const;

        // Copy with every carrier moved to the nearest grid frequency inside its band.
        ScenarioConfig with_grid_carriers() const;

        // Throws ConfigError on any violated scenario invariant.
        void validate() const;
    };

    class SnapshotSet
    {
    public:
        SnapshotSet() = default;
        SnapshotSet(CMatrix W, int sensors, int branches, double sub_rate)
            : W_(std::move(W)), M_(sensors), P_(branches), fs_(sub_rate) {}

        // (M+P-1) x N: sensor 1 branches 1..P, then branch 1 of sensors 2..M.
        const CMatrix &W() const { return W_; }
        // M x N: branch 1 of every sensor, sensor 1 first.
        CMatrix Q() const;
        // P x N: every branch of sensor 1.
        CMatrix Y1() const { return W_.topRows(P_); }

        int sensors() const { return M_; }
        int branches() const { return P_; }
        int snapshots() const { return static_cast<int>(W_.cols()); }
        double sub_rate() const { return fs_; }

    private:
        CMatrix W_;
        int M_ = 0;
        int P_ = 0;
        double fs_ = 0.0;
    };

    // M x (N L) Nyquist-rate sensor streams, noise included.
    CMatrix synthesize_streams(const ScenarioConfig &config);

    // P x N matrix with entry (p, n) = x[n L + c_p].
    CMatrix multicoset_sample(std::span<const cplx> stream, const MultiCosetPattern &pattern, int N);

    // Removes the intra-block delay c T_N from a coset row: multiplies its DFT
    // bin at f in [0, f_s) by exp(-j 2 pi f c T_N). Exact for signals periodic
    // over N L Nyquist samples.
    void align_coset(Eigen::Ref<CVector> row, int offset, const MultiCosetPattern &pattern);

    // Simplified receiver output for the scenario; deterministic in config.seed.
    SnapshotSet assemble_snapshots(const ScenarioConfig &config);

    // Every branch of every sensor, M P x N, sensor-major. Rows picked by J are
    // bit-identical to assemble_snapshots(config).W().
    CMatrix assemble_full_snapshots(const ScenarioConfig &config);

    // Binary dump: "SNYQ", u32 rows, u32 cols, u32 reserved, u64 seed, then
    // rows*cols (re, im) little-endian doubles in row-major order.
    void write_snapshots(const std::filesystem::path &path, const CMatrix &W, std::uint64_t seed);
    CMatrix read_snapshots(const std::filesystem::path &path, std::uint64_t *seed = nullptr);
}

#endif
