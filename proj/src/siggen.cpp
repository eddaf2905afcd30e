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

#include "subnyq/siggen.hpp"
#include "subnyq/errors.hpp"
#include "subnyq/rng.hpp"

#include <unsupported/Eigen/FFT>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <optional>

namespace subnyq
{
    namespace
    {
        constexpr std::uint64_t kNoiseStream = 1;
        constexpr std::uint64_t kEnvelopeStream = 2;

        // Per-source waveform sampler at arbitrary Nyquist indices.
        class SourceWaveform
        {
        public:
            SourceWaveform(const SourceTruth &src, int k, const ScenarioConfig &config)
                : amp_(src.amplitude), cycles_per_sample_(src.carrier * config.pattern.nyquist_period())
            {
                if (src.envelope == Envelope::filtered_noise)
                    envelope_ = make_envelope(src, k, config);
            }

            cplx operator()(std::int64_t idx) const
            {
                // fractional cycles first keeps the phase exact for long streams
                const double cyc = std::fmod(cycles_per_sample_ * static_cast<double>(idx), 1.0);
                cplx v = amp_ * std::polar(1.0, kTwoPi * cyc);
                if (envelope_)
                    v *= (*envelope_)(idx);
                return v;
            }

        private:
            static CVector make_envelope(const SourceTruth &src, int k, const ScenarioConfig &config)
            {
                const int N = config.snapshots, L = config.pattern.L();
                const int len = N * L;
                const double bin = config.pattern.nyquist_rate() / len;
                const int nb = std::max(1, static_cast<int>(std::floor(src.bandwidth / bin)));

                auto eng = make_engine(config.seed, {kEnvelopeStream, static_cast<std::uint64_t>(k)});
                std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
                std::vector<cplx> spec(len, cplx{});
                for (int q = 0; q < nb; ++q)
                    spec[q] = cplx(gauss(eng), gauss(eng));

                std::vector<cplx> env;
                Eigen::FFT<double> fft;
                fft.inv(env, spec);
                double pw = 0.0;
                for (const auto &v : env)
                    pw += std::norm(v);
                pw /= len;
                CVector out = Eigen::Map<CVector>(env.data(), len);
                if (pw > 0.0)
                    out /= std::sqrt(pw);
                return out;
            }

            cplx amp_;
            double cycles_per_sample_;
            std::optional<CVector> envelope_;
        };

        struct Generator
        {
            const ScenarioConfig &config;
            std::vector<SourceWaveform> waves;
            std::vector<double> phis;
            double noise_std;

            explicit Generator(const ScenarioConfig &c) : config(c), noise_std(std::sqrt(c.noise_power() / 2.0))
            {
                for (int k = 0; k < c.K(); ++k)
                {
                    waves.emplace_back(c.sources[k], k, c);
                    phis.push_back(c.spatial_phase(k));
                }
            }

            // Samples x_m[n L + r], n = 0..N-1, for sensor m and block residue r.
            CVector coset(int m, int r) const
            {
                const int N = config.snapshots, L = config.pattern.L();
                CVector row = CVector::Zero(N);
                for (std::size_t k = 0; k < waves.size(); ++k)
                {
                    const cplx a = std::polar(1.0, -phis[k] * m);
                    for (int n = 0; n < N; ++n)
                        row(n) += a * waves[k](static_cast<std::int64_t>(n) * L + r);
                }
                if (noise_std > 0.0)
                {
                    auto eng = make_engine(config.seed, {kNoiseStream, static_cast<std::uint64_t>(m),
                                                         static_cast<std::uint64_t>(r)});
                    std::normal_distribution<double> gauss(0.0, noise_std);
                    for (int n = 0; n < N; ++n)
                    {
                        const double re = gauss(eng);
                        const double im = gauss(eng);
                        row(n) += cplx(re, im);
                    }
                }
                return row;
            }

            CMatrix rows(const std::vector<std::pair<int, int>> &channels) const
            {
                const auto &c = config.pattern.offsets();
                CMatrix out(static_cast<Eigen::Index>(channels.size()), config.snapshots);
                for (std::size_t i = 0; i < channels.size(); ++i)
                {
                    const auto [m, p] = channels[i];
                    CVector row = coset(m, c[p]);
                    align_coset(row, c[p], config.pattern);
                    out.row(static_cast<Eigen::Index>(i)) = row.transpose();
                }
                return out;
            }
        };
    }

    double ScenarioConfig::noise_power() const
    {
        return noiseless ? 0.0 : std::pow(10.0, -snr_db / 10.0);
    }

    double ScenarioConfig::spatial_phase(int k) const
    {
        return phase_from_doa(sources.at(k).doa, sources.at(k).carrier, geom);
    }

    int ScenarioConfig::band(int k) const
    {
        return pattern.band_of(sources.at(k).carrier);
    }

    double ScenarioConfig::residual_frequency(int k) const
    {
        return sources.at(k).carrier - band(k) * pattern.sub_rate();
    }

    double ScenarioConfig::carrier_grid() const
    {
        return pattern.nyquist_rate() / (static_cast<double>(snapshots) * pattern.L());
    }

    ScenarioConfig ScenarioConfig::with_grid_carriers() const
    {
        ScenarioConfig out = *this;
        const double grid = carrier_grid();
        for (auto &s : out.sources)
        {
            const std::int64_t b = pattern.band_of(s.carrier);
            const std::int64_t lo = b * snapshots;
            const std::int64_t extra = s.envelope == Envelope::filtered_noise
                                           ? static_cast<std::int64_t>(std::ceil(s.bandwidth / grid))
                                           : 0;
            const std::int64_t hi = std::max(lo, (b + 1) * snapshots - 1 - extra);
            const auto q = std::clamp(static_cast<std::int64_t>(std::llround(s.carrier / grid)), lo, hi);
            s.carrier = static_cast<double>(q) * grid;
        }
        return out;
    }

    void ScenarioConfig::validate() const
    {
        geom.validate();
        const int M = geom.sensors, P = pattern.P();
        if (K() >= M)
            throw ConfigError("need K < M (K = " + std::to_string(K()) + ", M = " + std::to_string(M) + ")");
        if (K() > M + P - 2)
            throw ConfigError("need K <= M + P - 2");
        if (snapshots < 2 * (M + P - 1))
            throw ConfigError("need at least 2 (M + P - 1) = " + std::to_string(2 * (M + P - 1)) + " snapshots");
        if (!noiseless && !std::isfinite(snr_db))
            throw ConfigError("snr_db must be finite (use noiseless for a clean scenario)");
        for (int k = 0; k < K(); ++k)
        {
            const auto &s = sources[k];
            const std::string tag = "source " + std::to_string(k) + ": ";
            if (!(std::abs(s.doa) < kPi / 2))
                throw ConfigError(tag + "DOA must lie in (-pi/2, pi/2)");
            if (!(s.carrier >= 0.0 && s.carrier < pattern.nyquist_rate()))
                throw ConfigError(tag + "carrier must lie in [0, f_N)");
            if (s.envelope == Envelope::filtered_noise && !(s.bandwidth > 0.0))
                throw ConfigError(tag + "filtered-noise envelope needs a positive bandwidth");
            const double bw = s.envelope == Envelope::filtered_noise ? s.bandwidth : 0.0;
            if (pattern.band_of(s.carrier) != pattern.band_of(s.carrier + bw))
                throw ConfigError(tag + "signal straddles a band edge");
            if (!std::isfinite(std::abs(s.amplitude)))
                throw ConfigError(tag + "amplitude must be finite");
        }
    }

    CMatrix SnapshotSet::Q() const
    {
        CMatrix q(M_, W_.cols());
        q.row(0) = W_.row(0);
        if (M_ > 1)
            q.bottomRows(M_ - 1) = W_.middleRows(P_, M_ - 1);
        return q;
    }

    CMatrix synthesize_streams(const ScenarioConfig &config)
    {
        config.validate();
        const Generator gen(config);
        const int M = config.geom.sensors, L = config.pattern.L(), N = config.snapshots;
        CMatrix x(M, static_cast<Eigen::Index>(N) * L);
        for (int m = 0; m < M; ++m)
            for (int r = 0; r < L; ++r)
            {
                const CVector c = gen.coset(m, r);
                for (int n = 0; n < N; ++n)
                    x(m, static_cast<Eigen::Index>(n) * L + r) = c(n);
            }
        return x;
    }

    CMatrix multicoset_sample(std::span<const cplx> stream, const MultiCosetPattern &pattern, int N)
    {
        const int L = pattern.L(), P = pattern.P();
        if (static_cast<std::int64_t>(stream.size()) < static_cast<std::int64_t>(N) * L)
            throw std::length_error("stream of " + std::to_string(stream.size()) + " samples is shorter than N L = " +
                                    std::to_string(static_cast<std::int64_t>(N) * L));
        CMatrix y(P, N);
        for (int p = 0; p < P; ++p)
            for (int n = 0; n < N; ++n)
                y(p, n) = stream[static_cast<std::size_t>(n) * L + pattern.offsets()[p]];
        return y;
    }

    void align_coset(Eigen::Ref<CVector> row, int offset, const MultiCosetPattern &pattern)
    {
        if (offset == 0 || row.size() == 0)
            return;
        const auto N = row.size();
        std::vector<cplx> in(row.data(), row.data() + N), spec, out;
        Eigen::FFT<double> fft;
        fft.fwd(spec, in);
        // bin q sits at q f_s / N; its delay phase is 2 pi q c / (N L)
        const double denom = static_cast<double>(N) * pattern.L();
        for (Eigen::Index q = 0; q < N; ++q)
        {
            const auto e = (static_cast<std::int64_t>(q) * offset) % static_cast<std::int64_t>(denom);
            spec[q] *= std::polar(1.0, -kTwoPi * static_cast<double>(e) / denom);
        }
        fft.inv(out, spec);
        row = Eigen::Map<CVector>(out.data(), N);
    }

    SnapshotSet assemble_snapshots(const ScenarioConfig &config)
    {
        config.validate();
        const int M = config.geom.sensors, P = config.pattern.P();
        const Generator gen(config);
        return SnapshotSet(gen.rows(selected_channels(M, P)), M, P, config.pattern.sub_rate());
    }

    CMatrix assemble_full_snapshots(const ScenarioConfig &config)
    {
        config.validate();
        const int M = config.geom.sensors, P = config.pattern.P();
        std::vector<std::pair<int, int>> all;
        for (int m = 0; m < M; ++m)
            for (int p = 0; p < P; ++p)
                all.emplace_back(m, p);
        return Generator(config).rows(all);
    }

    namespace
    {
        template <typename T>
        void put_le(std::ostream &os, T v)
        {
            static_assert(std::is_trivially_copyable_v<T>);
            unsigned char buf[sizeof(T)];
            std::memcpy(buf, &v, sizeof(T));
            if constexpr (std::endian::native == std::endian::big)
                std::reverse(buf, buf + sizeof(T));
            os.write(reinterpret_cast<const char *>(buf), sizeof(T));
        }

        template <typename T>
        T get_le(std::istream &is)
        {
            unsigned char buf[sizeof(T)];
            if (!is.read(reinterpret_cast<char *>(buf), sizeof(T)))
                throw std::runtime_error("snapshot file truncated");
            if constexpr (std::endian::native == std::endian::big)
                std::reverse(buf, buf + sizeof(T));
            T v;
            std::memcpy(&v, buf, sizeof(T));
            return v;
        }
    }

    void write_snapshots(const std::filesystem::path &path, const CMatrix &W, std::uint64_t seed)
    {
        std::ofstream os(path, std::ios::binary);
        if (!os)
            throw std::runtime_error("cannot open " + path.string() + " for writing");
        os.write("SNYQ", 4);
        put_le<std::uint32_t>(os, static_cast<std::uint32_t>(W.rows()));
        put_le<std::uint32_t>(os, static_cast<std::uint32_t>(W.cols()));
        put_le<std::uint32_t>(os, 0);
        put_le<std::uint64_t>(os, seed);
        for (Eigen::Index i = 0; i < W.rows(); ++i)
            for (Eigen::Index j = 0; j < W.cols(); ++j)
            {
                put_le<double>(os, W(i, j).real());
                put_le<double>(os, W(i, j).imag());
            }
        if (!os)
            throw std::runtime_error("write to " + path.string() + " failed");
    }

    CMatrix read_snapshots(const std::filesystem::path &path, std::uint64_t *seed)
    {
        std::ifstream is(path, std::ios::binary);
        if (!is)
            throw std::runtime_error("cannot open " + path.string());
        char magic[4];
        if (!is.read(magic, 4) || std::memcmp(magic, "SNYQ", 4) != 0)
            throw std::runtime_error(path.string() + " is not a snapshot file");
        const auto rows = get_le<std::uint32_t>(is);
        const auto cols = get_le<std::uint32_t>(is);
        get_le<std::uint32_t>(is);
        const auto s = get_le<std::uint64_t>(is);
        if (seed)
            *seed = s;
        CMatrix W(rows, cols);
        for (std::uint32_t i = 0; i < rows; ++i)
            for (std::uint32_t j = 0; j < cols; ++j)
            {
                const double re = get_le<double>(is);
                const double im = get_le<double>(is);
                W(i, j) = cplx(re, im);
            }
        return W;
    }
}
