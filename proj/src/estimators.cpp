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

#include "subnyq/errors.hpp"
#include "subnyq/estimators.hpp"

#include <boost/math/tools/minima.hpp>
#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <bit>
#include <cmath>

namespace subnyq
{
    const char *to_string(EstimationFailure kind)
    {
        switch (kind)
        {
        case EstimationFailure::fewer_than_k_peaks:
            return "fewer_than_k_peaks";
        case EstimationFailure::rank_deficient:
            return "rank_deficient";
        case EstimationFailure::empty_support:
            return "empty_support";
        case EstimationFailure::zero_sequence:
            return "zero_sequence";
        case EstimationFailure::singular:
            return "singular";
        case EstimationFailure::out_of_range:
            return "out_of_range";
        case EstimationFailure::size_mismatch:
            return "size_mismatch";
        }
        return "unknown";
    }

    const char *to_string(Algorithm a)
    {
        switch (a)
        {
        case Algorithm::jdfpi:
            return "JDFPI";
        case Algorithm::jdfsdpj:
            return "JDFSDPJ";
        case Algorithm::jdfsd_full:
            return "JDFSD-full";
        }
        return "unknown";
    }

    Algorithm algorithm_from_string(const std::string &name)
    {
        for (auto a : {Algorithm::jdfpi, Algorithm::jdfsdpj, Algorithm::jdfsd_full})
            if (name == to_string(a))
                return a;
        throw ConfigError("unknown algorithm '" + name + "' (expected JDFPI, JDFSDPJ or JDFSD-full)");
    }

    Pairing pair_supports(const CMatrix &Z, const CMatrix &X_omega, const SupportSet &omega)
    {
        const auto K = Z.rows(), c = X_omega.rows();
        if (c != static_cast<Eigen::Index>(omega.omega.size()) || c == 0)
            throw EstimationError(EstimationFailure::size_mismatch, "band estimates do not match the support set");
        if (Z.cols() != X_omega.cols())
            throw EstimationError(EstimationFailure::size_mismatch, "signal estimates differ in snapshot count");

        Pairing out;
        out.magnitude = (Z * X_omega.adjoint() / static_cast<double>(Z.cols())).cwiseAbs();
        out.support.bands.resize(K);
        for (Eigen::Index i = 0; i < K; ++i)
        {
            Eigen::Index j;
            const double top = out.magnitude.row(i).maxCoeff(&j);
            out.support.bands[i] = omega.omega[j];
            double second = 0.0;
            for (Eigen::Index jj = 0; jj < c; ++jj)
                if (jj != j)
                    second = std::max(second, out.magnitude(i, jj));
            if (c > 1 && top < 3.0 * second)
                out.ambiguous = true;
        }
        return out;
    }

    namespace
    {
        double to_band_frequency(double cycles, double fs)
        {
            double u = cycles - std::floor(cycles);
            if (u >= 1.0)
                u = 0.0;
            const double f = u * fs;
            return f < fs ? f : 0.0;
        }

        void require_signal(std::span<const cplx> x)
        {
            if (x.size() < 2)
                throw std::invalid_argument("frequency estimation needs at least two samples");
            if (std::all_of(x.begin(), x.end(), [](cplx v) { return v == cplx{}; }))
                throw EstimationError(EstimationFailure::zero_sequence, "cannot estimate the frequency of a zero sequence");
        }
    }

    double residual_frequency(std::span<const cplx> x, double fs)
    {
        require_signal(x);
        cplx acc{};
        for (std::size_t n = 0; n + 1 < x.size(); ++n)
            acc += x[n + 1] * std::conj(x[n]);
        if (acc == cplx{})
            throw EstimationError(EstimationFailure::zero_sequence, "lag-one correlation vanishes");
        return to_band_frequency(std::arg(acc) / kTwoPi, fs);
    }

    namespace
    {
        // Brent search of |sum x[n] e^{-j2 pi nu n}|^2 over nu0 +- width, in cycles per sample.
        double refine_peak(std::span<const cplx> x, double nu0, double width)
        {
            auto neg_power = [&](double u) {
                const double nu = nu0 + u * width;
                const cplx w = std::polar(1.0, -kTwoPi * nu);
                cplx z{1.0, 0.0}, acc{};
                for (const auto &v : x)
                {
                    acc += v * z;
                    z *= w;
                }
                return -std::norm(acc);
            };
            return nu0 + width * boost::math::tools::brent_find_minima(neg_power, -1.0, 1.0,
                                                                       std::numeric_limits<double>::digits)
                                     .first;
        }

        double coarse_peak(std::span<const cplx> x)
        {
            const std::size_t nfft = std::bit_ceil(4 * x.size());
            std::vector<cplx> padded(nfft, cplx{}), spec;
            std::copy(x.begin(), x.end(), padded.begin());
            Eigen::FFT<double> fft;
            fft.fwd(spec, padded);
            std::size_t kmax = 0;
            for (std::size_t k = 1; k < nfft; ++k)
                if (std::norm(spec[k]) > std::norm(spec[kmax]))
                    kmax = k;
            return static_cast<double>(kmax) / static_cast<double>(nfft);
        }
    }

    double residual_frequency_periodogram(std::span<const cplx> x, double fs)
    {
        require_signal(x);
        const double nu0 = coarse_peak(x);
        return to_band_frequency(refine_peak(x, nu0, 1.0 / static_cast<double>(std::bit_ceil(4 * x.size()))), fs);
    }

    std::vector<double> refine_frequencies(const CMatrix &H, const CMatrix &X, std::vector<double> f_res, double fs,
                                           int passes)
    {
        const auto K = H.cols(), N = X.cols();
        if (static_cast<Eigen::Index>(f_res.size()) != K || H.rows() != X.rows())
            throw EstimationError(EstimationFailure::size_mismatch, "refinement operands disagree in size");
        if (K == 0 || passes < 1)
            return f_res;

        const RVector hn = H.colwise().squaredNorm().transpose();
        if (hn.minCoeff() <= 0.0)
            throw EstimationError(EstimationFailure::singular, "zero steering column");
        const CMatrix mf = hn.cwiseInverse().asDiagonal() * (H.adjoint() * X);
        const CMatrix C = hn.cwiseInverse().asDiagonal() * (H.adjoint() * H);

        std::vector<double> nu(f_res.size());
        for (std::size_t k = 0; k < nu.size(); ++k)
            nu[k] = f_res[k] / fs;

        auto tone = [N](double v) {
            CVector t(N);
            const cplx w = std::polar(1.0, kTwoPi * v);
            cplx z{1.0, 0.0};
            for (Eigen::Index n = 0; n < N; ++n, z *= w)
                t(n) = z;
            return t;
        };

        // tone amplitudes from the matched-filter outputs, jointly
        auto fit = [&] {
            CMatrix T(N, K);
            for (Eigen::Index k = 0; k < K; ++k)
                T.col(k) = tone(nu[static_cast<std::size_t>(k)]);
            const CMatrix G = C.cwiseProduct(T.adjoint() * T);
            return CVector(G.fullPivLu().solve((mf * T.conjugate()).diagonal()));
        };

        CVector alpha = fit();
        const double halfwidth = 0.5 / static_cast<double>(N);
        for (int pass = 0; pass < passes; ++pass)
        {
            for (Eigen::Index k = 0; k < K; ++k)
            {
                CVector r = mf.row(k).transpose();
                for (Eigen::Index j = 0; j < K; ++j)
                    if (j != k)
                        r -= C(k, j) * alpha(j) * tone(nu[static_cast<std::size_t>(j)]);
                const std::span<const cplx> seq(r.data(), static_cast<std::size_t>(N));
                nu[static_cast<std::size_t>(k)] = refine_peak(seq, nu[static_cast<std::size_t>(k)], halfwidth);
            }
            alpha = fit();
        }

        for (std::size_t k = 0; k < nu.size(); ++k)
            f_res[k] = to_band_frequency(nu[k], fs);
        return f_res;
    }

    double unfold_frequency(int band, double f_res, const MultiCosetPattern &pattern)
    {
        if (band < 0 || band >= pattern.L())
            throw EstimationError(EstimationFailure::out_of_range, "band index outside [0, L-1]");
        if (!(f_res >= 0.0 && f_res < pattern.sub_rate()))
            throw EstimationError(EstimationFailure::out_of_range, "residual frequency outside [0, f_N / L)");
        return band * pattern.sub_rate() + f_res;
    }

    namespace
    {
        template <typename F>
        auto tagged(const char *step, F &&fn) -> decltype(fn())
        {
            try
            {
                return fn();
            }
            catch (const EstimationError &e)
            {
                throw e.with_step(step);
            }
        }

        // Steps shared by every pipeline once (phase, band) pairs are known:
        // LS signal recovery, residual frequency, unfolding and DOA.
        std::vector<SourceEstimate> finish(Structure s, const CMatrix &X, const std::vector<double> &phis,
                                           const std::vector<int> &bands, const ReceiverSetup &setup,
                                           const EstimatorOptions &opt)
        {
            const CMatrix Hs = build_selected(s, phis, bands, setup.geom, setup.pattern);
            const CMatrix S = tagged("ls_solve_S", [&] { return ls_solve(Hs, X); });

            const double fs = setup.pattern.sub_rate();
            std::vector<double> f_res;
            for (Eigen::Index k = 0; k < S.rows(); ++k)
            {
                const CVector row = S.row(k).transpose();
                const std::span<const cplx> seq(row.data(), static_cast<std::size_t>(row.size()));
                f_res.push_back(tagged("residual_frequency", [&] {
                    return opt.frequency == FrequencyMethod::periodogram ? residual_frequency_periodogram(seq, fs)
                                                                         : residual_frequency(seq, fs);
                }));
            }
            if (opt.frequency == FrequencyMethod::periodogram)
                f_res = tagged("residual_frequency",
                               [&] { return refine_frequencies(Hs, X, f_res, fs, opt.refine_passes); });

            std::vector<SourceEstimate> out;
            for (std::size_t k = 0; k < phis.size(); ++k)
            {
                SourceEstimate e;
                e.phi = phis[k];
                e.band = bands[k];
                e.f_residual = f_res[k];
                e.f = tagged("unfold_frequency", [&] { return unfold_frequency(e.band, e.f_residual, setup.pattern); });
                if (e.f > 0.0)
                {
                    try
                    {
                        e.theta = doa_from_phase(e.phi, e.f, setup.geom);
                    }
                    catch (const std::domain_error &)
                    {
                        // aliased at this spacing; phase and frequency still stand
                    }
                }
                out.push_back(e);
            }
            return out;
        }

        EstimationResult joint_pipeline(Algorithm alg, Structure s, const CMatrix &X, const ReceiverSetup &setup,
                                        const EstimatorOptions &opt)
        {
            const int rows = channel_count(s, setup.geom.sensors, setup.pattern.P());
            if (X.rows() != rows)
                throw std::invalid_argument("snapshot matrix has " + std::to_string(X.rows()) + " rows, expected " +
                                            std::to_string(rows));
            if (setup.K < 1 || setup.K >= rows)
                throw std::invalid_argument("joint search needs 1 <= K < channels");

            const auto picks = tagged("joint_search", [&] {
                return joint_search(s, X, setup.K, setup.geom, setup.pattern, opt);
            });
            std::vector<double> phis;
            std::vector<int> bands;
            for (const auto &p : picks)
            {
                phis.push_back(p.phi);
                bands.push_back(p.band);
            }
            EstimationResult r;
            r.algorithm = alg;
            r.sources = finish(s, X, phis, bands, setup, opt);
            return r;
        }
    }

    EstimationResult jdfpi(const SnapshotSet &snapshots, const ReceiverSetup &setup, const EstimatorOptions &opt)
    {
        const int M = setup.geom.sensors, P = setup.pattern.P(), K = setup.K;
        if (K < 1 || K >= M || K > P - 1)
            throw std::invalid_argument("JDFPI needs 1 <= K < M and K <= P - 1");
        if (snapshots.sensors() != M || snapshots.branches() != P)
            throw std::invalid_argument("snapshot set does not match the receiver setup");

        const CMatrix Q = snapshots.Q();
        const CMatrix Y1 = snapshots.Y1();

        const auto phis = tagged("music_spatial", [&] { return music_spatial(Q, K, opt); });
        const CMatrix Z = tagged("ls_solve_Z", [&] { return ls_solve(build_A(phis, M), Q); });

        const CMatrix B = build_B(setup.pattern);
        const SupportSet omega = tagged("ctf_support", [&] { return ctf_support(Y1, B, K); });
        const CMatrix X = tagged("ls_solve_X", [&] {
            CMatrix Bo(P, static_cast<Eigen::Index>(omega.omega.size()));
            for (std::size_t j = 0; j < omega.omega.size(); ++j)
                Bo.col(static_cast<Eigen::Index>(j)) = B.col(omega.omega[j]);
            return ls_solve(Bo, Y1);
        });

        const Pairing pairing = tagged("pair_supports", [&] { return pair_supports(Z, X, omega); });

        EstimationResult r;
        r.algorithm = Algorithm::jdfpi;
        r.pairing_ambiguous = pairing.ambiguous;
        r.sources = finish(Structure::simplified, snapshots.W(), phis, pairing.support.bands, setup, opt);
        return r;
    }

    EstimationResult jdfsdpj(const SnapshotSet &snapshots, const ReceiverSetup &setup, const EstimatorOptions &opt)
    {
        return joint_pipeline(Algorithm::jdfsdpj, Structure::simplified, snapshots.W(), setup, opt);
    }

    EstimationResult jdfsd_full(const CMatrix &Y_full, const ReceiverSetup &setup, const EstimatorOptions &opt)
    {
        return joint_pipeline(Algorithm::jdfsd_full, Structure::full, Y_full, setup, opt);
    }
}
