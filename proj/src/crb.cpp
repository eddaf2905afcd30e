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
#include "subnyq/errors.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>

namespace subnyq
{
    namespace
    {
        void check_input(const CrbInput &in)
        {
            const auto K = in.phis.size();
            if (in.bands.size() != K || in.R_S.rows() != static_cast<Eigen::Index>(K) ||
                in.R_S.cols() != static_cast<Eigen::Index>(K))
                throw ConfigError("CRB input sizes disagree");
            if (K == 0)
                throw ConfigError("CRB needs at least one source");
            if (!(in.sigma2 > 0.0))
                throw ConfigError("CRB needs sigma2 > 0");
            if (!(in.T_obs > 0.0))
                throw ConfigError("CRB needs T_obs > 0");
            if ((in.R_S - in.R_S.adjoint()).norm() > 1e-12 * std::max(1.0, in.R_S.norm()))
                throw ConfigError("R_S must be Hermitian");
        }

        CMatrix selected(const CrbInput &in)
        {
            CMatrix Hs = build_selected(in.structure, in.phis, in.bands, in.geom, in.pattern);
            Eigen::JacobiSVD<CMatrix> svd(Hs);
            const auto &s = svd.singularValues();
            if (!(s(s.size() - 1) > 1e-10 * s(0)))
                throw EstimationError(EstimationFailure::rank_deficient, "steering matrix of the support is rank deficient");
            return Hs;
        }

        // Inverse of a symmetric positive definite matrix, equilibrated by its
        // diagonal first since parameter scales can differ by many decades.
        RMatrix invert_spd(const RMatrix &F, const char *what)
        {
            const RVector d = F.diagonal();
            if (!(d.minCoeff() > 0.0))
                throw EstimationError(EstimationFailure::singular, std::string(what) + " is singular");
            const RVector s = d.cwiseSqrt().cwiseInverse();
            const RMatrix G = s.asDiagonal() * F * s.asDiagonal();
            Eigen::SelfAdjointEigenSolver<RMatrix> es(G);
            const RVector &ev = es.eigenvalues();
            if (!(ev(0) > 1e-14 * std::abs(ev(ev.size() - 1))))
                throw EstimationError(EstimationFailure::singular, std::string(what) + " is singular");
            const RMatrix Gi = es.eigenvectors() * ev.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
            return s.asDiagonal() * Gi * s.asDiagonal();
        }

        CrbResult bound(const CrbInput &in, const CMatrix &R, double prefactor)
        {
            const CMatrix Hs = selected(in);
            const auto n = Hs.rows();
            const CMatrix gram = Hs.adjoint() * Hs;
            const CMatrix pinv = gram.ldlt().solve(Hs.adjoint());
            const CMatrix Pp = CMatrix::Identity(n, n) - Hs * pinv;

            CMatrix E(n, in.K());
            for (int k = 0; k < in.K(); ++k)
                E.col(k) = steering_derivative(in.structure, in.phis[k], in.bands[k], in.geom, in.pattern);

            const RMatrix F = (E.adjoint() * Pp * E).cwiseProduct(R.transpose()).real();
            RMatrix crb = prefactor * invert_spd((F + F.transpose()) / 2.0, "phase information matrix");
            crb = (crb + crb.transpose()) / 2.0;
            return {crb, crb.diagonal().cwiseSqrt()};
        }

        // Virtual snapshots s_v with sum_v s_v s_v^H = weight * R.
        CMatrix virtual_snapshots(const CMatrix &R, double weight)
        {
            Eigen::SelfAdjointEigenSolver<CMatrix> es(R);
            const RVector &ev = es.eigenvalues();
            const double top = std::max(ev.maxCoeff(), 0.0);
            std::vector<Eigen::Index> keep;
            for (Eigen::Index i = 0; i < ev.size(); ++i)
                if (ev(i) > 1e-12 * top)
                    keep.push_back(i);
            CMatrix S(R.rows(), static_cast<Eigen::Index>(keep.size()));
            for (std::size_t v = 0; v < keep.size(); ++v)
                S.col(static_cast<Eigen::Index>(v)) = std::sqrt(weight * ev(keep[v])) * es.eigenvectors().col(keep[v]);
            return S;
        }

        // Real FIM (2 / sigma2) Re(J^H J) of a complex mean with Jacobian J.
        RMatrix fisher(const CMatrix &J, double sigma2)
        {
            RMatrix F = (2.0 / sigma2) * (J.adjoint() * J).real();
            return (F + F.transpose()) / 2.0;
        }
    }

    CVector steering_derivative(Structure s, double phi, int band, const ArrayGeometry &geom,
                                const MultiCosetPattern &pattern)
    {
        const int M = geom.sensors, P = pattern.P();
        const CVector v = steering(s, phi, band, geom, pattern);
        CVector d(v.size());
        if (s == Structure::simplified)
        {
            d.head(P).setZero();
            for (int m = 1; m < M; ++m)
                d(P + m - 1) = -kJ * static_cast<double>(m) * v(P + m - 1);
        }
        else
        {
            for (int m = 0; m < M; ++m)
                d.segment(m * P, P) = -kJ * static_cast<double>(m) * v.segment(m * P, P);
        }
        return d;
    }

    CrbResult crb_phase(const CrbInput &in)
    {
        check_input(in);
        const double T = in.T_obs * in.pattern.nyquist_rate();
        return bound(in, in.R_S, in.sigma2 / (2.0 * T));
    }

    CrbResult crb_phase_snapshot_form(const CrbInput &in)
    {
        check_input(in);
        const double L = in.pattern.L();
        const double T = in.T_obs * in.pattern.nyquist_rate();
        return bound(in, L * in.R_S, in.sigma2 / (2.0 * T / L));
    }

    RMatrix fim_numerical(const CrbInput &in)
    {
        check_input(in);
        selected(in);
        const int K = in.K();
        const double L = in.pattern.L();
        const double snaps = in.T_obs * in.pattern.nyquist_rate() / L;

        // the band signals carry sqrt(L) against the 1/sqrt(L) columns of B
        const CMatrix S = virtual_snapshots(L * in.R_S, snaps);
        const auto V = S.cols();
        const int rows = channel_count(in.structure, in.geom.sensors, in.pattern.P());

        auto mean = [&](const std::vector<double> &phis, const CMatrix &Sv) {
            const CMatrix Hs = build_selected(in.structure, phis, in.bands, in.geom, in.pattern);
            const CMatrix Y = Hs * Sv;
            return CVector(Eigen::Map<const CVector>(Y.data(), Y.size()));
        };

        const Eigen::Index nparam = K + 2 * K * V;
        CMatrix J(rows * V, nparam);
        const double h = 1e-5;
        for (int k = 0; k < K; ++k)
        {
            auto up = in.phis, dn = in.phis;
            up[k] += h;
            dn[k] -= h;
            J.col(k) = (mean(up, S) - mean(dn, S)) / (2.0 * h);
        }
        Eigen::Index col = K;
        for (Eigen::Index v = 0; v < V; ++v)
            for (int k = 0; k < K; ++k)
                for (const cplx dir : {cplx{1.0, 0.0}, kJ})
                {
                    const double step = h * std::max(1.0, std::abs(S(k, v)));
                    CMatrix up = S, dn = S;
                    up(k, v) += step * dir;
                    dn(k, v) -= step * dir;
                    J.col(col++) = (mean(in.phis, up) - mean(in.phis, dn)) / (2.0 * step);
                }

        const RMatrix cov = invert_spd(fisher(J, in.sigma2), "Fisher information");
        return invert_spd(cov.topLeftCorner(K, K), "phase block of the inverse Fisher information");
    }

    CrbInput crb_input(const ScenarioConfig &config, Structure s)
    {
        CrbInput in;
        const int K = config.K();
        in.R_S = CMatrix::Zero(K, K);
        for (int k = 0; k < K; ++k)
        {
            in.phis.push_back(config.spatial_phase(k));
            in.bands.push_back(config.band(k));
            in.R_S(k, k) = config.sources[k].power();
        }
        in.sigma2 = config.noise_power();
        in.T_obs = static_cast<double>(config.snapshots) * config.pattern.L() * config.pattern.nyquist_period();
        in.geom = config.geom;
        in.pattern = config.pattern;
        in.structure = s;
        return in;
    }

    ToneCrb tone_crb_numerical(const ScenarioConfig &config, Structure s)
    {
        const int K = config.K();
        for (const auto &src : config.sources)
            if (src.envelope != Envelope::pure_tone)
                throw ConfigError("tone bound needs pure-tone sources");
        const double sigma2 = config.noise_power();
        if (!(sigma2 > 0.0))
            throw ConfigError("tone bound needs sigma2 > 0");

        const int N = config.snapshots;
        const double fs = config.pattern.sub_rate();
        const double sqrtL = std::sqrt(static_cast<double>(config.pattern.L()));
        const int rows = channel_count(s, config.geom.sensors, config.pattern.P());

        // per source: phase, residual frequency, Re alpha, Im alpha
        std::vector<double> theta(4 * K);
        for (int k = 0; k < K; ++k)
        {
            const cplx alpha = sqrtL * config.sources[k].amplitude;
            theta[4 * k] = config.spatial_phase(k);
            theta[4 * k + 1] = config.residual_frequency(k);
            theta[4 * k + 2] = alpha.real();
            theta[4 * k + 3] = alpha.imag();
        }

        auto mean = [&](const std::vector<double> &t) {
            CMatrix Y = CMatrix::Zero(rows, N);
            for (int k = 0; k < K; ++k)
            {
                const CVector h = steering(s, t[4 * k], config.band(k), config.geom, config.pattern);
                const cplx alpha(t[4 * k + 2], t[4 * k + 3]);
                const double cyc = t[4 * k + 1] / fs;
                for (int n = 0; n < N; ++n)
                    Y.col(n) += h * (alpha * std::polar(1.0, kTwoPi * cyc * n));
            }
            return CVector(Eigen::Map<const CVector>(Y.data(), Y.size()));
        };

        CMatrix J(static_cast<Eigen::Index>(rows) * N, 4 * K);
        for (int i = 0; i < 4 * K; ++i)
        {
            double step = 1e-5;
            if (i % 4 == 1)
                step = 1e-4 * fs / N;
            else if (i % 4 >= 2)
                step = 1e-5 * std::max(1.0, std::abs(theta[i]));
            auto up = theta, dn = theta;
            up[i] += step;
            dn[i] -= step;
            J.col(i) = (mean(up) - mean(dn)) / (2.0 * step);
        }

        const RMatrix cov = invert_spd(fisher(J, sigma2), "tone Fisher information");
        ToneCrb out{RVector(K), RVector(K)};
        for (int k = 0; k < K; ++k)
        {
            out.phase_var(k) = cov(4 * k, 4 * k);
            out.frequency_var(k) = cov(4 * k + 1, 4 * k + 1);
        }
        return out;
    }
}
