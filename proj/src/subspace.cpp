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
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace subnyq
{
    CMatrix sample_covariance(const CMatrix &X)
    {
        if (X.cols() < 1)
            throw std::invalid_argument("sample_covariance needs at least one snapshot");
        CMatrix R = X * X.adjoint() / static_cast<double>(X.cols());
        return (R + R.adjoint()) / 2.0;
    }

    SubspaceDecomposition decompose(const CMatrix &R, int K)
    {
        const auto n = static_cast<int>(R.rows());
        if (K < 0 || K >= n)
            throw std::invalid_argument("decompose needs 0 <= K < rows");
        Eigen::SelfAdjointEigenSolver<CMatrix> es(R);
        if (es.info() != Eigen::Success)
            throw EstimationError(EstimationFailure::singular, "eigendecomposition did not converge");

        SubspaceDecomposition d;
        d.R = R;
        d.eigvals = es.eigenvalues().reverse();
        const CMatrix U = es.eigenvectors().rowwise().reverse();
        d.U_S = U.leftCols(K);
        d.U_N = U.rightCols(n - K);
        if (K > 0)
        {
            const double lo = d.eigvals(K), hi = d.eigvals(K - 1);
            d.weak_separation = !(hi >= 2.0 * lo) || hi <= 0.0;
        }
        return d;
    }

    PhaseGrid::PhaseGrid(double step)
    {
        if (!(step > 0.0) || step > 1.0)
            throw std::invalid_argument("phase grid step must lie in (0, 1]");
        n_ = std::max(8, static_cast<int>(std::lround(kTwoPi / step)));
    }

    namespace
    {
        // e^{-j phi_g m}, m = 0..rows-1, over the grid
        CMatrix grid_phasors(int rows, const PhaseGrid &grid)
        {
            CMatrix E(rows, grid.size());
            for (int g = 0; g < grid.size(); ++g)
                for (int m = 0; m < rows; ++m)
                    E(m, g) = std::polar(1.0, -grid.at(g) * m);
            return E;
        }

        double floor_denominator(double den, double norm2)
        {
            return std::max(den, 1e-20 * norm2);
        }

        // Null-spectrum denominator ||a||^2 - ||U_S^H a||^2 for one structure.
        // Point evaluations use ||U_N^H a||^2, which keeps its precision near a null.
        class JointSpectrum
        {
        public:
            JointSpectrum(Structure s, const SubspaceDecomposition &dec, const ArrayGeometry &geom,
                          const MultiCosetPattern &pattern)
                : s_(s), U_S_(dec.U_S), U_N_(dec.U_N), geom_(geom), pattern_(pattern), B_(build_B(pattern))
            {
            }

            double denominator(double phi, int band) const
            {
                const CVector a = steering(s_, phi, band, geom_, pattern_);
                return floor_denominator((U_N_.adjoint() * a).squaredNorm(), a.squaredNorm());
            }

            RMatrix grid(const PhaseGrid &grid) const
            {
                const int M = geom_.sensors, P = pattern_.P(), L = pattern_.L();
                const Eigen::Index K = U_S_.cols();
                RMatrix out(L, grid.size());
                if (s_ == Structure::simplified)
                {
                    const double norm2 = static_cast<double>(M + P - 1) / L;
                    const CMatrix E = grid_phasors(M, grid).bottomRows(M - 1);
                    const CMatrix T = U_S_.bottomRows(M - 1).adjoint() * E; // K x G
                    const CMatrix head = U_S_.topRows(P).adjoint() * B_;    // K x L
                    for (int l = 0; l < L; ++l)
                    {
                        const cplx b0 = B_(0, l);
                        for (int g = 0; g < grid.size(); ++g)
                        {
                            double proj = 0.0;
                            for (Eigen::Index k = 0; k < K; ++k)
                                proj += std::norm(head(k, l) + b0 * T(k, g));
                            out(l, g) = 1.0 / floor_denominator(norm2 - proj, norm2);
                        }
                    }
                }
                else
                {
                    const double norm2 = static_cast<double>(M * P) / L;
                    const CMatrix E = grid_phasors(M, grid);
                    CMatrix C(K, M);
                    for (int l = 0; l < L; ++l)
                    {
                        for (int m = 0; m < M; ++m)
                            C.col(m) = U_S_.middleRows(m * P, P).adjoint() * B_.col(l);
                        const CMatrix V = C * E;
                        for (int g = 0; g < grid.size(); ++g)
                            out(l, g) = 1.0 / floor_denominator(norm2 - V.col(g).squaredNorm(), norm2);
                    }
                }
                return out;
            }

        private:
            Structure s_;
            const CMatrix &U_S_;
            const CMatrix &U_N_;
            const ArrayGeometry &geom_;
            const MultiCosetPattern &pattern_;
            CMatrix B_;
        };

        struct Candidate
        {
            int band;
            int cell;
            double value;
        };

        // Strict local maxima (circular in phase) above the floor, strongest
        // first, with per-band suppression of nearby weaker maxima.
        std::vector<Candidate> pick_peaks(const RMatrix &spec, const EstimatorOptions &opt)
        {
            const auto G = static_cast<int>(spec.cols());
            std::vector<double> all(spec.data(), spec.data() + spec.size());
            auto mid = all.begin() + static_cast<std::ptrdiff_t>(all.size() / 2);
            std::nth_element(all.begin(), mid, all.end());
            const double floor = opt.peak_floor_ratio * (*mid);

            std::vector<Candidate> cand;
            for (int l = 0; l < spec.rows(); ++l)
                for (int g = 0; g < G; ++g)
                {
                    const double v = spec(l, g);
                    const double left = spec(l, (g + G - 1) % G), right = spec(l, (g + 1) % G);
                    if (v > left && v >= right && v >= floor)
                        cand.push_back({l, g, v});
                }
            std::stable_sort(cand.begin(), cand.end(),
                             [](const Candidate &a, const Candidate &b) { return a.value > b.value; });

            std::vector<Candidate> kept;
            for (const auto &c : cand)
            {
                bool near = false;
                for (const auto &k : kept)
                {
                    const int dist = std::abs(c.cell - k.cell);
                    if (k.band == c.band && std::min(dist, G - dist) <= opt.nms_radius)
                        near = true;
                }
                if (!near)
                    kept.push_back(c);
            }
            return kept;
        }

        // Minimizes den over [phi0 - step, phi0 + step].
        template <typename F>
        double refine_phase(F den, double phi0, double step)
        {
            auto f = [&](double u) { return den(phi0 + u * step); };
            const auto r = boost::math::tools::brent_find_minima(f, -1.0, 1.0, std::numeric_limits<double>::digits);
            return wrap_phase(phi0 + r.first * step);
        }
    }

    RVector spatial_pseudospectrum(const SubspaceDecomposition &dec, const PhaseGrid &grid)
    {
        const auto M = static_cast<int>(dec.R.rows());
        const CMatrix V = dec.U_S.adjoint() * grid_phasors(M, grid);
        RVector p(grid.size());
        for (int g = 0; g < grid.size(); ++g)
            p(g) = 1.0 / floor_denominator(M - V.col(g).squaredNorm(), M);
        return p;
    }

    std::vector<double> music_spatial(const CMatrix &Q, int K, const EstimatorOptions &opt)
    {
        const auto M = static_cast<int>(Q.rows());
        if (K < 1 || K >= M)
            throw std::invalid_argument("spatial MUSIC needs 1 <= K < M");
        const auto dec = decompose(sample_covariance(Q), K);
        const PhaseGrid grid(opt.grid_step);
        const RVector p = spatial_pseudospectrum(dec, grid);
        const auto peaks = pick_peaks(p.transpose(), opt);
        if (static_cast<int>(peaks.size()) < K)
            throw EstimationError(EstimationFailure::fewer_than_k_peaks,
                                  "spatial spectrum has " + std::to_string(peaks.size()) + " peaks, need " +
                                      std::to_string(K));

        auto den = [&](double phi) {
            const CVector a = spatial_steering(phi, M);
            return floor_denominator((dec.U_N.adjoint() * a).squaredNorm(), M);
        };
        std::vector<double> phis;
        for (int k = 0; k < K; ++k)
            phis.push_back(refine_phase(den, grid.at(peaks[k].cell), grid.step()));
        return phis;
    }

    RMatrix joint_pseudospectrum(Structure s, const SubspaceDecomposition &dec, const ArrayGeometry &geom,
                                 const MultiCosetPattern &pattern, const PhaseGrid &grid)
    {
        return JointSpectrum(s, dec, geom, pattern).grid(grid);
    }

    std::vector<JointPick> joint_search(Structure s, const CMatrix &X, int K, const ArrayGeometry &geom,
                                        const MultiCosetPattern &pattern, const EstimatorOptions &opt)
    {
        if (K < 1 || K >= X.rows())
            throw std::invalid_argument("joint search needs 1 <= K < channels");
        const auto dec = decompose(sample_covariance(X), K);
        const PhaseGrid grid(opt.grid_step);
        const JointSpectrum js(s, dec, geom, pattern);
        const auto peaks = pick_peaks(js.grid(grid), opt);

        std::vector<JointPick> picks;
        for (const auto &c : peaks)
        {
            if (static_cast<int>(picks.size()) == K)
                break;
            auto den = [&](double phi) { return js.denominator(phi, c.band); };
            const double phi = refine_phase(den, grid.at(c.cell), grid.step());
            const bool dup = std::any_of(picks.begin(), picks.end(), [&](const JointPick &p) {
                return p.band == c.band && std::abs(wrap_phase(p.phi - phi)) < grid.step();
            });
            if (!dup)
                picks.push_back({phi, c.band, c.value});
        }
        if (static_cast<int>(picks.size()) < K)
            throw EstimationError(EstimationFailure::fewer_than_k_peaks,
                                  "joint spectrum has " + std::to_string(picks.size()) + " distinct peaks, need " +
                                      std::to_string(K));
        return picks;
    }
}
