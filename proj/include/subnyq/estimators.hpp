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

#ifndef SUBNYQ_ESTIMATORS_HPP
#define SUBNYQ_ESTIMATORS_HPP

#include "subnyq/model.hpp"
#include "subnyq/siggen.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace subnyq
{
    // What an estimator is allowed to know about the receiver.
    struct ReceiverSetup
    {
        ArrayGeometry geom;
        MultiCosetPattern pattern;
        int K = 1;

        static ReceiverSetup from(const ScenarioConfig &c) { return {c.geom, c.pattern, c.K()}; }
    };

    enum class FrequencyMethod
    {
        linear_prediction, // lag-one phase, exact for noiseless tones
        periodogram        // periodogram maximum refined off-grid (single-tone ML)
    };

    struct EstimatorOptions
    {
        double grid_step = 1e-3;       // phase grid over (-pi, pi]
        int nms_radius = 3;            // grid cells suppressed around a pick, per band
        double peak_floor_ratio = 4.0; // peaks must exceed this multiple of the median pseudo-spectrum
        FrequencyMethod frequency = FrequencyMethod::periodogram;
        int refine_passes = 2;         // deflation passes after the periodogram step
    };

    struct SubspaceDecomposition
    {
        CMatrix R;       // Hermitian covariance that was decomposed
        RVector eigvals; // descending
        CMatrix U_S;     // K dominant eigenvectors
        CMatrix U_N;     // remaining eigenvectors
        bool weak_separation = false; // eigval_K / eigval_{K+1} < 2
    };

    // R = X X^H / N, symmetrized.
    CMatrix sample_covariance(const CMatrix &X);

    SubspaceDecomposition decompose(const CMatrix &R, int K);

    // Uniform grid over (-pi, pi]; element i is -pi + (i + 1) * 2 pi / size.
    class PhaseGrid
    {
    public:
        explicit PhaseGrid(double step);
        int size() const { return n_; }
        double step() const { return kTwoPi / n_; }
        double at(int i) const { return -kPi + (i + 1) * step(); }

    private:
        int n_;
    };

    // 1 / ||a(phi)^H U_N||^2 over the grid for the spatial-only model.
    RVector spatial_pseudospectrum(const SubspaceDecomposition &dec, const PhaseGrid &grid);

    // Spatial MUSIC on the branch-1 channels. Returns K phases in (-pi, pi],
    // sorted by decreasing pseudo-spectrum. Throws fewer_than_k_peaks.
    std::vector<double> music_spatial(const CMatrix &Q, int K, const EstimatorOptions &opt = {});

    // Joint (phase, band) pseudo-spectrum 1 / ||a_l(phi)^H U_N||^2 as an L x grid matrix.
    RMatrix joint_pseudospectrum(Structure s, const SubspaceDecomposition &dec, const ArrayGeometry &geom,
                                 const MultiCosetPattern &pattern, const PhaseGrid &grid);

    struct JointPick
    {
        double phi;
        int band;
        double value;
    };

    // K strongest joint peaks, refined in phase and deduplicated.
    std::vector<JointPick> joint_search(Structure s, const CMatrix &X, int K, const ArrayGeometry &geom,
                                        const MultiCosetPattern &pattern, const EstimatorOptions &opt = {});

    // Least-squares solution of A X = Obs. Throws rank_deficient when cond(A) > 1e10.
    CMatrix ls_solve(const CMatrix &A, const CMatrix &Obs);

    struct SupportSet
    {
        std::vector<int> omega; // sorted band indices
    };

    // Band support of sensor 1's branches via the covariance frame and a
    // rank-aware simultaneous OMP over the columns of B.
    SupportSet ctf_support(const CMatrix &Y1, const CMatrix &B, int K);

    struct JointSupport
    {
        std::vector<int> bands; // band of source slot i

        std::vector<int> flat(int L) const
        {
            std::vector<int> s(bands.size());
            for (std::size_t i = 0; i < bands.size(); ++i)
                s[i] = static_cast<int>(i) * L + bands[i];
            return s;
        }
    };

    struct Pairing
    {
        JointSupport support;
        RMatrix magnitude;      // |R_ij|, K x c
        bool ambiguous = false; // some row's top two entries within 3x
    };

    // Matches source rows of Z to bands of X_omega through their cross-correlation.
    Pairing pair_supports(const CMatrix &Z, const CMatrix &X_omega, const SupportSet &omega);

    // f in [0, f_s) from the lag-one phase of x. Throws zero_sequence.
    double residual_frequency(std::span<const cplx> x, double fs);

    // f in [0, f_s) maximizing the periodogram of x. Throws zero_sequence.
    double residual_frequency_periodogram(std::span<const cplx> x, double fs);

    // Cyclic refinement of per-source residual frequencies: each source's
    // matched-filter output H_k^H X / |H_k|^2 is cleared of the other fitted
    // tones and its periodogram peak re-located within half a bin.
    std::vector<double> refine_frequencies(const CMatrix &H, const CMatrix &X, std::vector<double> f_res, double fs,
                                           int passes);

    // band f_N / L + f_res. Throws out_of_range unless 0 <= f_res < f_N / L.
    double unfold_frequency(int band, double f_res, const MultiCosetPattern &pattern);

    enum class Algorithm
    {
        jdfpi,
        jdfsdpj,
        jdfsd_full
    };

    const char *to_string(Algorithm a);
    Algorithm algorithm_from_string(const std::string &name);

    struct SourceEstimate
    {
        double phi = 0.0;
        int band = 0;
        double f_residual = 0.0;
        double f = 0.0;
        std::optional<double> theta;
    };

    struct EstimationResult
    {
        Algorithm algorithm = Algorithm::jdfpi;
        std::vector<SourceEstimate> sources; // unordered
        bool pairing_ambiguous = false;
    };

    // Individual spatial and band estimates, paired by cross-correlation.
    EstimationResult jdfpi(const SnapshotSet &snapshots, const ReceiverSetup &setup, const EstimatorOptions &opt = {});

    // Joint (phase, band) subspace search on the simplified output.
    EstimationResult jdfsdpj(const SnapshotSet &snapshots, const ReceiverSetup &setup, const EstimatorOptions &opt = {});

    // Same search on every branch of every sensor (M P channels).
    EstimationResult jdfsd_full(const CMatrix &Y_full, const ReceiverSetup &setup, const EstimatorOptions &opt = {});
}

#endif
