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

#ifndef SUBNYQ_MODEL_HPP
#define SUBNYQ_MODEL_HPP

#include "subnyq/linalg.hpp"

#include <span>
#include <vector>

// Receiver algebra: array and multi-coset steering, the selection matrix that
// keeps all branches of sensor 1 plus branch 1 of every sensor, and the joint
// (space x band) steering vectors built from them. Bands are 0-based.
namespace subnyq
{
    struct ArrayGeometry
    {
        int sensors = 2;                // M
        double spacing = 0.5;           // d [m]
        double propagation_speed = 1.0; // c [m/s]

        void validate() const;
        bool operator==(const ArrayGeometry &) const = default;
    };

    class MultiCosetPattern
    {
    public:
        MultiCosetPattern() : MultiCosetPattern(1, {0}, 1.0) {}

        // Throws ConfigError unless 0 <= offsets[0] < ... < offsets[P-1] <= L-1.
        MultiCosetPattern(int L, std::vector<int> offsets, double nyquist_rate);

        int L() const { return L_; }
        int P() const { return static_cast<int>(offsets_.size()); }
        const std::vector<int> &offsets() const { return offsets_; }
        double nyquist_rate() const { return fN_; }
        double nyquist_period() const { return 1.0 / fN_; }
        double sub_rate() const { return fN_ / L_; } // f_s, also the width of one band

        // Band holding frequency f in [0, f_N).
        int band_of(double f) const;

        bool operator==(const MultiCosetPattern &) const = default;

    private:
        int L_;
        std::vector<int> offsets_;
        double fN_;
    };

    // Which receiver the algebra describes: the simplified M+P-1 channel
    // output, or every branch of every sensor (M*P channels).
    enum class Structure
    {
        simplified,
        full
    };

    double phase_from_doa(double theta, double f, const ArrayGeometry &geom);

    // Throws std::domain_error when |phi c / (2 pi d f)| > 1.
    double doa_from_phase(double phi, double f, const ArrayGeometry &geom);

    // a(phi)_m = exp(-j phi m), m = 0..M-1
    CVector spatial_steering(double phi, int M);

    // M x K matrix of spatial steering columns.
    CMatrix build_A(std::span<const double> phis, int M);

    // B_il = exp(j 2 pi c_i l / L) / sqrt(L)
    CMatrix build_B(const MultiCosetPattern &pattern);

    // (M+P-1) x (M P) selection matrix.
    RMatrix build_J(int M, int P);

    // Flat row index into the M*P channel stack (sensor-major, as a (x) B).
    inline int channel_index(int sensor, int branch, int P) { return sensor * P + branch; }

    // (sensor, branch) pairs kept by the simplified receiver, in J's row order.
    std::vector<std::pair<int, int>> selected_channels(int M, int P);

    CMatrix kron(const CMatrix &a, const CMatrix &b);

    // J (a(phi) (x) B_l) without materializing J.
    CVector joint_steering(double phi, int band, const ArrayGeometry &geom, const MultiCosetPattern &pattern);

    // a(phi) (x) B_l, a column of G.
    CVector full_steering(double phi, int band, const ArrayGeometry &geom, const MultiCosetPattern &pattern);

    CVector steering(Structure s, double phi, int band, const ArrayGeometry &geom, const MultiCosetPattern &pattern);

    // G = A (x) B and H = J G, with K*L columns.
    CMatrix build_G(std::span<const double> phis, const ArrayGeometry &geom, const MultiCosetPattern &pattern);
    CMatrix build_H(std::span<const double> phis, const ArrayGeometry &geom, const MultiCosetPattern &pattern);

    // Columns steering(phis[k], bands[k]). Throws ConfigError when the lists
    // differ in length or K would make the matrix wider than its usable rank.
    CMatrix build_selected(Structure s, std::span<const double> phis, std::span<const int> bands,
                           const ArrayGeometry &geom, const MultiCosetPattern &pattern);

    inline CMatrix build_H_selected(std::span<const double> phis, std::span<const int> bands,
                                    const ArrayGeometry &geom, const MultiCosetPattern &pattern)
    {
        return build_selected(Structure::simplified, phis, bands, geom, pattern);
    }

    inline int channel_count(Structure s, int M, int P)
    {
        return s == Structure::simplified ? M + P - 1 : M * P;
    }
}

#endif
