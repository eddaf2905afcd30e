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

#include "subnyq/model.hpp"
#include "subnyq/errors.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace subnyq
{
    void ArrayGeometry::validate() const
    {
        if (sensors < 2)
            throw ConfigError("array needs at least 2 sensors, got " + std::to_string(sensors));
        if (!(spacing > 0.0))
            throw ConfigError("sensor spacing must be positive");
        if (!(propagation_speed > 0.0))
            throw ConfigError("propagation speed must be positive");
    }

    MultiCosetPattern::MultiCosetPattern(int L, std::vector<int> offsets, double nyquist_rate)
        : L_(L), offsets_(std::move(offsets)), fN_(nyquist_rate)
    {
        if (L_ < 1)
            throw ConfigError("downsampling factor L must be >= 1");
        if (offsets_.empty() || static_cast<int>(offsets_.size()) > L_)
            throw ConfigError("branch count P must satisfy 1 <= P <= L");
        for (std::size_t i = 0; i < offsets_.size(); ++i)
        {
            if (offsets_[i] < 0 || offsets_[i] > L_ - 1)
                throw ConfigError("coset offset " + std::to_string(offsets_[i]) + " outside [0, L-1]");
            if (i > 0 && offsets_[i] <= offsets_[i - 1])
                throw ConfigError("coset offsets must be strictly increasing");
        }
        if (!(fN_ > 0.0) || !std::isfinite(fN_))
            throw ConfigError("Nyquist rate must be positive");
    }

    int MultiCosetPattern::band_of(double f) const
    {
        return static_cast<int>(std::floor(f * L_ / fN_));
    }

    double phase_from_doa(double theta, double f, const ArrayGeometry &geom)
    {
        return kTwoPi * geom.spacing * std::sin(theta) * f / geom.propagation_speed;
    }

    double doa_from_phase(double phi, double f, const ArrayGeometry &geom)
    {
        const double arg = phi * geom.propagation_speed / (kTwoPi * geom.spacing * f);
        if (!(std::abs(arg) <= 1.0))
            throw std::domain_error("spatial phase " + std::to_string(phi) + " is aliased at f = " + std::to_string(f));
        return std::asin(arg);
    }

    CVector spatial_steering(double phi, int M)
    {
        CVector a(M);
        for (int m = 0; m < M; ++m)
            a(m) = std::polar(1.0, -phi * m);
        return a;
    }

    CMatrix build_A(std::span<const double> phis, int M)
    {
        CMatrix A(M, static_cast<Eigen::Index>(phis.size()));
        for (std::size_t k = 0; k < phis.size(); ++k)
            A.col(k) = spatial_steering(phis[k], M);
        return A;
    }

    CMatrix build_B(const MultiCosetPattern &pattern)
    {
        const int L = pattern.L(), P = pattern.P();
        const double scale = 1.0 / std::sqrt(static_cast<double>(L));
        CMatrix B(P, L);
        for (int i = 0; i < P; ++i)
            for (int l = 0; l < L; ++l)
            {
                // reduce the exponent modulo L so large c*l stays exact
                const int e = (pattern.offsets()[i] * l) % L;
                B(i, l) = std::polar(scale, kTwoPi * e / L);
            }
        return B;
    }

    RMatrix build_J(int M, int P)
    {
        RMatrix J = RMatrix::Zero(M + P - 1, M * P);
        // 1-based: J(i, i) = 1 for i <= P; J(i, 1 + iP - P^2) = 1 for i > P
        for (int i = 1; i <= M + P - 1; ++i)
        {
            const int j = i <= P ? i : 1 + i * P - P * P;
            J(i - 1, j - 1) = 1.0;
        }
        return J;
    }

    std::vector<std::pair<int, int>> selected_channels(int M, int P)
    {
        std::vector<std::pair<int, int>> rows;
        rows.reserve(M + P - 1);
        for (int p = 0; p < P; ++p)
            rows.emplace_back(0, p);
        for (int m = 1; m < M; ++m)
            rows.emplace_back(m, 0);
        return rows;
    }

    CMatrix kron(const CMatrix &a, const CMatrix &b)
    {
        CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
        for (Eigen::Index i = 0; i < a.rows(); ++i)
            for (Eigen::Index j = 0; j < a.cols(); ++j)
                out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        return out;
    }

    namespace
    {
        CVector band_column(int band, const MultiCosetPattern &pattern)
        {
            if (band < 0 || band >= pattern.L())
                throw ConfigError("band index " + std::to_string(band) + " outside [0, L-1]");
            const double scale = 1.0 / std::sqrt(static_cast<double>(pattern.L()));
            CVector b(pattern.P());
            for (int i = 0; i < pattern.P(); ++i)
                b(i) = std::polar(scale, kTwoPi * ((pattern.offsets()[i] * band) % pattern.L()) / pattern.L());
            return b;
        }
    }

    CVector joint_steering(double phi, int band, const ArrayGeometry &geom, const MultiCosetPattern &pattern)
    {
        const int M = geom.sensors, P = pattern.P();
        const CVector b = band_column(band, pattern);
        CVector v(M + P - 1);
        v.head(P) = b;
        for (int m = 1; m < M; ++m)
            v(P + m - 1) = std::polar(1.0, -phi * m) * b(0);
        return v;
    }

    CVector full_steering(double phi, int band, const ArrayGeometry &geom, const MultiCosetPattern &pattern)
    {
        const int M = geom.sensors, P = pattern.P();
        const CVector b = band_column(band, pattern);
        CVector v(M * P);
        for (int m = 0; m < M; ++m)
            v.segment(m * P, P) = std::polar(1.0, -phi * m) * b;
        return v;
    }

    CVector steering(Structure s, double phi, int band, const ArrayGeometry &geom, const MultiCosetPattern &pattern)
    {
        return s == Structure::simplified ? joint_steering(phi, band, geom, pattern)
                                          : full_steering(phi, band, geom, pattern);
    }

    CMatrix build_G(std::span<const double> phis, const ArrayGeometry &geom, const MultiCosetPattern &pattern)
    {
        return kron(build_A(phis, geom.sensors), build_B(pattern));
    }

    CMatrix build_H(std::span<const double> phis, const ArrayGeometry &geom, const MultiCosetPattern &pattern)
    {
        const RMatrix J = build_J(geom.sensors, pattern.P());
        return J.cast<cplx>() * build_G(phis, geom, pattern);
    }

    CMatrix build_selected(Structure s, std::span<const double> phis, std::span<const int> bands,
                           const ArrayGeometry &geom, const MultiCosetPattern &pattern)
    {
        if (phis.size() != bands.size())
            throw ConfigError("phase and band lists differ in length");
        const int rows = channel_count(s, geom.sensors, pattern.P());
        const int K = static_cast<int>(phis.size());
        if (K >= rows)
            throw ConfigError("K = " + std::to_string(K) + " columns leave no noise space in " +
                              std::to_string(rows) + " channels");
        CMatrix Hs(rows, K);
        for (int k = 0; k < K; ++k)
            Hs.col(k) = steering(s, phis[k], bands[k], geom, pattern);
        return Hs;
    }
}
