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

#ifndef SUBNYQ_CRB_HPP
#define SUBNYQ_CRB_HPP

#include "subnyq/model.hpp"
#include "subnyq/siggen.hpp"

#include <vector>

namespace subnyq
{
    struct CrbInput
    {
        std::vector<double> phis;
        std::vector<int> bands;
        CMatrix R_S;        // K x K source covariance, per Nyquist sample
        double sigma2 = 1;  // noise power per channel sample
        double T_obs = 1;   // observation time N L T_N [s]
        ArrayGeometry geom;
        MultiCosetPattern pattern;
        Structure structure = Structure::simplified;

        int K() const { return static_cast<int>(phis.size()); }
    };

    struct CrbResult
    {
        RMatrix crb;            // K x K phase covariance bound [rad^2]
        RVector per_source_std; // sqrt of the diagonal
    };

    // d/dphi of the steering column; the sensor-1 entries are constant in phi.
    CVector steering_derivative(Structure s, double phi, int band, const ArrayGeometry &geom,
                                const MultiCosetPattern &pattern);

    // sigma^2 / (2 T) (Re((E^H P_H E) o R_S^T))^{-1}, T counted in Nyquist periods.
    CrbResult crb_phase(const CrbInput &in);

    // sigma^2 / (2 T / L) (Re((E^H P_H E) o Rbar^T))^{-1} with Rbar = L R_S, the
    // per-snapshot covariance of the aliased band signals. Equal to crb_phase.
    CrbResult crb_phase_snapshot_form(const CrbInput &in);

    // Effective Fisher information for the phases with the source waveforms as
    // unknown nuisance, from finite differences of the snapshot mean and a
    // full inversion. Validation oracle for crb_phase.
    RMatrix fim_numerical(const CrbInput &in);

    // Bound inputs for a scenario: true phases and bands, R_S = diag(|a_k|^2),
    // T_obs = N L T_N.
    CrbInput crb_input(const ScenarioConfig &config, Structure s = Structure::simplified);

    struct ToneCrb
    {
        RVector phase_var;     // rad^2
        RVector frequency_var; // Hz^2
    };

    // Numerical bound for pure-tone scenarios with per-source unknowns
    // (phase, residual frequency, complex amplitude). Throws ConfigError for
    // non-tone envelopes.
    ToneCrb tone_crb_numerical(const ScenarioConfig &config, Structure s = Structure::simplified);
}

#endif
