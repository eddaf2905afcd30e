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

#ifndef SUBNYQ_ERRORS_HPP
#define SUBNYQ_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace subnyq
{
    // Invalid scenario, pattern or sweep description.
    class ConfigError : public std::invalid_argument
    {
    public:
        using std::invalid_argument::invalid_argument;
    };

    enum class EstimationFailure
    {
        fewer_than_k_peaks,
        rank_deficient,
        empty_support,
        zero_sequence,
        singular,
        out_of_range,
        size_mismatch
    };

    const char *to_string(EstimationFailure kind);

    // Numerical failure inside an estimator. `step()` names the pipeline stage
    // that raised it; primitives leave it empty and the pipelines fill it in.
    class EstimationError : public std::runtime_error
    {
    public:
        EstimationError(EstimationFailure kind, const std::string &what, std::string step = {})
            : std::runtime_error(what), kind_(kind), step_(std::move(step)) {}

        EstimationFailure kind() const noexcept { return kind_; }
        const std::string &step() const noexcept { return step_; }

        EstimationError with_step(std::string step) const
        {
            return EstimationError(kind_, what(), std::move(step));
        }

    private:
        EstimationFailure kind_;
        std::string step_;
    };
}

#endif
