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

#ifndef SUBNYQ_RNG_HPP
#define SUBNYQ_RNG_HPP

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace subnyq
{
    // splitmix64 finalizer
    inline std::uint64_t mix64(std::uint64_t x)
    {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    // Folds a key path into one seed; distinct paths give distinct streams.
    inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path)
    {
        std::uint64_t h = mix64(seed);
        for (auto p : path)
            h = mix64(h ^ mix64(p + 0x632be59bd9b4e019ULL));
        return h;
    }

    // Independent engine for one (seed, path) pair.
    inline std::mt19937_64 make_engine(std::uint64_t seed, std::initializer_list<std::uint64_t> path)
    {
        const std::uint64_t s = derive_seed(seed, path);
        std::seed_seq seq{static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32)};
        return std::mt19937_64(seq);
    }
}

#endif
