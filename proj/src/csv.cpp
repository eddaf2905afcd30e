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
#include "subnyq/harness.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <sstream>

namespace subnyq
{
    namespace
    {
        constexpr const char *kHeader = "sweep_var,sweep_value,algorithm,metric,rmse,crb,n_success,n_trials";

        std::string sci(double v)
        {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.17e", v);
            return buf;
        }

        double parse_double(const std::string &s)
        {
            char *end = nullptr;
            const double v = std::strtod(s.c_str(), &end);
            if (s.empty() || *end != '\0')
                throw std::runtime_error("bad number '" + s + "' in result table");
            return v;
        }
    }

    std::string to_csv(const ResultTable &table)
    {
        std::string out = kHeader;
        out += '\n';
        for (const auto &r : table.rows)
        {
            out += to_string(table.variable);
            out += ',' + sci(r.sweep_value) + ',' + r.algorithm + ',' + r.metric + ',' + sci(r.rmse) + ',' +
                   sci(r.crb) + ',' + std::to_string(r.n_success) + ',' + std::to_string(r.n_trials) + '\n';
        }
        return out;
    }

    void emit_csv(const ResultTable &table, const std::filesystem::path &path)
    {
        std::ofstream os(path, std::ios::binary);
        if (!os)
            throw std::runtime_error("cannot open " + path.string() + " for writing");
        os << to_csv(table);
        if (!os)
            throw std::runtime_error("write to " + path.string() + " failed");
    }

    ResultTable parse_csv(std::istream &is)
    {
        std::string line;
        if (!std::getline(is, line) || line != kHeader)
            throw std::runtime_error("result table header missing");
        ResultTable table;
        bool first = true;
        while (std::getline(is, line))
        {
            if (line.empty())
                continue;
            std::vector<std::string> f;
            std::stringstream ss(line);
            std::string cell;
            while (std::getline(ss, cell, ','))
                f.push_back(cell);
            if (f.size() != 8)
                throw std::runtime_error("result row has " + std::to_string(f.size()) + " fields");
            const SweepVariable var = sweep_variable_from_string(f[0]);
            if (first)
                table.variable = var;
            else if (var != table.variable)
                throw std::runtime_error("result table mixes sweep variables");
            first = false;
            table.rows.push_back({parse_double(f[1]), f[2], f[3], parse_double(f[4]), parse_double(f[5]),
                                  std::stoi(f[6]), std::stoi(f[7])});
        }
        return table;
    }
}
