// SPDX-License-Identifier: Apache-2.0
//
// nfloc: near-field source localization for large uniform linear arrays
// Copyright (C) 2026 The nfloc authors
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

#ifndef NFLOC_CSV_HPP
#define NFLOC_CSV_HPP

#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace nfloc
{
    using Cell = std::variant<double, std::string>;

    // Comment-prefixed metadata, a header row and typed cells. Numbers are
    // written in shortest round-trip form so re-parsing is exact.
    struct CsvTable
    {
        std::vector<std::pair<std::string, std::string>> metadata;
        std::vector<std::string> columns;
        std::vector<std::vector<Cell>> rows;

        const std::string *meta(const std::string &key) const;
        bool operator==(const CsvTable &other) const;
    };

    std::string format_number(double v);

    std::string write_csv(const CsvTable &t);
    CsvTable parse_csv(const std::string &text);

    void save_csv(const CsvTable &t, const std::string &path);
    CsvTable load_csv(const std::string &path);
}

#endif
