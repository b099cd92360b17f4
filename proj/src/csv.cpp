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

#include "nfloc/csv.hpp"

#include <fmt/format.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "nfloc/errors.hpp"

namespace nfloc
{
    namespace
    {
        std::string quote(const std::string &s)
        {
            if (s.find_first_of(",\"\n") == std::string::npos)
                return s;
            std::string out = "\"";
            for (char c : s)
            {
                if (c == '"')
                    out += '"';
                out += c;
            }
            return out + "\"";
        }

        std::vector<std::string> split_line(const std::string &line, int lineno)
        {
            std::vector<std::string> out;
            std::string cur;
            bool quoted = false;
            for (std::size_t i = 0; i < line.size(); ++i)
            {
                const char c = line[i];
                if (quoted)
                {
                    if (c == '"' && i + 1 < line.size() && line[i + 1] == '"')
                    {
                        cur += '"';
                        ++i;
                    }
                    else if (c == '"')
                        quoted = false;
                    else
                        cur += c;
                }
                else if (c == '"')
                    quoted = true;
                else if (c == ',')
                {
                    out.push_back(cur);
                    cur.clear();
                }
                else
                    cur += c;
            }
            if (quoted)
                fail(ErrorCategory::parse, fmt::format("csv line {}: unterminated quote", lineno));
            out.push_back(cur);
            return out;
        }

        Cell parse_cell(const std::string &s)
        {
            double v = 0.0;
            const char *end = s.data() + s.size();
            if (!s.empty())
            {
                const auto res = std::from_chars(s.data(), end, v);
                if (res.ec == std::errc() && res.ptr == end)
                    return v;
            }
            return s;
        }

        bool cell_equal(const Cell &a, const Cell &b)
        {
            if (a.index() != b.index())
                return false;
            if (const double *x = std::get_if<double>(&a))
            {
                const double y = std::get<double>(b);
                return (std::isnan(*x) && std::isnan(y)) || *x == y;
            }
            return std::get<std::string>(a) == std::get<std::string>(b);
        }
    }

    const std::string *CsvTable::meta(const std::string &key) const
    {
        for (const auto &kv : metadata)
            if (kv.first == key)
                return &kv.second;
        return nullptr;
    }

    bool CsvTable::operator==(const CsvTable &o) const
    {
        if (metadata != o.metadata || columns != o.columns || rows.size() != o.rows.size())
            return false;
        for (std::size_t i = 0; i < rows.size(); ++i)
        {
            if (rows[i].size() != o.rows[i].size())
                return false;
            for (std::size_t j = 0; j < rows[i].size(); ++j)
                if (!cell_equal(rows[i][j], o.rows[i][j]))
                    return false;
        }
        return true;
    }

    std::string format_number(double v)
    {
        return fmt::format("{}", v);
    }

    std::string write_csv(const CsvTable &t)
    {
        std::string out;
        for (const auto &[k, v] : t.metadata)
            out += "# " + k + ": " + v + "\n";
        for (std::size_t j = 0; j < t.columns.size(); ++j)
            out += (j ? "," : "") + quote(t.columns[j]);
        out += "\n";
        for (const auto &row : t.rows)
        {
            for (std::size_t j = 0; j < row.size(); ++j)
            {
                if (j)
                    out += ",";
                if (const double *d = std::get_if<double>(&row[j]))
                    out += format_number(*d);
                else
                    out += quote(std::get<std::string>(row[j]));
            }
            out += "\n";
        }
        return out;
    }

    CsvTable parse_csv(const std::string &text)
    {
        CsvTable t;
        std::istringstream in(text);
        std::string line;
        int lineno = 0;
        bool header = false;
        while (std::getline(in, line))
        {
            ++lineno;
            if (!line.empty() && line.back() == '\r')
                line.pop_back();
            if (!header && line.rfind("# ", 0) == 0)
            {
                const std::size_t colon = line.find(": ");
                if (colon == std::string::npos)
                    fail(ErrorCategory::parse, fmt::format("csv line {}: malformed metadata", lineno));
                t.metadata.emplace_back(line.substr(2, colon - 2), line.substr(colon + 2));
                continue;
            }
            if (!header)
            {
                t.columns = split_line(line, lineno);
                header = true;
                continue;
            }
            if (line.empty())
                continue;
            std::vector<Cell> row;
            for (const std::string &s : split_line(line, lineno))
                row.push_back(parse_cell(s));
            if (row.size() != t.columns.size())
                fail(ErrorCategory::parse, fmt::format("csv line {}: expected {} fields, got {}", lineno,
                                                       t.columns.size(), row.size()));
            t.rows.push_back(std::move(row));
        }
        if (!header)
            fail(ErrorCategory::parse, "csv has no header row");
        return t;
    }

    void save_csv(const CsvTable &t, const std::string &path)
    {
        std::ofstream out(path, std::ios::binary);
        if (!out)
            fail(ErrorCategory::io, "cannot write '" + path + "'");
        out << write_csv(t);
        if (!out)
            fail(ErrorCategory::io, "write failed for '" + path + "'");
    }

    CsvTable load_csv(const std::string &path)
    {
        std::ifstream in(path, std::ios::binary);
        if (!in)
            fail(ErrorCategory::io, "cannot open '" + path + "'");
        std::stringstream ss;
        ss << in.rdbuf();
        return parse_csv(ss.str());
    }
}
