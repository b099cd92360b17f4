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

#ifndef NFLOC_ERRORS_HPP
#define NFLOC_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace nfloc
{
    enum class ErrorCategory
    {
        invalid_argument,
        degenerate_geometry,
        no_sources_visible,
        parse,
        io
    };

    // Short machine-readable name, e.g. "invalid_argument"
    const char *category_name(ErrorCategory c);

    class Error : public std::runtime_error
    {
    public:
        Error(ErrorCategory category, const std::string &message)
            : std::runtime_error(message), category_(category) {}

        ErrorCategory category() const { return category_; }

    private:
        ErrorCategory category_;
    };

    [[noreturn]] inline void fail(ErrorCategory c, const std::string &message)
    {
        throw Error(c, message);
    }

    inline void require(bool condition, const std::string &message)
    {
        if (!condition)
            throw Error(ErrorCategory::invalid_argument, message);
    }
}

#endif
