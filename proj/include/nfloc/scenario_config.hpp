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

#ifndef NFLOC_SCENARIO_CONFIG_HPP
#define NFLOC_SCENARIO_CONFIG_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "nfloc/cluster_localizer.hpp"

namespace nfloc
{
    struct ScenarioConfig
    {
        int elements = 513;
        double spacing_wavelengths = 0.5;
        double carrier_hz = 30e9;
        std::vector<Source> sources; // angles in radians
        int snapshots = 200;
        double snr_db = 10.0;
        std::uint64_t seed = 1;
        bool analytic_covariance = false;
        LocalizerConfig localizer;
        std::string output_dir = "out";

        ArrayGeometry geometry() const;
        SourceTruth truth() const;
        // Per-antenna SNR is unit source power over noise power
        double noise_variance(double snr_db) const;
        // Canonical text form, stable across runs
        std::string canonical() const;
        std::string hash() const;
    };

    // Reference near-field scenario with the four default sources
    ScenarioConfig default_scenario();

    ScenarioConfig parse_scenario(const std::string &text, const std::string &origin = "<config>");
    ScenarioConfig load_scenario(const std::string &path);
}

#endif
