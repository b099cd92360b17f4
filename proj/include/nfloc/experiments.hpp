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

#ifndef NFLOC_EXPERIMENTS_HPP
#define NFLOC_EXPERIMENTS_HPP

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nfloc/csv.hpp"
#include "nfloc/scenario_config.hpp"

namespace nfloc
{
    enum class Algorithm
    {
        proposed,
        music2d
    };

    const char *algorithm_name(Algorithm a);
    Algorithm parse_algorithm(const std::string &name);
    // "proposed", "music2d" or "both"
    std::vector<Algorithm> parse_algorithms(const std::string &name);

    std::string library_version();

    struct Located
    {
        double range;
        double angle;
        std::string kind; // distant, close or grid
    };

    struct SourceOutcome
    {
        Source truth;
        std::optional<Located> estimate;
    };

    struct TrialRecord
    {
        std::uint64_t seed = 0;
        double snr_db = 0.0;
        Algorithm algorithm = Algorithm::proposed;
        std::vector<Located> estimates; // sorted by angle
        std::vector<SourceOutcome> outcomes;
        double seconds = 0.0; // covariance through final estimates
        long long music_nodes = 0;
        long long grid_nodes = 0;
        std::optional<LocalizerDiagnostics> diagnostics;
    };

    // Injective nearest-neighbour matching in (angle/d_theta, range/d_r);
    // returns the estimate index for each truth or -1
    std::vector<int> match_estimates(const std::vector<Source> &truth, const std::vector<Located> &estimates,
                                     const GridSpec &grid);

    // Runs every requested algorithm on one shared input
    std::vector<TrialRecord> run_trial(const ScenarioConfig &cfg, std::uint64_t seed, double snr_db,
                                       const std::vector<Algorithm> &algorithms);

    struct RmseRow
    {
        double snr_db;
        Algorithm algorithm;
        double rmse_angle_deg;
        double rmse_range_m;
        int trials;
        int unmatched;
    };

    struct SweepResult
    {
        std::vector<RmseRow> rows; // ordered by (SNR, algorithm)
        std::vector<TrialRecord> records; // ordered by (SNR, seed, algorithm)
        double penalty_angle_deg = 0.0;
        double penalty_range_m = 0.0;
    };

    // Runs fn(i) for i in [0, n) on up to jobs threads
    void parallel_for(int n, int jobs, const std::function<void(int)> &fn);

    SweepResult rmse_sweep(const ScenarioConfig &cfg, const std::vector<double> &snr_list, int trials,
                           const std::vector<Algorithm> &algorithms, int jobs = 1);

    struct BenchRow
    {
        Algorithm algorithm;
        int repetitions;
        double mean_seconds;
        double min_seconds;
        long long music_nodes;
        long long grid_nodes;
    };

    std::vector<BenchRow> bench(const ScenarioConfig &cfg, int repetitions, const std::vector<Algorithm> &algorithms);

    enum class SpectrumKind
    {
        angle_fft,
        music2d,
        beamform,
        music1d
    };

    SpectrumKind parse_spectrum_kind(const std::string &name);
    const char *spectrum_kind_name(SpectrumKind k);

    // angle (radians) pins beamform/music1d scans; defaults to the first source or broadside
    CsvTable dump_spectrum(const ScenarioConfig &cfg, SpectrumKind kind, std::optional<double> angle = std::nullopt);

    std::vector<std::pair<std::string, std::string>> output_metadata(const ScenarioConfig &cfg, std::uint64_t seed);

    CsvTable estimates_table(const ScenarioConfig &cfg, const std::vector<TrialRecord> &records);
    CsvTable rmse_table(const ScenarioConfig &cfg, const SweepResult &sweep);
    CsvTable trials_table(const ScenarioConfig &cfg, const SweepResult &sweep);
    CsvTable bench_table(const ScenarioConfig &cfg, const std::vector<BenchRow> &rows);

    nlohmann::json diagnostics_json(const LocalizerDiagnostics &d);
    // Timing fields are grouped under "timings" so they can be ignored when diffing
    nlohmann::json record_json(const ScenarioConfig &cfg, const TrialRecord &r);
}

#endif
