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

#include <CLI11.hpp>
#include <fmt/format.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "nfloc/experiments.hpp"

namespace fs = std::filesystem;
using namespace nfloc;

namespace
{
    int exit_code(ErrorCategory c)
    {
        switch (c)
        {
        case ErrorCategory::parse:
            return 2;
        case ErrorCategory::io:
            return 3;
        case ErrorCategory::invalid_argument:
            return 4;
        case ErrorCategory::degenerate_geometry:
            return 5;
        case ErrorCategory::no_sources_visible:
            return 6;
        }
        return 1;
    }

    std::vector<double> parse_list(const std::string &s)
    {
        std::vector<double> out;
        std::stringstream ss(s);
        std::string item;
        while (std::getline(ss, item, ','))
        {
            try
            {
                std::size_t pos = 0;
                out.push_back(std::stod(item, &pos));
                if (pos != item.size())
                    throw std::invalid_argument(item);
            }
            catch (const std::exception &)
            {
                fail(ErrorCategory::invalid_argument, "cannot parse SNR value '" + item + "'");
            }
        }
        return out;
    }

    std::string prepare_dir(const std::string &dir)
    {
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec)
            fail(ErrorCategory::io, "cannot create output directory '" + dir + "': " + ec.message());
        return dir;
    }

    void write_text(const std::string &path, const std::string &text)
    {
        std::ofstream out(path, std::ios::binary);
        if (!out || !(out << text))
            fail(ErrorCategory::io, "cannot write '" + path + "'");
    }
}

int main(int argc, char **argv)
{
    CLI::App app{"Near-field source localization experiments"};
    app.require_subcommand(1);
    app.set_version_flag("--version", library_version());

    std::string config_path, out_dir, algorithm = "both", snr_list, spectrum_kind = "angle-fft";
    std::optional<std::uint64_t> seed;
    std::optional<double> angle_deg;
    int trials = 50, repetitions = 3, jobs = 1;

    auto common = [&](CLI::App *sub) {
        sub->add_option("--config", config_path, "Scenario file (YAML)")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "Base seed (overrides the config)");
        sub->add_option("--out", out_dir, "Output directory (overrides the config)");
    };

    CLI::App *simulate = app.add_subcommand("simulate", "Run one trial and write estimates");
    common(simulate);
    simulate->add_option("--algorithm", algorithm, "proposed, music2d or both")
        ->check(CLI::IsMember({"proposed", "music2d", "both"}));

    CLI::App *rmse = app.add_subcommand("rmse", "Monte-Carlo RMSE sweep over SNR");
    common(rmse);
    rmse->add_option("--trials", trials, "Trials per SNR point")->check(CLI::PositiveNumber);
    rmse->add_option("--snr-list", snr_list, "Comma-separated SNR values in dB");
    rmse->add_option("--algorithm", algorithm, "proposed, music2d or both")
        ->check(CLI::IsMember({"proposed", "music2d", "both"}));
    rmse->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);

    CLI::App *bench_cmd = app.add_subcommand("bench", "Wall-time comparison on one input");
    common(bench_cmd);
    bench_cmd->add_option("--repetitions", repetitions, "Repetitions (>= 3)");
    bench_cmd->add_option("--algorithm", algorithm, "proposed, music2d or both")
        ->check(CLI::IsMember({"proposed", "music2d", "both"}));

    CLI::App *spectrum = app.add_subcommand("spectrum", "Export a spectrum as CSV");
    common(spectrum);
    spectrum->add_option("--kind", spectrum_kind, "angle-fft, music2d, beamform or music1d");
    spectrum->add_option("--angle-deg", angle_deg, "Pinned angle for beamform and music1d scans");

    CLI11_PARSE(app, argc, argv);

    try
    {
        ScenarioConfig cfg = load_scenario(config_path);
        if (seed)
            cfg.seed = *seed;
        const std::string dir = prepare_dir(out_dir.empty() ? cfg.output_dir : out_dir);

        if (simulate->parsed())
        {
            const std::vector<TrialRecord> recs = run_trial(cfg, cfg.seed, cfg.snr_db, parse_algorithms(algorithm));
            save_csv(estimates_table(cfg, recs), dir + "/estimates.csv");
            nlohmann::json j = nlohmann::json::array();
            for (const TrialRecord &r : recs)
                j.push_back(record_json(cfg, r));
            write_text(dir + "/record.json", j.dump(2) + "\n");
            for (const TrialRecord &r : recs)
                for (const Located &e : r.estimates)
                    fmt::print("{:<9} angle {:8.3f} deg  range {:7.3f} m  {}\n", algorithm_name(r.algorithm),
                               rad2deg(e.angle), e.range, e.kind);
        }
        else if (rmse->parsed())
        {
            const std::vector<double> snrs = snr_list.empty() ? std::vector<double>{cfg.snr_db} : parse_list(snr_list);
            const SweepResult sweep = rmse_sweep(cfg, snrs, trials, parse_algorithms(algorithm), jobs);
            save_csv(rmse_table(cfg, sweep), dir + "/rmse.csv");
            save_csv(trials_table(cfg, sweep), dir + "/trials.csv");
            for (const RmseRow &r : sweep.rows)
                fmt::print("snr {:6.2f} dB  {:<9} rmse angle {:.4f} deg  range {:.4f} m  unmatched {}\n", r.snr_db,
                           algorithm_name(r.algorithm), r.rmse_angle_deg, r.rmse_range_m, r.unmatched);
        }
        else if (bench_cmd->parsed())
        {
            const std::vector<BenchRow> rows = bench(cfg, repetitions, parse_algorithms(algorithm));
            const CsvTable t = bench_table(cfg, rows);
            save_csv(t, dir + "/bench.csv");
            for (const BenchRow &r : rows)
                fmt::print("{:<9} mean {:.3f} s  min {:.3f} s  nodes {} / {}\n", algorithm_name(r.algorithm),
                           r.mean_seconds, r.min_seconds, r.music_nodes, r.grid_nodes);
            if (const std::string *s = t.meta("speedup"))
                fmt::print("speedup {}\n", *s);
        }
        else if (spectrum->parsed())
        {
            const SpectrumKind kind = parse_spectrum_kind(spectrum_kind);
            std::optional<double> a;
            if (angle_deg)
                a = deg2rad(*angle_deg);
            const CsvTable t = dump_spectrum(cfg, kind, a);
            const std::string path = dir + "/spectrum_" + spectrum_kind_name(kind) + ".csv";
            save_csv(t, path);
            fmt::print("wrote {} ({} rows)\n", path, t.rows.size());
        }
    }
    catch (const Error &e)
    {
        fmt::print(stderr, "error: category={} message=\"{}\"\n", category_name(e.category()), e.what());
        return exit_code(e.category());
    }
    catch (const std::exception &e)
    {
        fmt::print(stderr, "error: category=internal message=\"{}\"\n", e.what());
        return 1;
    }
    return 0;
}
