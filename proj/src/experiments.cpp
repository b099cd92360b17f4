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

#include "nfloc/experiments.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>
#include <tuple>

namespace nfloc
{
    namespace
    {
        using clock = std::chrono::steady_clock;

        double elapsed(clock::time_point t0)
        {
            return std::chrono::duration<double>(clock::now() - t0).count();
        }

        CovarianceMatrix scenario_covariance(const ScenarioConfig &cfg, std::uint64_t seed, double snr_db)
        {
            const ArrayGeometry geom = cfg.geometry();
            const double nv = cfg.noise_variance(snr_db);
            if (cfg.analytic_covariance)
                return CovarianceMatrix(model_covariance(geom, cfg.truth(), nv));
            return sample_covariance(synthesize_snapshots(geom, cfg.truth(), cfg.snapshots, nv, seed));
        }

        double db(double v, double ref)
        {
            return 10.0 * std::log10(std::max(v, 1e-300) / ref);
        }
    }

    const char *algorithm_name(Algorithm a)
    {
        return a == Algorithm::proposed ? "proposed" : "music2d";
    }

    Algorithm parse_algorithm(const std::string &name)
    {
        if (name == "proposed")
            return Algorithm::proposed;
        if (name == "music2d")
            return Algorithm::music2d;
        fail(ErrorCategory::invalid_argument, "unknown algorithm '" + name + "'");
    }

    std::vector<Algorithm> parse_algorithms(const std::string &name)
    {
        if (name == "both")
            return {Algorithm::proposed, Algorithm::music2d};
        return {parse_algorithm(name)};
    }

    std::string library_version()
    {
        return NFLOC_VERSION;
    }

    std::vector<int> match_estimates(const std::vector<Source> &truth, const std::vector<Located> &estimates,
                                     const GridSpec &grid)
    {
        std::vector<std::tuple<double, int, int>> pairs;
        for (int t = 0; t < static_cast<int>(truth.size()); ++t)
            for (int e = 0; e < static_cast<int>(estimates.size()); ++e)
            {
                const double da = (estimates[e].angle - truth[t].angle) / grid.angle.step;
                const double dr = (estimates[e].range - truth[t].range) / grid.range.step;
                pairs.emplace_back(std::hypot(da, dr), t, e);
            }
        std::sort(pairs.begin(), pairs.end());
        std::vector<int> out(truth.size(), -1);
        std::vector<bool> used(estimates.size(), false);
        for (const auto &[cost, t, e] : pairs)
            if (out[t] < 0 && !used[e])
            {
                out[t] = e;
                used[e] = true;
            }
        return out;
    }

    std::vector<TrialRecord> run_trial(const ScenarioConfig &cfg, std::uint64_t seed, double snr_db,
                                       const std::vector<Algorithm> &algorithms)
    {
        const ArrayGeometry geom = cfg.geometry();
        const SourceTruth truth = cfg.truth();
        const int k = truth.size();
        require(k >= 1, "scenario needs at least one source to localize");

        // Synthesis is outside the timed region
        std::optional<SnapshotMatrix> y;
        std::optional<CovarianceMatrix> r;
        if (cfg.analytic_covariance)
            r.emplace(model_covariance(geom, truth, cfg.noise_variance(snr_db)));
        else
            y.emplace(synthesize_snapshots(geom, truth, cfg.snapshots, cfg.noise_variance(snr_db), seed));

        std::vector<TrialRecord> out;
        for (Algorithm alg : algorithms)
        {
            TrialRecord rec;
            rec.seed = seed;
            rec.snr_db = snr_db;
            rec.algorithm = alg;
            const auto t0 = clock::now();
            if (alg == Algorithm::proposed)
            {
                const LocalizeResult res = r ? localize(*r, geom, k, cfg.localizer) : localize(*y, geom, k, cfg.localizer);
                rec.seconds = elapsed(t0);
                for (const Estimate &e : res.estimates)
                    rec.estimates.push_back({e.range, e.angle, kind_name(e.kind)});
                rec.music_nodes = res.diagnostics.music_nodes();
                rec.grid_nodes = res.diagnostics.grid_nodes;
                rec.diagnostics = res.diagnostics;
            }
            else
            {
                const MusicBaselineResult res =
                    r ? music_localize(*r, geom, k, cfg.localizer.grid) : music_localize(*y, geom, k, cfg.localizer.grid);
                rec.seconds = elapsed(t0);
                for (const GridPeak &p : res.estimates)
                    rec.estimates.push_back({p.range, p.angle, "grid"});
                rec.music_nodes = res.nodes;
                rec.grid_nodes = res.nodes;
            }
            const std::vector<int> m = match_estimates(truth.sources(), rec.estimates, cfg.localizer.grid);
            for (int t = 0; t < k; ++t)
            {
                SourceOutcome o{truth.sources()[t], std::nullopt};
                if (m[t] >= 0)
                    o.estimate = rec.estimates[m[t]];
                rec.outcomes.push_back(o);
            }
            out.push_back(std::move(rec));
        }
        return out;
    }

    void parallel_for(int n, int jobs, const std::function<void(int)> &fn)
    {
        jobs = std::max(1, std::min(jobs, n));
        if (jobs == 1)
        {
            for (int i = 0; i < n; ++i)
                fn(i);
            return;
        }
        std::atomic<int> next{0};
        std::exception_ptr err;
        std::mutex err_mutex;
        std::vector<std::thread> pool;
        for (int w = 0; w < jobs; ++w)
            pool.emplace_back([&] {
                for (int i = next++; i < n; i = next++)
                {
                    try
                    {
                        fn(i);
                    }
                    catch (...)
                    {
                        std::lock_guard<std::mutex> lock(err_mutex);
                        if (!err)
                            err = std::current_exception();
                    }
                }
            });
        for (auto &t : pool)
            t.join();
        if (err)
            std::rethrow_exception(err);
    }

    SweepResult rmse_sweep(const ScenarioConfig &cfg, const std::vector<double> &snr_list, int trials,
                           const std::vector<Algorithm> &algorithms, int jobs)
    {
        require(trials >= 1, "trials must be at least 1");
        require(!snr_list.empty(), "SNR list is empty");
        require(!algorithms.empty(), "no algorithm selected");

        const GridSpec &g = cfg.localizer.grid;
        SweepResult out;
        out.penalty_angle_deg = rad2deg(0.5 * (g.angle.max - g.angle.min));
        out.penalty_range_m = 0.5 * (g.range.max - g.range.min);

        const int n = static_cast<int>(snr_list.size()) * trials;
        std::vector<std::vector<TrialRecord>> per(n);
        parallel_for(n, jobs, [&](int i) {
            const double snr = snr_list[i / trials];
            per[i] = run_trial(cfg, cfg.seed + static_cast<std::uint64_t>(i % trials), snr, algorithms);
        });
        for (auto &v : per)
            for (auto &r : v)
                out.records.push_back(std::move(r));

        for (double snr : snr_list)
            for (Algorithm alg : algorithms)
            {
                double sa = 0.0, sr = 0.0;
                int count = 0, unmatched = 0;
                for (const TrialRecord &r : out.records)
                {
                    if (r.snr_db != snr || r.algorithm != alg)
                        continue;
                    for (const SourceOutcome &o : r.outcomes)
                    {
                        double ea = out.penalty_angle_deg, er = out.penalty_range_m;
                        if (o.estimate)
                        {
                            ea = rad2deg(o.estimate->angle - o.truth.angle);
                            er = o.estimate->range - o.truth.range;
                            // grid nodes and truths differ by rounding only when on-grid
                            if (std::abs(ea) < 1e-9 * rad2deg(g.angle.step))
                                ea = 0.0;
                            if (std::abs(er) < 1e-9 * g.range.step)
                                er = 0.0;
                        }
                        else
                            ++unmatched;
                        sa += ea * ea;
                        sr += er * er;
                        ++count;
                    }
                }
                out.rows.push_back({snr, alg, std::sqrt(sa / count), std::sqrt(sr / count), trials, unmatched});
            }
        return out;
    }

    std::vector<BenchRow> bench(const ScenarioConfig &cfg, int repetitions, const std::vector<Algorithm> &algorithms)
    {
        require(repetitions >= 3, "bench needs at least 3 repetitions");
        std::vector<BenchRow> rows;
        for (Algorithm a : algorithms)
            rows.push_back({a, repetitions, 0.0, 1e300, 0, 0});
        for (int rep = 0; rep < repetitions; ++rep)
        {
            const std::vector<TrialRecord> recs = run_trial(cfg, cfg.seed, cfg.snr_db, algorithms);
            for (std::size_t i = 0; i < recs.size(); ++i)
            {
                rows[i].mean_seconds += recs[i].seconds / repetitions;
                rows[i].min_seconds = std::min(rows[i].min_seconds, recs[i].seconds);
                rows[i].music_nodes = recs[i].music_nodes;
                rows[i].grid_nodes = recs[i].grid_nodes;
            }
        }
        return rows;
    }

    SpectrumKind parse_spectrum_kind(const std::string &name)
    {
        if (name == "angle-fft")
            return SpectrumKind::angle_fft;
        if (name == "music2d")
            return SpectrumKind::music2d;
        if (name == "beamform")
            return SpectrumKind::beamform;
        if (name == "music1d")
            return SpectrumKind::music1d;
        fail(ErrorCategory::invalid_argument, "unknown spectrum kind '" + name + "'");
    }

    const char *spectrum_kind_name(SpectrumKind k)
    {
        switch (k)
        {
        case SpectrumKind::angle_fft:
            return "angle-fft";
        case SpectrumKind::music2d:
            return "music2d";
        case SpectrumKind::beamform:
            return "beamform";
        case SpectrumKind::music1d:
            return "music1d";
        }
        return "unknown";
    }

    std::vector<std::pair<std::string, std::string>> output_metadata(const ScenarioConfig &cfg, std::uint64_t seed)
    {
        return {{"config_hash", cfg.hash()},
                {"seed", std::to_string(seed)},
                {"version", library_version()},
                {"rng", rng_algorithm_name()}};
    }

    CsvTable dump_spectrum(const ScenarioConfig &cfg, SpectrumKind kind, std::optional<double> angle)
    {
        const ArrayGeometry geom = cfg.geometry();
        const CovarianceMatrix r = scenario_covariance(cfg, cfg.seed, cfg.snr_db);
        const GridSpec &grid = cfg.localizer.grid;
        const int k = std::max(1, static_cast<int>(cfg.sources.size()));

        CsvTable t;
        t.metadata = output_metadata(cfg, cfg.seed);
        t.metadata.emplace_back("spectrum", spectrum_kind_name(kind));

        if (kind == SpectrumKind::angle_fft)
        {
            const AngleSpectrum p = angle_spectrum(r, geom, cfg.localizer.fft_size);
            const double mx = *std::max_element(p.values.begin(), p.values.end());
            t.columns = {"bin", "u", "angle_deg", "amplitude", "amplitude_db"};
            for (int b = 0; b < p.num_bins(); ++b)
            {
                const Cell a = p.bin_angles[b] ? Cell(rad2deg(*p.bin_angles[b])) : Cell(std::string());
                t.rows.push_back({double(b), bin_frequency(p.num_bins(), b), a, p.values[b], db(p.values[b], mx)});
            }
            return t;
        }

        const SubspaceDecomposition dec = decompose(r, k);
        if (kind == SpectrumKind::music2d)
        {
            const Spectrum2D s = music_2d(dec.noise_basis, geom, grid);
            const double mx = s.values.maxCoeff();
            t.columns = {"angle_deg", "range_m", "amplitude", "amplitude_db"};
            for (std::size_t i = 0; i < s.angles.size(); ++i)
                for (std::size_t j = 0; j < s.ranges.size(); ++j)
                {
                    const double v = s.values(i, j);
                    t.rows.push_back({rad2deg(s.angles[i]), s.ranges[j], v, db(v, mx)});
                }
            return t;
        }

        const double a = angle ? *angle : (cfg.sources.empty() ? 0.0 : cfg.sources.front().angle);
        const std::vector<double> ranges = grid.ranges();
        const std::vector<double> v = kind == SpectrumKind::beamform ? beamform_distance_scan(r, geom, a, ranges)
                                                                     : music_1d_distance(dec.noise_basis, geom, a, ranges);
        const double mx = *std::max_element(v.begin(), v.end());
        t.metadata.emplace_back("angle_deg", format_number(rad2deg(a)));
        t.columns = {"range_m", "amplitude", "amplitude_db"};
        for (std::size_t j = 0; j < ranges.size(); ++j)
            t.rows.push_back({ranges[j], v[j], db(v[j], mx)});
        return t;
    }

    CsvTable estimates_table(const ScenarioConfig &cfg, const std::vector<TrialRecord> &records)
    {
        CsvTable t;
        t.metadata = output_metadata(cfg, records.empty() ? cfg.seed : records.front().seed);
        t.columns = {"seed", "snr_db", "algorithm", "index", "angle_deg", "range_m", "kind"};
        for (const TrialRecord &r : records)
            for (std::size_t i = 0; i < r.estimates.size(); ++i)
                t.rows.push_back({double(r.seed), r.snr_db, std::string(algorithm_name(r.algorithm)), double(i),
                                  rad2deg(r.estimates[i].angle), r.estimates[i].range, r.estimates[i].kind});
        return t;
    }

    CsvTable rmse_table(const ScenarioConfig &cfg, const SweepResult &sweep)
    {
        CsvTable t;
        t.metadata = output_metadata(cfg, cfg.seed);
        t.metadata.emplace_back("penalty_angle_deg", format_number(sweep.penalty_angle_deg));
        t.metadata.emplace_back("penalty_range_m", format_number(sweep.penalty_range_m));
        t.columns = {"snr_db", "algorithm", "rmse_angle_deg", "rmse_range_m", "trials", "unmatched"};
        for (const RmseRow &r : sweep.rows)
            t.rows.push_back({r.snr_db, std::string(algorithm_name(r.algorithm)), r.rmse_angle_deg, r.rmse_range_m,
                              double(r.trials), double(r.unmatched)});
        return t;
    }

    CsvTable trials_table(const ScenarioConfig &cfg, const SweepResult &sweep)
    {
        CsvTable t;
        t.metadata = output_metadata(cfg, cfg.seed);
        t.columns = {"seed", "snr_db", "algorithm", "truth_angle_deg", "truth_range_m", "angle_deg", "range_m",
                     "kind", "seconds", "music_nodes"};
        for (const TrialRecord &r : sweep.records)
            for (const SourceOutcome &o : r.outcomes)
            {
                std::vector<Cell> row{double(r.seed), r.snr_db, std::string(algorithm_name(r.algorithm)),
                                      rad2deg(o.truth.angle), o.truth.range};
                if (o.estimate)
                {
                    row.push_back(rad2deg(o.estimate->angle));
                    row.push_back(o.estimate->range);
                    row.push_back(o.estimate->kind);
                }
                else
                {
                    row.push_back(std::string());
                    row.push_back(std::string());
                    row.push_back(std::string("unmatched"));
                }
                row.push_back(r.seconds);
                row.push_back(double(r.music_nodes));
                t.rows.push_back(std::move(row));
            }
        return t;
    }

    CsvTable bench_table(const ScenarioConfig &cfg, const std::vector<BenchRow> &rows)
    {
        CsvTable t;
        t.metadata = output_metadata(cfg, cfg.seed);
        double base = 0.0, prop = 0.0;
        for (const BenchRow &r : rows)
            (r.algorithm == Algorithm::music2d ? base : prop) = r.mean_seconds;
        if (base > 0.0 && prop > 0.0)
            t.metadata.emplace_back("speedup", format_number(base / prop));
        t.columns = {"algorithm", "repetitions", "mean_seconds", "min_seconds", "music_nodes", "grid_nodes",
                     "node_ratio"};
        for (const BenchRow &r : rows)
            t.rows.push_back({std::string(algorithm_name(r.algorithm)), double(r.repetitions), r.mean_seconds,
                              r.min_seconds, double(r.music_nodes), double(r.grid_nodes),
                              r.grid_nodes ? double(r.music_nodes) / double(r.grid_nodes) : 0.0});
        return t;
    }

    nlohmann::json diagnostics_json(const LocalizerDiagnostics &d)
    {
        nlohmann::json j;
        j["num_clusters"] = d.clusters.size();
        j["prominence_used"] = d.prominence_used;
        j["grid_nodes"] = d.grid_nodes;
        j["distant_nodes"] = d.distant_nodes;
        j["confined_nodes"] = d.confined_nodes;
        j["beamform_nodes"] = d.beamform_nodes;
        j["music_nodes"] = d.music_nodes();
        j["expansion_rounds"] = d.expansion_rounds;
        j["promotions"] = d.promotions;
        j["shortfall"] = d.shortfall;
        j["degenerate_gap"] = d.degenerate_gap;
        j["clusters"] = nlohmann::json::array();
        for (const ClusterReport &c : d.clusters)
        {
            nlohmann::json cj;
            cj["lower_deg"] = rad2deg(c.angle.lower);
            cj["upper_deg"] = rad2deg(c.angle.upper);
            cj["peak_count"] = c.angle.peak_count;
            cj["peak_bins"] = c.angle.peak_bins;
            cj["path"] = kind_name(c.path);
            cj["promoted"] = c.promoted;
            cj["candidates"] = c.candidates;
            if (c.distance)
                cj["distance"] = {{"lower_m", c.distance->lower},
                                  {"upper_m", c.distance->upper},
                                  {"expansion_count", c.distance->expansion_count},
                                  {"empty_intersection", c.distance->empty_intersection}};
            j["clusters"].push_back(cj);
        }
        const StageTimings &t = d.timings;
        j["timings"] = {{"covariance", t.covariance},         {"decomposition", t.decomposition},
                        {"angle_spectrum", t.angle_spectrum}, {"clustering", t.clustering},
                        {"distant_path", t.distant_path},     {"distance_clusters", t.distance_clusters},
                        {"confined_search", t.confined_search}, {"total", t.total}};
        return j;
    }

    nlohmann::json record_json(const ScenarioConfig &cfg, const TrialRecord &r)
    {
        nlohmann::json j;
        for (const auto &[k, v] : output_metadata(cfg, r.seed))
            j["metadata"][k] = v;
        j["snr_db"] = r.snr_db;
        j["algorithm"] = algorithm_name(r.algorithm);
        j["estimates"] = nlohmann::json::array();
        for (const Located &e : r.estimates)
            j["estimates"].push_back({{"angle_deg", rad2deg(e.angle)}, {"range_m", e.range}, {"kind", e.kind}});
        j["sources"] = nlohmann::json::array();
        for (const SourceOutcome &o : r.outcomes)
        {
            nlohmann::json s{{"truth_angle_deg", rad2deg(o.truth.angle)}, {"truth_range_m", o.truth.range}};
            if (o.estimate)
                s["estimate"] = {{"angle_deg", rad2deg(o.estimate->angle)},
                                 {"range_m", o.estimate->range},
                                 {"kind", o.estimate->kind}};
            else
                s["estimate"] = nullptr;
            j["sources"].push_back(s);
        }
        j["music_nodes"] = r.music_nodes;
        j["grid_nodes"] = r.grid_nodes;
        if (r.diagnostics)
            j["diagnostics"] = diagnostics_json(*r.diagnostics);
        j["timings"]["seconds"] = r.seconds;
        return j;
    }
}
