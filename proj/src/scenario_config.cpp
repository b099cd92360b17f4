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

#include "nfloc/scenario_config.hpp"

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace nfloc
{
    namespace
    {
        class Reader
        {
        public:
            explicit Reader(std::string origin) : origin_(std::move(origin)) {}

            [[noreturn]] void error(const YAML::Node &node, const std::string &field, const std::string &msg) const
            {
                const int line = node.Mark().line >= 0 ? node.Mark().line + 1 : 0;
                fail(ErrorCategory::parse, fmt::format("{}:{}: {}: {}", origin_, line, field, msg));
            }

            void only_keys(const YAML::Node &node, const std::string &field, const std::set<std::string> &keys) const
            {
                if (!node.IsMap())
                    error(node, field, "expected a mapping");
                for (const auto &kv : node)
                {
                    const std::string k = kv.first.as<std::string>();
                    if (!keys.count(k))
                        error(kv.first, field.empty() ? k : field + "." + k, "unknown key");
                }
            }

            template <typename T>
            void get(const YAML::Node &parent, const std::string &section, const std::string &key, T &out) const
            {
                const YAML::Node n = parent[key];
                if (!n)
                    return;
                const std::string field = section.empty() ? key : section + "." + key;
                if (!n.IsScalar())
                    error(n, field, "expected a scalar");
                try
                {
                    out = n.as<T>();
                }
                catch (const YAML::Exception &)
                {
                    error(n, field, "cannot parse value '" + n.Scalar() + "'");
                }
                if constexpr (std::is_floating_point_v<T>)
                    if (!std::isfinite(out))
                        error(n, field, "value must be finite");
            }

            template <typename Fn>
            void check(const YAML::Node &node, const std::string &field, Fn &&fn) const
            {
                try
                {
                    fn();
                }
                catch (const Error &e)
                {
                    error(node, field, e.what());
                }
            }

        private:
            std::string origin_;
        };

        void read_axis(const Reader &rd, const YAML::Node &node, const std::string &field, double scale, Axis &axis)
        {
            if (!node)
                return;
            rd.only_keys(node, field, {"min", "max", "step"});
            double mn = axis.min / scale, mx = axis.max / scale, st = axis.step / scale;
            rd.get(node, field, "min", mn);
            rd.get(node, field, "max", mx);
            rd.get(node, field, "step", st);
            axis = {mn * scale, mx * scale, st * scale};
        }
    }

    ArrayGeometry ScenarioConfig::geometry() const
    {
        const ArrayGeometry probe = ArrayGeometry::from_carrier(elements, 1.0, carrier_hz);
        return ArrayGeometry(elements, spacing_wavelengths * probe.wavelength(), probe.wavelength());
    }

    SourceTruth ScenarioConfig::truth() const
    {
        return SourceTruth(sources);
    }

    double ScenarioConfig::noise_variance(double snr) const
    {
        return std::pow(10.0, -snr / 10.0);
    }

    std::string ScenarioConfig::canonical() const
    {
        const LocalizerConfig &l = localizer;
        std::string s = fmt::format("array.elements={}\narray.spacing_wavelengths={}\narray.carrier_hz={}\n", elements,
                                    spacing_wavelengths, carrier_hz);
        for (const Source &src : sources)
            s += fmt::format("source={},{},{}\n", src.range, src.angle, src.power);
        s += fmt::format("simulation.snapshots={}\nsimulation.snr_db={}\nsimulation.seed={}\nsimulation.covariance={}\n",
                         snapshots, snr_db, seed, analytic_covariance ? "analytic" : "sampled");
        s += fmt::format("grid.angle={},{},{}\ngrid.range={},{},{}\n", l.grid.angle.min, l.grid.angle.max,
                         l.grid.angle.step, l.grid.range.min, l.grid.range.max, l.grid.range.step);
        s += fmt::format("localizer={},{},{},{},{},{},{},{},{},{},{}\n", l.fft_size, l.spread_margin_angle,
                         l.spread_margin_distance, l.peak_prominence, l.prominence_retry_factor, l.refine_angle_step,
                         l.refine_range_step, l.max_expansions, l.expansion_factor, l.credibility,
                         l.max_refine_iterations);
        return s;
    }

    std::string ScenarioConfig::hash() const
    {
        // FNV-1a 64
        std::uint64_t h = 14695981039346656037ull;
        for (unsigned char c : canonical())
        {
            h ^= c;
            h *= 1099511628211ull;
        }
        return fmt::format("fnv1a64:{:016x}", h);
    }

    ScenarioConfig default_scenario()
    {
        ScenarioConfig c;
        c.sources = {{3.0, deg2rad(6.0), 1.0}, {4.0, deg2rad(7.0), 1.0}, {5.0, deg2rad(8.0), 1.0},
                     {32.0, deg2rad(20.0), 1.0}};
        c.localizer.grid = {{deg2rad(-20.0), deg2rad(40.0), deg2rad(0.1)}, {0.0, 40.0, 0.2}};
        return c;
    }

    ScenarioConfig parse_scenario(const std::string &text, const std::string &origin)
    {
        YAML::Node root;
        try
        {
            root = YAML::Load(text);
        }
        catch (const YAML::ParserException &e)
        {
            fail(ErrorCategory::parse, fmt::format("{}:{}: {}", origin, e.mark.line + 1, e.msg));
        }
        const Reader rd(origin);
        ScenarioConfig c = default_scenario();
        if (root.IsNull())
            return c;
        rd.only_keys(root, "", {"array", "sources", "simulation", "grid", "localizer", "output"});

        if (const YAML::Node a = root["array"])
        {
            rd.only_keys(a, "array", {"elements", "spacing_wavelengths", "carrier_hz"});
            rd.get(a, "array", "elements", c.elements);
            rd.get(a, "array", "spacing_wavelengths", c.spacing_wavelengths);
            rd.get(a, "array", "carrier_hz", c.carrier_hz);
            rd.check(a["elements"] ? a["elements"] : a, "array.elements", [&] {
                require(c.elements % 2 == 1, "M must be odd");
                require(c.elements >= 3, "M must be at least 3");
            });
            rd.check(a, "array", [&] { (void)c.geometry(); });
        }

        if (const YAML::Node s = root["sources"])
        {
            if (!s.IsSequence())
                rd.error(s, "sources", "expected a list");
            c.sources.clear();
            int i = 0;
            for (const YAML::Node &e : s)
            {
                const std::string field = fmt::format("sources[{}]", i++);
                rd.only_keys(e, field, {"range_m", "angle_deg", "power"});
                if (!e["range_m"] || !e["angle_deg"])
                    rd.error(e, field, "range_m and angle_deg are required");
                Source src{0.0, 0.0, 1.0};
                double deg = 0.0;
                rd.get(e, field, "range_m", src.range);
                rd.get(e, field, "angle_deg", deg);
                rd.get(e, field, "power", src.power);
                src.angle = deg2rad(deg);
                rd.check(e, field, [&] { (void)SourceTruth({src}); });
                c.sources.push_back(src);
            }
        }

        if (const YAML::Node s = root["simulation"])
        {
            rd.only_keys(s, "simulation", {"snapshots", "snr_db", "seed", "covariance"});
            rd.get(s, "simulation", "snapshots", c.snapshots);
            rd.get(s, "simulation", "snr_db", c.snr_db);
            rd.get(s, "simulation", "seed", c.seed);
            std::string cov = "sampled";
            rd.get(s, "simulation", "covariance", cov);
            if (cov != "sampled" && cov != "analytic")
                rd.error(s["covariance"], "simulation.covariance", "expected 'sampled' or 'analytic'");
            c.analytic_covariance = cov == "analytic";
            rd.check(s, "simulation.snapshots", [&] { require(c.snapshots >= 1, "must be at least 1"); });
        }

        if (const YAML::Node g = root["grid"])
        {
            rd.only_keys(g, "grid", {"angle_deg", "range_m"});
            read_axis(rd, g["angle_deg"], "grid.angle_deg", pi / 180.0, c.localizer.grid.angle);
            read_axis(rd, g["range_m"], "grid.range_m", 1.0, c.localizer.grid.range);
            rd.check(g, "grid", [&] { c.localizer.grid.validate(); });
        }

        if (const YAML::Node l = root["localizer"])
        {
            LocalizerConfig &lc = c.localizer;
            rd.only_keys(l, "localizer",
                         {"fft_size", "spread_margin_angle", "spread_margin_distance", "peak_prominence",
                          "prominence_retry_factor", "refine_angle_step_deg", "refine_range_step_m", "max_expansions",
                          "expansion_factor", "credibility", "max_refine_iterations"});
            double ras = rad2deg(lc.refine_angle_step);
            rd.get(l, "localizer", "fft_size", lc.fft_size);
            rd.get(l, "localizer", "spread_margin_angle", lc.spread_margin_angle);
            rd.get(l, "localizer", "spread_margin_distance", lc.spread_margin_distance);
            rd.get(l, "localizer", "peak_prominence", lc.peak_prominence);
            rd.get(l, "localizer", "prominence_retry_factor", lc.prominence_retry_factor);
            rd.get(l, "localizer", "refine_angle_step_deg", ras);
            rd.get(l, "localizer", "refine_range_step_m", lc.refine_range_step);
            rd.get(l, "localizer", "max_expansions", lc.max_expansions);
            rd.get(l, "localizer", "expansion_factor", lc.expansion_factor);
            rd.get(l, "localizer", "credibility", lc.credibility);
            rd.get(l, "localizer", "max_refine_iterations", lc.max_refine_iterations);
            lc.refine_angle_step = deg2rad(ras);
        }

        if (const YAML::Node o = root["output"])
        {
            rd.only_keys(o, "output", {"dir"});
            rd.get(o, "output", "dir", c.output_dir);
        }

        rd.check(root, "localizer", [&] { c.localizer.validate(c.elements); });
        rd.check(root, "sources", [&] {
            const GridSpec &g = c.localizer.grid;
            for (const Source &s : c.sources)
            {
                require(s.range >= g.range.min && s.range <= g.range.max, "source range outside the search grid");
                require(s.angle >= g.angle.min && s.angle <= g.angle.max, "source angle outside the search grid");
            }
        });
        return c;
    }

    ScenarioConfig load_scenario(const std::string &path)
    {
        std::ifstream in(path);
        if (!in)
            fail(ErrorCategory::io, "cannot open config file '" + path + "'");
        std::stringstream ss;
        ss << in.rdbuf();
        return parse_scenario(ss.str(), path);
    }
}
