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

#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "nfloc/cluster_localizer.hpp"

using namespace nfloc;

namespace
{
    LocalizerConfig config(int fft_size)
    {
        LocalizerConfig c;
        c.fft_size = fft_size;
        c.grid = {{deg2rad(-40.0), deg2rad(40.0), deg2rad(0.5)}, {0.0, 20.0, 0.25}};
        return c;
    }

    CovarianceMatrix analytic(const ArrayGeometry &g, const std::vector<Source> &s, double nv)
    {
        return CovarianceMatrix(model_covariance(g, SourceTruth(s), nv));
    }

    bool on_grid(double x, double min, double step)
    {
        const double k = (x - min) / step;
        return std::abs(k - std::round(k)) < 1e-9;
    }
}

TEST_CASE("config validation")
{
    LocalizerConfig c = config(64);
    CHECK_NOTHROW(c.validate(33));
    CHECK_THROWS(c.validate(65));
    c.spread_margin_angle = 1.0;
    CHECK_THROWS(c.validate(33));
    c = config(64);
    c.expansion_factor = 1.0;
    CHECK_THROWS(c.validate(33));
    c = config(64);
    c.max_expansions = 0;
    CHECK_THROWS(c.validate(33));
}

TEST_CASE("single far-field source forms one cluster")
{
    const ArrayGeometry g(33, 0.005, 0.01);
    const double th = deg2rad(12.0);
    const CovarianceMatrix r = analytic(g, {{1e4, th, 1.0}}, 0.01);
    const auto cl = angle_clusters(angle_spectrum(r, g, 128), 1, config(128));
    REQUIRE(cl.size() == 1);
    CHECK(cl[0].peak_count == 1);
    CHECK(cl[0].lower <= th);
    CHECK(cl[0].upper >= th);
}

TEST_CASE("well separated far sources form disjoint clusters")
{
    const ArrayGeometry g(33, 0.005, 0.01);
    const CovarianceMatrix r = analytic(g, {{1e4, deg2rad(-20.0), 1.0}, {1e4, deg2rad(15.0), 1.0}}, 0.01);
    const auto cl = angle_clusters(angle_spectrum(r, g, 128), 2, config(128));
    REQUIRE(cl.size() == 2);
    CHECK(cl[0].upper < cl[1].lower);
    CHECK(cl[0].lower <= deg2rad(-20.0));
    CHECK(cl[0].upper >= deg2rad(-20.0));
    CHECK(cl[1].lower <= deg2rad(15.0));
    CHECK(cl[1].upper >= deg2rad(15.0));
}

TEST_CASE("noise-only spectrum without peaks is reported")
{
    const ArrayGeometry g(9, 0.005, 0.01);
    const CovarianceMatrix r(CMatrix::Identity(9, 9));
    try
    {
        (void)angle_clusters(angle_spectrum(r, g, 32), 1, config(32));
        FAIL("expected an error");
    }
    catch (const Error &e)
    {
        CHECK(e.category() == ErrorCategory::no_sources_visible);
    }
}

TEST_CASE("distance clusters")
{
    const ArrayGeometry g(65, 0.005, 0.01);
    const LocalizerConfig cfg = config(128);
    SUBCASE("identity covariance covers nearly the full range")
    {
        AngleCluster c{deg2rad(5.0), deg2rad(8.0), 2, {}, 0, deg2rad(6.5)};
        const DistanceCluster d = distance_cluster(CovarianceMatrix(CMatrix::Identity(65, 65)), g, c, cfg);
        CHECK(d.lower_index == 0);
        CHECK(d.upper_index == static_cast<int>(cfg.grid.ranges().size()) - 1);
    }
    SUBCASE("single source inside a forced cluster")
    {
        const ArrayGeometry big(129, 0.005, 0.01);
        LocalizerConfig wide = config(256);
        wide.grid = {{deg2rad(-20.0), deg2rad(40.0), deg2rad(0.1)}, {0.0, 40.0, 0.2}};
        const double th = deg2rad(10.0);
        const CovarianceMatrix r = analytic(big, {{4.0, th, 1.0}}, 0.01);
        const auto cl = angle_clusters(angle_spectrum(r, big, 256), 1, wide);
        const auto hit = std::find_if(cl.begin(), cl.end(),
                                      [&](const AngleCluster &c) { return c.lower <= th && c.upper >= th; });
        REQUIRE(hit != cl.end());
        AngleCluster forced = *hit;
        forced.peak_count = 2;
        const DistanceCluster d = distance_cluster(r, big, forced, wide);
        CHECK(d.lower <= 4.0);
        CHECK(d.upper >= 4.0);
        CHECK(!d.empty_intersection);
    }
}

TEST_CASE("expansion grows strictly until it covers the range")
{
    for (int n : {1, 2, 7, 200})
        for (int lo = 0; lo < n; lo += 3)
            for (int hi = lo; hi < n; hi += 5)
            {
                int a = lo, b = hi;
                for (int round = 0; round < 20 && !(a == 0 && b == n - 1); ++round)
                {
                    const auto [na, nb] = expand_interval(a, b, n, 2.0);
                    CHECK(na <= a);
                    CHECK(nb >= b);
                    CHECK((na < a || nb > b));
                    a = na;
                    b = nb;
                }
                CHECK(a == 0);
                CHECK(b == n - 1);
            }
    CHECK_THROWS(expand_interval(3, 2, 10, 2.0));
}

TEST_CASE("single far source takes the distant path only")
{
    const ArrayGeometry g(65, 0.005, 0.01);
    const LocalizerConfig cfg = config(128);
    const LocalizeResult res = localize(analytic(g, {{15.0, deg2rad(-22.0), 1.0}}, 0.01), g, 1, cfg);
    REQUIRE(res.estimates.size() == 1);
    CHECK(res.estimates[0].kind == EstimateKind::distant);
    CHECK(rad2deg(res.estimates[0].angle) == doctest::Approx(-22.0));
    CHECK(res.estimates[0].range == doctest::Approx(15.0));
    CHECK(res.diagnostics.confined_nodes == 0);
    CHECK(res.diagnostics.shortfall == 0);
}

TEST_CASE("distant estimate agrees with the full spectrum in its span")
{
    const ArrayGeometry g(65, 0.005, 0.01);
    const LocalizerConfig cfg = config(128);
    const CovarianceMatrix r = analytic(g, {{6.0, deg2rad(-25.0), 1.0}, {12.0, deg2rad(18.0), 1.0}}, 0.05);
    const LocalizeResult res = localize(r, g, 2, cfg);
    const Spectrum2D full = music_2d(decompose(r, 2).noise_basis, g, cfg.grid);
    for (const Estimate &e : res.estimates)
    {
        if (e.kind != EstimateKind::distant)
            continue;
        const std::vector<int> span = cluster_span(res.diagnostics.clusters[e.cluster_id].angle, full.angles);
        double best = -1.0;
        int bi = 0, bj = 0;
        for (int i : span)
            for (int j = 0; j < full.values.cols(); ++j)
                if (full.values(i, j) > best)
                {
                    best = full.values(i, j);
                    bi = i;
                    bj = j;
                }
        CHECK(std::abs(e.angle - full.angles[bi]) <= cfg.grid.angle.step + 1e-12);
        CHECK(std::abs(e.range - full.ranges[bj]) <= cfg.grid.range.step + 1e-12);
    }
}

TEST_CASE("close sources are resolved by the confined search")
{
    const ArrayGeometry g(129, 0.005, 0.01);
    LocalizerConfig cfg;
    cfg.fft_size = 256;
    cfg.grid = {{deg2rad(-20.0), deg2rad(40.0), deg2rad(0.1)}, {0.0, 40.0, 0.2}};
    const std::vector<Source> src{{3.0, deg2rad(6.0), 1.0}, {4.0, deg2rad(7.0), 1.0}, {5.0, deg2rad(8.0), 1.0},
                                  {32.0, deg2rad(20.0), 1.0}};
    const LocalizeResult res = localize(analytic(g, src, 0.01), g, 4, cfg);
    REQUIRE(res.estimates.size() == 4);
    for (std::size_t i = 0; i < 4; ++i)
    {
        CHECK(std::abs(rad2deg(res.estimates[i].angle) - rad2deg(src[i].angle)) < 0.1 + 1e-9);
        CHECK(std::abs(res.estimates[i].range - src[i].range) < 0.2 + 1e-9);
    }
    CHECK(res.estimates[3].kind == EstimateKind::distant);
    CHECK(res.diagnostics.music_nodes() < res.diagnostics.grid_nodes);
}

TEST_CASE("estimates are sorted, on grid and deterministic")
{
    const ArrayGeometry g(33, 0.005, 0.01);
    const LocalizerConfig cfg = config(64);
    const SourceTruth t({{4.0, deg2rad(-10.0), 1.0}, {8.0, deg2rad(25.0), 1.0}});
    const SnapshotMatrix y = synthesize_snapshots(g, t, 100, 0.01, 7);
    const LocalizeResult a = localize(y, g, 2, cfg);
    const LocalizeResult b = localize(y, g, 2, cfg);
    REQUIRE(a.estimates.size() == b.estimates.size());
    for (std::size_t i = 0; i < a.estimates.size(); ++i)
    {
        CHECK(a.estimates[i].angle == b.estimates[i].angle);
        CHECK(a.estimates[i].range == b.estimates[i].range);
        CHECK(a.estimates[i].value == b.estimates[i].value);
        CHECK(on_grid(a.estimates[i].angle, cfg.grid.angle.min, cfg.grid.angle.step));
        CHECK(on_grid(a.estimates[i].range, cfg.grid.range.min, cfg.grid.range.step));
        if (i > 0)
            CHECK(a.estimates[i - 1].angle <= a.estimates[i].angle);
    }
    CHECK(a.diagnostics.music_nodes() == b.diagnostics.music_nodes());
    CHECK(a.diagnostics.clusters.size() == b.diagnostics.clusters.size());
}

TEST_CASE("pure noise input never crashes")
{
    const ArrayGeometry g(33, 0.005, 0.01);
    const LocalizerConfig cfg = config(64);
    for (std::uint64_t seed = 0; seed < 5; ++seed)
    {
        const SnapshotMatrix y = synthesize_snapshots(g, SourceTruth(), 50, 1.0, seed);
        try
        {
            const LocalizeResult res = localize(y, g, 1, cfg);
            CHECK(res.estimates.size() + res.diagnostics.shortfall == 1);
        }
        catch (const Error &e)
        {
            CHECK(e.category() == ErrorCategory::no_sources_visible);
        }
    }
}

TEST_CASE("source count bounds")
{
    const ArrayGeometry g(9, 0.005, 0.01);
    const CovarianceMatrix r(CMatrix::Identity(9, 9));
    CHECK_THROWS(localize(r, g, 0, config(16)));
    CHECK_THROWS(localize(r, g, 9, config(16)));
}
