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

#include "nfloc/cluster_localizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
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

        constexpr double tol = 1e-12;

        int nearest_index(const std::vector<double> &nodes, double x)
        {
            int best = 0;
            for (int i = 1; i < static_cast<int>(nodes.size()); ++i)
                if (std::abs(nodes[i] - x) < std::abs(nodes[best] - x))
                    best = i;
            return best;
        }

        int argmax(const std::vector<double> &v)
        {
            return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
        }

        std::vector<double> axis_nodes(double min, double max, double step, bool range_floor)
        {
            const Axis a{min, max, step};
            std::vector<double> out;
            for (int i = 0; i < a.count(); ++i)
                if (!range_floor || a.node(i) >= min_search_range - 1e-12)
                    out.push_back(a.node(i));
            return out;
        }

        // Runs of samples at or below the threshold that contain a valley
        std::vector<bool> valley_set(const std::vector<double> &p, double margin)
        {
            const int n = static_cast<int>(p.size());
            std::vector<int> minima;
            for (int k = 1; k + 1 < n; ++k)
                if (p[k] <= p[k - 1] && p[k] <= p[k + 1])
                    minima.push_back(k);

            const double mx = *std::max_element(p.begin(), p.end());
            double ref = *std::min_element(p.begin(), p.end());
            if (!minima.empty())
            {
                ref = p[minima.front()];
                for (int k : minima)
                    ref = std::min(ref, p[k]);
            }
            const double thr = ref + margin * (mx - ref);

            std::vector<bool> keep(n, false);
            int k = 0;
            while (k < n)
            {
                if (p[k] > thr)
                {
                    ++k;
                    continue;
                }
                int e = k;
                while (e + 1 < n && p[e + 1] <= thr)
                    ++e;
                const bool has_valley =
                    minima.empty() ||
                    std::any_of(minima.begin(), minima.end(), [&](int x) { return x >= k && x <= e; });
                if (has_valley)
                    std::fill(keep.begin() + k, keep.begin() + e + 1, true);
                k = e + 1;
            }
            return keep;
        }
    }

    const char *kind_name(EstimateKind k)
    {
        return k == EstimateKind::distant ? "distant" : "close";
    }

    void LocalizerConfig::validate(int num_elements) const
    {
        require(fft_size >= num_elements, "FFT size must satisfy S >= M");
        require(spread_margin_angle > 0.0 && spread_margin_angle < 1.0, "spread_margin_angle must lie in (0, 1)");
        require(spread_margin_distance > 0.0 && spread_margin_distance < 1.0,
                "spread_margin_distance must lie in (0, 1)");
        require(peak_prominence >= 0.0 && peak_prominence < 1.0, "peak_prominence must lie in [0, 1)");
        require(prominence_retry_factor > 0.0 && prominence_retry_factor <= 1.0,
                "prominence_retry_factor must lie in (0, 1]");
        require(refine_angle_step >= 0.0 && refine_range_step >= 0.0, "refine steps must be non-negative");
        require(max_expansions >= 1, "max_expansions must be at least 1");
        require(expansion_factor > 1.0, "expansion_factor must exceed 1");
        require(credibility > 0.0 && credibility <= 1.0, "credibility must lie in (0, 1]");
        require(max_refine_iterations >= 1, "max_refine_iterations must be at least 1");
        grid.validate();
    }

    std::vector<AngleCluster> angle_clusters(const AngleSpectrum &p, int num_sources, const LocalizerConfig &cfg,
                                             double *prominence_used)
    {
        require(num_sources >= 1, "number of sources must be at least 1");

        // Visible bins ordered by angle
        std::vector<int> order;
        for (int b = 0; b < p.num_bins(); ++b)
            if (p.bin_angles[b])
                order.push_back(b);
        std::sort(order.begin(), order.end(), [&](int a, int b) { return *p.bin_angles[a] < *p.bin_angles[b]; });
        const int n = static_cast<int>(order.size());
        if (n < 3)
            fail(ErrorCategory::no_sources_visible, "no sources visible: too few mapped bins");
        std::vector<double> ang(n), v(n);
        for (int i = 0; i < n; ++i)
        {
            ang[i] = *p.bin_angles[order[i]];
            v[i] = p.values[order[i]];
        }

        double prom = cfg.peak_prominence;
        std::vector<Peak> peaks = find_peaks(v, prom);
        if (static_cast<int>(peaks.size()) < num_sources)
        {
            prom *= cfg.prominence_retry_factor;
            peaks = find_peaks(v, prom);
        }
        if (prominence_used)
            *prominence_used = prom;
        if (peaks.empty())
            fail(ErrorCategory::no_sources_visible, "no sources visible: angle spectrum has no peaks");

        struct Work
        {
            int first, last, core_first, core_last, seed;
            std::vector<int> members;
        };
        std::vector<Work> work;
        std::vector<int> owner(n, -1);
        const double dth = cfg.spread_margin_angle;

        // Strongest peaks claim their own neighbourhood first
        for (const Peak &pk : peaks)
        {
            const int i = pk.index;
            if (owner[i] >= 0)
            {
                work[owner[i]].members.push_back(i);
                continue;
            }
            const double level = (1.0 - dth) * pk.amplitude;
            int l = i, r = i;
            while (l - 1 >= 0 && v[l - 1] > level && owner[l - 1] < 0)
                --l;
            while (r + 1 < n && v[r + 1] > level && owner[r + 1] < 0)
                ++r;
            const int id = static_cast<int>(work.size());
            std::fill(owner.begin() + l, owner.begin() + r + 1, id);
            work.push_back({l, r, l, r, i, {i}});
        }

        // Bins above the global threshold go to the nearest claimed bin
        double min_amp = peaks.front().amplitude;
        for (const Peak &pk : peaks)
            min_amp = std::min(min_amp, pk.amplitude);
        const double gamma = (1.0 - dth) * min_amp;
        std::vector<int> assigned = owner;
        int k = 0;
        while (k < n)
        {
            if (!(v[k] > gamma))
            {
                ++k;
                continue;
            }
            int e = k;
            while (e + 1 < n && v[e + 1] > gamma)
                ++e;
            std::vector<int> claimed;
            for (int j = k; j <= e; ++j)
                if (owner[j] >= 0)
                    claimed.push_back(j);
            if (!claimed.empty())
                for (int j = k; j <= e; ++j)
                {
                    if (owner[j] >= 0)
                        continue;
                    int best = claimed.front();
                    for (int q : claimed)
                        if (std::abs(q - j) < std::abs(best - j))
                            best = q;
                    assigned[j] = owner[best];
                }
            k = e + 1;
        }
        for (int j = 0; j < n; ++j)
            if (assigned[j] >= 0)
            {
                Work &w = work[assigned[j]];
                w.first = std::min(w.first, j);
                w.last = std::max(w.last, j);
            }

        const Axis &ax = cfg.grid.angle;
        const double grid_lo = ax.min;
        const double grid_hi = ax.node(ax.count() - 1);
        const double slack = 0.5 * ax.step;

        std::vector<AngleCluster> out;
        for (const Work &w : work)
        {
            if (ang[w.last] < grid_lo - slack || ang[w.first] > grid_hi + slack)
                continue;

            int count = 0;
            for (int i : w.members)
            {
                if (i == w.seed)
                    ++count;
                else if (peak_prominence(v, i, w.first, w.last) >= dth * v[i])
                    ++count;
            }

            double num = 0.0, den = 0.0;
            for (int j = w.core_first; j <= w.core_last; ++j)
            {
                num += v[j] * std::sin(ang[j]);
                den += v[j];
            }
            const double centroid = den > 0.0 ? std::asin(std::clamp(num / den, -1.0, 1.0)) : ang[w.seed];

            AngleCluster c;
            c.lower = std::clamp(ang[w.first], grid_lo, grid_hi);
            c.upper = std::clamp(ang[w.last], grid_lo, grid_hi);
            c.peak_count = count;
            for (int i : w.members)
                c.peak_bins.push_back(order[i]);
            c.seed_bin = order[w.seed];
            c.centroid = centroid;
            out.push_back(std::move(c));
        }
        if (out.empty())
            fail(ErrorCategory::no_sources_visible, "no sources visible inside the angle search domain");
        std::sort(out.begin(), out.end(), [](const AngleCluster &a, const AngleCluster &b) { return a.lower < b.lower; });
        return out;
    }

    std::vector<int> cluster_span(const AngleCluster &c, const std::vector<double> &angles)
    {
        std::vector<int> out;
        for (int i = 0; i < static_cast<int>(angles.size()); ++i)
            if (angles[i] >= c.lower - tol && angles[i] <= c.upper + tol)
                out.push_back(i);
        if (out.empty())
            out.push_back(nearest_index(angles, std::clamp(c.centroid, angles.front(), angles.back())));
        return out;
    }

    DistanceCluster distance_cluster(const CovarianceMatrix &r, const ArrayGeometry &geom, const AngleCluster &c,
                                     const LocalizerConfig &cfg)
    {
        const std::vector<double> angles = cfg.grid.angles();
        const std::vector<double> ranges = cfg.grid.ranges();
        const std::vector<int> span = cluster_span(c, angles);
        const int n = static_cast<int>(ranges.size());

        const std::vector<bool> low =
            valley_set(beamform_distance_scan(r, geom, angles[span.front()], ranges), cfg.spread_margin_distance);
        const std::vector<bool> up =
            valley_set(beamform_distance_scan(r, geom, angles[span.back()], ranges), cfg.spread_margin_distance);

        int lo = -1, hi = -1;
        for (int k = 0; k < n; ++k)
            if (low[k] && up[k])
            {
                if (lo < 0)
                    lo = k;
                hi = k;
            }

        DistanceCluster d;
        if (lo < 0)
        {
            d.empty_intersection = true;
            lo = 0;
            hi = n - 1;
        }
        d.lower_index = lo;
        d.upper_index = hi;
        d.lower = ranges[lo];
        d.upper = ranges[hi];
        return d;
    }

    namespace
    {
        struct Candidate
        {
            double angle;
            double range;
            double value;
        };

        class Search
        {
        public:
            Search(const CovarianceMatrix &r, const ArrayGeometry &geom, const CMatrix &noise_basis,
                   const LocalizerConfig &cfg, LocalizerDiagnostics &diag)
                : r_(r), geom_(geom), eval_(geom, noise_basis), cfg_(cfg), diag_(diag),
                  angles_(cfg.grid.angles()), ranges_(cfg.grid.ranges())
            {
                const double da = cfg.refine_angle_step > 0.0 ? cfg.refine_angle_step : cfg.grid.angle.step;
                const double dr = cfg.refine_range_step > 0.0 ? cfg.refine_range_step : cfg.grid.range.step;
                fine_angles_ = axis_nodes(cfg.grid.angle.min, cfg.grid.angle.max, da, false);
                fine_ranges_ = axis_nodes(cfg.grid.range.min, cfg.grid.range.max, dr, true);
            }

            const std::vector<double> &ranges() const { return ranges_; }
            const std::vector<double> &angles() const { return angles_; }

            bool credible(double q) const { return q / geom_.num_elements() < cfg_.credibility; }

            std::optional<Candidate> distant(const AngleCluster &c)
            {
                const auto t0 = clock::now();
                const std::vector<int> span = cluster_span(c, angles_);
                std::vector<double> span_angles;
                for (int i : span)
                    span_angles.push_back(angles_[i]);

                int ti = span[nearest_index(span_angles, c.centroid)];
                int ri = -1;
                for (int it = 0; it < cfg_.max_refine_iterations; ++it)
                {
                    std::vector<GridNode> scan;
                    for (double rr : ranges_)
                        scan.push_back({angles_[ti], rr});
                    const int rn = argmax(eval_.values(scan));

                    std::vector<GridNode> sweep;
                    for (double a : span_angles)
                        sweep.push_back({a, ranges_[rn]});
                    const int tn = span[argmax(eval_.values(sweep))];
                    diag_.distant_nodes += static_cast<long long>(scan.size() + sweep.size());

                    if (tn == ti && rn == ri)
                        break;
                    ti = tn;
                    ri = rn;
                }

                // 3x3 neighbourhood on the full grid
                const int a0 = std::max(ti - 1, 0), a1 = std::min<int>(ti + 1, angles_.size() - 1);
                const int b0 = std::max(ri - 1, 0), b1 = std::min<int>(ri + 1, ranges_.size() - 1);
                std::vector<GridNode> win;
                for (int a = a0; a <= a1; ++a)
                    for (int b = b0; b <= b1; ++b)
                        win.push_back({angles_[a], ranges_[b]});
                const std::vector<double> q = eval_.projection(win);
                diag_.distant_nodes += static_cast<long long>(win.size());
                Eigen::MatrixXd vals(a1 - a0 + 1, b1 - b0 + 1);
                for (int a = a0; a <= a1; ++a)
                    for (int b = b0; b <= b1; ++b)
                        vals(a - a0, b - b0) = eval_.value_from_projection(q[(a - a0) * (b1 - b0 + 1) + (b - b0)]);

                diag_.timings.distant_path += elapsed(t0);
                const double qc = q[(ti - a0) * (b1 - b0 + 1) + (ri - b0)];
                if (!is_local_max(vals, ti - a0, ri - b0) || !credible(qc))
                    return std::nullopt;
                return Candidate{angles_[ti], ranges_[ri], eval_.value_from_projection(qc)};
            }

            DistanceCluster bound(const AngleCluster &c)
            {
                const auto t0 = clock::now();
                DistanceCluster d = distance_cluster(r_, geom_, c, cfg_);
                diag_.beamform_nodes += 2 * static_cast<long long>(ranges_.size());
                diag_.timings.distance_clusters += elapsed(t0);
                return d;
            }

            std::vector<Candidate> confined(const AngleCluster &c, const DistanceCluster &d)
            {
                const auto t0 = clock::now();
                const std::vector<int> span = cluster_span(c, angles_);
                const double alo = angles_[span.front()], ahi = angles_[span.back()];
                const double rlo = ranges_[d.lower_index], rhi = ranges_[d.upper_index];

                auto index_range = [](const std::vector<double> &nodes, double lo, double hi) {
                    int first = -1, last = -1;
                    for (int i = 0; i < static_cast<int>(nodes.size()); ++i)
                        if (nodes[i] >= lo - tol && nodes[i] <= hi + tol)
                        {
                            if (first < 0)
                                first = i;
                            last = i;
                        }
                    if (first < 0)
                        first = last = nearest_index(nodes, 0.5 * (lo + hi));
                    return std::pair<int, int>(first, last);
                };
                const auto [ia, ib] = index_range(fine_angles_, alo, ahi);
                const auto [ja, jb] = index_range(fine_ranges_, rlo, rhi);

                // one node of padding for the neighbourhood test
                const int pa = std::max(ia - 1, 0), pb = std::min<int>(ib + 1, fine_angles_.size() - 1);
                const int qa = std::max(ja - 1, 0), qb = std::min<int>(jb + 1, fine_ranges_.size() - 1);
                const std::vector<double> wa(fine_angles_.begin() + pa, fine_angles_.begin() + pb + 1);
                const std::vector<double> wr(fine_ranges_.begin() + qa, fine_ranges_.begin() + qb + 1);
                const Eigen::MatrixXd vals = eval_.grid_values(wa, wr);
                diag_.confined_nodes += static_cast<long long>(vals.size());

                std::vector<Candidate> out;
                for (int a = ia; a <= ib; ++a)
                    for (int b = ja; b <= jb; ++b)
                    {
                        const double v = vals(a - pa, b - qa);
                        if (is_local_max(vals, a - pa, b - qa) && credible(1.0 / v))
                            out.push_back({fine_angles_[a], fine_ranges_[b], v});
                    }
                diag_.timings.confined_search += elapsed(t0);
                return out;
            }

        private:
            const CovarianceMatrix &r_;
            const ArrayGeometry &geom_;
            MusicEvaluator eval_;
            const LocalizerConfig &cfg_;
            LocalizerDiagnostics &diag_;
            std::vector<double> angles_, ranges_, fine_angles_, fine_ranges_;
        };
    }

    std::pair<int, int> expand_interval(int lo, int hi, int n, double factor)
    {
        require(n >= 1 && lo >= 0 && lo <= hi && hi < n, "invalid interval");
        require(factor > 1.0, "expansion factor must exceed 1");
        const double ctr = 0.5 * (lo + hi);
        const double hw = std::max(0.5 * (hi - lo), 0.5) * factor;
        return {std::max(0, static_cast<int>(std::floor(ctr - hw))),
                std::min(n - 1, static_cast<int>(std::ceil(ctr + hw)))};
    }

    LocalizeResult localize(const CovarianceMatrix &r, const ArrayGeometry &geom, int num_sources,
                            const LocalizerConfig &cfg)
    {
        const auto t_start = clock::now();
        const int m = geom.num_elements();
        require(r.size() == m, "covariance size does not match geometry");
        require(num_sources >= 1 && num_sources < m, "number of sources must satisfy 1 <= K < M");
        cfg.validate(m);

        LocalizeResult res;
        LocalizerDiagnostics &diag = res.diagnostics;

        auto t0 = clock::now();
        const SubspaceDecomposition dec = decompose(r, num_sources);
        diag.timings.decomposition = elapsed(t0);
        diag.degenerate_gap = dec.degenerate_gap;

        t0 = clock::now();
        const AngleSpectrum p = angle_spectrum(r, geom, cfg.fft_size);
        diag.timings.angle_spectrum = elapsed(t0);

        t0 = clock::now();
        const std::vector<AngleCluster> clusters = angle_clusters(p, num_sources, cfg, &diag.prominence_used);
        diag.timings.clustering = elapsed(t0);

        Search search(r, geom, dec.noise_basis, cfg, diag);
        const int n_r = static_cast<int>(search.ranges().size());
        diag.grid_nodes = static_cast<long long>(search.angles().size()) * n_r;

        const int L = static_cast<int>(clusters.size());
        std::vector<ClusterReport> &rep = diag.clusters;
        rep.resize(L);
        std::vector<std::vector<Candidate>> found(L);
        std::vector<std::optional<Candidate>> kept(L);

        auto search_close = [&](int i) {
            ClusterReport &c = rep[i];
            if (!c.distance)
                c.distance = search.bound(clusters[i]);
            std::vector<Candidate> got = search.confined(clusters[i], *c.distance);
            if (kept[i])
            {
                const Candidate &k = *kept[i];
                const bool dup = std::any_of(got.begin(), got.end(), [&](const Candidate &g) {
                    return std::abs(g.angle - k.angle) < tol && std::abs(g.range - k.range) < tol;
                });
                if (!dup)
                    got.push_back(k);
            }
            found[i] = std::move(got);
            c.candidates = static_cast<int>(found[i].size());
        };

        for (int i = 0; i < L; ++i)
        {
            rep[i].angle = clusters[i];
            rep[i].path = clusters[i].peak_count == 1 ? EstimateKind::distant : EstimateKind::close;
            if (rep[i].path == EstimateKind::distant)
            {
                found[i].clear();
                if (auto cand = search.distant(clusters[i]))
                    found[i].push_back(*cand);
                rep[i].candidates = static_cast<int>(found[i].size());
            }
            else
            {
                search_close(i);
            }
        }

        auto total = [&]() {
            std::size_t s = 0;
            for (const auto &f : found)
                s += f.size();
            return static_cast<int>(s);
        };

        while (total() < num_sources)
        {
            std::vector<int> expandable;
            for (int i = 0; i < L; ++i)
            {
                if (rep[i].path != EstimateKind::close)
                    continue;
                const DistanceCluster &d = *rep[i].distance;
                const bool full = d.lower_index == 0 && d.upper_index == n_r - 1;
                if (d.expansion_count < cfg.max_expansions && !full)
                    expandable.push_back(i);
            }

            if (!expandable.empty())
            {
                ++diag.expansion_rounds;
                for (int i : expandable)
                {
                    DistanceCluster &d = *rep[i].distance;
                    std::tie(d.lower_index, d.upper_index) =
                        expand_interval(d.lower_index, d.upper_index, n_r, cfg.expansion_factor);
                    d.lower = search.ranges()[d.lower_index];
                    d.upper = search.ranges()[d.upper_index];
                    ++d.expansion_count;
                    search_close(i);
                }
                continue;
            }

            int widest = -1;
            for (int i = 0; i < L; ++i)
                if (rep[i].path == EstimateKind::distant &&
                    (widest < 0 || clusters[i].width() > clusters[widest].width()))
                    widest = i;
            if (widest < 0)
                break;

            ++diag.promotions;
            rep[widest].path = EstimateKind::close;
            rep[widest].promoted = true;
            if (!found[widest].empty())
                kept[widest] = found[widest].front();
            search_close(widest);
        }

        std::vector<Estimate> all;
        for (int i = 0; i < L; ++i)
            for (const Candidate &c : found[i])
                all.push_back({c.range, c.angle, rep[i].path, i, c.value});
        std::stable_sort(all.begin(), all.end(), [](const Estimate &a, const Estimate &b) { return a.value > b.value; });
        if (static_cast<int>(all.size()) > num_sources)
            all.resize(num_sources);
        std::stable_sort(all.begin(), all.end(), [](const Estimate &a, const Estimate &b) {
            return a.angle < b.angle || (a.angle == b.angle && a.range < b.range);
        });
        diag.shortfall = num_sources - static_cast<int>(all.size());
        res.estimates = std::move(all);
        diag.timings.total = elapsed(t_start);
        return res;
    }

    LocalizeResult localize(const SnapshotMatrix &y, const ArrayGeometry &geom, int num_sources,
                            const LocalizerConfig &cfg)
    {
        const auto t0 = clock::now();
        require(y.num_elements() == geom.num_elements(), "snapshot rows must equal M");
        const CovarianceMatrix r = sample_covariance(y);
        const double tc = elapsed(t0);
        LocalizeResult res = localize(r, geom, num_sources, cfg);
        res.diagnostics.timings.covariance = tc;
        res.diagnostics.timings.total += tc;
        return res;
    }
}
