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

#ifndef NFLOC_CLUSTER_LOCALIZER_HPP
#define NFLOC_CLUSTER_LOCALIZER_HPP

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nfloc/music.hpp"

namespace nfloc
{
    struct LocalizerConfig
    {
        int fft_size = 1024;
        double spread_margin_angle = 0.5;    // delta_theta
        double spread_margin_distance = 0.1; // delta_d
        double peak_prominence = 0.05;
        double prominence_retry_factor = 0.25;
        GridSpec grid{};
        double refine_angle_step = 0.0; // 0 selects the grid step
        double refine_range_step = 0.0;
        int max_expansions = 3;
        double expansion_factor = 2.0;
        double credibility = 0.5; // max ||E_n^H a||^2 / M of an accepted estimate
        int max_refine_iterations = 8;

        void validate(int num_elements) const;
    };

    struct AngleCluster
    {
        double lower;              // radians
        double upper;              // radians
        int peak_count;            // K_bar
        std::vector<int> peak_bins; // FFT bins of member peaks, seed first
        int seed_bin;
        double centroid; // power-weighted angle of the seed's core run

        double width() const { return upper - lower; }
    };

    struct DistanceCluster
    {
        double lower; // meters
        double upper;
        int lower_index; // into GridSpec::ranges()
        int upper_index;
        int expansion_count = 0;
        bool empty_intersection = false;
    };

    enum class EstimateKind
    {
        distant,
        close
    };

    const char *kind_name(EstimateKind k);

    struct Estimate
    {
        double range; // meters
        double angle; // radians
        EstimateKind kind;
        int cluster_id;
        double value; // MUSIC spectrum value at the estimate
    };

    struct StageTimings
    {
        double covariance = 0.0;
        double decomposition = 0.0;
        double angle_spectrum = 0.0;
        double clustering = 0.0;
        double distant_path = 0.0;
        double distance_clusters = 0.0;
        double confined_search = 0.0;
        double total = 0.0;
    };

    struct ClusterReport
    {
        AngleCluster angle;
        EstimateKind path;
        bool promoted = false;
        std::optional<DistanceCluster> distance;
        int candidates = 0;
    };

    struct LocalizerDiagnostics
    {
        StageTimings timings;
        std::vector<ClusterReport> clusters; // L = clusters.size()
        double prominence_used = 0.0;
        long long grid_nodes = 0;       // n_theta * n_r
        long long distant_nodes = 0;    // 1D scans and local-max checks
        long long confined_nodes = 0;   // sum of confined windows, padding included
        long long beamform_nodes = 0;
        int expansion_rounds = 0;
        int promotions = 0;
        int shortfall = 0; // K minus estimates returned
        bool degenerate_gap = false;

        long long music_nodes() const { return distant_nodes + confined_nodes; }
    };

    struct LocalizeResult
    {
        std::vector<Estimate> estimates; // sorted by angle
        LocalizerDiagnostics diagnostics;
    };

    std::vector<AngleCluster> angle_clusters(const AngleSpectrum &p, int num_sources, const LocalizerConfig &cfg,
                                             double *prominence_used = nullptr);

    // Indices into GridSpec::angles() covered by the cluster (never empty)
    std::vector<int> cluster_span(const AngleCluster &c, const std::vector<double> &angles);

    DistanceCluster distance_cluster(const CovarianceMatrix &r, const ArrayGeometry &geom, const AngleCluster &c,
                                     const LocalizerConfig &cfg);

    // Symmetric growth of an index interval [lo, hi] inside [0, n-1]
    std::pair<int, int> expand_interval(int lo, int hi, int n, double factor);

    LocalizeResult localize(const CovarianceMatrix &r, const ArrayGeometry &geom, int num_sources,
                            const LocalizerConfig &cfg);
    LocalizeResult localize(const SnapshotMatrix &y, const ArrayGeometry &geom, int num_sources,
                            const LocalizerConfig &cfg);
}

#endif
