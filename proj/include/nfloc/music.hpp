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

#ifndef NFLOC_MUSIC_HPP
#define NFLOC_MUSIC_HPP

#include <vector>

#include "nfloc/spectral_core.hpp"

namespace nfloc
{
    constexpr double min_search_range = 0.1; // meters

    struct Axis
    {
        double min;
        double max;
        double step;

        // Nodes min + i*step strictly below max
        int count() const;
        double node(int i) const { return min + i * step; }
    };

    struct GridSpec
    {
        Axis angle; // radians
        Axis range; // meters

        void validate() const;
        std::vector<double> angles() const;
        // Range nodes, skipping those below min_search_range
        std::vector<double> ranges() const;
    };

    struct Spectrum2D
    {
        Eigen::MatrixXd values; // rows: angles, cols: ranges
        std::vector<double> angles;
        std::vector<double> ranges;
    };

    struct GridNode
    {
        double angle;
        double range;
    };

    // Evaluates ||E_n^H a||^2 per node. Nodes are processed in fixed-width
    // batches so each value is independent of its neighbours in the batch.
    class MusicEvaluator
    {
    public:
        static constexpr int batch_width = 32;

        MusicEvaluator(const ArrayGeometry &geom, const CMatrix &noise_basis);

        const ArrayGeometry &geometry() const { return geom_; }
        double floor() const { return floor_; }

        // Squared noise-subspace projection of each node's steering vector
        std::vector<double> projection(const std::vector<GridNode> &nodes) const;

        double value_from_projection(double q) const { return 1.0 / std::max(q, floor_); }

        std::vector<double> values(const std::vector<GridNode> &nodes) const;

        Eigen::MatrixXd grid_values(const std::vector<double> &angles, const std::vector<double> &ranges) const;

    private:
        ArrayGeometry geom_;
        CMatrix projector_; // E_n^H
        double floor_;
    };

    Spectrum2D music_2d(const CMatrix &noise_basis, const ArrayGeometry &geom, const GridSpec &grid);

    std::vector<double> music_1d_distance(const CMatrix &noise_basis, const ArrayGeometry &geom, double theta,
                                          const std::vector<double> &ranges);

    std::vector<double> beamform_distance_scan(const CovarianceMatrix &r, const ArrayGeometry &geom, double alpha,
                                               const std::vector<double> &ranges);

    struct Peak
    {
        int index;
        double amplitude;
        double prominence;
    };

    // Strict local maxima (plateaus count once, at their start) whose prominence
    // reaches min_prominence * (max - min); sorted by amplitude, descending
    std::vector<Peak> find_peaks(const std::vector<double> &values, double min_prominence);

    // Prominence of the local maximum at index using samples [lo, hi] only
    double peak_prominence(const std::vector<double> &values, int index, int lo, int hi);

    // 8-neighbour local maximum with raster-order tie break: strictly above
    // neighbours that come earlier, not below those that come later
    bool is_local_max(const Eigen::MatrixXd &v, int i, int j);

    struct GridPeak
    {
        int angle_index;
        int range_index;
        double angle;
        double range;
        double value;
    };

    // All local maxima, sorted by value descending (raster order on ties)
    std::vector<GridPeak> spectrum_peaks(const Spectrum2D &s);

    struct MusicBaselineResult
    {
        std::vector<GridPeak> estimates; // sorted by angle
        long long nodes = 0;
        double seconds_covariance = 0.0;
        double seconds_decomposition = 0.0;
        double seconds_search = 0.0;
    };

    // Full-grid 2D-MUSIC: top-K local maxima of the spectrum
    MusicBaselineResult music_localize(const CovarianceMatrix &r, const ArrayGeometry &geom, int num_sources,
                                       const GridSpec &grid);
    MusicBaselineResult music_localize(const SnapshotMatrix &y, const ArrayGeometry &geom, int num_sources,
                                       const GridSpec &grid);
}

#endif
