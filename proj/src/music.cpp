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

#include "nfloc/music.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace nfloc
{
    namespace
    {
        double elapsed(std::chrono::steady_clock::time_point t0)
        {
            return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        }

        void check_angles(const std::vector<double> &angles)
        {
            for (double a : angles)
                require(std::abs(a) < pi / 2, "grid exceeds the visible region (-90, 90) deg");
        }
    }

    int Axis::count() const
    {
        return static_cast<int>(std::ceil((max - min) / step - 1e-6));
    }

    void GridSpec::validate() const
    {
        require(std::isfinite(angle.min) && std::isfinite(angle.max) && angle.min < angle.max,
                "angle axis needs min < max");
        require(std::isfinite(range.min) && std::isfinite(range.max) && range.min < range.max,
                "range axis needs min < max");
        require(angle.step > 0.0 && range.step > 0.0, "grid steps must be positive");
        require(angle.min > -pi / 2 && angle.max <= pi / 2, "grid exceeds the visible region (-90, 90) deg");
        require(angle.count() >= 1, "angle axis has no nodes");
        require(!ranges().empty(), "range axis has no nodes at or above 0.1 m");
    }

    std::vector<double> GridSpec::angles() const
    {
        std::vector<double> out;
        for (int i = 0; i < angle.count(); ++i)
            out.push_back(angle.node(i));
        return out;
    }

    std::vector<double> GridSpec::ranges() const
    {
        std::vector<double> out;
        for (int i = 0; i < range.count(); ++i)
            if (range.node(i) >= min_search_range - 1e-12)
                out.push_back(range.node(i));
        return out;
    }

    MusicEvaluator::MusicEvaluator(const ArrayGeometry &geom, const CMatrix &noise_basis)
        : geom_(geom), projector_(noise_basis.adjoint()), floor_(1e-12 * geom.num_elements())
    {
        require(noise_basis.rows() == geom.num_elements(), "noise basis rows must equal M");
        require(noise_basis.cols() >= 1, "noise basis is empty");
    }

    std::vector<double> MusicEvaluator::projection(const std::vector<GridNode> &nodes) const
    {
        const int m = geom_.num_elements();
        std::vector<double> out(nodes.size());
        CMatrix a(m, batch_width);
        CMatrix p(projector_.rows(), batch_width);
        for (std::size_t start = 0; start < nodes.size(); start += batch_width)
        {
            const std::size_t n = std::min<std::size_t>(batch_width, nodes.size() - start);
            for (int j = 0; j < batch_width; ++j)
            {
                // pad the tail with the first node of the batch
                const GridNode &g = nodes[start + (static_cast<std::size_t>(j) < n ? j : 0)];
                steering_vector_into(geom_, g.range, g.angle, a.col(j).data());
            }
            p.noalias() = projector_ * a;
            for (std::size_t j = 0; j < n; ++j)
                out[start + j] = p.col(static_cast<Eigen::Index>(j)).squaredNorm();
        }
        return out;
    }

    std::vector<double> MusicEvaluator::values(const std::vector<GridNode> &nodes) const
    {
        std::vector<double> q = projection(nodes);
        for (double &v : q)
            v = value_from_projection(v);
        return q;
    }

    Eigen::MatrixXd MusicEvaluator::grid_values(const std::vector<double> &angles,
                                                const std::vector<double> &ranges) const
    {
        check_angles(angles);
        std::vector<GridNode> nodes;
        nodes.reserve(angles.size() * ranges.size());
        for (double t : angles)
            for (double r : ranges)
                nodes.push_back({t, r});
        const std::vector<double> v = values(nodes);
        Eigen::MatrixXd out(angles.size(), ranges.size());
        for (std::size_t i = 0; i < angles.size(); ++i)
            for (std::size_t j = 0; j < ranges.size(); ++j)
                out(i, j) = v[i * ranges.size() + j];
        return out;
    }

    Spectrum2D music_2d(const CMatrix &noise_basis, const ArrayGeometry &geom, const GridSpec &grid)
    {
        grid.validate();
        Spectrum2D s;
        s.angles = grid.angles();
        s.ranges = grid.ranges();
        s.values = MusicEvaluator(geom, noise_basis).grid_values(s.angles, s.ranges);
        return s;
    }

    std::vector<double> music_1d_distance(const CMatrix &noise_basis, const ArrayGeometry &geom, double theta,
                                          const std::vector<double> &ranges)
    {
        check_angles({theta});
        std::vector<GridNode> nodes;
        for (double r : ranges)
            nodes.push_back({theta, r});
        return MusicEvaluator(geom, noise_basis).values(nodes);
    }

    std::vector<double> beamform_distance_scan(const CovarianceMatrix &r, const ArrayGeometry &geom, double alpha,
                                               const std::vector<double> &ranges)
    {
        const int m = geom.num_elements();
        require(r.size() == m, "covariance size does not match geometry");
        const int n = static_cast<int>(ranges.size());
        CMatrix a(m, n);
        for (int j = 0; j < n; ++j)
            steering_vector_into(geom, ranges[j], alpha, a.col(j).data());
        CMatrix ra(m, n);
        ra.noalias() = r.data() * a;

        std::vector<double> out(n);
        double peak = 0.0;
        double residue = 0.0;
        for (int j = 0; j < n; ++j)
        {
            const cplx v = a.col(j).dot(ra.col(j)); // conjugates the first argument
            out[j] = v.real();
            peak = std::max(peak, std::abs(v.real()));
            residue = std::max(residue, std::abs(v.imag()));
        }
        if (residue > 1e-8 * peak)
            fail(ErrorCategory::invalid_argument, "beamform scan has a large imaginary residue");
        for (double &v : out)
            v = std::max(v, 0.0);
        return out;
    }

    double peak_prominence(const std::vector<double> &v, int index, int lo, int hi)
    {
        const double h = v[index];
        int end = index;
        while (end < hi && v[end + 1] == h)
            ++end;

        double left = h;
        for (int i = index - 1; i >= lo && v[i] <= h; --i)
            left = std::min(left, v[i]);
        double right = h;
        for (int i = end + 1; i <= hi && v[i] <= h; ++i)
            right = std::min(right, v[i]);
        return h - std::max(left, right);
    }

    std::vector<Peak> find_peaks(const std::vector<double> &v, double min_prominence)
    {
        require(!v.empty(), "find_peaks needs a non-empty vector");
        const int n = static_cast<int>(v.size());
        const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
        const double threshold = min_prominence * (*mx - *mn);

        std::vector<Peak> out;
        int i = 1;
        while (i < n - 1)
        {
            if (v[i - 1] < v[i])
            {
                int end = i;
                while (end < n - 1 && v[end + 1] == v[i])
                    ++end;
                if (end < n - 1 && v[end + 1] < v[i])
                {
                    const double prom = peak_prominence(v, i, 0, n - 1);
                    if (prom > 0.0 && prom >= threshold)
                        out.push_back({i, v[i], prom});
                }
                i = end + 1;
            }
            else
            {
                ++i;
            }
        }
        std::stable_sort(out.begin(), out.end(),
                         [](const Peak &a, const Peak &b) { return a.amplitude > b.amplitude; });
        return out;
    }

    bool is_local_max(const Eigen::MatrixXd &v, int i, int j)
    {
        const double c = v(i, j);
        for (int a = std::max<int>(i - 1, 0); a <= std::min<int>(i + 1, v.rows() - 1); ++a)
            for (int b = std::max<int>(j - 1, 0); b <= std::min<int>(j + 1, v.cols() - 1); ++b)
            {
                if (a == i && b == j)
                    continue;
                const bool earlier = a < i || (a == i && b < j);
                if (earlier ? !(c > v(a, b)) : !(c >= v(a, b)))
                    return false;
            }
        return true;
    }

    std::vector<GridPeak> spectrum_peaks(const Spectrum2D &s)
    {
        std::vector<GridPeak> out;
        for (int i = 0; i < s.values.rows(); ++i)
            for (int j = 0; j < s.values.cols(); ++j)
                if (is_local_max(s.values, i, j))
                    out.push_back({i, j, s.angles[i], s.ranges[j], s.values(i, j)});
        std::stable_sort(out.begin(), out.end(),
                         [](const GridPeak &a, const GridPeak &b) { return a.value > b.value; });
        return out;
    }

    MusicBaselineResult music_localize(const CovarianceMatrix &r, const ArrayGeometry &geom, int num_sources,
                                       const GridSpec &grid)
    {
        MusicBaselineResult res;
        auto t0 = std::chrono::steady_clock::now();
        const SubspaceDecomposition dec = decompose(r, num_sources);
        res.seconds_decomposition = elapsed(t0);

        t0 = std::chrono::steady_clock::now();
        const Spectrum2D s = music_2d(dec.noise_basis, geom, grid);
        std::vector<GridPeak> peaks = spectrum_peaks(s);
        if (static_cast<int>(peaks.size()) > num_sources)
            peaks.resize(num_sources);
        std::stable_sort(peaks.begin(), peaks.end(),
                         [](const GridPeak &a, const GridPeak &b) { return a.angle < b.angle; });
        res.seconds_search = elapsed(t0);
        res.estimates = std::move(peaks);
        res.nodes = static_cast<long long>(s.values.size());
        return res;
    }

    MusicBaselineResult music_localize(const SnapshotMatrix &y, const ArrayGeometry &geom, int num_sources,
                                       const GridSpec &grid)
    {
        const auto t0 = std::chrono::steady_clock::now();
        const CovarianceMatrix r = sample_covariance(y);
        const double tc = elapsed(t0);
        MusicBaselineResult res = music_localize(r, geom, num_sources, grid);
        res.seconds_covariance = tc;
        return res;
    }
}
