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

#include "nfloc/array_model.hpp"

#include <cmath>
#include <random>
#include <string>

namespace nfloc
{
    const char *category_name(ErrorCategory c)
    {
        switch (c)
        {
        case ErrorCategory::invalid_argument:
            return "invalid_argument";
        case ErrorCategory::degenerate_geometry:
            return "degenerate_geometry";
        case ErrorCategory::no_sources_visible:
            return "no_sources_visible";
        case ErrorCategory::parse:
            return "parse";
        case ErrorCategory::io:
            return "io";
        }
        return "unknown";
    }

    ArrayGeometry::ArrayGeometry(int num_elements, double spacing, double wavelength)
        : m_(num_elements), d_(spacing), lambda_(wavelength)
    {
        require(num_elements >= 3, "M must be at least 3");
        require(num_elements % 2 == 1, "M must be odd");
        require(std::isfinite(spacing) && spacing > 0.0, "spacing must be positive");
        require(std::isfinite(wavelength) && wavelength > 0.0, "wavelength must be positive");
    }

    ArrayGeometry ArrayGeometry::from_carrier(int num_elements, double spacing, double carrier_hz)
    {
        require(std::isfinite(carrier_hz) && carrier_hz > 0.0, "carrier frequency must be positive");
        return ArrayGeometry(num_elements, spacing, speed_of_light / carrier_hz);
    }

    SourceTruth::SourceTruth(std::vector<Source> sources) : sources_(std::move(sources))
    {
        for (const auto &s : sources_)
        {
            require(std::isfinite(s.range) && s.range > 0.0, "source range must be positive");
            require(std::isfinite(s.angle) && std::abs(s.angle) < pi / 2, "source angle must lie in (-90, 90) deg");
            require(std::isfinite(s.power) && s.power > 0.0, "source power must be positive");
        }
    }

    SnapshotMatrix::SnapshotMatrix(CMatrix data) : data_(std::move(data))
    {
        require(data_.cols() >= 1, "snapshot matrix needs at least one snapshot");
        require(data_.allFinite(), "snapshot matrix has non-finite entries");
    }

    std::vector<double> element_positions(const ArrayGeometry &geom)
    {
        const int n = geom.half();
        std::vector<double> pos;
        pos.reserve(geom.num_elements());
        for (int delta = -n; delta <= n; ++delta)
            pos.push_back(delta * geom.spacing());
        return pos;
    }

    double source_element_distance(const ArrayGeometry &geom, double r, double theta, int delta)
    {
        if (!(r > 0.0))
            fail(ErrorCategory::degenerate_geometry, "source range must be positive");
        require(std::abs(delta) <= geom.half(), "element index out of range");
        const double x = delta * geom.spacing();
        const double along = x - r * std::sin(theta);
        const double across = r * std::cos(theta);
        const double dist = std::hypot(along, across);
        if (dist <= 1e-9 * (r + std::abs(x)))
            fail(ErrorCategory::degenerate_geometry, "source coincides with an array element");
        return dist;
    }

    void steering_vector_into(const ArrayGeometry &geom, double r, double theta, cplx *out)
    {
        if (!(r > 0.0))
            fail(ErrorCategory::degenerate_geometry, "source range must be positive");
        const int n = geom.half();
        const double k = geom.wavenumber();
        const double d = geom.spacing();
        const double s = std::sin(theta);
        const double c = std::cos(theta);
        for (int delta = -n; delta <= n; ++delta)
        {
            const double x = delta * d;
            const double along = x - r * s;
            const double dist = std::hypot(along, r * c);
            if (dist <= 1e-9 * (r + std::abs(x)))
                fail(ErrorCategory::degenerate_geometry, "source coincides with an array element");
            // r_n - r without cancellation
            const double excess = (x * x - 2.0 * x * r * s) / (dist + r);
            const double phase = -k * excess;
            out[delta + n] = cplx(std::cos(phase), std::sin(phase));
        }
    }

    CVector steering_vector(const ArrayGeometry &geom, double r, double theta)
    {
        CVector a(geom.num_elements());
        steering_vector_into(geom, r, theta, a.data());
        return a;
    }

    CMatrix steering_matrix(const ArrayGeometry &geom, const SourceTruth &truth)
    {
        CMatrix a(geom.num_elements(), truth.size());
        for (int k = 0; k < truth.size(); ++k)
            steering_vector_into(geom, truth.sources()[k].range, truth.sources()[k].angle, a.col(k).data());
        return a;
    }

    const char *rng_algorithm_name()
    {
        return "mt19937_64/box-muller-cplx-v1";
    }

    namespace
    {
        // Unit-variance circularly-symmetric complex Gaussian from two raw draws
        cplx complex_gaussian(std::mt19937_64 &gen)
        {
            const double u1 = (static_cast<double>(gen() >> 11) + 1.0) * 0x1.0p-53;
            const double u2 = static_cast<double>(gen() >> 11) * 0x1.0p-53;
            const double rho = std::sqrt(-std::log(u1));
            const double phi = 2.0 * pi * u2;
            return {rho * std::cos(phi), rho * std::sin(phi)};
        }
    }

    SnapshotMatrix synthesize_snapshots(const ArrayGeometry &geom, const SourceTruth &truth, int num_snapshots,
                                        double noise_var, std::uint64_t seed)
    {
        require(num_snapshots >= 1, "number of snapshots must be at least 1");
        require(std::isfinite(noise_var) && noise_var >= 0.0, "noise variance must be non-negative");

        std::mt19937_64 gen(seed);
        const int m = geom.num_elements();
        const int k = truth.size();

        CMatrix x(k, num_snapshots);
        for (int i = 0; i < k; ++i)
        {
            const double amp = std::sqrt(truth.sources()[i].power);
            for (int j = 0; j < num_snapshots; ++j)
                x(i, j) = amp * complex_gaussian(gen);
        }

        const double sigma = std::sqrt(noise_var);
        CMatrix y(m, num_snapshots);
        for (int j = 0; j < num_snapshots; ++j)
            for (int i = 0; i < m; ++i)
                y(i, j) = sigma * complex_gaussian(gen);

        if (k > 0)
            y.noalias() += steering_matrix(geom, truth) * x;
        return SnapshotMatrix(std::move(y));
    }

    CMatrix model_covariance(const ArrayGeometry &geom, const SourceTruth &truth, double noise_var)
    {
        require(std::isfinite(noise_var) && noise_var >= 0.0, "noise variance must be non-negative");
        const int m = geom.num_elements();
        CMatrix r = noise_var * CMatrix::Identity(m, m);
        if (truth.size() > 0)
        {
            CMatrix a = steering_matrix(geom, truth);
            Eigen::VectorXd p(truth.size());
            for (int i = 0; i < truth.size(); ++i)
                p(i) = truth.sources()[i].power;
            r.noalias() += a * p.asDiagonal() * a.adjoint();
        }
        return (r + r.adjoint()) * 0.5;
    }
}
