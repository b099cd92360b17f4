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

#ifndef NFLOC_ARRAY_MODEL_HPP
#define NFLOC_ARRAY_MODEL_HPP

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <vector>

#include "nfloc/errors.hpp"

namespace nfloc
{
    using cplx = std::complex<double>;
    using CVector = Eigen::VectorXcd;
    using CMatrix = Eigen::MatrixXcd;

    constexpr double speed_of_light = 299792458.0; // m/s
    constexpr double pi = 3.14159265358979323846;

    inline double deg2rad(double deg) { return deg * pi / 180.0; }
    inline double rad2deg(double rad) { return rad * 180.0 / pi; }

    // Uniform linear array with M = 2N+1 elements centred on the reference element
    class ArrayGeometry
    {
    public:
        ArrayGeometry(int num_elements, double spacing, double wavelength);

        static ArrayGeometry from_carrier(int num_elements, double spacing, double carrier_hz);

        int num_elements() const { return m_; }
        int half() const { return (m_ - 1) / 2; }
        double spacing() const { return d_; }
        double wavelength() const { return lambda_; }
        double wavenumber() const { return 2.0 * pi / lambda_; }
        double aperture() const { return (m_ - 1) * d_; }

    private:
        int m_;
        double d_;
        double lambda_;
    };

    struct Source
    {
        double range;      // meters
        double angle;      // radians
        double power = 1.0; // linear
    };

    // Ground-truth source list; may be empty for pure-noise synthesis
    class SourceTruth
    {
    public:
        SourceTruth() = default;
        explicit SourceTruth(std::vector<Source> sources);

        const std::vector<Source> &sources() const { return sources_; }
        int size() const { return static_cast<int>(sources_.size()); }

    private:
        std::vector<Source> sources_;
    };

    class SnapshotMatrix
    {
    public:
        explicit SnapshotMatrix(CMatrix data);

        const CMatrix &data() const { return data_; }
        int num_elements() const { return static_cast<int>(data_.rows()); }
        int num_snapshots() const { return static_cast<int>(data_.cols()); }

    private:
        CMatrix data_;
    };

    // Signed-index element coordinates [-N*d, ..., N*d]
    std::vector<double> element_positions(const ArrayGeometry &geom);

    double source_element_distance(const ArrayGeometry &geom, double r, double theta, int delta);

    CVector steering_vector(const ArrayGeometry &geom, double r, double theta);

    // Writes the steering vector into out (length M) without allocating
    void steering_vector_into(const ArrayGeometry &geom, double r, double theta, cplx *out);

    CMatrix steering_matrix(const ArrayGeometry &geom, const SourceTruth &truth);

    // Name of the random generator used by synthesize_snapshots
    const char *rng_algorithm_name();

    SnapshotMatrix synthesize_snapshots(const ArrayGeometry &geom, const SourceTruth &truth, int num_snapshots,
                                        double noise_var, std::uint64_t seed);

    // Infinite-snapshot covariance A*diag(p)*A^H + noise_var*I
    CMatrix model_covariance(const ArrayGeometry &geom, const SourceTruth &truth, double noise_var);
}

#endif
