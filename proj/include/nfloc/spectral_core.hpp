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

#ifndef NFLOC_SPECTRAL_CORE_HPP
#define NFLOC_SPECTRAL_CORE_HPP

#include <optional>
#include <vector>

#include "nfloc/array_model.hpp"

namespace nfloc
{
    // Hermitian positive semi-definite M x M matrix
    class CovarianceMatrix
    {
    public:
        // Checks Hermitian symmetry (1e-10 relative) and symmetrizes
        explicit CovarianceMatrix(const CMatrix &data);

        const CMatrix &data() const { return data_; }
        int size() const { return static_cast<int>(data_.rows()); }

    private:
        CMatrix data_;
    };

    struct SubspaceDecomposition
    {
        Eigen::VectorXd eigenvalues; // descending
        CMatrix signal_basis;        // M x K
        CMatrix noise_basis;         // M x (M-K)
        int num_sources = 0;
        bool degenerate_gap = false; // lambda_K / lambda_{K+1} < 1 + 1e-6
    };

    struct AngleSpectrum
    {
        std::vector<double> values;                    // natural FFT bin order
        std::vector<std::optional<double>> bin_angles; // radians, empty when unmapped
        int num_bins() const { return static_cast<int>(values.size()); }
    };

    CovarianceMatrix sample_covariance(const SnapshotMatrix &y);

    SubspaceDecomposition decompose(const CovarianceMatrix &r, int num_sources);

    AngleSpectrum angle_spectrum(const CovarianceMatrix &r, const ArrayGeometry &geom, int fft_size);

    // u = -centered(bin)/S, so that sin(theta) = lambda*u/d
    double bin_frequency(int fft_size, int bin);

    std::optional<double> bin_to_angle(const ArrayGeometry &geom, int fft_size, int bin);
}

#endif
