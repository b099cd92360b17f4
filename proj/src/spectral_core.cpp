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

#include "nfloc/spectral_core.hpp"

#include <fftw3.h>

#include <cmath>
#include <memory>
#include <mutex>

namespace nfloc
{
    namespace
    {
        // FFTW planning is not thread-safe; execution is
        std::mutex &planner_mutex()
        {
            static std::mutex m;
            return m;
        }

        struct PlanDeleter
        {
            void operator()(fftw_plan_s *p) const
            {
                std::lock_guard<std::mutex> lock(planner_mutex());
                fftw_destroy_plan(p);
            }
        };
        using Plan = std::unique_ptr<fftw_plan_s, PlanDeleter>;

        struct BufferDeleter
        {
            void operator()(fftw_complex *p) const { fftw_free(p); }
        };
        using Buffer = std::unique_ptr<fftw_complex, BufferDeleter>;

        Plan plan_many(int n, int howmany, fftw_complex *data, int stride, int dist, int sign)
        {
            std::lock_guard<std::mutex> lock(planner_mutex());
            fftw_plan p = fftw_plan_many_dft(1, &n, howmany, data, nullptr, stride, dist,
                                             data, nullptr, stride, dist, sign, FFTW_ESTIMATE);
            if (p == nullptr)
                fail(ErrorCategory::invalid_argument, "FFT planning failed");
            return Plan(p);
        }
    }

    CovarianceMatrix::CovarianceMatrix(const CMatrix &data)
    {
        require(data.rows() == data.cols() && data.rows() >= 1, "covariance must be square");
        require(data.allFinite(), "covariance has non-finite entries");
        const double norm = data.norm();
        const double skew = (data - data.adjoint()).norm();
        require(skew <= 1e-10 * norm, "covariance is not Hermitian");
        data_ = (data + data.adjoint()) * 0.5;
    }

    CovarianceMatrix sample_covariance(const SnapshotMatrix &y)
    {
        const CMatrix &d = y.data();
        CMatrix r(d.rows(), d.rows());
        r.noalias() = d * d.adjoint();
        r /= static_cast<double>(d.cols());
        return CovarianceMatrix((r + r.adjoint()) * 0.5);
    }

    SubspaceDecomposition decompose(const CovarianceMatrix &r, int num_sources)
    {
        const int m = r.size();
        require(num_sources >= 1 && num_sources < m, "number of sources must satisfy 1 <= K < M");

        Eigen::SelfAdjointEigenSolver<CMatrix> solver(r.data());
        if (solver.info() != Eigen::Success)
            fail(ErrorCategory::invalid_argument, "eigendecomposition did not converge");

        // Eigen sorts ascending
        SubspaceDecomposition out;
        out.num_sources = num_sources;
        out.eigenvalues = solver.eigenvalues().reverse();
        const CMatrix &v = solver.eigenvectors();
        out.signal_basis.resize(m, num_sources);
        for (int i = 0; i < num_sources; ++i)
            out.signal_basis.col(i) = v.col(m - 1 - i);
        out.noise_basis.resize(m, m - num_sources);
        for (int i = 0; i < m - num_sources; ++i)
            out.noise_basis.col(i) = v.col(m - num_sources - 1 - i);

        const double lk = out.eigenvalues(num_sources - 1);
        const double lk1 = out.eigenvalues(num_sources);
        out.degenerate_gap = lk1 <= 0.0 ? lk <= 0.0 : lk / lk1 < 1.0 + 1e-6;
        return out;
    }

    double bin_frequency(int fft_size, int bin)
    {
        const int centered = bin < (fft_size + 1) / 2 ? bin : bin - fft_size;
        return -static_cast<double>(centered) / fft_size;
    }

    std::optional<double> bin_to_angle(const ArrayGeometry &geom, int fft_size, int bin)
    {
        require(fft_size >= 1 && bin >= 0 && bin < fft_size, "bin index out of range");
        const double s = geom.wavelength() * bin_frequency(fft_size, bin) / geom.spacing();
        if (std::abs(s) > 1.0)
            return std::nullopt;
        return std::asin(s);
    }

    AngleSpectrum angle_spectrum(const CovarianceMatrix &r, const ArrayGeometry &geom, int fft_size)
    {
        const int m = r.size();
        require(m == geom.num_elements(), "covariance size does not match geometry");
        require(fft_size >= m, "FFT size must satisfy S >= M");
        const int s = fft_size;

        // Column-major S x S buffer holding the zero-padded matrix
        const std::size_t total = static_cast<std::size_t>(s) * s;
        Buffer buf(fftw_alloc_complex(total));
        if (!buf)
            fail(ErrorCategory::invalid_argument, "FFT buffer allocation failed");
        fftw_complex *x = buf.get();

        Plan cols = plan_many(s, m, x, 1, s, FFTW_BACKWARD);
        Plan rows = plan_many(s, s, x, s, 1, FFTW_FORWARD);

        for (std::size_t i = 0; i < total; ++i)
            x[i][0] = x[i][1] = 0.0;
        const CMatrix &d = r.data();
        for (int l = 0; l < m; ++l)
            for (int k = 0; k < m; ++k)
            {
                x[k + static_cast<std::size_t>(l) * s][0] = d(k, l).real();
                x[k + static_cast<std::size_t>(l) * s][1] = d(k, l).imag();
            }

        // W * R: unnormalized inverse transform down each column
        fftw_execute(cols.get());
        // (W R) * W^H / S: forward transform along each row
        fftw_execute(rows.get());

        AngleSpectrum out;
        out.values.resize(s);
        out.bin_angles.resize(s);
        double peak = 0.0;
        double residue = 0.0;
        for (int b = 0; b < s; ++b)
        {
            const fftw_complex &v = x[b + static_cast<std::size_t>(b) * s];
            out.values[b] = v[0] / s;
            residue = std::max(residue, std::abs(v[1] / s));
            peak = std::max(peak, std::abs(out.values[b]));
            out.bin_angles[b] = bin_to_angle(geom, s, b);
        }
        if (residue > 1e-8 * peak)
            fail(ErrorCategory::invalid_argument, "angle spectrum has a large imaginary residue");
        return out;
    }
}
