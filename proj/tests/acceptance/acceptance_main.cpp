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

// Acceptance suite: one line per criterion, non-zero exit on any failure.

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>

#include "../oracles.hpp"
#include "nfloc/experiments.hpp"

using namespace nfloc;

namespace
{
    int failures = 0;

    void report(const char *id, bool ok, const std::string &what)
    {
        fmt::print("[{}] {} {}\n", ok ? "PASS" : "FAIL", id, what);
        std::fflush(stdout);
        if (!ok)
            ++failures;
    }

    ScenarioConfig reference()
    {
        ScenarioConfig c = default_scenario();
        c.elements = 513;
        c.spacing_wavelengths = 0.5;
        c.carrier_hz = 30e9;
        c.snapshots = 200;
        c.snr_db = 10.0;
        c.seed = 1;
        c.localizer.fft_size = 1024;
        return c;
    }

    // Reference scenario, 20 seeded trials at 10 dB
    void criterion_1()
    {
        const ScenarioConfig c = reference();
        const GridSpec &g = c.localizer.grid;
        int good = 0, distant_ok = 0;
        for (std::uint64_t seed = 1; seed <= 20; ++seed)
        {
            const TrialRecord r = run_trial(c, seed, c.snr_db, {Algorithm::proposed}).front();
            bool ok = r.estimates.size() == 4;
            for (const SourceOutcome &o : r.outcomes)
                ok = ok && o.estimate && std::abs(o.estimate->angle - o.truth.angle) <= g.angle.step * (1 + 1e-9) &&
                     std::abs(o.estimate->range - o.truth.range) <= g.range.step * (1 + 1e-9);
            const SourceOutcome &far = r.outcomes.back();
            const bool dist = far.estimate && far.estimate->kind == "distant";
            good += ok;
            distant_ok += dist;
        }
        report("C1", good >= 19 && distant_ok == 20,
               fmt::format("reference scenario (M=513, 10 dB): {}/20 trials with all 4 sources within one cell "
                           "(need >= 19), 32 m source distant in {}/20",
                           good, distant_ok));
    }

    // Wall time and node budget on the reference scenario
    void criterion_2()
    {
        const ScenarioConfig c = reference();
        const std::vector<BenchRow> rows = bench(c, 3, {Algorithm::proposed, Algorithm::music2d});
        const BenchRow &p = rows[0];
        const BenchRow &m = rows[1];
        const double ratio = p.mean_seconds / m.mean_seconds;
        const double nodes = double(p.music_nodes) / double(p.grid_nodes);
        report("C2", ratio <= 1.0 / 3.0 && nodes <= 0.10,
               fmt::format("speed: proposed {:.3f} s vs full 2D-MUSIC {:.3f} s (ratio {:.3f}, need <= 0.333); "
                           "MUSIC nodes {} of {} ({:.2f}%, need <= 10%)",
                           p.mean_seconds, m.mean_seconds, ratio, p.music_nodes, p.grid_nodes, 100.0 * nodes));
    }

    struct Curve
    {
        std::vector<double> angle, range, se_angle, se_range;
    };

    // RMSE and its delta-method standard error
    std::pair<double, double> rmse_with_se(const std::vector<double> &sq)
    {
        double mean = 0.0;
        for (double v : sq)
            mean += v;
        mean /= sq.size();
        double var = 0.0;
        for (double v : sq)
            var += (v - mean) * (v - mean);
        var /= std::max<std::size_t>(1, sq.size() - 1);
        const double rmse = std::sqrt(mean);
        const double se_ms = std::sqrt(var / sq.size());
        return {rmse, rmse > 0.0 ? se_ms / (2.0 * rmse) : 0.0};
    }

    // Accuracy parity at M=129 over an SNR sweep
    void criterion_3()
    {
        ScenarioConfig c = reference();
        c.elements = 129;
        c.localizer.fft_size = 256;
        const std::vector<double> snrs{0, 5, 10, 15, 20};
        const SweepResult s = rmse_sweep(c, snrs, 50, {Algorithm::proposed, Algorithm::music2d});

        Curve curves[2];
        for (int a = 0; a < 2; ++a)
            for (double snr : snrs)
            {
                std::vector<double> sa, sr;
                for (const TrialRecord &r : s.records)
                {
                    if (r.snr_db != snr || int(r.algorithm) != a)
                        continue;
                    for (const SourceOutcome &o : r.outcomes)
                    {
                        const double ea = o.estimate ? rad2deg(o.estimate->angle - o.truth.angle) : s.penalty_angle_deg;
                        const double er = o.estimate ? o.estimate->range - o.truth.range : s.penalty_range_m;
                        sa.push_back(ea * ea);
                        sr.push_back(er * er);
                    }
                }
                const auto [ra, sea] = rmse_with_se(sa);
                const auto [rr, ser] = rmse_with_se(sr);
                curves[a].angle.push_back(ra);
                curves[a].range.push_back(rr);
                curves[a].se_angle.push_back(sea);
                curves[a].se_range.push_back(ser);
            }

        bool parity = true, monotone = true;
        std::string detail;
        for (std::size_t i = 0; i < snrs.size(); ++i)
        {
            const double pa = curves[0].angle[i], ma = curves[1].angle[i];
            const double pr = curves[0].range[i], mr = curves[1].range[i];
            parity = parity && std::abs(pa - ma) <= 0.1 * ma + 1e-12 && std::abs(pr - mr) <= 0.1 * mr + 1e-12;
            detail += fmt::format(" | {:g} dB: angle {:.4f}/{:.4f} deg, range {:.4f}/{:.4f} m", snrs[i], pa, ma, pr, mr);
            if (i > 0)
                for (const Curve &cv : curves)
                {
                    const double ta = 2.0 * std::hypot(cv.se_angle[i], cv.se_angle[i - 1]);
                    const double tr = 2.0 * std::hypot(cv.se_range[i], cv.se_range[i - 1]);
                    monotone = monotone && cv.angle[i] <= cv.angle[i - 1] + ta && cv.range[i] <= cv.range[i - 1] + tr;
                }
        }
        report("C3", parity && monotone,
               fmt::format("accuracy parity (M=129, 50 trials/point, proposed/full): within 10% {}, "
                           "non-increasing within 2 SE {}{}",
                           parity ? "yes" : "no", monotone ? "yes" : "no", detail));
    }

    // Exact agreement with full-grid peaks on analytic covariances
    void criterion_4()
    {
        int agree = 0, total = 0;
        for (int trial = 0; total < 100; ++trial)
        {
            std::mt19937_64 gen(1000 + trial);
            const int m = gen() % 2 ? 65 : 33;
            const double lambda = 0.01;
            const ArrayGeometry geom(m, lambda / 2, lambda);
            LocalizerConfig cfg;
            cfg.fft_size = 2 * (m - 1);
            cfg.grid = {{deg2rad(-40.0), deg2rad(40.0), deg2rad(0.5)}, {0.0, 20.0, 0.25}};
            const std::vector<double> angles = cfg.grid.angles();
            const std::vector<double> ranges = cfg.grid.ranges();

            const int k = 1 + static_cast<int>(gen() % 3);
            std::vector<int> ai;
            for (;;)
            {
                ai.clear();
                std::set<int> pick;
                while (static_cast<int>(pick.size()) < k)
                    pick.insert(static_cast<int>(gen() % angles.size()));
                ai.assign(pick.begin(), pick.end());
                bool sep = true;
                for (int i = 1; i < k; ++i)
                    sep = sep && angles[ai[i]] - angles[ai[i - 1]] >= deg2rad(25.0) - 1e-12;
                if (sep)
                    break;
            }
            std::vector<int> eligible;
            for (int j = 0; j < static_cast<int>(ranges.size()); ++j)
                if (ranges[j] >= 2.0 - 1e-9 && ranges[j] <= 15.0 + 1e-9)
                    eligible.push_back(j);
            std::vector<Source> src;
            for (int i = 0; i < k; ++i)
                src.push_back({ranges[eligible[gen() % eligible.size()]], angles[ai[i]], 1.0});

            const CovarianceMatrix r(model_covariance(geom, SourceTruth(src), 0.1));
            const Spectrum2D full = music_2d(decompose(r, k).noise_basis, geom, cfg.grid);
            const std::vector<GridPeak> peaks = spectrum_peaks(full);
            // skip placements whose top-K set is tie-ambiguous
            if (static_cast<int>(peaks.size()) > k && !(peaks[k - 1].value > peaks[k].value * (1 + 1e-9)))
                continue;
            std::set<std::pair<double, double>> want, got;
            for (int i = 0; i < std::min<int>(k, peaks.size()); ++i)
                want.insert({peaks[i].angle, peaks[i].range});
            const LocalizeResult res = localize(r, geom, k, cfg);
            for (const Estimate &e : res.estimates)
                got.insert({e.angle, e.range});
            agree += want == got;
            ++total;
        }
        report("C4", agree == total,
               fmt::format("oracle equivalence: estimate set equals full-grid top-K peaks in {}/{} analytic "
                           "placements (M in {{33, 65}}, K in 1..3)",
                           agree, total));
    }

    // Spectral-core invariants on random matrices
    void criterion_5()
    {
        std::mt19937_64 gen(77);
        double fft_err = 0.0, neg = 0.0, imag = 0.0, trace_err = 0.0, evd_err = 0.0, orth = 0.0, sub_err = 0.0;
        for (int trial = 0; trial < 200; ++trial)
        {
            const int m = 3 + 2 * static_cast<int>(gen() % 15); // up to 31
            const int s = m + static_cast<int>(gen() % 40);
            const ArrayGeometry geom(m, 0.005, 0.01);

            const CMatrix h = oracle::random_hermitian(m, gen);
            const AngleSpectrum ph = angle_spectrum(CovarianceMatrix(h), geom, s);
            const std::vector<double> ref = oracle::dense_angle_spectrum(h, s);
            for (int b = 0; b < s; ++b)
                fft_err = std::max(fft_err, std::abs(ph.values[b] - ref[b]));

            const CMatrix p = oracle::random_psd(m, gen, 1 + static_cast<int>(gen() % m));
            const AngleSpectrum pp = angle_spectrum(CovarianceMatrix(p), geom, s);
            const double mx = *std::max_element(pp.values.begin(), pp.values.end());
            double sum = 0.0;
            for (double v : pp.values)
            {
                neg = std::max(neg, -v / mx);
                sum += v;
            }
            trace_err = std::max(trace_err, std::abs(sum - p.trace().real()) / p.trace().real());
            // imaginary part of the dense diagonal
            Eigen::MatrixXcd w(s, s), rp = Eigen::MatrixXcd::Zero(s, s);
            for (int a = 0; a < s; ++a)
                for (int b = 0; b < s; ++b)
                    w(a, b) = std::exp(oracle::cplx(0.0, 2.0 * oracle::pi * a * b / s));
            rp.topLeftCorner(m, m) = p;
            const Eigen::MatrixXcd full = w * rp * w.adjoint() / double(s);
            for (int b = 0; b < s; ++b)
                imag = std::max(imag, std::abs(full(b, b).imag()) / mx);

            const int k = 1 + static_cast<int>(gen() % (m - 1));
            const SubspaceDecomposition d = decompose(CovarianceMatrix(p), k);
            const CMatrix rec = d.signal_basis * d.eigenvalues.head(k).asDiagonal() * d.signal_basis.adjoint() +
                                d.noise_basis * d.eigenvalues.tail(m - k).asDiagonal() * d.noise_basis.adjoint();
            evd_err = std::max(evd_err, (rec - p).norm() / p.norm());
            orth = std::max({orth, (d.signal_basis.adjoint() * d.signal_basis - CMatrix::Identity(k, k)).norm(),
                             (d.noise_basis.adjoint() * d.noise_basis - CMatrix::Identity(m - k, m - k)).norm(),
                             (d.signal_basis.adjoint() * d.noise_basis).norm()});

            // analytic covariance: true steering vectors lie in the signal subspace
            const int ms = 9 + 2 * static_cast<int>(gen() % 60);
            const ArrayGeometry ga(ms, 0.005, 0.01);
            std::uniform_real_distribution<double> ur(1.0, 30.0), ua(-1.2, 1.2), up(0.2, 3.0);
            std::vector<Source> src;
            const int ks = 1 + static_cast<int>(gen() % 4);
            for (int i = 0; i < ks; ++i)
                src.push_back({ur(gen), ua(gen), up(gen)});
            const SubspaceDecomposition da =
                decompose(CovarianceMatrix(model_covariance(ga, SourceTruth(src), 0.1)), ks);
            for (const Source &sr : src)
                sub_err = std::max(sub_err, (da.noise_basis.adjoint() * steering_vector(ga, sr.range, sr.angle)).norm() /
                                                std::sqrt(double(ms)));
        }
        const bool ok = fft_err <= 1e-10 && neg <= 1e-8 && imag <= 1e-8 && trace_err <= 1e-8 && evd_err <= 1e-8 &&
                        orth <= 1e-8 && sub_err <= 1e-6;
        report("C5", ok,
               fmt::format("spectral core over 200 random cases: FFT vs dense {:.2e} (<= 1e-10), negativity {:.2e}, "
                           "imaginary residue {:.2e}, trace {:.2e} (<= 1e-8), EVD reconstruction {:.2e}, "
                           "orthonormality {:.2e} (<= 1e-8), noise projection / sqrt(M) {:.2e} (<= 1e-6)",
                           fft_err, neg, imag, trace_err, evd_err, orth, sub_err));
    }

    // Steering-model properties over random geometries
    void criterion_6()
    {
        std::mt19937_64 gen(99);
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        double modulus = 0.0, mirror = 0.0, far = 0.0;
        bool reference_one = true;
        for (int trial = 0; trial < 2000; ++trial)
        {
            const double lambda = 0.001 + 0.1 * u01(gen);
            const double d = lambda * (0.25 + 0.25 * u01(gen));
            // far-field check needs an aperture within about 12 wavelengths
            const int m = 3 + 2 * static_cast<int>(gen() % 12);
            const ArrayGeometry g(m, d, lambda);
            const double th = deg2rad(-85.0 + 170.0 * u01(gen));
            const double r = g.aperture() * (0.3 + 50.0 * u01(gen));

            const CVector a = steering_vector(g, r, th);
            const CVector b = steering_vector(g, r, -th);
            const int n = g.half();
            reference_one = reference_one && a(n) == cplx(1.0, 0.0);
            for (int i = 0; i < m; ++i)
            {
                modulus = std::max(modulus, std::abs(std::abs(a(i)) - 1.0));
                mirror = std::max(mirror, std::abs(a(i) - b(m - 1 - i)));
            }

            const CVector f = steering_vector(g, 1e4 * g.aperture(), th);
            for (int delta = -n; delta <= n; ++delta)
            {
                const double planar = g.wavenumber() * delta * d * std::sin(th);
                far = std::max(far, std::abs(oracle::phase_diff(std::arg(f(delta + n)), planar)));
            }
        }
        report("C6", modulus <= 1e-12 && reference_one && mirror <= 1e-12 && far <= 1e-3,
               fmt::format("steering model over 2000 random geometries: unit modulus {:.2e} (<= 1e-12), reference "
                           "element exactly 1 {}, mirror symmetry {:.2e}, far-field phase {:.2e} rad (<= 1e-3)",
                           modulus, reference_one ? "yes" : "no", mirror, far));
    }
}

int main()
{
    const auto t0 = std::chrono::steady_clock::now();
    const std::pair<const char *, void (*)()> all[] = {{"C5", criterion_5}, {"C6", criterion_6}, {"C4", criterion_4},
                                                       {"C1", criterion_1}, {"C2", criterion_2}, {"C3", criterion_3}};
    for (const auto &[id, fn] : all)
    {
        try
        {
            fn();
        }
        catch (const std::exception &e)
        {
            report(id, false, fmt::format("raised: {}", e.what()));
        }
    }
    fmt::print("acceptance: {} failing criteria, {:.1f} s\n", failures,
               std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    return failures == 0 ? 0 : 1;
}
