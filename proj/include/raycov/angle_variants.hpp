// SPDX-License-Identifier: MIT
//
// raycov: spatial covariance estimation for few-ray interference channels
// Copyright (c) 2026 the raycov authors

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "raycov/covariance.hpp"
#include "raycov/gridless.hpp"
#include "raycov/rng.hpp"
#include "raycov/scenario.hpp"
#include "raycov/types.hpp"

namespace raycov {

// Subspace gridless estimation: feed the dominant part of the denoised
// covariance estimate itself through the atomic-norm machinery. The square
// root of the rank-s truncation serves as an s-snapshot pseudo batch.
inline PhaseShiftEstimate sge_estimate(const CovEstimate &r_hat, double noise_power, int s,
                                       const SdpSettings &settings) {
    const int n = r_hat.n();
    if (s < 1)
        throw std::invalid_argument("sge_estimate: need at least one atom");
    if (s >= n)
        throw std::invalid_argument("sge_estimate: atom count must be below the antenna count");
    Eigen::MatrixXcd m = hermitian_part(r_hat.matrix) -
                         noise_power * Eigen::MatrixXcd::Identity(n, n);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("sge_estimate: eigendecomposition failed");
    if (es.eigenvalues()(n - 1) <= 0.0)
        throw std::runtime_error("sge_estimate: no interference subspace above the noise floor");
    // Best rank-s PSD approximation: keep the s largest eigenvalues, floor
    // them at zero, take the matrix square root column by column.
    std::vector<Eigen::VectorXcd> batch;
    batch.reserve(static_cast<std::size_t>(s));
    for (int k = 0; k < s; ++k) {
        double lam = std::max(es.eigenvalues()(n - 1 - k), 0.0);
        batch.push_back(std::sqrt(lam) * es.eigenvectors().col(n - 1 - k));
    }
    PhaseShiftEstimate est = gae_estimate(batch, settings, s);
    est.method = AngleMethod::Sge;
    return est;
}

// Spectral grid search over the array manifold: project grid steering
// vectors onto the noise subspace of the denoised estimate and pick the s
// largest peaks of the inverted spectrum.
inline PhaseShiftEstimate music_estimate(const CovEstimate &r_hat, double noise_power, int s,
                                         int n_grid) {
    const int n = r_hat.n();
    if (s < 1)
        throw std::invalid_argument("music_estimate: need at least one source");
    if (s >= n)
        throw std::invalid_argument("music_estimate: source count must be below the antenna count");
    if (n_grid < 2 * s)
        throw std::invalid_argument("music_estimate: grid must have at least 2 s points");
    Eigen::MatrixXcd m = hermitian_part(r_hat.matrix) -
                         noise_power * Eigen::MatrixXcd::Identity(n, n);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("music_estimate: eigendecomposition failed");
    Eigen::MatrixXcd noise_basis = es.eigenvectors().leftCols(n - s);

    std::vector<double> grid(static_cast<std::size_t>(n_grid));
    std::vector<double> power(static_cast<std::size_t>(n_grid));
    for (int k = 0; k < n_grid; ++k) {
        grid[static_cast<std::size_t>(k)] =
            -0.5 + static_cast<double>(k) / static_cast<double>(n_grid);
        Eigen::VectorXcd a = steering_vector(n, grid[static_cast<std::size_t>(k)]);
        double denom = (noise_basis.adjoint() * a).squaredNorm();
        power[static_cast<std::size_t>(k)] = 1.0 / std::max(denom, 1e-300);
    }

    // Circular local maxima; one representative per plateau.
    std::vector<int> peaks;
    for (int k = 0; k < n_grid; ++k) {
        double prev = power[static_cast<std::size_t>((k + n_grid - 1) % n_grid)];
        double next = power[static_cast<std::size_t>((k + 1) % n_grid)];
        if (power[static_cast<std::size_t>(k)] > prev &&
            power[static_cast<std::size_t>(k)] >= next)
            peaks.push_back(k);
    }
    auto by_height = [&](int a, int b) {
        if (power[static_cast<std::size_t>(a)] != power[static_cast<std::size_t>(b)])
            return power[static_cast<std::size_t>(a)] > power[static_cast<std::size_t>(b)];
        return a < b;
    };
    std::sort(peaks.begin(), peaks.end(), by_height);

    PhaseShiftEstimate est;
    est.method = AngleMethod::Music;
    std::vector<bool> taken(static_cast<std::size_t>(n_grid), false);
    for (int k = 0; k < std::min<int>(s, static_cast<int>(peaks.size())); ++k) {
        est.values.push_back(grid[static_cast<std::size_t>(peaks[static_cast<std::size_t>(k)])]);
        taken[static_cast<std::size_t>(peaks[static_cast<std::size_t>(k)])] = true;
    }
    if (static_cast<int>(est.values.size()) < s) {
        // Degenerate spectra can have fewer than s local maxima; pad with the
        // strongest remaining grid points and record how many were padded.
        std::vector<int> rest;
        for (int k = 0; k < n_grid; ++k)
            if (!taken[static_cast<std::size_t>(k)])
                rest.push_back(k);
        std::sort(rest.begin(), rest.end(), by_height);
        for (int k = 0; static_cast<int>(est.values.size()) < s; ++k) {
            est.values.push_back(grid[static_cast<std::size_t>(rest[static_cast<std::size_t>(k)])]);
            ++est.diag.grid_fill_count;
        }
    }
    std::sort(est.values.begin(), est.values.end());
    return est;
}

// ---------------------------------------------------------------------------
// Capacity-balanced k-means on the unit circle, used to fuse per-window
// angle estimates.

struct ClusterState {
    std::vector<std::array<double, 2>> points;
    std::vector<int> assignment;
    std::vector<std::array<double, 2>> centroids;
    double objective = 0.0;
    int sweeps = 0;
    std::vector<double> objective_history;
};

namespace detail {

inline double sqdist(const std::array<double, 2> &a, const std::array<double, 2> &b) {
    double dx = a[0] - b[0];
    double dy = a[1] - b[1];
    return dx * dx + dy * dy;
}

// Greedy capacity-respecting assignment: visit (point, cluster) pairs by
// ascending distance. Exactly (n mod s) clusters may grow to ceil(n/s); the
// rest stop at floor(n/s), so cluster sizes never differ by more than one.
inline std::vector<int> balanced_assign(const std::vector<std::array<double, 2>> &pts,
                                        const std::vector<std::array<double, 2>> &centroids) {
    const int n = static_cast<int>(pts.size());
    const int s = static_cast<int>(centroids.size());
    const int floor_cap = n / s;
    const int ceil_slots = n % s;
    struct Pair {
        double d;
        int point;
        int cluster;
    };
    std::vector<Pair> pairs;
    pairs.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(s));
    for (int p = 0; p < n; ++p)
        for (int c = 0; c < s; ++c)
            pairs.push_back({sqdist(pts[static_cast<std::size_t>(p)],
                                    centroids[static_cast<std::size_t>(c)]),
                             p, c});
    std::sort(pairs.begin(), pairs.end(), [](const Pair &a, const Pair &b) {
        if (a.d != b.d)
            return a.d < b.d;
        if (a.point != b.point)
            return a.point < b.point;
        return a.cluster < b.cluster;
    });
    std::vector<int> assignment(static_cast<std::size_t>(n), -1);
    std::vector<int> count(static_cast<std::size_t>(s), 0);
    int slots_left = ceil_slots;
    int assigned = 0;
    for (const Pair &pr : pairs) {
        if (assigned == n)
            break;
        if (assignment[static_cast<std::size_t>(pr.point)] >= 0)
            continue;
        int &cnt = count[static_cast<std::size_t>(pr.cluster)];
        bool can_take = cnt < floor_cap;
        if (!can_take && cnt == floor_cap && slots_left > 0) {
            can_take = true;
            --slots_left;
        }
        if (!can_take)
            continue;
        assignment[static_cast<std::size_t>(pr.point)] = pr.cluster;
        ++cnt;
        ++assigned;
    }
    return assignment;
}

} // namespace detail

// Clusters phases (in cycles) as points on the unit circle into s clusters of
// near-equal size. k-means++ seeding from the given stream, then alternating
// balanced assignment and centroid means; a sweep that would increase the
// within-cluster scatter is discarded and iteration stops.
inline ClusterState cluster_phases(const std::vector<double> &phases, int s,
                                   Rng rng = Rng(0x636c7573ull)) {
    if (s < 1)
        throw std::invalid_argument("cluster_phases: need at least one cluster");
    const int n = static_cast<int>(phases.size());
    if (n < s)
        throw std::invalid_argument("cluster_phases: need at least one point per cluster");
    ClusterState st;
    st.points.resize(static_cast<std::size_t>(n));
    for (int p = 0; p < n; ++p) {
        double ang = 2.0 * std::numbers::pi * phases[static_cast<std::size_t>(p)];
        st.points[static_cast<std::size_t>(p)] = {std::cos(ang), std::sin(ang)};
    }

    // k-means++ seeding.
    st.centroids.clear();
    std::vector<bool> is_seed(static_cast<std::size_t>(n), false);
    int first = std::min(n - 1, static_cast<int>(rng.uniform01() * n));
    st.centroids.push_back(st.points[static_cast<std::size_t>(first)]);
    is_seed[static_cast<std::size_t>(first)] = true;
    while (static_cast<int>(st.centroids.size()) < s) {
        std::vector<double> d2(static_cast<std::size_t>(n));
        double total = 0.0;
        for (int p = 0; p < n; ++p) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto &c : st.centroids)
                best = std::min(best, detail::sqdist(st.points[static_cast<std::size_t>(p)], c));
            d2[static_cast<std::size_t>(p)] = best;
            total += best;
        }
        int pick = -1;
        if (total > 0.0) {
            double r = rng.uniform01() * total;
            double acc = 0.0;
            for (int p = 0; p < n; ++p) {
                acc += d2[static_cast<std::size_t>(p)];
                if (r < acc) {
                    pick = p;
                    break;
                }
            }
            if (pick < 0)
                pick = n - 1;
        } else {
            // All points coincide with existing seeds; take the lowest index
            // not yet used.
            for (int p = 0; p < n; ++p)
                if (!is_seed[static_cast<std::size_t>(p)]) {
                    pick = p;
                    break;
                }
            if (pick < 0)
                pick = 0;
        }
        is_seed[static_cast<std::size_t>(pick)] = true;
        st.centroids.push_back(st.points[static_cast<std::size_t>(pick)]);
    }

    auto means_of = [&](const std::vector<int> &assignment) {
        std::vector<std::array<double, 2>> m(static_cast<std::size_t>(s), {0.0, 0.0});
        std::vector<int> cnt(static_cast<std::size_t>(s), 0);
        for (int p = 0; p < n; ++p) {
            int c = assignment[static_cast<std::size_t>(p)];
            m[static_cast<std::size_t>(c)][0] += st.points[static_cast<std::size_t>(p)][0];
            m[static_cast<std::size_t>(c)][1] += st.points[static_cast<std::size_t>(p)][1];
            ++cnt[static_cast<std::size_t>(c)];
        }
        for (int c = 0; c < s; ++c) {
            m[static_cast<std::size_t>(c)][0] /= cnt[static_cast<std::size_t>(c)];
            m[static_cast<std::size_t>(c)][1] /= cnt[static_cast<std::size_t>(c)];
        }
        return m;
    };
    auto scatter_of = [&](const std::vector<int> &assignment,
                          const std::vector<std::array<double, 2>> &centroids) {
        double obj = 0.0;
        for (int p = 0; p < n; ++p)
            obj += detail::sqdist(st.points[static_cast<std::size_t>(p)],
                                  centroids[static_cast<std::size_t>(
                                      assignment[static_cast<std::size_t>(p)])]);
        return obj;
    };

    double prev_obj = std::numeric_limits<double>::infinity();
    std::vector<int> prev_assignment;
    for (st.sweeps = 1; st.sweeps <= 100; ++st.sweeps) {
        std::vector<int> assignment = detail::balanced_assign(st.points, st.centroids);
        double obj = scatter_of(assignment, st.centroids);
        if (obj > prev_obj + 1e-12) {
            // The balanced reassignment is greedy, not optimal, so it can go
            // uphill; discard the sweep and settle on the previous state.
            assignment = prev_assignment;
        }
        // Replacing centroids by the assignment means never increases the
        // scatter, so the recorded objective stays monotone either way.
        st.centroids = means_of(assignment);
        st.objective = scatter_of(assignment, st.centroids);
        st.objective_history.push_back(st.objective);
        bool done = assignment == prev_assignment;
        st.assignment = assignment;
        prev_assignment = std::move(assignment);
        prev_obj = st.objective;
        if (done)
            break;
    }
    return st;
}

// Direction of a centroid as a phase in [-1/2, 1/2). The zero vector has no
// direction and is rejected.
inline double centroid_to_phase(const std::array<double, 2> &centroid) {
    if (centroid[0] == 0.0 && centroid[1] == 0.0)
        throw std::invalid_argument("centroid_to_phase: zero centroid has undefined direction");
    double phase = std::atan2(centroid[1], centroid[0]) / (2.0 * std::numbers::pi);
    return wrap_phase(phase);
}

// Fuses a pool of per-window phase estimates into s representatives by
// balanced clustering on the circle.
inline PhaseShiftEstimate fuse_phase_points(const std::vector<double> &points, int s,
                                            Rng rng = Rng(0x636c7573ull)) {
    ClusterState st = cluster_phases(points, s, rng);
    PhaseShiftEstimate est;
    est.method = AngleMethod::Gec;
    est.values.reserve(static_cast<std::size_t>(s));
    for (const auto &c : st.centroids)
        est.values.push_back(centroid_to_phase(c));
    std::sort(est.values.begin(), est.values.end());
    return est;
}

// Gridless estimation with clustering: run the atomic-norm estimator on
// short windows as they arrive and fuse the pooled phases. Windows whose
// solve or decomposition fails are skipped and counted.
class GecEstimator {
  public:
    GecEstimator(int s, SdpSettings settings, Rng rng = Rng(0x676563ull))
        : s_(s), settings_(std::move(settings)), rng_(rng) {
        if (s < 1)
            throw std::invalid_argument("gec: need at least one source");
    }

    void add_window(const std::vector<Eigen::VectorXcd> &window) {
        try {
            PhaseShiftEstimate est = gae_estimate(window, settings_, s_);
            points_.insert(points_.end(), est.values.begin(), est.values.end());
            ++windows_used_;
            solver_iterations_ += est.diag.solver_iterations;
        } catch (const std::runtime_error &) {
            ++windows_failed_;
        }
    }

    int windows_used() const { return windows_used_; }
    int windows_failed() const { return windows_failed_; }
    bool has_estimate() const { return windows_used_ > 0; }

    PhaseShiftEstimate current() const {
        if (!has_estimate())
            throw std::runtime_error("gec: every window failed, nothing to fuse");
        PhaseShiftEstimate est = fuse_phase_points(
            points_, s_, rng_.fork({stream::cluster, static_cast<std::uint64_t>(windows_used_)}));
        est.diag.windows_used = windows_used_;
        est.diag.windows_failed = windows_failed_;
        est.diag.solver_iterations = solver_iterations_;
        return est;
    }

  private:
    int s_;
    SdpSettings settings_;
    Rng rng_;
    std::vector<double> points_;
    int windows_used_ = 0;
    int windows_failed_ = 0;
    long solver_iterations_ = 0;
};

// Chops a batch into consecutive windows of t0 snapshots (final window may be
// shorter).
inline std::vector<std::vector<Eigen::VectorXcd>> split_windows(const SampleBatch &batch,
                                                                int t0) {
    if (t0 < 1)
        throw std::invalid_argument("split_windows: window length must be positive");
    std::vector<std::vector<Eigen::VectorXcd>> out;
    for (int start = 0; start < batch.t(); start += t0) {
        std::vector<Eigen::VectorXcd> w;
        for (int k = start; k < std::min(batch.t(), start + t0); ++k)
            w.push_back(batch.samples[static_cast<std::size_t>(k)]);
        out.push_back(std::move(w));
    }
    return out;
}

// One-shot form of the windowed estimator.
inline PhaseShiftEstimate gec_estimate(const std::vector<std::vector<Eigen::VectorXcd>> &windows,
                                       int s, const SdpSettings &settings,
                                       Rng rng = Rng(0x676563ull)) {
    GecEstimator est(s, settings, rng);
    for (const auto &w : windows)
        est.add_window(w);
    return est.current();
}

} // namespace raycov
