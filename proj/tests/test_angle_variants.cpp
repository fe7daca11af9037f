// SPDX-License-Identifier: MIT
//
// raycov: spatial covariance estimation for few-ray interference channels
// Copyright (c) 2026 the raycov authors

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "raycov/angle_variants.hpp"
#include "raycov/scenario.hpp"

using namespace raycov;

namespace {

double wrap_dist(double a, double b) { return std::abs(wrap_phase(a - b)); }

CovEstimate cov_of_atoms(int n, const std::vector<std::pair<double, double>> &atoms,
                         double noise_power) {
    CovEstimate r;
    r.matrix = noise_power * Eigen::MatrixXcd::Identity(n, n);
    for (const auto &[b, p] : atoms) {
        Eigen::VectorXcd a = steering_vector(n, b);
        r.matrix += p * a * a.adjoint();
    }
    return r;
}

SdpSettings tight_settings() {
    SdpSettings s;
    s.eta = 0.01;
    s.epsilon = 1e-11;
    s.max_iterations = 60000;
    return s;
}

} // namespace

TEST_CASE("subspace gridless estimation") {
    SECTION("single point source from the exact covariance") {
        CovEstimate r = cov_of_atoms(8, {{0.2, 2.0}}, 0.5);
        PhaseShiftEstimate est = sge_estimate(r, 0.5, 1, tight_settings());
        REQUIRE(est.count() == 1);
        CHECK(est.method == AngleMethod::Sge);
        CHECK(wrap_dist(est.values[0], 0.2) < 1e-6);
    }
    SECTION("two sources") {
        CovEstimate r = cov_of_atoms(12, {{-0.31, 1.5}, {0.12, 3.0}}, 0.25);
        PhaseShiftEstimate est = sge_estimate(r, 0.25, 2, tight_settings());
        REQUIRE(est.count() == 2);
        CHECK(wrap_dist(est.values[0], -0.31) < 1e-4);
        CHECK(wrap_dist(est.values[1], 0.12) < 1e-4);
        CHECK(std::is_sorted(est.values.begin(), est.values.end()));

        SECTION("jointly scaling covariance and noise leaves the angles put") {
            CovEstimate r4 = r;
            r4.matrix *= 4.0;
            PhaseShiftEstimate est4 = sge_estimate(r4, 1.0, 2, tight_settings());
            REQUIRE(est4.count() == 2);
            CHECK(wrap_dist(est4.values[0], est.values[0]) < 1e-9);
            CHECK(wrap_dist(est4.values[1], est.values[1]) < 1e-9);
        }
    }
    SECTION("pure noise has no interference subspace") {
        CovEstimate r;
        r.matrix = 0.7 * Eigen::MatrixXcd::Identity(6, 6);
        try {
            sge_estimate(r, 0.7, 1, tight_settings());
            FAIL("expected a runtime error");
        } catch (const std::runtime_error &e) {
            CHECK(std::string(e.what()).find("noise floor") != std::string::npos);
        }
    }
    SECTION("source count must stay below the antenna count") {
        CovEstimate r = cov_of_atoms(4, {{0.1, 1.0}}, 0.1);
        CHECK_THROWS_AS(sge_estimate(r, 0.1, 4, tight_settings()), std::invalid_argument);
    }
}

TEST_CASE("grid spectral search") {
    SECTION("two sources land within one grid cell") {
        CovEstimate r = cov_of_atoms(12, {{-0.22, 2.0}, {0.17, 2.0}}, 0.3);
        PhaseShiftEstimate est = music_estimate(r, 0.3, 2, 1000);
        REQUIRE(est.count() == 2);
        CHECK(est.method == AngleMethod::Music);
        CHECK(wrap_dist(est.values[0], -0.22) <= 1e-3);
        CHECK(wrap_dist(est.values[1], 0.17) <= 1e-3);
        CHECK(est.diag.grid_fill_count == 0);
    }
    SECTION("a single source picks the nearest grid point") {
        const double beta = 0.123;
        CovEstimate r = cov_of_atoms(8, {{beta, 1.0}}, 0.2);
        PhaseShiftEstimate est = music_estimate(r, 0.2, 1, 200);
        REQUIRE(est.count() == 1);
        // Grid point k sits at -1/2 + k/200; 0.125 is the closest to 0.123.
        CHECK(est.values[0] == Catch::Approx(0.125).margin(1e-12));
    }
    SECTION("projection onto a complete orthonormal basis flattens the spectrum") {
        const int n = 6;
        Rng rng(12);
        Eigen::MatrixXcd m(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                m(i, j) = rng.cnormal(1.0);
        Eigen::MatrixXcd q = Eigen::HouseholderQR<Eigen::MatrixXcd>(m).householderQ();
        for (double b : {-0.4, 0.0, 0.31}) {
            Eigen::VectorXcd a = steering_vector(n, b);
            CHECK((q.adjoint() * a).squaredNorm() ==
                  Catch::Approx(static_cast<double>(n)).margin(1e-10));
        }
    }
    SECTION("too few spectrum peaks are padded from the grid") {
        // Both sources sit exactly on grid points of the coarse 4-point grid,
        // so the spectrum blows up at both and is flat at 1/4 elsewhere. Two
        // adjacent near-infinite values yield a single circular peak; the
        // second source must come in through the fill path.
        CovEstimate r = cov_of_atoms(4, {{0.0, 3.0}, {0.25, 0.2}}, 0.1);
        PhaseShiftEstimate est = music_estimate(r, 0.1, 2, 4);
        REQUIRE(est.count() == 2);
        CHECK(est.diag.grid_fill_count == 1);
        CHECK(est.values[0] == Catch::Approx(0.0).margin(1e-15));
        CHECK(est.values[1] == Catch::Approx(0.25).margin(1e-15));
    }
    SECTION("argument checks") {
        CovEstimate r = cov_of_atoms(4, {{0.1, 1.0}}, 0.1);
        CHECK_THROWS_AS(music_estimate(r, 0.1, 4, 100), std::invalid_argument);
        CHECK_THROWS_AS(music_estimate(r, 0.1, 2, 3), std::invalid_argument);
    }
}

TEST_CASE("balanced clustering on the circle") {
    SECTION("two tight pairs split cleanly") {
        ClusterState st = cluster_phases({0.1, 0.1, 0.4, 0.4}, 2);
        REQUIRE(st.centroids.size() == 2);
        std::vector<double> fused;
        for (const auto &c : st.centroids)
            fused.push_back(centroid_to_phase(c));
        std::sort(fused.begin(), fused.end());
        CHECK(wrap_dist(fused[0], 0.1) < 1e-12);
        CHECK(wrap_dist(fused[1], 0.4) < 1e-12);
        CHECK(st.assignment[0] == st.assignment[1]);
        CHECK(st.assignment[2] == st.assignment[3]);
        CHECK(st.assignment[0] != st.assignment[2]);
    }
    SECTION("averaging respects the wrap-around") {
        PhaseShiftEstimate est = fuse_phase_points({0.49, -0.49}, 1);
        REQUIRE(est.count() == 1);
        CHECK(wrap_dist(est.values[0], -0.5) < 1e-9);
    }
    SECTION("capacities differ by at most one") {
        ClusterState st = cluster_phases({0.0, 0.01, 0.02, 0.3, 0.31, -0.35, -0.36}, 3);
        std::vector<int> sizes(3, 0);
        for (int a : st.assignment)
            ++sizes[static_cast<std::size_t>(a)];
        std::sort(sizes.begin(), sizes.end());
        CHECK(sizes == std::vector<int>{2, 2, 3});
    }
    SECTION("objective history never increases") {
        std::vector<double> pts;
        Rng rng(7);
        for (int k = 0; k < 30; ++k)
            pts.push_back(rng.uniform(-0.5, 0.5));
        ClusterState st = cluster_phases(pts, 4, Rng(100));
        for (std::size_t i = 1; i < st.objective_history.size(); ++i)
            CHECK(st.objective_history[i] <= st.objective_history[i - 1] + 1e-12);
    }
    SECTION("three well-separated quartets reach the brute-force optimum") {
        std::vector<double> pts = {0.00, 0.01, 0.02, 0.03, 0.33, 0.34, 0.35, 0.36,
                                   -0.34, -0.33, -0.32, -0.31};
        const int n = 12;
        std::vector<std::array<double, 2>> xy(n);
        for (int p = 0; p < n; ++p) {
            double ang = 2.0 * std::numbers::pi * pts[static_cast<std::size_t>(p)];
            xy[static_cast<std::size_t>(p)] = {std::cos(ang), std::sin(ang)};
        }
        auto scatter = [&](const std::vector<int> &groups) {
            double total = 0.0;
            for (int c = 0; c < 3; ++c) {
                double mx = 0.0, my = 0.0;
                int cnt = 0;
                for (int p = 0; p < n; ++p)
                    if (groups[static_cast<std::size_t>(p)] == c) {
                        mx += xy[static_cast<std::size_t>(p)][0];
                        my += xy[static_cast<std::size_t>(p)][1];
                        ++cnt;
                    }
                mx /= cnt;
                my /= cnt;
                for (int p = 0; p < n; ++p)
                    if (groups[static_cast<std::size_t>(p)] == c) {
                        double dx = xy[static_cast<std::size_t>(p)][0] - mx;
                        double dy = xy[static_cast<std::size_t>(p)][1] - my;
                        total += dx * dx + dy * dy;
                    }
            }
            return total;
        };
        // All 5775 partitions into three unlabeled groups of four: point 0
        // anchors the first group, the smallest remaining index the second.
        double best = std::numeric_limits<double>::infinity();
        std::vector<int> comb1 = {1, 2, 3};
        auto next_comb = [](std::vector<int> &c, int limit) {
            int k = static_cast<int>(c.size());
            for (int i = k - 1; i >= 0; --i) {
                if (c[static_cast<std::size_t>(i)] < limit - (k - 1 - i)) {
                    ++c[static_cast<std::size_t>(i)];
                    for (int j = i + 1; j < k; ++j)
                        c[static_cast<std::size_t>(j)] = c[static_cast<std::size_t>(j - 1)] + 1;
                    return true;
                }
            }
            return false;
        };
        long partitions = 0;
        do {
            std::vector<int> groups(n, -1);
            groups[0] = 0;
            for (int i : comb1)
                groups[static_cast<std::size_t>(i)] = 0;
            std::vector<int> rest;
            for (int p = 1; p < n; ++p)
                if (groups[static_cast<std::size_t>(p)] < 0)
                    rest.push_back(p);
            std::vector<int> comb2 = {1, 2, 3};
            do {
                std::vector<int> g = groups;
                g[static_cast<std::size_t>(rest[0])] = 1;
                for (int i : comb2)
                    g[static_cast<std::size_t>(rest[static_cast<std::size_t>(i)])] = 1;
                for (int p = 0; p < n; ++p)
                    if (g[static_cast<std::size_t>(p)] < 0)
                        g[static_cast<std::size_t>(p)] = 2;
                best = std::min(best, scatter(g));
                ++partitions;
            } while (next_comb(comb2, 7));
        } while (next_comb(comb1, 11));
        CHECK(partitions == 5775);

        ClusterState st = cluster_phases(pts, 3, Rng(512));
        CHECK(st.objective == Catch::Approx(best).margin(1e-9));
    }
    SECTION("degenerate inputs") {
        CHECK_THROWS_AS(cluster_phases({0.1}, 2), std::invalid_argument);
        CHECK_THROWS_AS(centroid_to_phase({0.0, 0.0}), std::invalid_argument);
        // Coincident points still seed distinct clusters.
        ClusterState st = cluster_phases({0.2, 0.2, 0.2}, 3);
        CHECK(st.centroids.size() == 3);
    }
}

TEST_CASE("windowed estimation with clustering") {
    SECTION("window splitting") {
        SampleBatch batch;
        for (int k = 0; k < 5; ++k)
            batch.samples.push_back(Eigen::VectorXcd::Constant(2, cd(k, 0)));
        auto windows = split_windows(batch, 2);
        REQUIRE(windows.size() == 3);
        CHECK(windows[0].size() == 2);
        CHECK(windows[1].size() == 2);
        CHECK(windows[2].size() == 1);
        CHECK(windows[2][0](0) == cd(4, 0));
        CHECK_THROWS_AS(split_windows(batch, 0), std::invalid_argument);
    }
    SECTION("one window reduces to the plain gridless estimate") {
        const int n = 10;
        Rng rng(31);
        std::vector<Eigen::VectorXcd> batch;
        for (int k = 0; k < 3; ++k) {
            Eigen::VectorXcd v = rng.cnormal(1.0) * steering_vector(n, -0.15);
            v += rng.cnormal(1.0) * steering_vector(n, 0.3);
            batch.push_back(v);
        }
        SdpSettings settings;
        settings.eta = 0.15;
        settings.epsilon = 1e-9;
        settings.max_iterations = 30000;
        PhaseShiftEstimate plain = gae_estimate(batch, settings, 2);
        PhaseShiftEstimate fused = gec_estimate({batch}, 2, settings);
        CHECK(fused.method == AngleMethod::Gec);
        CHECK(fused.diag.windows_used == 1);
        REQUIRE(fused.count() == plain.count());
        for (int k = 0; k < plain.count(); ++k)
            CHECK(wrap_dist(fused.values[static_cast<std::size_t>(k)],
                            plain.values[static_cast<std::size_t>(k)]) < 1e-12);
    }
    SECTION("many noiseless windows agree on the sources") {
        const int n = 12;
        const std::vector<double> truth = {-0.2, 0.25};
        Rng rng(32);
        SdpSettings settings;
        settings.eta = 0.1;
        settings.epsilon = 1e-9;
        settings.max_iterations = 30000;
        GecEstimator gec(2, settings);
        for (int w = 0; w < 10; ++w) {
            Eigen::VectorXcd v = rng.cnormal(1.0) * steering_vector(n, truth[0]);
            v += rng.cnormal(1.0) * steering_vector(n, truth[1]);
            gec.add_window({v});
        }
        REQUIRE(gec.windows_used() + gec.windows_failed() == 10);
        REQUIRE(gec.has_estimate());
        PhaseShiftEstimate est = gec.current();
        CHECK(est.diag.windows_used == gec.windows_used());
        REQUIRE(est.count() == 2);
        CHECK(wrap_dist(est.values[0], truth[0]) < 1e-3);
        CHECK(wrap_dist(est.values[1], truth[1]) < 1e-3);
    }
    SECTION("fusion tolerates per-window jitter") {
        const std::vector<double> truth = {-0.2, 0.25};
        int good = 0;
        for (int rep = 0; rep < 100; ++rep) {
            Rng rng = Rng::derive(88, {static_cast<std::uint64_t>(rep)});
            std::vector<double> points;
            for (int w = 0; w < 8; ++w)
                for (double t : truth)
                    points.push_back(wrap_phase(t + 0.01 * rng.normal()));
            PhaseShiftEstimate est =
                fuse_phase_points(points, 2, rng.fork({stream::cluster}));
            if (wrap_dist(est.values[0], truth[0]) < 0.02 &&
                wrap_dist(est.values[1], truth[1]) < 0.02)
                ++good;
        }
        CHECK(good >= 90);
    }
    SECTION("all windows failing leaves nothing to fuse") {
        SdpSettings settings;
        GecEstimator gec(2, settings);
        // A zero window converges to the zero matrix, which holds no atoms.
        gec.add_window({Eigen::VectorXcd::Zero(6)});
        CHECK(gec.windows_failed() == 1);
        CHECK_FALSE(gec.has_estimate());
        CHECK_THROWS_AS(gec.current(), std::runtime_error);
    }
}
