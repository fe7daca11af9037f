// SPDX-License-Identifier: MIT
//
// raycov: spatial covariance estimation for few-ray interference channels
// Copyright (c) 2026 the raycov authors

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <string>
#include <vector>

#include "raycov/link_metrics.hpp"
#include "raycov/rng.hpp"

using namespace raycov;

namespace {

CovEstimate wrap_cov(Eigen::MatrixXcd m) {
    CovEstimate est;
    est.matrix = std::move(m);
    return est;
}

Eigen::MatrixXcd random_pd(int n, Rng &rng) {
    Eigen::MatrixXcd b(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            b(i, j) = rng.cnormal(1.0);
    return b * b.adjoint() + 0.1 * Eigen::MatrixXcd::Identity(n, n);
}

Eigen::VectorXcd random_channel(int n, Rng &rng) {
    Eigen::VectorXcd h(n);
    for (int i = 0; i < n; ++i)
        h(i) = rng.cnormal(1.0);
    return h;
}

} // namespace

TEST_CASE("whitening filter") {
    SECTION("whitens what it was built from") {
        Rng rng(41);
        for (int rep = 0; rep < 5; ++rep) {
            CovEstimate r = wrap_cov(random_pd(6, rng));
            Eigen::MatrixXcd w = whiten(r);
            Eigen::MatrixXcd eye = w * r.matrix * w.adjoint();
            CHECK((eye - Eigen::MatrixXcd::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-10);
        }
    }
    SECTION("diagonal covariance gives reciprocal square roots") {
        Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(2, 2);
        m(0, 0) = 1.0;
        m(1, 1) = 4.0;
        Eigen::MatrixXcd w = whiten(wrap_cov(m));
        // Rows may carry arbitrary unit phases, so compare magnitudes.
        CHECK(std::abs(w(0, 0)) == Catch::Approx(1.0).margin(1e-12));
        CHECK(std::abs(w(1, 1)) == Catch::Approx(0.5).margin(1e-12));
        CHECK(std::abs(w(0, 1)) < 1e-12);
        CHECK(std::abs(w(1, 0)) < 1e-12);
    }
    SECTION("indefinite input is rejected with the bad eigenvalues") {
        Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(3, 3);
        m(0, 0) = 1.0;
        m(1, 1) = -0.5;
        m(2, 2) = 2.0;
        try {
            whiten(wrap_cov(m));
            FAIL("expected a rejection");
        } catch (const std::invalid_argument &e) {
            std::string msg = e.what();
            CHECK(msg.find("eigenvalue") != std::string::npos);
            CHECK(msg.find("-0.5") != std::string::npos);
        }
        // Singular counts as not strictly positive definite.
        Eigen::MatrixXcd sing = Eigen::MatrixXcd::Zero(3, 3);
        sing(1, 1) = 1.0;
        sing(2, 2) = 2.0;
        CHECK_THROWS_AS(whiten(wrap_cov(sing)), std::invalid_argument);
        CHECK_THROWS_AS(whiten(wrap_cov(Eigen::MatrixXcd::Zero(0, 0))), std::invalid_argument);
    }
}

TEST_CASE("rate report") {
    SECTION("identity covariance with a flat channel") {
        // gg is a small integer here, so the believed and achieved rates
        // match bitwise and delta = 1 cannot tip into outage by rounding.
        LinkRealization link;
        link.h = Eigen::VectorXcd::Ones(4);
        link.symbol_power = 2.0;
        link.r_hat = wrap_cov(Eigen::MatrixXcd::Identity(4, 4));
        link.r = link.r_hat;
        RateReport rep = rate_report(link, 1.0);
        CHECK(rep.c == Catch::Approx(std::log2(9.0)).margin(1e-12));
        CHECK(rep.c == rep.c_hat);
        CHECK(rep.c == rep.c_opt);
        CHECK_FALSE(rep.outage);
        CHECK(rep.rho == rep.c_hat);

        RateReport zero = rate_report(link, 0.0);
        CHECK(zero.rho == 0.0);
        CHECK_FALSE(zero.outage);
    }
    SECTION("perfect estimate transmits at the optimum") {
        Rng rng(42);
        LinkRealization link;
        link.h = random_channel(5, rng);
        link.r_hat = wrap_cov(random_pd(5, rng));
        link.r = link.r_hat;
        RateReport rep = rate_report(link, 0.99);
        CHECK(std::abs(rep.c - rep.c_hat) < 1e-9);
        CHECK(std::abs(rep.c - rep.c_opt) < 1e-9);
        CHECK_FALSE(rep.outage);
        CHECK(rep.rho == Catch::Approx(0.99 * rep.c_opt).margin(1e-9));
    }
    SECTION("optimistic estimate causes outage at full rate") {
        LinkRealization link;
        link.h = Eigen::VectorXcd::Ones(4);
        link.r_hat = wrap_cov(Eigen::MatrixXcd::Identity(4, 4));
        link.r = wrap_cov(2.0 * Eigen::MatrixXcd::Identity(4, 4));
        RateReport rep = rate_report(link, 1.0);
        CHECK(rep.c_hat > rep.c);
        CHECK(rep.outage);
        CHECK(rep.rho == 0.0);
        // Backing off below c / c_hat restores a positive throughput.
        double safe = 0.9 * rep.c / rep.c_hat;
        RateReport backed = rate_report(link, safe);
        CHECK_FALSE(backed.outage);
        CHECK(backed.rho == Catch::Approx(safe * rep.c_hat).margin(1e-12));
    }
    SECTION("rates are invariant under a common unitary rotation") {
        Rng rng(43);
        LinkRealization link;
        link.h = random_channel(5, rng);
        link.r_hat = wrap_cov(random_pd(5, rng));
        link.r = wrap_cov(random_pd(5, rng) + 5.0 * Eigen::MatrixXcd::Identity(5, 5));
        RateReport base = rate_report(link, 0.7);

        Eigen::MatrixXcd q =
            Eigen::HouseholderQR<Eigen::MatrixXcd>(random_pd(5, rng)).householderQ();
        LinkRealization rot;
        rot.h = q * link.h;
        rot.r_hat = wrap_cov(q * link.r_hat.matrix * q.adjoint());
        rot.r = wrap_cov(q * link.r.matrix * q.adjoint());
        RateReport moved = rate_report(rot, 0.7);
        CHECK(std::abs(moved.c - base.c) < 1e-10);
        CHECK(std::abs(moved.c_hat - base.c_hat) < 1e-10);
        CHECK(std::abs(moved.c_opt - base.c_opt) < 1e-10);
    }
    SECTION("argument checks") {
        LinkRealization link;
        link.h = Eigen::VectorXcd::Ones(3);
        link.r_hat = wrap_cov(Eigen::MatrixXcd::Identity(3, 3));
        link.r = link.r_hat;
        CHECK_THROWS_AS(rate_report(link, -0.1), std::invalid_argument);
        CHECK_THROWS_AS(rate_report(link, 1.1), std::invalid_argument);
        link.symbol_power = 0.0;
        CHECK_THROWS_AS(rate_report(link, 0.5), std::invalid_argument);
        link.symbol_power = 1.0;
        link.r = wrap_cov(Eigen::MatrixXcd::Identity(2, 2));
        CHECK_THROWS_AS(rate_report(link, 0.5), std::invalid_argument);
    }
}

TEST_CASE("backoff optimization") {
    SECTION("honest links want no backoff") {
        std::vector<std::pair<double, double>> pairs(10, {1.0, 1.0});
        CHECK(optimize_delta(pairs) == 1.0);
    }
    SECTION("a single optimistic link backs off to the supportable fraction") {
        CHECK(optimize_delta({{1.0, 2.0}}) == 0.5);
    }
    SECTION("sawtooth ensemble has a known interior optimum") {
        // Five links believing rate 1 with true rates 0.2 .. 1.0: mean
        // throughput is delta * (links with c >= delta) / 5, maximized at 0.6.
        std::vector<std::pair<double, double>> pairs;
        for (double c : {0.2, 0.4, 0.6, 0.8, 1.0})
            pairs.push_back({c, 1.0});
        CHECK(optimize_delta(pairs) == Catch::Approx(0.6).margin(1e-12));
    }
    SECTION("ties go to the smaller delta") {
        // Zero true rate: every positive delta is in outage, all means tie at
        // zero.
        CHECK(optimize_delta({{0.0, 5.0}}) == 0.0);
    }
    SECTION("argument checks") {
        CHECK_THROWS_AS(optimize_delta({}), std::invalid_argument);
        CHECK_THROWS_AS(optimize_delta({{1.0, 1.0}}, 0.0), std::invalid_argument);
        CHECK_THROWS_AS(optimize_delta({{1.0, 1.0}}, 1.5), std::invalid_argument);
    }
}
