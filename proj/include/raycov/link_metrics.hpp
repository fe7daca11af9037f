// SPDX-License-Identifier: MIT
//
// raycov: spatial covariance estimation for few-ray interference channels
// Copyright (c) 2026 the raycov authors

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "raycov/covariance.hpp"
#include "raycov/rng.hpp"
#include "raycov/types.hpp"

namespace raycov {

// A user link under estimated interference: the user's channel, its symbol
// power, the covariance estimate the receiver whitens with, and the true
// interference-plus-noise covariance the link actually experiences.
struct LinkRealization {
    Eigen::VectorXcd h;
    double symbol_power = 1.0;
    CovEstimate r_hat;
    CovEstimate r;
};

struct RateReport {
    double c = 0.0;     // rate achieved by whitening with the estimate
    double c_hat = 0.0; // rate the receiver believes it gets
    double c_opt = 0.0; // rate with exact whitening
    double delta = 1.0; // backoff factor applied to the believed rate
    double rho = 0.0;   // throughput: delta * c_hat when not in outage
    bool outage = false;
};

// Whitening filter W = Lambda^{-1/2} U^H of a strictly positive definite
// covariance, so that W r W^H = I. Rejects estimates that are not strictly
// positive definite and lists the offending eigenvalues.
inline Eigen::MatrixXcd whiten(const CovEstimate &r_hat) {
    const int n = r_hat.n();
    if (n < 1)
        throw std::invalid_argument("whiten: empty covariance");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(hermitian_part(r_hat.matrix));
    if (es.info() != Eigen::Success)
        throw std::runtime_error("whiten: eigendecomposition failed");
    const Eigen::VectorXd &lam = es.eigenvalues();
    if (lam(0) <= 0.0) {
        std::string bad;
        for (Eigen::Index i = 0; i < lam.size(); ++i)
            if (lam(i) <= 0.0) {
                if (!bad.empty())
                    bad += ", ";
                bad += detail::fmt_double(lam(i));
            }
        throw std::invalid_argument(
            "whiten: covariance is not positive definite; offending eigenvalues: " + bad);
    }
    return lam.cwiseSqrt().cwiseInverse().asDiagonal() *
           es.eigenvectors().adjoint().eval();
}

// Rates of a matched-filter receiver after whitening with the estimate.
// With g = W h and R' = W R W^H:
//   c     = log2(1 + (g^H g)^2 sx / (g^H R' g))   what the link really gets
//   c_hat = log2(1 + g^H g sx)                    what the receiver assumes
//   c_opt = same as c with the exact covariance   (upper bound)
// Transmitting at delta * c_hat yields throughput delta * c_hat when that
// rate is supported (<= c) and zero when the link is in outage.
inline RateReport rate_report(const LinkRealization &link, double delta) {
    if (!(delta >= 0.0 && delta <= 1.0))
        throw std::invalid_argument("rate_report: delta must lie in [0, 1]");
    if (!(link.symbol_power > 0.0))
        throw std::invalid_argument("rate_report: symbol power must be positive");
    if (link.h.size() != link.r_hat.matrix.rows() || link.h.size() != link.r.matrix.rows())
        throw std::invalid_argument("rate_report: dimension mismatch");
    RateReport rep;
    rep.delta = delta;

    Eigen::MatrixXcd w = whiten(link.r_hat);
    Eigen::VectorXcd g = w * link.h;
    double gg = g.squaredNorm();
    Eigen::MatrixXcd rw = w * hermitian_part(link.r.matrix) * w.adjoint();
    double denom = (g.adjoint() * rw * g)(0).real();
    rep.c = std::log2(1.0 + gg * gg * link.symbol_power / denom);
    rep.c_hat = std::log2(1.0 + gg * link.symbol_power);

    Eigen::MatrixXcd w_opt = whiten(link.r);
    rep.c_opt = std::log2(1.0 + (w_opt * link.h).squaredNorm() * link.symbol_power);

    double attempted = delta * rep.c_hat;
    rep.outage = attempted > rep.c;
    rep.rho = rep.outage ? 0.0 : attempted;
    return rep;
}

// Picks the backoff delta maximizing mean throughput over a set of links,
// each given as its (c, c_hat) pair, on the grid {0, step, 2 step, ..., 1}.
// Ties go to the smaller delta.
inline double optimize_delta(const std::vector<std::pair<double, double>> &c_chat_pairs,
                             double step = 0.01) {
    if (!(step > 0.0 && step <= 1.0))
        throw std::invalid_argument("optimize_delta: step must lie in (0, 1]");
    if (c_chat_pairs.empty())
        throw std::invalid_argument("optimize_delta: need at least one link");
    const int k_max = static_cast<int>(std::round(1.0 / step));
    double best_delta = 0.0;
    double best_mean = -1.0;
    for (int k = 0; k <= k_max; ++k) {
        double delta = std::min(1.0, static_cast<double>(k) * step);
        KahanSum acc;
        for (const auto &[c, c_hat] : c_chat_pairs) {
            double attempted = delta * c_hat;
            acc.add(attempted <= c ? attempted : 0.0);
        }
        double mean = acc.value() / static_cast<double>(c_chat_pairs.size());
        if (mean > best_mean) {
            best_mean = mean;
            best_delta = delta;
        }
    }
    return best_delta;
}

} // namespace raycov
