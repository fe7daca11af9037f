// SPDX-License-Identifier: MIT
//
// raycov: spatial covariance estimation for few-ray interference channels
// Copyright (c) 2026 the raycov authors

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "raycov/linalg.hpp"
#include "raycov/rng.hpp"
#include "raycov/scenario.hpp"
#include "raycov/types.hpp"

namespace raycov {

// Sample (least squares) covariance (1/T) sum_t N(t) N(t)^H.
inline CovEstimate ls_estimate(const SampleBatch &batch) {
    if (batch.samples.empty())
        throw std::invalid_argument("ls_estimate: empty batch");
    const int n = batch.n();
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(n, n);
    for (const auto &s : batch.samples) {
        if (s.size() != n)
            throw std::invalid_argument("ls_estimate: inconsistent snapshot length");
        acc += s * s.adjoint();
    }
    CovEstimate est;
    est.matrix = acc / static_cast<double>(batch.t());
    est.method = CovMethod::Ls;
    est.t_used = batch.t();
    return est;
}

// Subtracts the known noise floor from the diagonal.
inline CovEstimate denoise(const CovEstimate &est, double noise_power) {
    if (!(noise_power >= 0.0))
        throw std::invalid_argument("denoise: noise power must be nonnegative");
    CovEstimate out = est;
    out.matrix -= noise_power * Eigen::MatrixXcd::Identity(est.matrix.rows(), est.matrix.cols());
    return out;
}

// Hermitian part (m + m^H) / 2, method preserved.
inline CovEstimate hermitize(const CovEstimate &est) {
    CovEstimate out = est;
    out.matrix = hermitian_part(est.matrix);
    return out;
}

// Floors the eigenvalues of the Hermitian part at `floor` (default: project
// onto the PSD cone).
inline CovEstimate clip_psd(const CovEstimate &est, double floor = 0.0) {
    CovEstimate out = est;
    out.matrix = eigenvalue_floor(est.matrix, floor);
    return out;
}

// Projection-based covariance estimation. Given estimated phase shifts, forms
// the steering basis A, pulls the LS estimate into the ray domain, removes
// the noise that leaked there, and rebuilds:
//   R_x = A^+ (hermitized(R_LS) - sigma^2 I) (A^+)^H
//   R   = A R_x A^H + sigma^2 I
// Near-duplicate phases (within 1e-9 cycles) make A numerically repeated, so
// they are nudged apart by multiples of 1e-7 and the output records how many
// entries were touched.
inline CovEstimate pbce_reconstruct(const CovEstimate &ls, const PhaseShiftEstimate &beta,
                                    double noise_power) {
    if (!(noise_power >= 0.0))
        throw std::invalid_argument("pbce_reconstruct: noise power must be nonnegative");
    const int n = ls.n();
    if (n < 1)
        throw std::invalid_argument("pbce_reconstruct: empty covariance");
    std::vector<double> phases = beta.values;
    int perturbed = 0;
    if (phases.size() > 1) {
        std::vector<double> sorted = phases;
        std::sort(sorted.begin(), sorted.end());
        // Nudge exact repeats apart; k-th extra copy moves by k * 1e-7.
        for (std::size_t i = 1; i < sorted.size(); ++i) {
            if (sorted[i] - sorted[i - 1] < 1e-9) {
                sorted[i] = sorted[i - 1] + 1e-7;
                ++perturbed;
            }
        }
        phases = sorted;
    }
    SteeringBasis basis = steering_basis(phases, n);
    // A (A^+ M (A^+)^H) A^H collapses to P M P with P the orthogonal
    // projector onto range(A). Going through the projector instead of the
    // explicit pseudoinverse sandwich matters: clustered rays make the
    // steering columns nearly collinear, and the roundoff of the huge
    // intermediate ray-domain matrix would otherwise survive the outer
    // reprojection (squared-condition-number error growth).
    Eigen::MatrixXcd proj = range_projector(basis.a);
    Eigen::MatrixXcd centered =
        hermitian_part(ls.matrix) - noise_power * Eigen::MatrixXcd::Identity(n, n);
    CovEstimate out;
    out.matrix = proj * centered * proj +
                 noise_power * Eigen::MatrixXcd::Identity(n, n);
    out.method = cov_method_for(beta.method);
    out.t_used = ls.t_used;
    out.perturbed_duplicates = perturbed;
    return out;
}

// Normalized squared error (1/N^2) ||est - truth||_F^2.
inline double mse(const CovEstimate &est, const CovEstimate &truth) {
    if (est.matrix.rows() != truth.matrix.rows() || est.matrix.cols() != truth.matrix.cols())
        throw std::invalid_argument("mse: dimension mismatch");
    double n = static_cast<double>(est.matrix.rows());
    return (est.matrix - truth.matrix).squaredNorm() / (n * n);
}

// Expected normalized MSE of the sample covariance over T snapshots:
// trace(R)^2 / (T N^2).
inline double gamma_ls(const CovEstimate &r, int t) {
    if (t < 1)
        throw std::invalid_argument("gamma_ls: need at least one snapshot");
    double n = static_cast<double>(r.matrix.rows());
    double tr = r.matrix.trace().real();
    return tr * tr / (static_cast<double>(t) * n * n);
}

// Expected normalized MSE of the projection-based estimator with basis A:
// trace(R - sigma^2 (I - A A^+))^2 / (T N^2). The projector keeps the noise
// variance inside the steering subspace and removes the rest.
inline double gamma_pbce(const CovEstimate &r, const SteeringBasis &a, double noise_power,
                         int t) {
    if (t < 1)
        throw std::invalid_argument("gamma_pbce: need at least one snapshot");
    if (!(noise_power >= 0.0))
        throw std::invalid_argument("gamma_pbce: noise power must be nonnegative");
    if (a.n() != r.n())
        throw std::invalid_argument("gamma_pbce: basis row count must match covariance");
    if (a.s() > 0 && numerical_rank(a.a) < std::min(a.n(), a.s()))
        throw std::invalid_argument("gamma_pbce: steering basis is rank deficient");
    const int n = a.n();
    Eigen::MatrixXcd proj = range_projector(a.a);
    Eigen::MatrixXcd inner =
        r.matrix - noise_power * (Eigen::MatrixXcd::Identity(n, n) - proj);
    double tr = inner.trace().real();
    return tr * tr / (static_cast<double>(t) * n * n);
}

// Monte Carlo check of the variance of a product of correlated circular
// Gaussians: for (x, y) jointly circular with variances vx, vy and
// correlation coefficient xi, Var(x y*) = vx vy regardless of xi. Returns
// (empirical, analytic).
inline std::pair<double, double> gaussian_product_variance_oracle(double vx, double vy,
                                                                  std::complex<double> xi,
                                                                  long draws, Rng &rng) {
    if (!(vx > 0.0) || !(vy > 0.0))
        throw std::invalid_argument("gaussian_product_variance_oracle: variances must be positive");
    if (std::abs(xi) > 1.0)
        throw std::invalid_argument(
            "gaussian_product_variance_oracle: |correlation| must not exceed 1");
    if (draws < 1)
        throw std::invalid_argument("gaussian_product_variance_oracle: need draws");
    const double sx = std::sqrt(vx);
    const double sy = std::sqrt(vy);
    const double resid = std::sqrt(std::max(0.0, 1.0 - std::norm(xi)));
    const std::complex<double> mean_xy = xi * sx * sy; // E[x y*] = xi sx sy
    KahanSum acc;
    for (long k = 0; k < draws; ++k) {
        std::complex<double> u = rng.cnormal(1.0);
        std::complex<double> w = rng.cnormal(1.0);
        std::complex<double> x = sx * u;
        std::complex<double> y = sy * (std::conj(xi) * u + resid * w);
        acc.add(std::norm(x * std::conj(y) - mean_xy));
    }
    return {acc.value() / static_cast<double>(draws), vx * vy};
}

namespace detail {

// %.17g round-trips doubles exactly; used for all numeric file output.
inline std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace detail

// Writes the matrix as CSV, one row per matrix row, entries "re+imj" packed
// as two columns re,im per entry in row-major order.
inline void write_csv(const CovEstimate &est, const std::string &path) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("write_csv: cannot open " + path);
    for (Eigen::Index i = 0; i < est.matrix.rows(); ++i) {
        for (Eigen::Index j = 0; j < est.matrix.cols(); ++j) {
            if (j > 0)
                out << ',';
            out << detail::fmt_double(est.matrix(i, j).real()) << ','
                << detail::fmt_double(est.matrix(i, j).imag());
        }
        out << '\n';
    }
}

} // namespace raycov
