// SPDX-License-Identifier: MIT
//
// raycov: spatial covariance estimation for few-ray interference channels
// Copyright (c) 2026 the raycov authors

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <vector>

namespace raycov {

using cd = std::complex<double>;

// Moore-Penrose pseudoinverse via SVD with the usual cutoff
// max(rows, cols) * eps * sigma_max.
inline Eigen::MatrixXcd pinv(const Eigen::MatrixXcd &m) {
    if (m.size() == 0)
        throw std::invalid_argument("pinv: empty matrix");
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd &sv = svd.singularValues();
    double cutoff = static_cast<double>(std::max(m.rows(), m.cols())) *
                    std::numeric_limits<double>::epsilon() * (sv.size() > 0 ? sv(0) : 0.0);
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(sv.size());
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > cutoff)
            inv(i) = 1.0 / sv(i);
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().adjoint();
}

// Orthogonal projector onto the numerical range of m, with the same
// singular-value cutoff convention as pinv(). Built from an orthonormal
// basis, so applying it never amplifies roundoff the way an explicit
// m * pinv(m) product does when m is badly conditioned.
inline Eigen::MatrixXcd range_projector(const Eigen::MatrixXcd &m) {
    if (m.size() == 0)
        throw std::invalid_argument("range_projector: empty matrix");
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m, Eigen::ComputeThinU);
    const Eigen::VectorXd &sv = svd.singularValues();
    double cutoff = static_cast<double>(std::max(m.rows(), m.cols())) *
                    std::numeric_limits<double>::epsilon() * (sv.size() > 0 ? sv(0) : 0.0);
    Eigen::Index r = 0;
    while (r < sv.size() && sv(r) > cutoff)
        ++r;
    const Eigen::MatrixXcd basis = svd.matrixU().leftCols(r);
    return basis * basis.adjoint();
}

// Numerical rank with the same cutoff convention as pinv().
inline int numerical_rank(const Eigen::MatrixXcd &m) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
    const Eigen::VectorXd &sv = svd.singularValues();
    double cutoff = static_cast<double>(std::max(m.rows(), m.cols())) *
                    std::numeric_limits<double>::epsilon() * (sv.size() > 0 ? sv(0) : 0.0);
    int r = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > cutoff)
            ++r;
    return r;
}

// Hermitian Toeplitz matrix from its first column u (u(0) must be real up to
// roundoff; its imaginary part is discarded).
inline Eigen::MatrixXcd toeplitz_from_first_col(const Eigen::VectorXcd &u) {
    const Eigen::Index n = u.size();
    if (n == 0)
        throw std::invalid_argument("toeplitz_from_first_col: empty column");
    Eigen::MatrixXcd t(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        t(i, i) = cd(u(0).real(), 0.0);
        for (Eigen::Index j = 0; j < i; ++j) {
            t(i, j) = u(i - j);
            t(j, i) = std::conj(u(i - j));
        }
    }
    return t;
}

// Orthogonal (Frobenius) projection onto Hermitian Toeplitz matrices,
// returned as the first column: entry k is the average of the hermitized
// matrix over the k-th subdiagonal.
inline Eigen::VectorXcd toeplitz_project_first_col(const Eigen::MatrixXcd &m) {
    const Eigen::Index n = m.rows();
    if (n == 0 || m.cols() != n)
        throw std::invalid_argument("toeplitz_project_first_col: matrix must be square");
    Eigen::VectorXcd u(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        cd acc(0.0, 0.0);
        for (Eigen::Index i = 0; i + k < n; ++i)
            acc += 0.5 * (m(i + k, i) + std::conj(m(i, i + k)));
        u(k) = acc / static_cast<double>(n - k);
    }
    u(0) = cd(u(0).real(), 0.0);
    return u;
}

// Nonnegative least squares, Lawson-Hanson active set method.
// Solves argmin_{x >= 0} ||a x - b||_2.
inline Eigen::VectorXd nnls(const Eigen::MatrixXd &a, const Eigen::VectorXd &b) {
    const Eigen::Index n = a.cols();
    if (a.rows() != b.size())
        throw std::invalid_argument("nnls: dimension mismatch");
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    if (n == 0)
        return x;
    std::vector<bool> passive(static_cast<std::size_t>(n), false);
    Eigen::VectorXd w = a.transpose() * (b - a * x);
    const double tol = 10.0 * std::numeric_limits<double>::epsilon() *
                       a.lpNorm<Eigen::Infinity>() * static_cast<double>(std::max(a.rows(), n));
    const int max_outer = 3 * static_cast<int>(n) + 30;
    for (int outer = 0; outer < max_outer; ++outer) {
        // Pick the most violated zero-set coordinate.
        int best = -1;
        double best_w = tol;
        for (Eigen::Index i = 0; i < n; ++i)
            if (!passive[static_cast<std::size_t>(i)] && w(i) > best_w) {
                best_w = w(i);
                best = static_cast<int>(i);
            }
        if (best < 0)
            break;
        passive[static_cast<std::size_t>(best)] = true;
        for (;;) {
            std::vector<int> idx;
            for (Eigen::Index i = 0; i < n; ++i)
                if (passive[static_cast<std::size_t>(i)])
                    idx.push_back(static_cast<int>(i));
            Eigen::MatrixXd ap(a.rows(), static_cast<Eigen::Index>(idx.size()));
            for (std::size_t j = 0; j < idx.size(); ++j)
                ap.col(static_cast<Eigen::Index>(j)) = a.col(idx[j]);
            Eigen::VectorXd z = ap.colPivHouseholderQr().solve(b);
            bool all_pos = true;
            for (Eigen::Index j = 0; j < z.size(); ++j)
                if (z(j) <= 0.0) {
                    all_pos = false;
                    break;
                }
            if (all_pos) {
                x.setZero();
                for (std::size_t j = 0; j < idx.size(); ++j)
                    x(idx[j]) = z(static_cast<Eigen::Index>(j));
                break;
            }
            // Step toward z until the first passive coordinate hits zero.
            double alpha = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < idx.size(); ++j) {
                double zj = z(static_cast<Eigen::Index>(j));
                if (zj <= 0.0) {
                    double xj = x(idx[j]);
                    double step = xj / (xj - zj);
                    alpha = std::min(alpha, step);
                }
            }
            for (std::size_t j = 0; j < idx.size(); ++j) {
                double xj = x(idx[j]);
                double zj = z(static_cast<Eigen::Index>(j));
                x(idx[j]) = xj + alpha * (zj - xj);
            }
            for (std::size_t j = 0; j < idx.size(); ++j)
                if (x(idx[j]) <= tol) {
                    x(idx[j]) = 0.0;
                    passive[static_cast<std::size_t>(idx[j])] = false;
                }
        }
        w = a.transpose() * (b - a * x);
    }
    return x;
}

// Hermitizes a square matrix: (m + m^H) / 2.
inline Eigen::MatrixXcd hermitian_part(const Eigen::MatrixXcd &m) {
    if (m.rows() != m.cols())
        throw std::invalid_argument("hermitian_part: matrix must be square");
    return 0.5 * (m + m.adjoint());
}

// Eigenvalue flooring: replaces every eigenvalue below `floor` with `floor`.
// Input is treated as Hermitian (only its Hermitian part matters).
inline Eigen::MatrixXcd eigenvalue_floor(const Eigen::MatrixXcd &m, double floor) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(hermitian_part(m));
    if (es.info() != Eigen::Success)
        throw std::runtime_error("eigenvalue_floor: eigendecomposition failed");
    Eigen::VectorXd lam = es.eigenvalues();
    bool touched = false;
    for (Eigen::Index i = 0; i < lam.size(); ++i)
        if (lam(i) < floor) {
            lam(i) = floor;
            touched = true;
        }
    if (!touched)
        return hermitian_part(m);
    return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().adjoint();
}

} // namespace raycov
