// SPDX-License-Identifier: MIT
//
// raycov: spatial covariance estimation for few-ray interference channels
// Copyright (c) 2026 the raycov authors

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "raycov/linalg.hpp"
#include "raycov/rng.hpp"
#include "raycov/types.hpp"

namespace raycov {

// Settings for the atomic-norm semidefinite program and its postprocessing.
// eta trades data fidelity (small) against the atomic-norm penalty (large).
struct SdpSettings {
    double eta = 0.5;
    double epsilon = 1e-7;      // relative objective-change tolerance
    long max_iterations = 20000;
    std::string solver = "admm"; // informational; admm is the only backend
    double rank_tol = 1e-6;      // eigenvalue cutoff for the decomposition
    int trace_every = 0;         // > 0: record objective/residual every k iters
    double rho = 1.0;            // initial penalty parameter
    bool adapt_rho = true;       // residual balancing during burn-in
    double over_relax = 1.6;

    void validate() const {
        auto bad = [](const std::string &m) { throw std::invalid_argument("sdp settings: " + m); };
        if (!(eta > 0.0) || !(eta < 1.0))
            bad("eta must lie strictly inside (0, 1)");
        if (!(epsilon > 0.0))
            bad("epsilon must be positive");
        if (max_iterations < 1)
            bad("max_iterations must be positive");
        if (!(rank_tol > 0.0))
            bad("rank_tol must be positive");
        if (!(rho > 0.0))
            bad("rho must be positive");
        if (!(over_relax >= 1.0) || !(over_relax < 2.0))
            bad("over_relax must lie in [1, 2)");
    }
};

// Hermitian Toeplitz PSD matrix, stored as its first column. certified_psd
// records that the solver's feasibility repair ran and the eigenvalue bound
// held.
struct ToeplitzPSD {
    Eigen::VectorXcd first_col;
    bool certified_psd = false;

    int n() const { return static_cast<int>(first_col.size()); }
    Eigen::MatrixXcd full() const { return toeplitz_from_first_col(first_col); }
};

// Retrieved atoms: phases in [-1/2, 1/2) sorted ascending with matching
// nonnegative powers, plus the relative Frobenius reconstruction residual.
struct AtomicDecomposition {
    std::vector<double> phases;
    std::vector<double> powers;
    double residual = 0.0;

    int count() const { return static_cast<int>(phases.size()); }
};

struct SolverTraceRow {
    long iteration = 0;
    double objective = 0.0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
};

struct AnSdpResult {
    ToeplitzPSD q;
    double tau = 0.0;
    std::vector<Eigen::VectorXcd> y; // denoised snapshots, input order
    double objective = 0.0;
    long iterations = 0;
    double wall_ms = 0.0;
    double primal_residual = 0.0;
    double min_bordered_eig = 0.0;
    bool converged = false;
    std::vector<SolverTraceRow> trace;
};

// Thrown when the solver hits max_iterations without meeting the tolerance.
// Carries the best (feasibility-repaired) iterate for diagnosis.
class an_sdp_error : public std::runtime_error {
  public:
    an_sdp_error(const std::string &msg, AnSdpResult best_iterate)
        : std::runtime_error(msg), best(std::move(best_iterate)) {}

    AnSdpResult best;
};

namespace detail {

inline Eigen::MatrixXcd bordered(const Eigen::MatrixXcd &q, const Eigen::VectorXcd &y,
                                 double tau) {
    const Eigen::Index n = q.rows();
    Eigen::MatrixXcd b(n + 1, n + 1);
    b.topLeftCorner(n, n) = q;
    b.block(0, n, n, 1) = y;
    b.block(n, 0, 1, n) = y.adjoint();
    b(n, n) = cd(tau, 0.0);
    return b;
}

// Projection onto the PSD cone (eigenvalue flooring at zero). Also returns
// the smallest eigenvalue of the input so callers can track feasibility.
inline Eigen::MatrixXcd psd_project(const Eigen::MatrixXcd &m, double &min_eig) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(hermitian_part(m));
    const Eigen::VectorXd &lam = es.eigenvalues();
    min_eig = lam(0);
    if (min_eig >= 0.0)
        return hermitian_part(m);
    Eigen::VectorXd floored = lam.cwiseMax(0.0);
    return es.eigenvectors() * floored.asDiagonal() * es.eigenvectors().adjoint();
}

inline double min_eigenvalue(const Eigen::MatrixXcd &m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(hermitian_part(m),
                                                       Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

// Deterministic content ordering: the solve is run with snapshots sorted by
// value, so any permutation of the input batch yields bit-identical iterates.
inline bool lex_less(const Eigen::VectorXcd &a, const Eigen::VectorXcd &b) {
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (a(i).real() != b(i).real())
            return a(i).real() < b(i).real();
        if (a(i).imag() != b(i).imag())
            return a(i).imag() < b(i).imag();
    }
    return false;
}

} // namespace detail

// Denoises a batch of snapshots through the penalized atomic-norm program
//
//   min over (Q Toeplitz Hermitian, tau, Y)
//       (1 - eta)/T sum_t ||n_t - y_t||^2 + (eta/2) (tau + trace Q)
//   s.t. [[Q, y_t], [y_t^H, tau]] >= 0 for every t,
//
// via consensus ADMM: the quadratic block is closed-form (the Toeplitz
// structure enters as diagonal averaging), the constraint blocks are PSD
// eigenvalue-floor projections, with over-relaxation and residual-balanced
// penalty adaptation during a burn-in phase (frozen afterwards so the
// objective settles monotonically).
//
// Implementation notes:
//  - snapshots are normalized by the mean column norm (zero columns
//    included) and results are rescaled at the end, so scaling the input by
//    c scales Q and tau by c^2 and Y by c exactly. The mean rather than the
//    max matters for batches padded with zero columns: under the mean the
//    padded program is an exact rescaling of the unpadded one, so the
//    recovered frequency support does not change when a rank-deficient
//    batch carries trailing zeros. A subspace square-root batch at low
//    sample counts is exactly that shape;
//  - all-zero snapshots are dropped from the constraint set (their optimal
//    y_t is 0 and their constraint is implied by the others), but the
//    objective keeps the full-T normalization;
//  - on acceptance the iterate is shifted by a * I with
//    a = max(0, -min bordered eigenvalue), which restores feasibility without
//    moving the eigenvectors of Q.
inline AnSdpResult solve_an_sdp(const std::vector<Eigen::VectorXcd> &batch,
                                const SdpSettings &settings) {
    settings.validate();
    if (batch.empty())
        throw std::invalid_argument("solve_an_sdp: empty batch");
    const int n = static_cast<int>(batch[0].size());
    if (n < 1)
        throw std::invalid_argument("solve_an_sdp: empty snapshots");
    for (const auto &v : batch) {
        if (static_cast<int>(v.size()) != n)
            throw std::invalid_argument("solve_an_sdp: inconsistent snapshot length");
        if (!v.allFinite())
            throw std::invalid_argument("solve_an_sdp: snapshots must be finite");
    }
    const auto t_start = std::chrono::steady_clock::now();
    const int t_full = static_cast<int>(batch.size());

    double scale = 0.0;
    for (const auto &v : batch)
        scale += v.norm();
    scale /= static_cast<double>(t_full);

    AnSdpResult res;
    res.y.assign(static_cast<std::size_t>(t_full), Eigen::VectorXcd::Zero(n));
    res.q.first_col = Eigen::VectorXcd::Zero(n);
    if (scale == 0.0) {
        res.q.certified_psd = true;
        res.converged = true;
        return res;
    }

    // Active snapshots in canonical (content-sorted) order.
    std::vector<int> active;
    for (int t = 0; t < t_full; ++t)
        if (batch[static_cast<std::size_t>(t)].norm() > 0.0)
            active.push_back(t);
    std::sort(active.begin(), active.end(), [&](int a, int b) {
        const auto &va = batch[static_cast<std::size_t>(a)];
        const auto &vb = batch[static_cast<std::size_t>(b)];
        if (detail::lex_less(va, vb))
            return true;
        if (detail::lex_less(vb, va))
            return false;
        return a < b;
    });
    const int t_act = static_cast<int>(active.size());

    std::vector<Eigen::VectorXcd> d(static_cast<std::size_t>(t_act));
    for (int j = 0; j < t_act; ++j)
        d[static_cast<std::size_t>(j)] =
            batch[static_cast<std::size_t>(active[static_cast<std::size_t>(j)])] / scale;

    const double w = (1.0 - settings.eta) / static_cast<double>(t_full);
    const double eta = settings.eta;
    double rho = settings.rho;
    const double alpha = settings.over_relax;
    const long burn_in = std::min<long>(500, std::max<long>(100, settings.max_iterations / 4));

    // Initialization from the sample covariance of the normalized data.
    Eigen::MatrixXcd sample = Eigen::MatrixXcd::Zero(n, n);
    for (const auto &v : d)
        sample += v * v.adjoint();
    sample /= static_cast<double>(t_act);
    Eigen::VectorXcd u = toeplitz_project_first_col(sample);
    Eigen::MatrixXcd qm = toeplitz_from_first_col(u);
    double tau = std::max(sample.trace().real() / static_cast<double>(n), 1e-3);
    std::vector<Eigen::VectorXcd> y = d;
    std::vector<Eigen::MatrixXcd> z(static_cast<std::size_t>(t_act));
    std::vector<Eigen::MatrixXcd> dual(static_cast<std::size_t>(t_act),
                                       Eigen::MatrixXcd::Zero(n + 1, n + 1));
    for (int j = 0; j < t_act; ++j) {
        double me = 0.0;
        z[static_cast<std::size_t>(j)] = detail::psd_project(
            detail::bordered(qm, y[static_cast<std::size_t>(j)], tau), me);
    }

    auto objective_of = [&](double tau_v, double u0_real) {
        KahanSum fit;
        for (int j = 0; j < t_act; ++j)
            fit.add((d[static_cast<std::size_t>(j)] - y[static_cast<std::size_t>(j)])
                        .squaredNorm());
        return w * fit.value() +
               0.5 * eta * (tau_v + static_cast<double>(n) * u0_real);
    };

    const long check_every = 16;
    double f_prev = std::numeric_limits<double>::infinity();
    int calm_checks = 0;
    double primal_res = std::numeric_limits<double>::infinity();
    double dual_res = std::numeric_limits<double>::infinity();
    bool converged = false;
    long iter = 0;

    Eigen::MatrixXcd cmean(n, n);
    for (iter = 1; iter <= settings.max_iterations; ++iter) {
        // Quadratic block, closed form given the consensus targets C = Z - U.
        cmean.setZero();
        double ctau_mean = 0.0;
        for (int j = 0; j < t_act; ++j) {
            const Eigen::MatrixXcd c =
                z[static_cast<std::size_t>(j)] - dual[static_cast<std::size_t>(j)];
            cmean += c.topLeftCorner(n, n);
            ctau_mean += c(n, n).real();
            Eigen::VectorXcd cy =
                0.5 * (c.block(0, n, n, 1) + c.block(n, 0, 1, n).adjoint());
            y[static_cast<std::size_t>(j)] =
                (w * d[static_cast<std::size_t>(j)] + rho * cy) / (w + rho);
        }
        cmean /= static_cast<double>(t_act);
        ctau_mean /= static_cast<double>(t_act);
        u = toeplitz_project_first_col(cmean);
        u(0) -= eta / (2.0 * rho * static_cast<double>(t_act));
        qm = toeplitz_from_first_col(u);
        tau = std::max(ctau_mean - eta / (2.0 * rho * static_cast<double>(t_act)), 0.0);

        // Constraint blocks: over-relaxed PSD projection plus dual ascent.
        double pr_sq = 0.0;
        double du_sq = 0.0;
        for (int j = 0; j < t_act; ++j) {
            Eigen::MatrixXcd b = detail::bordered(qm, y[static_cast<std::size_t>(j)], tau);
            Eigen::MatrixXcd relaxed =
                alpha * b + (1.0 - alpha) * z[static_cast<std::size_t>(j)];
            Eigen::MatrixXcd v = relaxed + dual[static_cast<std::size_t>(j)];
            double me = 0.0;
            Eigen::MatrixXcd z_new = detail::psd_project(v, me);
            du_sq += (z_new - z[static_cast<std::size_t>(j)]).squaredNorm();
            pr_sq += (b - z_new).squaredNorm();
            dual[static_cast<std::size_t>(j)] = v - z_new;
            z[static_cast<std::size_t>(j)] = z_new;
        }
        primal_res = std::sqrt(pr_sq);
        dual_res = rho * std::sqrt(du_sq);

        if (settings.trace_every > 0 && iter % settings.trace_every == 0) {
            SolverTraceRow row;
            row.iteration = iter;
            row.objective = objective_of(tau, u(0).real());
            row.primal_residual = primal_res;
            row.dual_residual = dual_res;
            res.trace.push_back(row);
        }

        if (settings.adapt_rho && iter <= burn_in && iter % 32 == 0) {
            if (primal_res > 10.0 * dual_res) {
                rho *= 1.5;
                for (auto &m : dual)
                    m /= 1.5;
            } else if (dual_res > 10.0 * primal_res) {
                rho /= 1.5;
                for (auto &m : dual)
                    m *= 1.5;
            }
        }

        if (iter >= 64 && iter % check_every == 0) {
            double f = objective_of(tau, u(0).real());
            double rel = std::abs(f - f_prev) / std::max(std::abs(f), 1e-12);
            f_prev = f;
            calm_checks = rel < settings.epsilon ? calm_checks + 1 : 0;
            if (calm_checks >= 2) {
                double min_eig = std::numeric_limits<double>::infinity();
                for (int j = 0; j < t_act; ++j)
                    min_eig = std::min(min_eig,
                                       detail::min_eigenvalue(detail::bordered(
                                           qm, y[static_cast<std::size_t>(j)], tau)));
                // The tolerance is relative to tau with an absolute floor in
                // the normalized units of the solve. Without the floor a
                // solution shrunk all the way to zero (tau ~ 1e-18) would
                // demand eigenvalues cleaner than double precision dust and
                // the solver could never sign off.
                if (min_eig >= -1e-7 * std::max(tau, 1e-9)) {
                    res.min_bordered_eig = min_eig;
                    converged = true;
                    break;
                }
                calm_checks = 0;
            }
        }
    }

    // Strong sparsity weights can shrink the whole solution away; snap the
    // numerical dust to an exact zero so the downstream decomposition sees a
    // clean empty atom set. The threshold lives in normalized units (the
    // data was scaled to unit mean column norm), keeping the decision
    // invariant under input scaling.
    if (tau + static_cast<double>(n) * u(0).real() <= 1e-9) {
        u.setZero();
        qm = toeplitz_from_first_col(u);
        tau = 0.0;
        for (auto &v : y)
            v.setZero();
    }

    // Feasibility repair: shift by a * I so every bordered matrix is PSD.
    // The shift leaves the eigenvectors of Q (and hence the retrieved
    // phases) unchanged.
    {
        double min_eig = std::numeric_limits<double>::infinity();
        for (int j = 0; j < t_act; ++j)
            min_eig = std::min(min_eig, detail::min_eigenvalue(detail::bordered(
                                            qm, y[static_cast<std::size_t>(j)], tau)));
        double a = std::max(0.0, -min_eig);
        if (a > 0.0) {
            u(0) += a;
            tau += a;
            qm = toeplitz_from_first_col(u);
            min_eig += a;
        }
        res.min_bordered_eig = min_eig;
        res.q.certified_psd = min_eig >= -1e-7 * std::max(tau, 1e-300);
    }

    res.objective = objective_of(tau, u(0).real());
    res.iterations = std::min(iter, settings.max_iterations);
    res.converged = converged;
    res.primal_residual = primal_res;

    // Undo the normalization and restore input order.
    const double s2 = scale * scale;
    res.q.first_col = u * s2;
    res.tau = tau * s2;
    res.objective *= s2;
    res.min_bordered_eig *= s2;
    res.primal_residual *= s2;
    for (auto &row : res.trace) {
        row.objective *= s2;
        row.primal_residual *= s2;
        row.dual_residual *= s2;
    }
    for (int j = 0; j < t_act; ++j)
        res.y[static_cast<std::size_t>(active[static_cast<std::size_t>(j)])] =
            y[static_cast<std::size_t>(j)] * scale;
    res.wall_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - t_start)
                      .count();

    if (!converged) {
        char msg[160];
        std::snprintf(msg, sizeof(msg),
                      "solve_an_sdp: no convergence after %ld iterations "
                      "(primal residual %.3e, dual residual %.3e)",
                      settings.max_iterations, primal_res, dual_res);
        throw an_sdp_error(msg, res);
    }
    return res;
}

// Writes the recorded solver trace as CSV.
inline void write_solver_trace_csv(const AnSdpResult &result, const std::string &path) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("write_solver_trace_csv: cannot open " + path);
    out << "iteration,objective,primal_residual,dual_residual\n";
    char buf[160];
    for (const auto &row : result.trace) {
        std::snprintf(buf, sizeof(buf), "%ld,%.17g,%.17g,%.17g\n", row.iteration,
                      row.objective, row.primal_residual, row.dual_residual);
        out << buf;
    }
}

// Retrieves the atoms of a Hermitian Toeplitz PSD matrix: rotational
// invariance of the signal subspace gives the phases, nonnegative least
// squares on the (lag-weighted) Toeplitz entries gives the powers.
inline AtomicDecomposition vandermonde_decompose(const ToeplitzPSD &q,
                                                 double rank_tol = 1e-6) {
    if (!(rank_tol > 0.0))
        throw std::invalid_argument("vandermonde_decompose: rank_tol must be positive");
    const int n = q.n();
    if (n < 2)
        throw std::invalid_argument("vandermonde_decompose: need at least two rows");
    Eigen::MatrixXcd full = q.full();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(full);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("vandermonde_decompose: eigendecomposition failed");
    const Eigen::VectorXd &lam = es.eigenvalues();
    const double lam_max = lam(n - 1);
    AtomicDecomposition dec;
    if (lam_max <= 0.0) {
        dec.residual = full.norm() == 0.0 ? 0.0 : 1.0;
        return dec;
    }
    int r = 0;
    for (Eigen::Index i = 0; i < n; ++i)
        if (lam(i) >= rank_tol * lam_max)
            ++r;
    if (r == n)
        throw std::runtime_error(
            "vandermonde_decompose: matrix has full numerical rank; raise rank_tol");

    // Signal subspace shift invariance: rows 1.. of the eigenvector block
    // equal rows 0.. rotated by the atom phases.
    Eigen::MatrixXcd v = es.eigenvectors().rightCols(r);
    Eigen::MatrixXcd u1 = v.topRows(n - 1);
    Eigen::MatrixXcd u2 = v.bottomRows(n - 1);
    Eigen::MatrixXcd psi = u1.colPivHouseholderQr().solve(u2);
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> ces(psi);
    if (ces.info() != Eigen::Success)
        throw std::runtime_error("vandermonde_decompose: rotation eigensolve failed");

    std::vector<double> phases(static_cast<std::size_t>(r));
    for (int p = 0; p < r; ++p)
        phases[static_cast<std::size_t>(p)] =
            wrap_phase(-std::arg(ces.eigenvalues()(p)) / (2.0 * std::numbers::pi));

    // Power fit: sum_p power_p a(b_p) a(b_p)^H is Toeplitz with lag-k entry
    // sum_p power_p e^{-2 pi i b_p k}, so the full-matrix least squares
    // problem collapses to one weighted row per lag.
    Eigen::MatrixXd design(2 * n - 1, r);
    Eigen::VectorXd target(2 * n - 1);
    const double w0 = std::sqrt(static_cast<double>(n));
    target(0) = w0 * q.first_col(0).real();
    for (int p = 0; p < r; ++p)
        design(0, p) = w0;
    for (int k = 1; k < n; ++k) {
        const double wk = std::sqrt(2.0 * static_cast<double>(n - k));
        target(2 * k - 1) = wk * q.first_col(k).real();
        target(2 * k) = wk * q.first_col(k).imag();
        for (int p = 0; p < r; ++p) {
            double ang = -2.0 * std::numbers::pi * phases[static_cast<std::size_t>(p)] *
                         static_cast<double>(k);
            design(2 * k - 1, p) = wk * std::cos(ang);
            design(2 * k, p) = wk * std::sin(ang);
        }
    }
    Eigen::VectorXd powers = nnls(design, target);

    std::vector<std::pair<double, double>> atoms;
    for (int p = 0; p < r; ++p)
        if (powers(p) > 0.0)
            atoms.emplace_back(phases[static_cast<std::size_t>(p)], powers(p));
    std::sort(atoms.begin(), atoms.end());

    Eigen::MatrixXcd recon = Eigen::MatrixXcd::Zero(n, n);
    for (const auto &[phase, power] : atoms) {
        Eigen::VectorXcd a(n);
        for (int k = 0; k < n; ++k) {
            double ang = -2.0 * std::numbers::pi * phase * static_cast<double>(k);
            a(k) = cd(std::cos(ang), std::sin(ang));
        }
        recon += power * a * a.adjoint();
    }
    double denom = full.norm();
    dec.residual = denom > 0.0 ? (full - recon).norm() / denom : 0.0;
    for (const auto &[phase, power] : atoms) {
        dec.phases.push_back(phase);
        dec.powers.push_back(power);
    }
    return dec;
}

// Gridless angle estimation: denoise the batch through the atomic-norm
// program, decompose the Toeplitz factor, keep the s strongest atoms.
inline PhaseShiftEstimate gae_estimate(const std::vector<Eigen::VectorXcd> &batch,
                                       const SdpSettings &settings, int s) {
    if (s < 0)
        throw std::invalid_argument("gae_estimate: atom count must be nonnegative");
    PhaseShiftEstimate est;
    est.method = AngleMethod::Gae;
    if (s == 0)
        return est;
    if (batch.empty())
        throw std::invalid_argument("gae_estimate: empty batch");
    const int n = static_cast<int>(batch[0].size());
    if (s > n - 1)
        throw std::invalid_argument("gae_estimate: atom count must be below the antenna count");

    AnSdpResult solved = solve_an_sdp(batch, settings);
    est.diag.solver_iterations = solved.iterations;
    est.diag.solver_objective = solved.objective;

    AtomicDecomposition dec = vandermonde_decompose(solved.q, settings.rank_tol);
    if (dec.count() < s) {
        // One retry with a finer rank cutoff pulls in weak atoms the first
        // pass discarded.
        dec = vandermonde_decompose(solved.q, settings.rank_tol / 10.0);
        est.diag.rank_tol_lowered = true;
    }
    if (dec.count() < s)
        throw std::runtime_error("gae_estimate: recovered " + std::to_string(dec.count()) +
                                 " atoms, need " + std::to_string(s));
    est.diag.decomposition_residual = dec.residual;

    std::vector<int> order(static_cast<std::size_t>(dec.count()));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        if (dec.powers[static_cast<std::size_t>(a)] != dec.powers[static_cast<std::size_t>(b)])
            return dec.powers[static_cast<std::size_t>(a)] >
                   dec.powers[static_cast<std::size_t>(b)];
        return dec.phases[static_cast<std::size_t>(a)] < dec.phases[static_cast<std::size_t>(b)];
    });
    est.values.reserve(static_cast<std::size_t>(s));
    for (int k = 0; k < s; ++k)
        est.values.push_back(dec.phases[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])]);
    std::sort(est.values.begin(), est.values.end());
    return est;
}

} // namespace raycov
