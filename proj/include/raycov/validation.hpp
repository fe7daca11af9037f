// SPDX-License-Identifier: MIT
//
// raycov: spatial covariance estimation for few-ray interference channels
// Copyright (c) 2026 the raycov authors
//
// End-to-end checks tying the Monte Carlo machinery to the closed-form
// expressions and to known exact-recovery regimes. The same checks back the
// `raycov validate` subcommand and the acceptance test binary.

#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "raycov/angle_variants.hpp"
#include "raycov/covariance.hpp"
#include "raycov/gridless.hpp"
#include "raycov/harness.hpp"
#include "raycov/link_metrics.hpp"
#include "raycov/scenario.hpp"

namespace raycov {

struct CriterionResult {
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

namespace detail {

constexpr std::uint64_t accept_seed = 20260819;

inline double wrap_dist(double a, double b) { return std::abs(wrap_phase(a - b)); }

inline std::string fmt(const char *spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

// Small well-separated two-interferer scenario used by the closed-form MSE
// checks.
inline ScenarioConfig small_scenario() {
    ScenarioConfig cfg;
    cfg.n_bs_antennas = 8;
    cfg.n_interferers = 2;
    cfg.n_rays = 2;
    cfg.n_int_antennas = 1;
    cfg.aoa_mean = {0.6, -0.4};
    cfg.aoa_support = std::numbers::pi / 6;
    cfg.rng_seed = accept_seed;
    return cfg;
}

class Timer {
  public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

  private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

} // namespace detail

// Criterion: the Monte Carlo MSE of the sample covariance matches
// trace(R)^2 / (T N^2) within 3% at T in {2, 4, 8} (10^4 trials each),
// within one minute.
inline CriterionResult check_ls_mse_formula() {
    detail::Timer timer;
    CriterionResult res;
    res.name = "ls-mse-analysis";
    ScenarioConfig cfg = detail::small_scenario();
    RaySet rays = draw_rayset(cfg, Rng::derive(cfg.rng_seed, {stream::rays}));
    cfg.noise_power = noise_power_for_rot(interference_covariance(rays, cfg), 0.0);
    CovEstimate truth = true_covariance(rays, cfg);

    const long trials = 10000;
    const double tol = 0.03;
    bool pass = true;
    std::string detail_str;
    for (int t : {2, 4, 8}) {
        KahanSum acc;
        for (long k = 0; k < trials; ++k) {
            Rng rng = Rng::derive(cfg.rng_seed, {stream::trial, static_cast<std::uint64_t>(t),
                                                 static_cast<std::uint64_t>(k)});
            acc.add(mse(ls_estimate(generate_samples(rays, cfg, t, rng)), truth));
        }
        double mc = acc.value() / static_cast<double>(trials);
        double formula = gamma_ls(truth, t);
        double rel = std::abs(mc - formula) / formula;
        pass = pass && rel <= tol;
        detail_str += "T=" + std::to_string(t) + " rel=" + detail::fmt("%.4f", rel) + "  ";
    }
    res.seconds = timer.seconds();
    pass = pass && res.seconds < 60.0;
    res.pass = pass;
    res.detail = detail_str + "(tol 0.03, budget 60 s)";
    return res;
}

// Criterion: the Monte Carlo MSE of the projection-based estimator with the
// exact steering basis matches trace(R - sigma^2 (I - A A^+))^2 / (T N^2)
// within 3% at T in {2, 4, 8}, within two minutes.
inline CriterionResult check_pbce_mse_formula() {
    detail::Timer timer;
    CriterionResult res;
    res.name = "pbce-mse-analysis";
    ScenarioConfig cfg = detail::small_scenario();
    RaySet rays = draw_rayset(cfg, Rng::derive(cfg.rng_seed, {stream::rays}));
    cfg.noise_power = noise_power_for_rot(interference_covariance(rays, cfg), 0.0);
    CovEstimate truth = true_covariance(rays, cfg);
    SteeringBasis basis = steering_basis(rays, cfg.n_bs_antennas);
    PhaseShiftEstimate beta;
    beta.method = AngleMethod::Id;
    beta.values = true_phase_shifts(rays);

    const long trials = 10000;
    const double tol = 0.03;
    bool pass = true;
    std::string detail_str;
    for (int t : {2, 4, 8}) {
        KahanSum acc;
        for (long k = 0; k < trials; ++k) {
            Rng rng = Rng::derive(cfg.rng_seed, {stream::trial, static_cast<std::uint64_t>(t),
                                                 static_cast<std::uint64_t>(k)});
            CovEstimate ls = ls_estimate(generate_samples(rays, cfg, t, rng));
            acc.add(mse(pbce_reconstruct(ls, beta, cfg.noise_power), truth));
        }
        double mc = acc.value() / static_cast<double>(trials);
        double formula = gamma_pbce(truth, basis, cfg.noise_power, t);
        double rel = std::abs(mc - formula) / formula;
        pass = pass && rel <= tol;
        detail_str += "T=" + std::to_string(t) + " rel=" + detail::fmt("%.4f", rel) + "  ";
    }
    res.seconds = timer.seconds();
    pass = pass && res.seconds < 120.0;
    res.pass = pass;
    res.detail = detail_str + "(tol 0.03, budget 120 s)";
    return res;
}

// Criterion: the product-variance identity Var(x y*) = vx vy holds
// empirically within 2% for five random (vx, vy, xi) triples, 10^6 draws
// each, within 30 seconds.
inline CriterionResult check_product_variance() {
    detail::Timer timer;
    CriterionResult res;
    res.name = "product-variance";
    Rng picker = Rng::derive(detail::accept_seed, {0xA9});
    bool pass = true;
    std::string detail_str;
    for (int c = 0; c < 5; ++c) {
        double vx = picker.uniform(0.5, 3.0);
        double vy = picker.uniform(0.5, 3.0);
        double mag = picker.uniform(0.0, 0.95);
        double ang = picker.uniform(0.0, 2.0 * std::numbers::pi);
        std::complex<double> xi(mag * std::cos(ang), mag * std::sin(ang));
        Rng rng = Rng::derive(detail::accept_seed, {0xA9, static_cast<std::uint64_t>(c + 1)});
        auto [empirical, analytic] =
            gaussian_product_variance_oracle(vx, vy, xi, 1000000, rng);
        double rel = std::abs(empirical - analytic) / analytic;
        pass = pass && rel <= 0.02;
        detail_str += detail::fmt("%.4f ", rel);
    }
    res.seconds = timer.seconds();
    pass = pass && res.seconds < 30.0;
    res.pass = pass;
    res.detail = "rel errors: " + detail_str + "(tol 0.02, budget 30 s)";
    return res;
}

// Criterion: the decomposition is exact (1e-6) on constructed Toeplitz
// inputs, and the gridless estimator recovers all phases of 100 random
// noiseless instances (N = 16, up to 3 unit-amplitude atoms, separation at
// least 1/N) within 1e-3 cycles, within five minutes.
inline CriterionResult check_gridless_recovery() {
    detail::Timer timer;
    CriterionResult res;
    res.name = "gridless-recovery";
    bool pass = true;
    std::string detail_str;

    // Constructed inputs with known atoms.
    {
        const int n = 16;
        const std::vector<std::pair<double, double>> atoms = {
            {-0.31, 2.0}, {0.07, 1.0}, {0.33, 5.0}};
        Eigen::VectorXcd u = Eigen::VectorXcd::Zero(n);
        for (int k = 0; k < n; ++k)
            for (const auto &[b, p] : atoms) {
                double angv = -2.0 * std::numbers::pi * b * k;
                u(k) += p * cd(std::cos(angv), std::sin(angv));
            }
        ToeplitzPSD q;
        q.first_col = u;
        AtomicDecomposition dec = vandermonde_decompose(q, 1e-6);
        bool ok = dec.count() == 3 && dec.residual <= 1e-6;
        for (std::size_t i = 0; ok && i < atoms.size(); ++i) {
            ok = ok && detail::wrap_dist(dec.phases[i], atoms[i].first) <= 1e-6;
            ok = ok && std::abs(dec.powers[i] - atoms[i].second) <= 1e-6 * atoms[i].second;
        }
        // Single atom, minimal size.
        Eigen::VectorXcd u1(4);
        for (int k = 0; k < 4; ++k) {
            double angv = -2.0 * std::numbers::pi * 0.25 * k;
            u1(k) = cd(std::cos(angv), std::sin(angv));
        }
        ToeplitzPSD q1;
        q1.first_col = u1;
        AtomicDecomposition dec1 = vandermonde_decompose(q1, 1e-6);
        ok = ok && dec1.count() == 1 && detail::wrap_dist(dec1.phases[0], 0.25) <= 1e-6 &&
             std::abs(dec1.powers[0] - 1.0) <= 1e-6;
        pass = pass && ok;
        detail_str += ok ? "decomposition exact  " : "decomposition FAILED  ";
    }

    // Random noiseless single-snapshot instances.
    {
        const int n = 16;
        const int instances = 100;
        SdpSettings settings;
        // Noiseless instances: the only angle error left is the shrinkage
        // bias of the atomic-norm penalty, which scales with eta. 0.002
        // keeps the worst instance (a pair near the 1/N separation floor)
        // a factor 3 under the 1e-3 tolerance.
        settings.eta = 0.002;
        settings.epsilon = 1e-12;
        settings.max_iterations = 100000;
        int failed = 0;
        double worst = 0.0;
        for (int inst = 0; inst < instances; ++inst) {
            Rng rng = Rng::derive(detail::accept_seed, {0xC4, static_cast<std::uint64_t>(inst)});
            const int k_atoms = 1 + inst % 3;
            std::vector<double> betas;
            // Rejection sampling keeps the circular separation at 1/N or
            // more.
            for (int tries = 0; tries < 1000; ++tries) {
                betas.clear();
                for (int a = 0; a < k_atoms; ++a)
                    betas.push_back(rng.uniform(-0.5, 0.5));
                bool ok = true;
                for (int a = 0; a < k_atoms && ok; ++a)
                    for (int b = a + 1; b < k_atoms; ++b)
                        if (detail::wrap_dist(betas[static_cast<std::size_t>(a)],
                                              betas[static_cast<std::size_t>(b)]) <
                            1.0 / static_cast<double>(n))
                            ok = false;
                if (ok)
                    break;
            }
            Eigen::VectorXcd snapshot = Eigen::VectorXcd::Zero(n);
            for (double b : betas) {
                double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
                snapshot += cd(std::cos(phase), std::sin(phase)) * steering_vector(n, b);
            }
            try {
                PhaseShiftEstimate est =
                    gae_estimate({snapshot}, settings, k_atoms);
                for (double b : betas) {
                    double best = 1.0;
                    for (double v : est.values)
                        best = std::min(best, detail::wrap_dist(v, b));
                    worst = std::max(worst, best);
                    if (best > 1e-3)
                        ++failed;
                }
            } catch (const std::exception &) {
                ++failed;
            }
        }
        pass = pass && failed == 0;
        detail_str += "instances failed=" + std::to_string(failed) +
                      " worst=" + detail::fmt("%.2e", worst) + "  ";
    }

    res.seconds = timer.seconds();
    pass = pass && res.seconds < 300.0;
    res.pass = pass;
    res.detail = detail_str + "(budget 300 s)";
    return res;
}

// Criterion: on the exact covariance of two point sources, the subspace
// variant recovers the phases to 1e-6 and the grid search lands within one
// grid cell (1e-3 at 1000 points).
inline CriterionResult check_exact_cov_angles() {
    detail::Timer timer;
    CriterionResult res;
    res.name = "exact-covariance-angles";
    ScenarioConfig cfg;
    cfg.n_bs_antennas = 16;
    cfg.n_interferers = 2;
    cfg.n_rays = 1;
    cfg.n_int_antennas = 1;
    cfg.aoa_mean = {0.5, -0.7};
    cfg.aoa_support = 0.0; // point sources: the angles are the means exactly
    cfg.rng_seed = detail::accept_seed;
    RaySet rays = draw_rayset(cfg, Rng::derive(cfg.rng_seed, {stream::rays}));
    cfg.noise_power = noise_power_for_rot(interference_covariance(rays, cfg), 0.0);
    CovEstimate truth = true_covariance(rays, cfg);
    std::vector<double> expected = true_phase_shifts(rays);

    bool pass = true;
    std::string detail_str;
    {
        SdpSettings settings;
        // The input is exact, so the optimal support is exact at any
        // moderate eta; below ~1e-3 the data block turns near-singular and
        // the solver tail-crawls instead of converging.
        settings.eta = 1e-3;
        settings.epsilon = 1e-11;
        settings.max_iterations = 200000;
        PhaseShiftEstimate est = sge_estimate(truth, cfg.noise_power, 2, settings);
        double worst = 0.0;
        for (std::size_t i = 0; i < expected.size(); ++i)
            worst = std::max(worst, detail::wrap_dist(est.values[i], expected[i]));
        pass = pass && worst <= 1e-6;
        detail_str += "subspace worst=" + detail::fmt("%.2e", worst) + " (tol 1e-6)  ";
    }
    {
        PhaseShiftEstimate est = music_estimate(truth, cfg.noise_power, 2, 1000);
        double worst = 0.0;
        for (std::size_t i = 0; i < expected.size(); ++i)
            worst = std::max(worst, detail::wrap_dist(est.values[i], expected[i]));
        pass = pass && worst <= 1e-3;
        detail_str += "grid worst=" + detail::fmt("%.2e", worst) + " (tol 1e-3)";
    }
    res.seconds = timer.seconds();
    res.pass = pass;
    res.detail = detail_str;
    return res;
}

namespace detail {

inline const AggregateRow &agg_for(const RunResult &run, CovMethod m, int t, double rot) {
    for (const auto &a : run.aggregates)
        if (a.estimator == m && a.t == t && a.rot_db == rot)
            return a;
    throw std::runtime_error("validation: missing aggregate row");
}

inline double diff_se(const AggregateRow &a, const AggregateRow &b) {
    return std::sqrt(a.mse_stderr * a.mse_stderr + b.mse_stderr * b.mse_stderr);
}

} // namespace detail

// Criterion: with the reference scenario at T = 2 and 500 trials per ratio,
// the estimators order as expected. The significance-bearing chain applies
// at -10 dB: the genie is at most as bad as the gridless variant (2 stderr
// slack), the three angle variants agree within a factor 1.6, and both the
// subspace variant and plain LS sit significantly above them. At 0 and
// +10 dB the shared ray powers dominate the trial-to-trial spread, so only
// the directional facts are asserted there: the genie stays at or below
// every variant and every variant's mean beats LS.
inline CriterionResult check_mse_ordering() {
    detail::Timer timer;
    CriterionResult res;
    res.name = "mse-ordering";
    ExperimentPlan plan;
    plan.scenario.rng_seed = detail::accept_seed;
    plan.rot_db = {-10.0, 0.0, 10.0};
    plan.t_values = {2};
    plan.estimators = {CovMethod::Ls,      CovMethod::PbceId,  CovMethod::PbceGae,
                       CovMethod::PbceSge, CovMethod::PbceGec, CovMethod::PbceMusic};
    plan.trials = 500;
    plan.eta_auto = true;
    plan.sdp.epsilon = 1e-5;
    plan.sdp.max_iterations = 8000;
    plan.threads = 0;
    RunResult run = run_experiment(plan);

    bool pass = true;
    std::string detail_str;
    const int t = 2;
    {
        const double rot = -10.0;
        const auto &ls = detail::agg_for(run, CovMethod::Ls, t, rot);
        const auto &id = detail::agg_for(run, CovMethod::PbceId, t, rot);
        const auto &gae = detail::agg_for(run, CovMethod::PbceGae, t, rot);
        const auto &sge = detail::agg_for(run, CovMethod::PbceSge, t, rot);
        const auto &gec = detail::agg_for(run, CovMethod::PbceGec, t, rot);
        const auto &music = detail::agg_for(run, CovMethod::PbceMusic, t, rot);
        bool ok = id.mse_mean <= gae.mse_mean + 2.0 * detail::diff_se(id, gae);
        for (const auto *a : {&gae, &gec, &music})
            for (const auto *b : {&gae, &gec, &music}) {
                double ratio = a->mse_mean / b->mse_mean;
                ok = ok && ratio <= 1.6 && ratio >= 1.0 / 1.6;
            }
        for (const auto *v : {&gae, &gec, &music})
            ok = ok && sge.mse_mean > v->mse_mean + 2.0 * detail::diff_se(sge, *v);
        ok = ok && ls.mse_mean > sge.mse_mean + 2.0 * detail::diff_se(ls, sge);
        pass = pass && ok;
        detail_str += "-10dB " + std::string(ok ? "ok" : "FAILED") +
                      " [ID " + detail::fmt("%.3e", id.mse_mean) + " GAE " +
                      detail::fmt("%.3e", gae.mse_mean) + " GEC " +
                      detail::fmt("%.3e", gec.mse_mean) + " MUSIC " +
                      detail::fmt("%.3e", music.mse_mean) + " SGE " +
                      detail::fmt("%.3e", sge.mse_mean) + " LS " +
                      detail::fmt("%.3e", ls.mse_mean) + "]  ";
    }
    for (double rot : {0.0, 10.0}) {
        const auto &ls = detail::agg_for(run, CovMethod::Ls, t, rot);
        const auto &id = detail::agg_for(run, CovMethod::PbceId, t, rot);
        bool ok = true;
        for (CovMethod m : {CovMethod::PbceGae, CovMethod::PbceSge, CovMethod::PbceGec,
                            CovMethod::PbceMusic}) {
            const auto &v = detail::agg_for(run, m, t, rot);
            ok = ok && id.mse_mean <= v.mse_mean + 2.0 * detail::diff_se(id, v);
            ok = ok && v.mse_mean < ls.mse_mean;
        }
        pass = pass && ok;
        detail_str += detail::fmt("%+g", rot) + "dB " + (ok ? "ok" : "FAILED") + "  ";
    }
    res.seconds = timer.seconds();
    res.pass = pass;
    res.detail = detail_str + "failures=" + std::to_string(run.failures);
    return res;
}

// Criterion: throughput grows with the training length. For T = 2..10 at
// 0 dB (150 trials per T), every estimator's mean throughput is
// non-decreasing within 2 stderr and every projection-based variant beats
// plain LS at every T.
inline CriterionResult check_throughput_trend() {
    detail::Timer timer;
    CriterionResult res;
    res.name = "throughput-trend";
    ExperimentPlan plan;
    plan.scenario.rng_seed = detail::accept_seed;
    plan.rot_db = {0.0};
    plan.t_values = {2, 3, 4, 5, 6, 7, 8, 9, 10};
    plan.estimators = {CovMethod::Ls,      CovMethod::PbceId,  CovMethod::PbceGae,
                       CovMethod::PbceSge, CovMethod::PbceGec, CovMethod::PbceMusic};
    plan.trials = 150;
    plan.eta_auto = true;
    plan.sdp.epsilon = 1e-5;
    plan.sdp.max_iterations = 8000;
    plan.threads = 0;
    RunResult run = run_experiment(plan);

    bool pass = true;
    std::string detail_str;
    for (CovMethod m : plan.estimators) {
        bool mono = true;
        for (std::size_t i = 1; i < plan.t_values.size(); ++i) {
            const auto &prev =
                detail::agg_for(run, m, plan.t_values[i - 1], 0.0);
            const auto &cur = detail::agg_for(run, m, plan.t_values[i], 0.0);
            double slack = 2.0 * std::sqrt(prev.rho_stderr * prev.rho_stderr +
                                           cur.rho_stderr * cur.rho_stderr);
            if (cur.rho_mean < prev.rho_mean - slack)
                mono = false;
        }
        pass = pass && mono;
        detail_str += to_string(m) + (mono ? " mono " : " NOT-MONO ");
    }
    bool beats = true;
    for (int t : plan.t_values) {
        const auto &ls = detail::agg_for(run, CovMethod::Ls, t, 0.0);
        for (CovMethod m : {CovMethod::PbceId, CovMethod::PbceGae, CovMethod::PbceSge,
                            CovMethod::PbceGec, CovMethod::PbceMusic}) {
            const auto &v = detail::agg_for(run, m, t, 0.0);
            if (!(v.rho_mean > ls.rho_mean))
                beats = false;
        }
    }
    pass = pass && beats;
    res.seconds = timer.seconds();
    res.pass = pass;
    res.detail = detail_str + (beats ? "variants>LS at all T" : "variants>LS FAILED") +
                 " failures=" + std::to_string(run.failures);
    return res;
}

// Criterion: whitening with the exact covariance closes the gap: c, c_hat
// and c_opt agree to 1e-10 over 10^3 random links.
inline CriterionResult check_rate_identity() {
    detail::Timer timer;
    CriterionResult res;
    res.name = "rate-identity";
    ScenarioConfig cfg;
    cfg.rng_seed = detail::accept_seed;
    bool pass = true;
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
        Rng rng = Rng::derive(cfg.rng_seed, {0xC8, static_cast<std::uint64_t>(k)});
        RaySet rays = draw_rayset(cfg, rng);
        ScenarioConfig cfg_k = cfg;
        cfg_k.noise_power = noise_power_for_rot(interference_covariance(rays, cfg_k), 0.0);
        CovEstimate truth = true_covariance(rays, cfg_k);

        Rng user_rng = rng.fork({stream::user});
        ScenarioConfig user_cfg = cfg_k;
        user_cfg.n_interferers = 1;
        user_cfg.aoa_mean = {user_rng.uniform(-std::numbers::pi / 2, std::numbers::pi / 2)};
        RaySet user_rays = draw_rayset(user_cfg, user_rng);

        LinkRealization link;
        link.h = synth_channel(user_rays, user_cfg, 0).col(0);
        link.symbol_power = 1.0;
        link.r_hat = truth;
        link.r = truth;
        RateReport rep = rate_report(link, 1.0);
        worst = std::max(worst, std::abs(rep.c - rep.c_hat));
        worst = std::max(worst, std::abs(rep.c - rep.c_opt));
    }
    pass = worst <= 1e-10;
    res.seconds = timer.seconds();
    res.pass = pass;
    res.detail = "worst gap=" + detail::fmt("%.2e", worst) + " (tol 1e-10)";
    return res;
}

namespace detail {

inline std::string slurp(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("validation: cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace detail

// Criterion: rerunning the same plan (same seed, same thread count) yields
// byte-identical trials.csv and aggregate.csv.
inline CriterionResult check_deterministic_rerun() {
    detail::Timer timer;
    CriterionResult res;
    res.name = "deterministic-rerun";
    namespace fs = std::filesystem;
    ExperimentPlan plan;
    plan.scenario = detail::small_scenario();
    plan.rot_db = {0.0, 10.0};
    plan.t_values = {2, 4};
    plan.estimators = {CovMethod::Ls, CovMethod::PbceId, CovMethod::PbceGae,
                       CovMethod::PbceMusic};
    plan.trials = 50;
    plan.sdp.eta = 0.2;
    plan.sdp.epsilon = 1e-5;
    plan.sdp.max_iterations = 1500;
    plan.threads = 0;

    const std::string dir1 = (fs::temp_directory_path() / "raycov_det_a").string();
    const std::string dir2 = (fs::temp_directory_path() / "raycov_det_b").string();
    fs::remove_all(dir1);
    fs::remove_all(dir2);
    plan.out_dir = dir1;
    run_experiment(plan);
    plan.out_dir = dir2;
    run_experiment(plan);

    bool pass = true;
    std::string detail_str;
    for (const char *f : {"trials.csv", "aggregate.csv", "metadata.json"}) {
        std::string a = detail::slurp(dir1 + "/" + f);
        std::string b = detail::slurp(dir2 + "/" + f);
        // metadata echoes the plan including out_dir; normalize it.
        if (std::string(f) == "metadata.json") {
            auto scrub = [&](std::string s, const std::string &dir) {
                std::size_t pos;
                while ((pos = s.find(dir)) != std::string::npos)
                    s.erase(pos, dir.size());
                return s;
            };
            a = scrub(a, dir1);
            b = scrub(b, dir2);
        }
        bool same = a == b;
        pass = pass && same;
        detail_str += std::string(f) + (same ? " identical  " : " DIFFERS  ");
    }
    res.seconds = timer.seconds();
    res.pass = pass;
    res.detail = detail_str;
    return res;
}

inline std::vector<CriterionResult> run_validation_suite(const std::string &suite) {
    std::vector<CriterionResult> out;
    if (suite == "mse-analysis") {
        out.push_back(check_ls_mse_formula());
        out.push_back(check_pbce_mse_formula());
    } else if (suite == "appendix") {
        out.push_back(check_product_variance());
    } else if (suite == "recovery") {
        out.push_back(check_gridless_recovery());
        out.push_back(check_exact_cov_angles());
    } else if (suite == "trends") {
        out.push_back(check_mse_ordering());
        out.push_back(check_throughput_trend());
    } else if (suite == "rates") {
        out.push_back(check_rate_identity());
    } else if (suite == "determinism") {
        out.push_back(check_deterministic_rerun());
    } else if (suite == "all") {
        out.push_back(check_ls_mse_formula());
        out.push_back(check_pbce_mse_formula());
        out.push_back(check_product_variance());
        out.push_back(check_gridless_recovery());
        out.push_back(check_exact_cov_angles());
        out.push_back(check_mse_ordering());
        out.push_back(check_throughput_trend());
        out.push_back(check_rate_identity());
        out.push_back(check_deterministic_rerun());
    } else {
        throw std::invalid_argument("unknown validation suite: " + suite);
    }
    return out;
}

} // namespace raycov
