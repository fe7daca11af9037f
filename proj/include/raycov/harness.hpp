// SPDX-License-Identifier: MIT
//
// raycov: spatial covariance estimation for few-ray interference channels
// Copyright (c) 2026 the raycov authors

#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "raycov/angle_variants.hpp"
#include "raycov/covariance.hpp"
#include "raycov/gridless.hpp"
#include "raycov/link_metrics.hpp"
#include "raycov/scenario.hpp"
#include "raycov/types.hpp"

namespace raycov {

// A full Monte Carlo experiment: a scenario swept over interference-to-noise
// ratios and snapshot counts, a set of estimators, and a user link whose
// throughput is scored against each estimate.
struct ExperimentPlan {
    ScenarioConfig scenario;
    std::vector<double> rot_db = {0.0};
    std::vector<int> t_values = {2};
    std::vector<CovMethod> estimators = {CovMethod::Ls};
    long trials = 1;
    double delta_step = 0.01;
    bool fixed_rays = false;
    int window_size = 1;  // snapshots per window for the clustered estimator
    int music_grid = 1000;
    SdpSettings sdp;
    bool eta_auto = false; // calibrate sdp.eta per ratio before the sweep
    double user_symbol_power = 1.0;
    std::array<double, 2> user_aoa_interval = {-std::numbers::pi / 2, std::numbers::pi / 2};
    int threads = 1; // 0 = all hardware threads
    std::string out_dir;

    void validate() const {
        auto bad = [](const std::string &m) { throw std::invalid_argument("plan: " + m); };
        scenario.validate();
        sdp.validate();
        if (trials < 1)
            bad("trials must be positive");
        if (rot_db.empty())
            bad("rot_db must not be empty");
        for (double r : rot_db)
            if (!std::isfinite(r))
                bad("rot_db values must be finite");
        if (t_values.empty())
            bad("t_values must not be empty");
        for (int t : t_values)
            if (t < 1)
                bad("t_values must be positive");
        if (estimators.empty())
            bad("estimators must not be empty");
        for (CovMethod m : estimators)
            if (m == CovMethod::True)
                bad("the exact covariance is not a selectable estimator");
        if (!(delta_step > 0.0 && delta_step <= 1.0))
            bad("delta_step must lie in (0, 1]");
        if (window_size < 1)
            bad("window_size must be positive");
        if (music_grid < 2)
            bad("music_grid is too small");
        if (!(user_symbol_power > 0.0))
            bad("user_symbol_power must be positive");
        if (!std::isfinite(user_aoa_interval[0]) || !std::isfinite(user_aoa_interval[1]) ||
            user_aoa_interval[0] > user_aoa_interval[1])
            bad("user_aoa_interval must be a finite [lo, hi]");
        if (threads < 0)
            bad("threads must be nonnegative");
    }
};

// One estimator's outcome on one trial. An empty error string marks success;
// on failure the metric fields hold NaN and the error holds the reason.
struct TrialRecord {
    long trial = 0;
    CovMethod estimator = CovMethod::Ls;
    int t = 0;
    double rot_db = 0.0;
    double mse = std::numeric_limits<double>::quiet_NaN();
    double c = std::numeric_limits<double>::quiet_NaN();
    double c_hat = std::numeric_limits<double>::quiet_NaN();
    double rho = std::numeric_limits<double>::quiet_NaN();
    double delta = std::numeric_limits<double>::quiet_NaN();
    double wall_ms = 0.0;
    long solver_iterations = 0;
    std::string error;
    double gamma_ls_v = std::numeric_limits<double>::quiet_NaN();
    double gamma_pbce_v = std::numeric_limits<double>::quiet_NaN();
    double c_opt = std::numeric_limits<double>::quiet_NaN();
};

struct AggregateRow {
    CovMethod estimator = CovMethod::Ls;
    int t = 0;
    double rot_db = 0.0;
    long trials_ok = 0;
    long trials_failed = 0;
    double delta_star = std::numeric_limits<double>::quiet_NaN();
    double mse_mean = std::numeric_limits<double>::quiet_NaN();
    double mse_stderr = std::numeric_limits<double>::quiet_NaN();
    double c_mean = std::numeric_limits<double>::quiet_NaN();
    double c_stderr = std::numeric_limits<double>::quiet_NaN();
    double c_hat_mean = std::numeric_limits<double>::quiet_NaN();
    double c_hat_stderr = std::numeric_limits<double>::quiet_NaN();
    double rho_mean = std::numeric_limits<double>::quiet_NaN();
    double rho_stderr = std::numeric_limits<double>::quiet_NaN();
    double c_opt_mean = std::numeric_limits<double>::quiet_NaN();
    double c_opt_stderr = std::numeric_limits<double>::quiet_NaN();
    double gamma_ls_mean = std::numeric_limits<double>::quiet_NaN();
    double gamma_pbce_mean = std::numeric_limits<double>::quiet_NaN();
};

struct RunResult {
    int exit_code = 0;
    long failures = 0;
    std::vector<TrialRecord> records;
    std::vector<AggregateRow> aggregates;
    std::map<double, double> eta_used; // per rot value
    std::string out_dir;
};

// ---------------------------------------------------------------------------
// Plan JSON form.

inline nlohmann::json plan_to_json(const ExperimentPlan &p) {
    nlohmann::json j;
    j["scenario"] = scenario_to_json(p.scenario);
    j["rot_db"] = p.rot_db;
    j["t_values"] = p.t_values;
    nlohmann::json est = nlohmann::json::array();
    for (CovMethod m : p.estimators)
        est.push_back(to_string(m));
    j["estimators"] = est;
    j["trials"] = p.trials;
    j["delta_step"] = p.delta_step;
    j["fixed_rays"] = p.fixed_rays;
    j["window_size"] = p.window_size;
    j["music_grid"] = p.music_grid;
    nlohmann::json sdp;
    if (p.eta_auto)
        sdp["eta"] = "auto";
    else
        sdp["eta"] = p.sdp.eta;
    sdp["epsilon"] = p.sdp.epsilon;
    sdp["max_iterations"] = p.sdp.max_iterations;
    sdp["rank_tol"] = p.sdp.rank_tol;
    sdp["rho"] = p.sdp.rho;
    sdp["over_relax"] = p.sdp.over_relax;
    sdp["adapt_rho"] = p.sdp.adapt_rho;
    sdp["solver"] = p.sdp.solver;
    j["sdp"] = sdp;
    j["user_symbol_power"] = p.user_symbol_power;
    j["user_aoa_interval"] = {p.user_aoa_interval[0], p.user_aoa_interval[1]};
    j["threads"] = p.threads;
    if (!p.out_dir.empty())
        j["out_dir"] = p.out_dir;
    return j;
}

inline ExperimentPlan plan_from_json(const nlohmann::json &j) {
    static const char *known[] = {"scenario",    "rot_db",     "t_values",
                                  "estimators",  "trials",     "delta_step",
                                  "fixed_rays",  "window_size", "music_grid",
                                  "sdp",         "user_symbol_power",
                                  "user_aoa_interval",          "threads",
                                  "out_dir"};
    if (!j.is_object())
        throw std::invalid_argument("plan: must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char *k : known)
            if (it.key() == k) {
                ok = true;
                break;
            }
        if (!ok)
            throw std::invalid_argument("plan: unknown key \"" + it.key() + "\"");
    }
    ExperimentPlan p;
    if (j.contains("scenario"))
        p.scenario = scenario_from_json(j.at("scenario"));
    if (j.contains("rot_db"))
        p.rot_db = j.at("rot_db").get<std::vector<double>>();
    if (j.contains("t_values"))
        p.t_values = j.at("t_values").get<std::vector<int>>();
    if (j.contains("estimators")) {
        p.estimators.clear();
        for (const auto &e : j.at("estimators"))
            p.estimators.push_back(cov_method_from_string(e.get<std::string>()));
    }
    if (j.contains("trials"))
        p.trials = j.at("trials").get<long>();
    if (j.contains("delta_step"))
        p.delta_step = j.at("delta_step").get<double>();
    if (j.contains("fixed_rays"))
        p.fixed_rays = j.at("fixed_rays").get<bool>();
    if (j.contains("window_size"))
        p.window_size = j.at("window_size").get<int>();
    if (j.contains("music_grid"))
        p.music_grid = j.at("music_grid").get<int>();
    if (j.contains("sdp")) {
        const auto &s = j.at("sdp");
        static const char *sdp_known[] = {"eta",  "epsilon",    "max_iterations", "rank_tol",
                                          "rho",  "over_relax", "adapt_rho",      "solver",
                                          "trace_every"};
        for (auto it = s.begin(); it != s.end(); ++it) {
            bool ok = false;
            for (const char *k : sdp_known)
                if (it.key() == k) {
                    ok = true;
                    break;
                }
            if (!ok)
                throw std::invalid_argument("plan: unknown sdp key \"" + it.key() + "\"");
        }
        if (s.contains("eta")) {
            if (s.at("eta").is_string()) {
                if (s.at("eta").get<std::string>() != "auto")
                    throw std::invalid_argument("plan: sdp.eta must be a number or \"auto\"");
                p.eta_auto = true;
            } else {
                p.sdp.eta = s.at("eta").get<double>();
            }
        }
        if (s.contains("epsilon"))
            p.sdp.epsilon = s.at("epsilon").get<double>();
        if (s.contains("max_iterations"))
            p.sdp.max_iterations = s.at("max_iterations").get<long>();
        if (s.contains("rank_tol"))
            p.sdp.rank_tol = s.at("rank_tol").get<double>();
        if (s.contains("rho"))
            p.sdp.rho = s.at("rho").get<double>();
        if (s.contains("over_relax"))
            p.sdp.over_relax = s.at("over_relax").get<double>();
        if (s.contains("adapt_rho"))
            p.sdp.adapt_rho = s.at("adapt_rho").get<bool>();
        if (s.contains("solver"))
            p.sdp.solver = s.at("solver").get<std::string>();
        if (s.contains("trace_every"))
            p.sdp.trace_every = s.at("trace_every").get<int>();
    }
    if (j.contains("user_symbol_power"))
        p.user_symbol_power = j.at("user_symbol_power").get<double>();
    if (j.contains("user_aoa_interval")) {
        const auto &a = j.at("user_aoa_interval");
        if (!a.is_array() || a.size() != 2)
            throw std::invalid_argument("plan: user_aoa_interval must be [lo, hi]");
        p.user_aoa_interval = {a[0].get<double>(), a[1].get<double>()};
    }
    if (j.contains("threads"))
        p.threads = j.at("threads").get<int>();
    if (j.contains("out_dir"))
        p.out_dir = j.at("out_dir").get<std::string>();
    p.validate();
    return p;
}

// ---------------------------------------------------------------------------

namespace detail {

inline int resolve_threads(int requested) {
    if (const char *env = std::getenv("RAYCOV_THREADS")) {
        int v = std::atoi(env);
        if (v > 0)
            return v;
    }
    if (requested > 0)
        return requested;
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

// Commas inside error messages would break the CSV; swap them out.
inline std::string csv_safe(std::string s) {
    for (char &c : s)
        if (c == ',' || c == '\n')
            c = ';';
    return s;
}

struct MeanStderr {
    double mean = std::numeric_limits<double>::quiet_NaN();
    double se = std::numeric_limits<double>::quiet_NaN();
    long n = 0;
};

// Mean and standard error of the finite entries, two-pass and compensated so
// the result does not depend on how trials were scheduled.
inline MeanStderr mean_stderr(const std::vector<double> &xs) {
    MeanStderr out;
    KahanSum sum;
    long n = 0;
    for (double x : xs)
        if (std::isfinite(x)) {
            sum.add(x);
            ++n;
        }
    out.n = n;
    if (n == 0)
        return out;
    out.mean = sum.value() / static_cast<double>(n);
    if (n == 1) {
        out.se = 0.0;
        return out;
    }
    KahanSum sq;
    for (double x : xs)
        if (std::isfinite(x)) {
            double d = x - out.mean;
            sq.add(d * d);
        }
    double var = sq.value() / static_cast<double>(n - 1);
    out.se = std::sqrt(var / static_cast<double>(n));
    return out;
}

} // namespace detail

// Picks the fidelity weight for the atomic-norm program by a small search:
// for each candidate eta, a few fresh scenario draws are denoised and the
// matched phase error against the drawn rays is averaged; the eta with the
// smallest error wins (ties to the smaller value).
inline double calibrate_eta(const ScenarioConfig &scenario, double rot_db, int t,
                            const SdpSettings &base, std::uint64_t seed, int draws = 6) {
    static const double grid[] = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    const int s = scenario.n_sources();
    double best_eta = grid[0];
    double best_err = std::numeric_limits<double>::infinity();
    for (double eta : grid) {
        SdpSettings settings = base;
        settings.eta = eta;
        KahanSum err;
        for (int d = 0; d < draws; ++d) {
            Rng rng = Rng::derive(seed, {stream::calibrate, static_cast<std::uint64_t>(d)});
            RaySet rays = draw_rayset(scenario, rng);
            ScenarioConfig cfg = scenario;
            cfg.noise_power = noise_power_for_rot(interference_covariance(rays, cfg), rot_db);
            SampleBatch batch = generate_samples(rays, cfg, t, rng);
            double draw_err = 0.25; // penalty when the estimate fails outright
            try {
                PhaseShiftEstimate est = gae_estimate(batch.samples, settings, s);
                KahanSum matched;
                for (const Ray &r : rays.rays) {
                    double truth = wrap_phase(r.beta);
                    double best = 0.5;
                    for (double v : est.values)
                        best = std::min(best, std::abs(wrap_phase(v - truth)));
                    matched.add(best);
                }
                draw_err = matched.value() / static_cast<double>(s);
            } catch (const std::runtime_error &) {
            }
            err.add(draw_err);
        }
        double mean_err = err.value() / static_cast<double>(draws);
        if (mean_err < best_err - 1e-15) {
            best_err = mean_err;
            best_eta = eta;
        }
    }
    return best_eta;
}

namespace detail {

struct TrialContext {
    const ExperimentPlan *plan = nullptr;
    int rot_idx = 0;
    int t_idx = 0;
    long trial = 0;
    const RaySet *fixed_rays = nullptr;
    double eta = 0.5;
};

// Runs every estimator of the plan on one trial draw. Estimator failures are
// recorded, not thrown; anything failing before the estimators run (sampling
// itself) poisons all records of the trial.
inline std::vector<TrialRecord> run_trial(const TrialContext &ctx) {
    const ExperimentPlan &plan = *ctx.plan;
    const double rot = plan.rot_db[static_cast<std::size_t>(ctx.rot_idx)];
    const int t = plan.t_values[static_cast<std::size_t>(ctx.t_idx)];
    const int s = plan.scenario.n_sources();

    std::vector<TrialRecord> rows(plan.estimators.size());
    for (std::size_t e = 0; e < plan.estimators.size(); ++e) {
        rows[e].trial = ctx.trial;
        rows[e].estimator = plan.estimators[e];
        rows[e].t = t;
        rows[e].rot_db = rot;
    }

    // Keyed by the trial id alone: the same trial reuses the same ray draw,
    // user link and underlying sample variates at every (ROT, T) grid point,
    // so sweep comparisons are paired and trend noise from independent
    // geometry redraws cancels. Cells differ only through the noise scale
    // and the number of snapshots consumed.
    Rng trial_rng = Rng::derive(plan.scenario.rng_seed,
                                {stream::trial, static_cast<std::uint64_t>(ctx.trial)});
    RaySet rays = ctx.fixed_rays != nullptr ? *ctx.fixed_rays
                                            : draw_rayset(plan.scenario, trial_rng);
    ScenarioConfig cfg = plan.scenario;
    cfg.noise_power = noise_power_for_rot(interference_covariance(rays, cfg), rot);
    const double sigma2 = cfg.noise_power;

    CovEstimate truth = true_covariance(rays, cfg);
    SampleBatch batch = generate_samples(rays, cfg, t, trial_rng);
    CovEstimate ls = ls_estimate(batch);

    // User link: same few-ray draw with a single transmitter whose mean
    // bearing is uniform over the configured sector.
    Rng user_rng = trial_rng.fork({stream::user});
    ScenarioConfig user_cfg = cfg;
    user_cfg.n_interferers = 1;
    user_cfg.n_int_antennas = 1;
    user_cfg.symbol_power = Eigen::MatrixXcd::Identity(1, 1);
    user_cfg.aoa_mean = {user_rng.uniform(plan.user_aoa_interval[0], plan.user_aoa_interval[1])};
    user_cfg.ray_powers.clear();
    RaySet user_rays = draw_rayset(user_cfg, user_rng);
    Eigen::VectorXcd h = synth_channel(user_rays, user_cfg, 0).col(0);

    double gls = gamma_ls(truth, t);
    double gpbce = std::numeric_limits<double>::quiet_NaN();
    try {
        gpbce = gamma_pbce(truth, steering_basis(rays, cfg.n_bs_antennas), sigma2, t);
    } catch (const std::exception &) {
    }

    SdpSettings sdp = plan.sdp;
    sdp.eta = ctx.eta;

    for (std::size_t e = 0; e < plan.estimators.size(); ++e) {
        TrialRecord &row = rows[e];
        row.gamma_ls_v = gls;
        row.gamma_pbce_v = gpbce;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            CovEstimate est;
            switch (plan.estimators[e]) {
            case CovMethod::Ls:
                est = ls;
                break;
            case CovMethod::PbceId: {
                PhaseShiftEstimate beta;
                beta.method = AngleMethod::Id;
                beta.values = true_phase_shifts(rays);
                est = pbce_reconstruct(ls, beta, sigma2);
                break;
            }
            case CovMethod::PbceGae: {
                PhaseShiftEstimate beta = gae_estimate(batch.samples, sdp, s);
                row.solver_iterations = beta.diag.solver_iterations;
                est = pbce_reconstruct(ls, beta, sigma2);
                break;
            }
            case CovMethod::PbceSge: {
                PhaseShiftEstimate beta = sge_estimate(ls, sigma2, s, sdp);
                row.solver_iterations = beta.diag.solver_iterations;
                est = pbce_reconstruct(ls, beta, sigma2);
                break;
            }
            case CovMethod::PbceGec: {
                PhaseShiftEstimate beta =
                    gec_estimate(split_windows(batch, plan.window_size), s, sdp,
                                 trial_rng.fork({stream::cluster}));
                row.solver_iterations = beta.diag.solver_iterations;
                est = pbce_reconstruct(ls, beta, sigma2);
                break;
            }
            case CovMethod::PbceMusic: {
                PhaseShiftEstimate beta = music_estimate(ls, sigma2, s, plan.music_grid);
                est = pbce_reconstruct(ls, beta, sigma2);
                break;
            }
            case CovMethod::True:
                throw std::logic_error("run_trial: TRUE is not an estimator");
            }
            row.mse = mse(est, truth);
            // The rate path needs a strictly positive definite matrix to
            // whiten; estimates are floored at the noise power first. The
            // MSE above is always taken on the raw estimate.
            LinkRealization link;
            link.h = h;
            link.symbol_power = plan.user_symbol_power;
            link.r_hat = clip_psd(est, sigma2);
            link.r = truth;
            RateReport rep = rate_report(link, 1.0);
            row.c = rep.c;
            row.c_hat = rep.c_hat;
            row.c_opt = rep.c_opt;
        } catch (const std::exception &ex) {
            row.error = csv_safe(ex.what());
        }
        row.wall_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
    }
    return rows;
}

} // namespace detail

inline void write_run_outputs(const ExperimentPlan &plan, const RunResult &result);

// Runs the plan: all (ratio, snapshot count, trial) combinations across a
// thread pool, then the two-pass throughput scoring (the backoff delta is
// chosen per estimator/ratio/T group) and aggregation. When plan.out_dir is
// nonempty, writes trials.csv, aggregate.csv, timings.csv and metadata.json
// there. Returns exit code 3 when any estimator failed on any trial, else 0.
inline RunResult run_experiment(const ExperimentPlan &plan) {
    plan.validate();
    RunResult result;
    result.out_dir = plan.out_dir;

    const int n_rot = static_cast<int>(plan.rot_db.size());
    const int n_t = static_cast<int>(plan.t_values.size());
    const int n_est = static_cast<int>(plan.estimators.size());
    const long trials = plan.trials;

    // Optional eta calibration, once per ratio.
    std::vector<double> eta_for_rot(static_cast<std::size_t>(n_rot), plan.sdp.eta);
    for (int r = 0; r < n_rot; ++r) {
        if (plan.eta_auto)
            eta_for_rot[static_cast<std::size_t>(r)] =
                calibrate_eta(plan.scenario, plan.rot_db[static_cast<std::size_t>(r)],
                              plan.t_values.front(), plan.sdp, plan.scenario.rng_seed);
        result.eta_used[plan.rot_db[static_cast<std::size_t>(r)]] =
            eta_for_rot[static_cast<std::size_t>(r)];
    }

    RaySet shared_rays;
    if (plan.fixed_rays)
        shared_rays = draw_rayset(plan.scenario,
                                  Rng::derive(plan.scenario.rng_seed, {stream::rays}));

    const long n_tasks = static_cast<long>(n_rot) * n_t * trials;
    std::vector<std::vector<TrialRecord>> slots(static_cast<std::size_t>(n_tasks));
    std::atomic<long> next_task{0};
    auto worker = [&]() {
        for (;;) {
            long task = next_task.fetch_add(1);
            if (task >= n_tasks)
                return;
            detail::TrialContext ctx;
            ctx.plan = &plan;
            ctx.trial = task % trials;
            long grid = task / trials;
            ctx.t_idx = static_cast<int>(grid % n_t);
            ctx.rot_idx = static_cast<int>(grid / n_t);
            ctx.fixed_rays = plan.fixed_rays ? &shared_rays : nullptr;
            ctx.eta = eta_for_rot[static_cast<std::size_t>(ctx.rot_idx)];
            try {
                slots[static_cast<std::size_t>(task)] = detail::run_trial(ctx);
            } catch (const std::exception &ex) {
                // A failure before the estimators even ran (drawing the
                // scenario itself) poisons every record of the trial.
                std::vector<TrialRecord> rows(plan.estimators.size());
                for (std::size_t e = 0; e < plan.estimators.size(); ++e) {
                    rows[e].trial = ctx.trial;
                    rows[e].estimator = plan.estimators[e];
                    rows[e].t = plan.t_values[static_cast<std::size_t>(ctx.t_idx)];
                    rows[e].rot_db = plan.rot_db[static_cast<std::size_t>(ctx.rot_idx)];
                    rows[e].error = detail::csv_safe(ex.what());
                }
                slots[static_cast<std::size_t>(task)] = std::move(rows);
            }
        }
    };
    const int n_threads =
        static_cast<int>(std::min<long>(detail::resolve_threads(plan.threads), n_tasks));
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(n_threads));
        for (int k = 0; k < n_threads; ++k)
            pool.emplace_back(worker);
        for (auto &th : pool)
            th.join();
    }

    // Flatten in deterministic order: ratio, then T, then trial, then
    // estimator (plan order).
    result.records.reserve(static_cast<std::size_t>(n_tasks) * n_est);
    for (long task = 0; task < n_tasks; ++task)
        for (auto &row : slots[static_cast<std::size_t>(task)])
            result.records.push_back(std::move(row));

    // Second pass: per-group backoff choice and throughput.
    auto record_at = [&](int r, int t, long k, int e) -> TrialRecord & {
        std::size_t idx =
            ((static_cast<std::size_t>(r) * n_t + t) * trials + k) * n_est + e;
        return result.records[idx];
    };
    for (int r = 0; r < n_rot; ++r) {
        for (int t = 0; t < n_t; ++t) {
            for (int e = 0; e < n_est; ++e) {
                std::vector<std::pair<double, double>> pairs;
                for (long k = 0; k < trials; ++k) {
                    const TrialRecord &row = record_at(r, t, k, e);
                    if (row.error.empty() && std::isfinite(row.c) && std::isfinite(row.c_hat))
                        pairs.emplace_back(row.c, row.c_hat);
                }
                double delta_star = std::numeric_limits<double>::quiet_NaN();
                if (!pairs.empty())
                    delta_star = optimize_delta(pairs, plan.delta_step);
                for (long k = 0; k < trials; ++k) {
                    TrialRecord &row = record_at(r, t, k, e);
                    row.delta = delta_star;
                    if (row.error.empty() && std::isfinite(delta_star)) {
                        double attempted = delta_star * row.c_hat;
                        row.rho = attempted <= row.c ? attempted : 0.0;
                    }
                }

                AggregateRow agg;
                agg.estimator = plan.estimators[static_cast<std::size_t>(e)];
                agg.t = plan.t_values[static_cast<std::size_t>(t)];
                agg.rot_db = plan.rot_db[static_cast<std::size_t>(r)];
                agg.delta_star = delta_star;
                std::vector<double> v_mse, v_c, v_chat, v_rho, v_copt, v_gls, v_gpbce;
                for (long k = 0; k < trials; ++k) {
                    const TrialRecord &row = record_at(r, t, k, e);
                    if (!row.error.empty()) {
                        ++agg.trials_failed;
                        continue;
                    }
                    ++agg.trials_ok;
                    v_mse.push_back(row.mse);
                    v_c.push_back(row.c);
                    v_chat.push_back(row.c_hat);
                    v_rho.push_back(row.rho);
                    v_copt.push_back(row.c_opt);
                    v_gls.push_back(row.gamma_ls_v);
                    v_gpbce.push_back(row.gamma_pbce_v);
                }
                auto m1 = detail::mean_stderr(v_mse);
                agg.mse_mean = m1.mean;
                agg.mse_stderr = m1.se;
                auto m2 = detail::mean_stderr(v_c);
                agg.c_mean = m2.mean;
                agg.c_stderr = m2.se;
                auto m3 = detail::mean_stderr(v_chat);
                agg.c_hat_mean = m3.mean;
                agg.c_hat_stderr = m3.se;
                auto m4 = detail::mean_stderr(v_rho);
                agg.rho_mean = m4.mean;
                agg.rho_stderr = m4.se;
                auto m5 = detail::mean_stderr(v_copt);
                agg.c_opt_mean = m5.mean;
                agg.c_opt_stderr = m5.se;
                agg.gamma_ls_mean = detail::mean_stderr(v_gls).mean;
                agg.gamma_pbce_mean = detail::mean_stderr(v_gpbce).mean;
                result.aggregates.push_back(agg);
                result.failures += agg.trials_failed;
            }
        }
    }

    if (!plan.out_dir.empty())
        write_run_outputs(plan, result);
    result.exit_code = result.failures > 0 ? 3 : 0;
    return result;
}

// ---------------------------------------------------------------------------
// File outputs.

inline void write_run_outputs(const ExperimentPlan &plan, const RunResult &result) {
    namespace fs = std::filesystem;
    fs::create_directories(plan.out_dir);
    const std::string base = plan.out_dir;

    {
        std::ofstream out(base + "/trials.csv");
        if (!out)
            throw std::runtime_error("run: cannot write " + base + "/trials.csv");
        out << "trial,estimator,t,rot_db,mse,c,c_hat,rho,delta,solver_iterations,error,"
               "gamma_ls,gamma_pbce,c_opt\n";
        for (const auto &row : result.records) {
            out << row.trial << ',' << to_string(row.estimator) << ',' << row.t << ','
                << detail::fmt_double(row.rot_db) << ',' << detail::fmt_double(row.mse) << ','
                << detail::fmt_double(row.c) << ',' << detail::fmt_double(row.c_hat) << ','
                << detail::fmt_double(row.rho) << ',' << detail::fmt_double(row.delta) << ','
                << row.solver_iterations << ',' << row.error << ','
                << detail::fmt_double(row.gamma_ls_v) << ','
                << detail::fmt_double(row.gamma_pbce_v) << ','
                << detail::fmt_double(row.c_opt) << '\n';
        }
    }
    {
        // Wall times live apart from the reproducible outputs; this is the
        // one file whose bytes vary between reruns.
        std::ofstream out(base + "/timings.csv");
        if (!out)
            throw std::runtime_error("run: cannot write " + base + "/timings.csv");
        out << "trial,estimator,t,rot_db,wall_ms\n";
        for (const auto &row : result.records)
            out << row.trial << ',' << to_string(row.estimator) << ',' << row.t << ','
                << detail::fmt_double(row.rot_db) << ','
                << detail::fmt_double(row.wall_ms) << '\n';
    }
    {
        std::ofstream out(base + "/aggregate.csv");
        if (!out)
            throw std::runtime_error("run: cannot write " + base + "/aggregate.csv");
        out << "estimator,t,rot_db,trials_ok,trials_failed,delta_star,mse_mean,mse_stderr,"
               "c_mean,c_stderr,c_hat_mean,c_hat_stderr,rho_mean,rho_stderr,c_opt_mean,"
               "c_opt_stderr,gamma_ls_mean,gamma_pbce_mean\n";
        for (const auto &a : result.aggregates) {
            out << to_string(a.estimator) << ',' << a.t << ',' << detail::fmt_double(a.rot_db)
                << ',' << a.trials_ok << ',' << a.trials_failed << ','
                << detail::fmt_double(a.delta_star) << ',' << detail::fmt_double(a.mse_mean)
                << ',' << detail::fmt_double(a.mse_stderr) << ','
                << detail::fmt_double(a.c_mean) << ',' << detail::fmt_double(a.c_stderr) << ','
                << detail::fmt_double(a.c_hat_mean) << ',' << detail::fmt_double(a.c_hat_stderr)
                << ',' << detail::fmt_double(a.rho_mean) << ','
                << detail::fmt_double(a.rho_stderr) << ',' << detail::fmt_double(a.c_opt_mean)
                << ',' << detail::fmt_double(a.c_opt_stderr) << ','
                << detail::fmt_double(a.gamma_ls_mean) << ','
                << detail::fmt_double(a.gamma_pbce_mean) << '\n';
        }
    }
    {
        nlohmann::json meta;
        meta["plan"] = plan_to_json(plan);
        nlohmann::json eta = nlohmann::json::object();
        for (const auto &[rot, value] : result.eta_used)
            eta[detail::fmt_double(rot)] = value;
        meta["eta_used"] = eta;
        meta["failures"] = result.failures;
        std::ofstream out(base + "/metadata.json");
        if (!out)
            throw std::runtime_error("run: cannot write " + base + "/metadata.json");
        out << meta.dump(2) << '\n';
    }
}

} // namespace raycov
