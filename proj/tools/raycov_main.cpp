// SPDX-License-Identifier: MIT
//
// raycov: spatial covariance estimation for few-ray interference channels
// Copyright (c) 2026 the raycov authors
//
// Command line front end. Three subcommands: `run` executes an experiment
// plan and writes CSV outputs, `plots` turns aggregate.csv into plot spec
// JSON files, `validate` runs the end-to-end check suites.

#include <cstdio>
#include <exception>
#include <fstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "raycov/harness.hpp"
#include "raycov/plots.hpp"
#include "raycov/validation.hpp"

namespace {

int cmd_run(const std::string &plan_path, const std::string &out_dir, int threads,
            long long seed) {
    raycov::ExperimentPlan plan;
    try {
        std::ifstream in(plan_path);
        if (!in) {
            std::fprintf(stderr, "error: cannot open plan file %s\n", plan_path.c_str());
            return 2;
        }
        nlohmann::json j = nlohmann::json::parse(in);
        plan = raycov::plan_from_json(j);
        if (threads >= 0)
            plan.threads = threads;
        if (seed >= 0)
            plan.scenario.rng_seed = static_cast<std::uint64_t>(seed);
        plan.out_dir = out_dir;
        plan.validate();
    } catch (const std::exception &e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    raycov::RunResult result = raycov::run_experiment(plan);
    std::printf("wrote %s/trials.csv, aggregate.csv, timings.csv, metadata.json\n",
                result.out_dir.c_str());
    if (result.failures > 0)
        std::fprintf(stderr, "warning: %ld trial evaluations failed (see the error column)\n",
                     result.failures);
    return result.exit_code;
}

int cmd_plots(const std::string &in_dir) {
    try {
        return raycov::emit_plots(in_dir);
    } catch (const std::exception &e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}

int cmd_validate(const std::string &suite) {
    std::vector<raycov::CriterionResult> results;
    try {
        results = raycov::run_validation_suite(suite);
    } catch (const std::invalid_argument &e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    bool all_pass = true;
    for (const auto &r : results) {
        std::printf("%s %-24s (%.1f s)  %s\n", r.pass ? "PASS" : "FAIL", r.name.c_str(),
                    r.seconds, r.detail.c_str());
        all_pass = all_pass && r.pass;
    }
    return all_pass ? 0 : 1;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"spatial covariance estimation for few-ray interference channels"};
    app.require_subcommand(1);

    std::string plan_path;
    std::string out_dir;
    int threads = -1;
    long long seed = -1;
    CLI::App *run = app.add_subcommand("run", "execute an experiment plan");
    run->add_option("--plan", plan_path, "plan JSON file")->required();
    run->add_option("--out", out_dir, "output directory")->required();
    run->add_option("--threads", threads, "worker threads (0 = all cores)");
    run->add_option("--seed", seed, "override the scenario rng_seed");

    std::string in_dir;
    CLI::App *plots = app.add_subcommand("plots", "write plot specs from a run directory");
    plots->add_option("--in", in_dir, "directory holding aggregate.csv")->required();

    std::string suite = "all";
    CLI::App *validate = app.add_subcommand("validate", "run the end-to-end check suites");
    validate->add_option("--suite", suite,
                         "mse-analysis | appendix | recovery | trends | rates | "
                         "determinism | all");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    if (run->parsed())
        return cmd_run(plan_path, out_dir, threads, seed);
    if (plots->parsed())
        return cmd_plots(in_dir);
    return cmd_validate(suite);
}
