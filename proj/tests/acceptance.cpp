// SPDX-License-Identifier: MIT
//
// raycov: spatial covariance estimation for few-ray interference channels
// Copyright (c) 2026 the raycov authors
//
// Acceptance gate. Runs every end-to-end criterion and prints one PASS or
// FAIL line per criterion. Exit code 0 only if all pass. Tolerances and
// budgets live next to each check in validation.hpp.

#include <cstdio>
#include <exception>

#include "raycov/validation.hpp"

int main() {
    using raycov::CriterionResult;
    bool all_pass = true;
    int index = 0;
    auto report = [&](CriterionResult (*check)(), const char *fallback_name) {
        ++index;
        CriterionResult r;
        try {
            r = check();
        } catch (const std::exception &e) {
            r.name = fallback_name;
            r.pass = false;
            r.detail = std::string("exception: ") + e.what();
        }
        std::printf("%s %d %-24s (%.1f s)  %s\n", r.pass ? "PASS" : "FAIL", index,
                    r.name.c_str(), r.seconds, r.detail.c_str());
        std::fflush(stdout);
        all_pass = all_pass && r.pass;
    };

    report(raycov::check_ls_mse_formula, "ls-mse-analysis");
    report(raycov::check_pbce_mse_formula, "pbce-mse-analysis");
    report(raycov::check_product_variance, "product-variance");
    report(raycov::check_gridless_recovery, "gridless-recovery");
    report(raycov::check_exact_cov_angles, "exact-covariance-angles");
    report(raycov::check_mse_ordering, "mse-ordering");
    report(raycov::check_throughput_trend, "throughput-trend");
    report(raycov::check_rate_identity, "rate-identity");
    report(raycov::check_deterministic_rerun, "deterministic-rerun");

    return all_pass ? 0 : 1;
}
