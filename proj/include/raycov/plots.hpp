// SPDX-License-Identifier: MIT
//
// raycov: spatial covariance estimation for few-ray interference channels
// Copyright (c) 2026 the raycov authors

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "raycov/covariance.hpp"

namespace raycov {

namespace detail {

struct AggregateFile {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    int col(const std::string &name) const {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == name)
                return static_cast<int>(i);
        throw std::runtime_error("plots: aggregate.csv is missing column \"" + name + "\"");
    }
};

inline AggregateFile read_aggregate(const std::string &dir) {
    std::ifstream in(dir + "/aggregate.csv");
    if (!in)
        throw std::runtime_error("plots: cannot read " + dir + "/aggregate.csv");
    AggregateFile file;
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ','))
            cells.push_back(cell);
        if (header) {
            file.columns = cells;
            header = false;
        } else {
            file.rows.push_back(cells);
        }
    }
    return file;
}

inline std::string rot_slug(double rot) {
    std::string s = fmt_double(rot);
    for (char &c : s) {
        if (c == '-')
            c = 'm';
        if (c == '.')
            c = 'p';
    }
    return s;
}

} // namespace detail

// Emits one plot-spec JSON per figure from the aggregates of a finished run:
// estimation error and achieved rate against the interference-to-noise ratio
// (one figure per snapshot count), and throughput against the snapshot count
// (one figure per ratio). Returns 0 on success and 2 when the aggregate holds
// no data rows (in which case no files are written). Missing files or columns
// throw.
inline int emit_plots(const std::string &dir) {
    detail::AggregateFile file = detail::read_aggregate(dir);

    struct Row {
        std::string estimator;
        int t = 0;
        double rot = 0.0;
        double mse_mean = 0.0, mse_stderr = 0.0;
        double c_mean = 0.0, c_stderr = 0.0;
        double rho_mean = 0.0, rho_stderr = 0.0;
        double c_opt_mean = 0.0;
        double gamma_ls = 0.0, gamma_pbce = 0.0;
    };
    const int c_est = file.col("estimator");
    const int c_t = file.col("t");
    const int c_rot = file.col("rot_db");
    const int c_mse = file.col("mse_mean");
    const int c_mse_se = file.col("mse_stderr");
    const int c_c = file.col("c_mean");
    const int c_c_se = file.col("c_stderr");
    const int c_rho = file.col("rho_mean");
    const int c_rho_se = file.col("rho_stderr");
    const int c_copt = file.col("c_opt_mean");
    const int c_gls = file.col("gamma_ls_mean");
    const int c_gpbce = file.col("gamma_pbce_mean");

    auto num = [](const std::string &s) {
        if (s == "nan" || s == "-nan")
            return std::numeric_limits<double>::quiet_NaN();
        return std::strtod(s.c_str(), nullptr);
    };
    std::vector<Row> rows;
    std::vector<std::string> estimator_order;
    for (const auto &cells : file.rows) {
        if (static_cast<int>(cells.size()) < static_cast<int>(file.columns.size()))
            throw std::runtime_error("plots: short row in aggregate.csv");
        Row r;
        r.estimator = cells[static_cast<std::size_t>(c_est)];
        r.t = std::atoi(cells[static_cast<std::size_t>(c_t)].c_str());
        r.rot = num(cells[static_cast<std::size_t>(c_rot)]);
        r.mse_mean = num(cells[static_cast<std::size_t>(c_mse)]);
        r.mse_stderr = num(cells[static_cast<std::size_t>(c_mse_se)]);
        r.c_mean = num(cells[static_cast<std::size_t>(c_c)]);
        r.c_stderr = num(cells[static_cast<std::size_t>(c_c_se)]);
        r.rho_mean = num(cells[static_cast<std::size_t>(c_rho)]);
        r.rho_stderr = num(cells[static_cast<std::size_t>(c_rho_se)]);
        r.c_opt_mean = num(cells[static_cast<std::size_t>(c_copt)]);
        r.gamma_ls = num(cells[static_cast<std::size_t>(c_gls)]);
        r.gamma_pbce = num(cells[static_cast<std::size_t>(c_gpbce)]);
        rows.push_back(r);
        if (std::find(estimator_order.begin(), estimator_order.end(), r.estimator) ==
            estimator_order.end())
            estimator_order.push_back(r.estimator);
    }
    if (rows.empty())
        return 2;

    std::set<int> t_set;
    std::set<double> rot_set;
    for (const auto &r : rows) {
        t_set.insert(r.t);
        rot_set.insert(r.rot);
    }

    auto series_for = [&](const std::string &est, int t) {
        std::vector<const Row *> sel;
        for (const auto &r : rows)
            if (r.estimator == est && r.t == t)
                sel.push_back(&r);
        std::sort(sel.begin(), sel.end(),
                  [](const Row *a, const Row *b) { return a->rot < b->rot; });
        return sel;
    };

    for (int t : t_set) {
        // Error against the interference-to-noise ratio.
        nlohmann::json fig;
        fig["title"] = "Estimation error, T = " + std::to_string(t);
        fig["x"] = {{"label", "interference-to-noise ratio [dB]"}, {"scale", "linear"}};
        fig["y"] = {{"label", "normalized MSE"}, {"scale", "log"}};
        nlohmann::json series = nlohmann::json::array();
        for (const auto &est : estimator_order) {
            auto sel = series_for(est, t);
            if (sel.empty())
                continue;
            nlohmann::json s;
            s["label"] = est;
            for (const Row *r : sel) {
                s["x"].push_back(r->rot);
                s["y"].push_back(r->mse_mean);
                s["stderr"].push_back(r->mse_stderr);
            }
            series.push_back(s);
        }
        // Analytic overlays ride on the first estimator's rows (the values
        // are estimator independent).
        {
            auto sel = series_for(estimator_order.front(), t);
            nlohmann::json ls_an, pbce_an;
            ls_an["label"] = "LS (analysis)";
            pbce_an["label"] = "PBCE (analysis)";
            bool any_pbce = false;
            for (const Row *r : sel) {
                ls_an["x"].push_back(r->rot);
                ls_an["y"].push_back(r->gamma_ls);
                pbce_an["x"].push_back(r->rot);
                pbce_an["y"].push_back(r->gamma_pbce);
                if (std::isfinite(r->gamma_pbce))
                    any_pbce = true;
            }
            series.push_back(ls_an);
            if (any_pbce)
                series.push_back(pbce_an);
        }
        fig["series"] = series;
        std::ofstream out(dir + "/mse_vs_rot_T" + std::to_string(t) + ".json");
        if (!out)
            throw std::runtime_error("plots: cannot write figure file");
        out << fig.dump(2) << '\n';

        // Achieved rate against the ratio.
        nlohmann::json rfig;
        rfig["title"] = "Achievable rate, T = " + std::to_string(t);
        rfig["x"] = {{"label", "interference-to-noise ratio [dB]"}, {"scale", "linear"}};
        rfig["y"] = {{"label", "rate [bit/s/Hz]"}, {"scale", "linear"}};
        nlohmann::json rseries = nlohmann::json::array();
        for (const auto &est : estimator_order) {
            auto sel = series_for(est, t);
            if (sel.empty())
                continue;
            nlohmann::json s;
            s["label"] = est;
            for (const Row *r : sel) {
                s["x"].push_back(r->rot);
                s["y"].push_back(r->c_mean);
                s["stderr"].push_back(r->c_stderr);
            }
            rseries.push_back(s);
        }
        {
            auto sel = series_for(estimator_order.front(), t);
            nlohmann::json s;
            s["label"] = "exact whitening";
            for (const Row *r : sel) {
                s["x"].push_back(r->rot);
                s["y"].push_back(r->c_opt_mean);
            }
            rseries.push_back(s);
        }
        rfig["series"] = rseries;
        std::ofstream rout(dir + "/rate_vs_rot_T" + std::to_string(t) + ".json");
        if (!rout)
            throw std::runtime_error("plots: cannot write figure file");
        rout << rfig.dump(2) << '\n';
    }

    for (double rot : rot_set) {
        nlohmann::json fig;
        fig["title"] = "Throughput, ratio = " + std::string(detail::fmt_double(rot)) + " dB";
        fig["x"] = {{"label", "snapshots T"}, {"scale", "linear"}};
        fig["y"] = {{"label", "mean throughput [bit/s/Hz]"}, {"scale", "linear"}};
        nlohmann::json series = nlohmann::json::array();
        for (const auto &est : estimator_order) {
            std::vector<const Row *> sel;
            for (const auto &r : rows)
                if (r.estimator == est && r.rot == rot)
                    sel.push_back(&r);
            std::sort(sel.begin(), sel.end(),
                      [](const Row *a, const Row *b) { return a->t < b->t; });
            if (sel.empty())
                continue;
            nlohmann::json s;
            s["label"] = est;
            for (const Row *r : sel) {
                s["x"].push_back(r->t);
                s["y"].push_back(r->rho_mean);
                s["stderr"].push_back(r->rho_stderr);
            }
            series.push_back(s);
        }
        fig["series"] = series;
        std::ofstream out(dir + "/throughput_vs_t_rot_" + detail::rot_slug(rot) + ".json");
        if (!out)
            throw std::runtime_error("plots: cannot write figure file");
        out << fig.dump(2) << '\n';
    }
    return 0;
}

} // namespace raycov
