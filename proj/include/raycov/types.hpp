// SPDX-License-Identifier: MIT
//
// raycov: spatial covariance estimation for few-ray interference channels
// Copyright (c) 2026 the raycov authors

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace raycov {

// Wraps a normalized phase shift (in cycles) into [-1/2, 1/2).
inline double wrap_phase(double b) { return b - std::floor(b + 0.5); }

// Covariance estimators exposed by the experiment harness. `True` tags the
// exact covariance used as ground truth and is never selectable in a plan.
enum class CovMethod {
    True,
    Ls,
    PbceGae,
    PbceSge,
    PbceGec,
    PbceMusic,
    PbceId,
};

// Angle (phase shift) estimators feeding the projection-based reconstruction.
// Id is the genie that reads the true phase shifts off the drawn rays.
enum class AngleMethod {
    Gae,
    Sge,
    Gec,
    Music,
    Id,
};

inline std::string to_string(CovMethod m) {
    switch (m) {
    case CovMethod::True: return "TRUE";
    case CovMethod::Ls: return "LS";
    case CovMethod::PbceGae: return "PBCE-GAE";
    case CovMethod::PbceSge: return "PBCE-SGE";
    case CovMethod::PbceGec: return "PBCE-GEC";
    case CovMethod::PbceMusic: return "PBCE-MUSIC";
    case CovMethod::PbceId: return "PBCE-ID";
    }
    throw std::logic_error("to_string: bad CovMethod");
}

inline std::string to_string(AngleMethod m) {
    switch (m) {
    case AngleMethod::Gae: return "GAE";
    case AngleMethod::Sge: return "SGE";
    case AngleMethod::Gec: return "GEC";
    case AngleMethod::Music: return "MUSIC";
    case AngleMethod::Id: return "ID";
    }
    throw std::logic_error("to_string: bad AngleMethod");
}

inline CovMethod cov_method_from_string(const std::string &s) {
    if (s == "TRUE") return CovMethod::True;
    if (s == "LS") return CovMethod::Ls;
    if (s == "PBCE-GAE") return CovMethod::PbceGae;
    if (s == "PBCE-SGE") return CovMethod::PbceSge;
    if (s == "PBCE-GEC") return CovMethod::PbceGec;
    if (s == "PBCE-MUSIC") return CovMethod::PbceMusic;
    if (s == "PBCE-ID") return CovMethod::PbceId;
    throw std::invalid_argument("unknown estimator name: " + s);
}

inline CovMethod cov_method_for(AngleMethod m) {
    switch (m) {
    case AngleMethod::Gae: return CovMethod::PbceGae;
    case AngleMethod::Sge: return CovMethod::PbceSge;
    case AngleMethod::Gec: return CovMethod::PbceGec;
    case AngleMethod::Music: return CovMethod::PbceMusic;
    case AngleMethod::Id: return CovMethod::PbceId;
    }
    throw std::logic_error("cov_method_for: bad AngleMethod");
}

// Bookkeeping carried along with angle estimates so the harness can report
// solver effort and degraded-mode events without extra plumbing.
struct AngleDiagnostics {
    long solver_iterations = 0;
    double solver_objective = 0.0;
    double decomposition_residual = 0.0;
    int windows_used = 0;
    int windows_failed = 0;
    int grid_fill_count = 0;
    bool rank_tol_lowered = false;
};

// A set of S estimated normalized phase shifts, sorted ascending, each in
// [-1/2, 1/2).
struct PhaseShiftEstimate {
    std::vector<double> values;
    AngleMethod method = AngleMethod::Id;
    AngleDiagnostics diag;

    int count() const { return static_cast<int>(values.size()); }
};

// An N x N covariance estimate. `t_used` records how many snapshots produced
// it (0 for exact covariances). `perturbed_duplicates` counts basis phases
// that had to be nudged apart during reconstruction; 0 in normal operation.
struct CovEstimate {
    Eigen::MatrixXcd matrix;
    CovMethod method = CovMethod::True;
    int t_used = 0;
    int perturbed_duplicates = 0;

    int n() const { return static_cast<int>(matrix.rows()); }
};

// The S x S covariance of the stacked per-ray symbol mixture x(t); block
// diagonal across interferers when each interferer's symbols are independent.
struct InnerCov {
    Eigen::MatrixXcd matrix;
};

} // namespace raycov
