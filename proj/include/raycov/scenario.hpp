// SPDX-License-Identifier: MIT
//
// raycov: spatial covariance estimation for few-ray interference channels
// Copyright (c) 2026 the raycov authors

#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "raycov/linalg.hpp"
#include "raycov/rng.hpp"
#include "raycov/types.hpp"

namespace raycov {

inline constexpr double speed_of_light = 299792458.0;

namespace stream {
// Fixed stream-path tags; part of the reproducibility contract.
inline constexpr std::uint64_t rays = 0x11;
inline constexpr std::uint64_t samples = 0x22;
inline constexpr std::uint64_t noise = 0x33;
inline constexpr std::uint64_t user = 0x44;
inline constexpr std::uint64_t trial = 0x55;
inline constexpr std::uint64_t cluster = 0x66;
inline constexpr std::uint64_t calibrate = 0x77;
} // namespace stream

// Interference geometry and statistics for one cell. Defaults describe the
// reference deployment: a 32-antenna base station at 28 GHz with half-wave
// spacing, four single-antenna interferers in the neighboring cells (one per
// cardinal direction), three rays each, unit per-ray power.
struct ScenarioConfig {
    int n_bs_antennas = 32;
    int n_interferers = 4;
    int n_rays = 3;
    int n_int_antennas = 1;
    double noise_power = 1.0;
    Eigen::MatrixXcd symbol_power = Eigen::MatrixXcd::Identity(1, 1);
    double carrier_wavelength = speed_of_light / 28e9;
    double tx_spacing = 0.5 * speed_of_light / 28e9;
    double rx_spacing = 0.5 * speed_of_light / 28e9;
    std::vector<double> aoa_mean = {0.0, std::numbers::pi / 2, std::numbers::pi,
                                    -std::numbers::pi / 2};
    double aoa_support = std::numbers::pi / 6;
    std::array<double, 2> aod_interval = {0.0, std::numbers::pi};
    std::uint64_t rng_seed = 1;
    // Per-ray average powers, row-major by interferer (entry l * n_rays + i).
    // Empty means all ones. Optional in the JSON form.
    std::vector<double> ray_powers;

    int n_sources() const { return n_interferers * n_rays; }

    double ray_power(int interferer, int ray) const {
        if (ray_powers.empty())
            return 1.0;
        return ray_powers[static_cast<std::size_t>(interferer * n_rays + ray)];
    }

    void validate() const {
        auto bad = [](const std::string &msg) { throw std::invalid_argument("scenario: " + msg); };
        if (n_bs_antennas < 1)
            bad("n_bs_antennas must be a positive integer");
        if (n_interferers < 1)
            bad("n_interferers must be a positive integer");
        if (n_rays < 1)
            bad("n_rays must be a positive integer");
        if (n_int_antennas < 1)
            bad("n_int_antennas must be a positive integer");
        if (!(noise_power > 0.0) || !std::isfinite(noise_power))
            bad("noise_power must be positive");
        if (!(carrier_wavelength > 0.0) || !std::isfinite(carrier_wavelength))
            bad("carrier_wavelength must be positive");
        if (!(tx_spacing > 0.0) || !(rx_spacing > 0.0))
            bad("antenna spacings must be positive");
        if (symbol_power.rows() != n_int_antennas || symbol_power.cols() != n_int_antennas)
            bad("symbol_power must be n_int_antennas x n_int_antennas");
        double scale = symbol_power.cwiseAbs().maxCoeff();
        if ((symbol_power - symbol_power.adjoint()).cwiseAbs().maxCoeff() > 1e-10 * std::max(scale, 1.0))
            bad("symbol_power must be Hermitian");
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(symbol_power);
        if (es.eigenvalues().minCoeff() < -1e-10 * std::max(scale, 1.0))
            bad("symbol_power must be positive semidefinite");
        if (static_cast<int>(aoa_mean.size()) != n_interferers)
            bad("aoa_mean must have one entry per interferer");
        for (double a : aoa_mean)
            if (!std::isfinite(a))
                bad("aoa_mean entries must be finite");
        if (!(aoa_support >= 0.0) || !std::isfinite(aoa_support))
            bad("aoa_support must be nonnegative");
        if (!std::isfinite(aod_interval[0]) || !std::isfinite(aod_interval[1]) ||
            aod_interval[0] > aod_interval[1])
            bad("aod_interval must be a finite [lo, hi] with lo <= hi");
        if (!ray_powers.empty()) {
            if (static_cast<int>(ray_powers.size()) != n_sources())
                bad("ray_powers must have n_interferers * n_rays entries");
            for (double p : ray_powers)
                if (!(p >= 0.0) || !std::isfinite(p))
                    bad("ray_powers entries must be nonnegative");
        }
    }
};

// ---------------------------------------------------------------------------
// JSON form. Unknown keys are rejected so config typos fail loudly.

inline nlohmann::json scenario_to_json(const ScenarioConfig &c) {
    nlohmann::json j;
    j["n_bs_antennas"] = c.n_bs_antennas;
    j["n_interferers"] = c.n_interferers;
    j["n_rays"] = c.n_rays;
    j["n_int_antennas"] = c.n_int_antennas;
    j["noise_power"] = c.noise_power;
    nlohmann::json sp = nlohmann::json::array();
    for (Eigen::Index r = 0; r < c.symbol_power.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index k = 0; k < c.symbol_power.cols(); ++k)
            row.push_back({c.symbol_power(r, k).real(), c.symbol_power(r, k).imag()});
        sp.push_back(row);
    }
    j["symbol_power"] = sp;
    j["carrier_wavelength"] = c.carrier_wavelength;
    j["tx_spacing"] = c.tx_spacing;
    j["rx_spacing"] = c.rx_spacing;
    j["aoa_mean"] = c.aoa_mean;
    j["aoa_support"] = c.aoa_support;
    j["aod_interval"] = {c.aod_interval[0], c.aod_interval[1]};
    j["rng_seed"] = c.rng_seed;
    if (!c.ray_powers.empty())
        j["ray_powers"] = c.ray_powers;
    return j;
}

inline ScenarioConfig scenario_from_json(const nlohmann::json &j) {
    static const char *known[] = {"n_bs_antennas",      "n_interferers", "n_rays",
                                  "n_int_antennas",     "noise_power",   "symbol_power",
                                  "carrier_wavelength", "tx_spacing",    "rx_spacing",
                                  "aoa_mean",           "aoa_support",   "aod_interval",
                                  "rng_seed",           "ray_powers"};
    if (!j.is_object())
        throw std::invalid_argument("scenario: config must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char *k : known)
            if (it.key() == k) {
                ok = true;
                break;
            }
        if (!ok)
            throw std::invalid_argument("scenario: unknown config key \"" + it.key() + "\"");
    }
    ScenarioConfig c;
    if (j.contains("n_bs_antennas"))
        c.n_bs_antennas = j.at("n_bs_antennas").get<int>();
    if (j.contains("n_interferers"))
        c.n_interferers = j.at("n_interferers").get<int>();
    if (j.contains("n_rays"))
        c.n_rays = j.at("n_rays").get<int>();
    if (j.contains("n_int_antennas"))
        c.n_int_antennas = j.at("n_int_antennas").get<int>();
    if (j.contains("noise_power"))
        c.noise_power = j.at("noise_power").get<double>();
    if (j.contains("carrier_wavelength"))
        c.carrier_wavelength = j.at("carrier_wavelength").get<double>();
    if (j.contains("tx_spacing"))
        c.tx_spacing = j.at("tx_spacing").get<double>();
    else
        c.tx_spacing = 0.5 * c.carrier_wavelength;
    if (j.contains("rx_spacing"))
        c.rx_spacing = j.at("rx_spacing").get<double>();
    else
        c.rx_spacing = 0.5 * c.carrier_wavelength;
    if (j.contains("aoa_mean")) {
        const auto &a = j.at("aoa_mean");
        c.aoa_mean.clear();
        if (a.is_number()) {
            c.aoa_mean.assign(static_cast<std::size_t>(c.n_interferers), a.get<double>());
        } else if (a.is_array()) {
            for (const auto &v : a)
                c.aoa_mean.push_back(v.get<double>());
        } else {
            throw std::invalid_argument("scenario: aoa_mean must be a number or array");
        }
    } else if (static_cast<int>(c.aoa_mean.size()) != c.n_interferers) {
        // The built-in 4-entry default only fits 4 interferers; otherwise
        // require the caller to spell the means out.
        throw std::invalid_argument("scenario: aoa_mean required for this interferer count");
    }
    if (j.contains("aoa_support"))
        c.aoa_support = j.at("aoa_support").get<double>();
    if (j.contains("aod_interval")) {
        const auto &a = j.at("aod_interval");
        if (!a.is_array() || a.size() != 2)
            throw std::invalid_argument("scenario: aod_interval must be [lo, hi]");
        c.aod_interval = {a[0].get<double>(), a[1].get<double>()};
    }
    if (j.contains("rng_seed"))
        c.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    if (j.contains("ray_powers"))
        c.ray_powers = j.at("ray_powers").get<std::vector<double>>();
    // symbol_power accepts a scalar (s * I), a vector (diagonal), or a full
    // matrix of [re, im] pairs.
    if (j.contains("symbol_power")) {
        const auto &sp = j.at("symbol_power");
        const int ni = c.n_int_antennas;
        if (sp.is_number()) {
            c.symbol_power = sp.get<double>() * Eigen::MatrixXcd::Identity(ni, ni);
        } else if (sp.is_array() && !sp.empty() && sp[0].is_number()) {
            if (static_cast<int>(sp.size()) != ni)
                throw std::invalid_argument("scenario: diagonal symbol_power size mismatch");
            c.symbol_power = Eigen::MatrixXcd::Zero(ni, ni);
            for (int i = 0; i < ni; ++i)
                c.symbol_power(i, i) = sp[static_cast<std::size_t>(i)].get<double>();
        } else if (sp.is_array()) {
            if (static_cast<int>(sp.size()) != ni)
                throw std::invalid_argument("scenario: symbol_power row count mismatch");
            c.symbol_power = Eigen::MatrixXcd::Zero(ni, ni);
            for (int r = 0; r < ni; ++r) {
                const auto &row = sp[static_cast<std::size_t>(r)];
                if (!row.is_array() || static_cast<int>(row.size()) != ni)
                    throw std::invalid_argument("scenario: symbol_power column count mismatch");
                for (int k = 0; k < ni; ++k) {
                    const auto &e = row[static_cast<std::size_t>(k)];
                    if (!e.is_array() || e.size() != 2)
                        throw std::invalid_argument(
                            "scenario: symbol_power entries must be [re, im]");
                    c.symbol_power(r, k) = cd(e[0].get<double>(), e[1].get<double>());
                }
            }
        } else {
            throw std::invalid_argument("scenario: bad symbol_power");
        }
    } else {
        c.symbol_power = Eigen::MatrixXcd::Identity(c.n_int_antennas, c.n_int_antennas);
    }
    c.validate();
    return c;
}

// ---------------------------------------------------------------------------
// Array response and ray draws.

// Normalized phase shift beta = (spacing / wavelength) * sin(angle), in
// cycles per antenna index. Not wrapped; steering vectors are periodic in it.
inline double phase_shift_from_angle(double angle, double spacing, double wavelength) {
    if (!(wavelength > 0.0))
        throw std::invalid_argument("phase_shift_from_angle: wavelength must be positive");
    if (!(spacing > 0.0))
        throw std::invalid_argument("phase_shift_from_angle: spacing must be positive");
    return spacing / wavelength * std::sin(angle);
}

// ULA steering vector a(beta), entry n = exp(-2*pi*i*beta*n), n = 0..N-1.
inline Eigen::VectorXcd steering_vector(int n, double beta) {
    if (n < 1)
        throw std::invalid_argument("steering_vector: need at least one antenna");
    Eigen::VectorXcd a(n);
    for (int k = 0; k < n; ++k) {
        double phi = -2.0 * std::numbers::pi * beta * static_cast<double>(k);
        a(k) = cd(std::cos(phi), std::sin(phi));
    }
    return a;
}

// One propagation ray: complex gain plus angles at both ends of the link and
// their normalized phase shifts.
struct Ray {
    std::complex<double> gain;
    double power = 1.0;
    double aoa = 0.0;
    double aod = 0.0;
    double beta = 0.0;  // receive-side phase shift (base station array)
    double gamma = 0.0; // transmit-side phase shift (interferer array)
};

// All rays of a scenario, stored interferer-major: entry l * n_rays + i is
// ray i of interferer l. This ordering defines the stacking of the source
// vector x(t) and the columns of the steering basis.
struct RaySet {
    std::vector<Ray> rays;
    int n_interferers = 0;
    int n_rays = 0;

    const Ray &at(int interferer, int ray) const {
        return rays[static_cast<std::size_t>(interferer * n_rays + ray)];
    }
    Ray &at(int interferer, int ray) {
        return rays[static_cast<std::size_t>(interferer * n_rays + ray)];
    }
    int n_sources() const { return n_interferers * n_rays; }
};

// Draws the random geometry: per ray, an angle of arrival uniform on the
// interferer's support interval, an angle of departure uniform on the
// configured interval, and a CN(0, P) gain. Each (interferer, ray) pair uses
// its own derived stream, so the draw is independent of loop order.
inline RaySet draw_rayset(const ScenarioConfig &cfg, const Rng &rng) {
    cfg.validate();
    RaySet rs;
    rs.n_interferers = cfg.n_interferers;
    rs.n_rays = cfg.n_rays;
    rs.rays.reserve(static_cast<std::size_t>(cfg.n_sources()));
    for (int l = 0; l < cfg.n_interferers; ++l) {
        for (int i = 0; i < cfg.n_rays; ++i) {
            Rng sub = rng.fork({stream::rays, static_cast<std::uint64_t>(l),
                                static_cast<std::uint64_t>(i)});
            Ray r;
            double half = 0.5 * cfg.aoa_support;
            r.aoa = sub.uniform(cfg.aoa_mean[static_cast<std::size_t>(l)] - half,
                                cfg.aoa_mean[static_cast<std::size_t>(l)] + half);
            r.aod = sub.uniform(cfg.aod_interval[0], cfg.aod_interval[1]);
            r.power = cfg.ray_power(l, i);
            r.gain = sub.cnormal(r.power);
            r.beta = phase_shift_from_angle(r.aoa, cfg.rx_spacing, cfg.carrier_wavelength);
            r.gamma = phase_shift_from_angle(r.aod, cfg.tx_spacing, cfg.carrier_wavelength);
            rs.rays.push_back(r);
        }
    }
    return rs;
}

// True normalized phase shifts of the drawn rays, wrapped and sorted.
inline std::vector<double> true_phase_shifts(const RaySet &rs) {
    std::vector<double> b;
    b.reserve(rs.rays.size());
    for (const Ray &r : rs.rays)
        b.push_back(wrap_phase(r.beta));
    std::sort(b.begin(), b.end());
    return b;
}

// N x S matrix whose columns are the receive steering vectors of the rays, in
// storage order (interferer-major).
struct SteeringBasis {
    Eigen::MatrixXcd a;

    int n() const { return static_cast<int>(a.rows()); }
    int s() const { return static_cast<int>(a.cols()); }
};

inline SteeringBasis steering_basis(const RaySet &rs, int n) {
    SteeringBasis b;
    b.a.resize(n, rs.n_sources());
    for (int s = 0; s < rs.n_sources(); ++s)
        b.a.col(s) = steering_vector(n, rs.rays[static_cast<std::size_t>(s)].beta);
    return b;
}

inline SteeringBasis steering_basis(const std::vector<double> &betas, int n) {
    SteeringBasis b;
    b.a.resize(n, static_cast<Eigen::Index>(betas.size()));
    for (std::size_t s = 0; s < betas.size(); ++s)
        b.a.col(static_cast<Eigen::Index>(s)) = steering_vector(n, betas[s]);
    return b;
}

// Channel matrix of one interferer: G = sum_i v_i a_N(beta_i) a_NI(gamma_i)^H.
inline Eigen::MatrixXcd synth_channel(const RaySet &rs, const ScenarioConfig &cfg,
                                      int interferer) {
    if (interferer < 0 || interferer >= rs.n_interferers)
        throw std::invalid_argument("synth_channel: interferer index out of range");
    Eigen::MatrixXcd g = Eigen::MatrixXcd::Zero(cfg.n_bs_antennas, cfg.n_int_antennas);
    for (int i = 0; i < rs.n_rays; ++i) {
        const Ray &r = rs.at(interferer, i);
        g += r.gain * steering_vector(cfg.n_bs_antennas, r.beta) *
             steering_vector(cfg.n_int_antennas, r.gamma).adjoint();
    }
    return g;
}

// T received snapshots plus the pieces they were assembled from, kept so
// tests can check both composition paths against each other.
struct SampleBatch {
    std::vector<Eigen::VectorXcd> samples;      // N(t) = interference + noise
    std::vector<Eigen::VectorXcd> interference; // sum_l G_l J_l(t)
    std::vector<Eigen::VectorXcd> noise;        // Z(t)
    std::vector<Eigen::VectorXcd> symbols;      // stacked x(t), length S

    int t() const { return static_cast<int>(samples.size()); }
    int n() const { return samples.empty() ? 0 : static_cast<int>(samples[0].size()); }
};

namespace detail {

inline Eigen::MatrixXcd psd_sqrt(const Eigen::MatrixXcd &m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m);
    Eigen::VectorXd lam = es.eigenvalues();
    for (Eigen::Index i = 0; i < lam.size(); ++i)
        lam(i) = std::sqrt(std::max(lam(i), 0.0));
    return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().adjoint();
}

} // namespace detail

// Draws T snapshots N(t) = sum_l G_l J_l(t) + Z(t) with J_l(t) ~ CN(0, R_J)
// i.i.d. across interferers and time, Z(t) ~ CN(0, sigma^2 I). Each snapshot
// uses its own derived stream. The stacked source vector x(t) with entries
// x_{i,l} = v_{i,l} a(gamma_{i,l})^H J_l(t) is recorded alongside.
inline SampleBatch generate_samples(const RaySet &rs, const ScenarioConfig &cfg, int t,
                                    const Rng &rng) {
    if (t < 1)
        throw std::invalid_argument("generate_samples: need at least one snapshot");
    cfg.validate();
    const int n = cfg.n_bs_antennas;
    const int ni = cfg.n_int_antennas;
    const int nl = rs.n_interferers;
    std::vector<Eigen::MatrixXcd> g(static_cast<std::size_t>(nl));
    for (int l = 0; l < nl; ++l)
        g[static_cast<std::size_t>(l)] = synth_channel(rs, cfg, l);
    const Eigen::MatrixXcd rj_sqrt = detail::psd_sqrt(cfg.symbol_power);
    std::vector<Eigen::VectorXcd> tx_steer(static_cast<std::size_t>(rs.n_sources()));
    for (int s = 0; s < rs.n_sources(); ++s)
        tx_steer[static_cast<std::size_t>(s)] =
            steering_vector(ni, rs.rays[static_cast<std::size_t>(s)].gamma);

    SampleBatch batch;
    batch.samples.resize(static_cast<std::size_t>(t));
    batch.interference.resize(static_cast<std::size_t>(t));
    batch.noise.resize(static_cast<std::size_t>(t));
    batch.symbols.resize(static_cast<std::size_t>(t));
    for (int k = 0; k < t; ++k) {
        Rng sub = rng.fork({stream::samples, static_cast<std::uint64_t>(k)});
        Eigen::VectorXcd y = Eigen::VectorXcd::Zero(n);
        Eigen::VectorXcd x(rs.n_sources());
        for (int l = 0; l < nl; ++l) {
            Eigen::VectorXcd w(ni);
            for (int a = 0; a < ni; ++a)
                w(a) = sub.cnormal(1.0);
            Eigen::VectorXcd j = rj_sqrt * w;
            y += g[static_cast<std::size_t>(l)] * j;
            for (int i = 0; i < rs.n_rays; ++i) {
                int s = l * rs.n_rays + i;
                x(s) = rs.rays[static_cast<std::size_t>(s)].gain *
                       (tx_steer[static_cast<std::size_t>(s)].adjoint() * j)(0);
            }
        }
        Eigen::VectorXcd z(n);
        for (int a = 0; a < n; ++a)
            z(a) = sub.cnormal(cfg.noise_power);
        batch.interference[static_cast<std::size_t>(k)] = y;
        batch.noise[static_cast<std::size_t>(k)] = z;
        batch.samples[static_cast<std::size_t>(k)] = y + z;
        batch.symbols[static_cast<std::size_t>(k)] = x;
    }
    return batch;
}

// Noiseless interference covariance sum_l G_l R_J G_l^H.
inline Eigen::MatrixXcd interference_covariance(const RaySet &rs, const ScenarioConfig &cfg) {
    Eigen::MatrixXcd r = Eigen::MatrixXcd::Zero(cfg.n_bs_antennas, cfg.n_bs_antennas);
    for (int l = 0; l < rs.n_interferers; ++l) {
        Eigen::MatrixXcd g = synth_channel(rs, cfg, l);
        r += g * cfg.symbol_power * g.adjoint();
    }
    return r;
}

// Exact covariance of the received interference-plus-noise, conditioned on
// the drawn rays: R = sum_l G_l R_J G_l^H + sigma^2 I.
inline CovEstimate true_covariance(const RaySet &rs, const ScenarioConfig &cfg) {
    CovEstimate est;
    est.matrix = interference_covariance(rs, cfg) +
                 cfg.noise_power *
                     Eigen::MatrixXcd::Identity(cfg.n_bs_antennas, cfg.n_bs_antennas);
    est.method = CovMethod::True;
    est.t_used = 0;
    return est;
}

// Covariance of the stacked source vector x(t). Block diagonal across
// interferers; block l has entries
//   v_i conj(v_j) * a(gamma_i)^H R_J a(gamma_j).
inline InnerCov inner_covariance(const RaySet &rs, const ScenarioConfig &cfg) {
    const int s = rs.n_sources();
    InnerCov rx;
    rx.matrix = Eigen::MatrixXcd::Zero(s, s);
    for (int l = 0; l < rs.n_interferers; ++l) {
        for (int i = 0; i < rs.n_rays; ++i) {
            for (int j = 0; j < rs.n_rays; ++j) {
                const Ray &ri = rs.at(l, i);
                const Ray &rj = rs.at(l, j);
                cd coupling = (steering_vector(cfg.n_int_antennas, ri.gamma).adjoint() *
                               cfg.symbol_power *
                               steering_vector(cfg.n_int_antennas, rj.gamma))(0);
                rx.matrix(l * rs.n_rays + i, l * rs.n_rays + j) =
                    ri.gain * std::conj(rj.gain) * coupling;
            }
        }
    }
    return rx;
}

// Same covariance assembled the other way: R = A R_x A^H + sigma^2 I.
inline CovEstimate covariance_from_inner(const RaySet &rs, const ScenarioConfig &cfg) {
    SteeringBasis a = steering_basis(rs, cfg.n_bs_antennas);
    InnerCov rx = inner_covariance(rs, cfg);
    CovEstimate est;
    est.matrix = a.a * rx.matrix * a.a.adjoint() +
                 cfg.noise_power *
                     Eigen::MatrixXcd::Identity(cfg.n_bs_antennas, cfg.n_bs_antennas);
    est.method = CovMethod::True;
    est.t_used = 0;
    return est;
}

// Ratio of total interference power to total noise power, in dB:
// 10 log10(trace(R) / (N sigma^2) - 1). Returns -inf when the covariance
// carries no interference at all.
inline double rot_of(const Eigen::MatrixXcd &r, double noise_power) {
    if (r.rows() != r.cols() || r.rows() == 0)
        throw std::invalid_argument("rot_of: covariance must be square and nonempty");
    if (!(noise_power > 0.0))
        throw std::invalid_argument("rot_of: noise power must be positive");
    double ratio = r.trace().real() / (static_cast<double>(r.rows()) * noise_power) - 1.0;
    if (ratio <= 0.0)
        return -std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(ratio);
}

// Noise power that realizes a target ratio for a given noiseless
// interference covariance.
inline double noise_power_for_rot(const Eigen::MatrixXcd &interference_cov, double rot_db) {
    double mean_power = interference_cov.trace().real() /
                        static_cast<double>(interference_cov.rows());
    if (!(mean_power > 0.0))
        throw std::invalid_argument("noise_power_for_rot: interference power must be positive");
    return mean_power / std::pow(10.0, rot_db / 10.0);
}

// Interferer drop locations: one interferer per neighboring cell (east,
// north, west, south), placed a fraction of the way from the serving base
// station toward the neighbor's. The mean angle of arrival is the bearing of
// that point from the origin.
struct InterfererPlacement {
    std::vector<std::array<double, 2>> position;
    std::vector<double> distance;
    std::vector<double> aoa_mean;
};

inline InterfererPlacement place_interferers(double cell_side, double fraction = 0.5,
                                             Rng *rng = nullptr) {
    if (!(cell_side > 0.0))
        throw std::invalid_argument("place_interferers: cell side must be positive");
    if (!std::isnan(fraction) && !(fraction >= 0.0 && fraction <= 1.0))
        throw std::invalid_argument("place_interferers: fraction must lie in [0, 1] or be NaN");
    static const std::array<std::array<double, 2>, 4> dirs = {
        {{1.0, 0.0}, {0.0, 1.0}, {-1.0, 0.0}, {0.0, -1.0}}};
    InterfererPlacement p;
    for (const auto &d : dirs) {
        double f = fraction;
        if (std::isnan(fraction)) {
            if (rng == nullptr)
                throw std::invalid_argument("place_interferers: random fraction needs an rng");
            f = rng->uniform01();
        }
        double x = f * cell_side * d[0];
        double y = f * cell_side * d[1];
        p.position.push_back({x, y});
        p.distance.push_back(std::hypot(x, y));
        p.aoa_mean.push_back(std::atan2(y, x));
    }
    return p;
}

} // namespace raycov
