#pragma once

#include <cmath>
#include <stdexcept>

#include "rsace/channel.hpp"
#include "rsace/specfun.hpp"

namespace rsace {

template <class T>
struct ResponseMatrices {
    CMat<T> A;  // N_R x N_R, RIS-side target response
    CMat<T> B;  // K x K, BS-side target response
    std::complex<T> alpha_A{}, alpha_B{};
    T theta_A = T(0), theta_B = T(0);
};

/* Amplitude of the round-trip (or one-way) large-scale loss for a reflection at distance d. */
inline double reflection_amplitude(double d, double alpha, const ScenarioConfig& cfg)
{
    const double pg = path_gain(d, alpha, cfg);
    return cfg.round_trip_echo ? pg : std::sqrt(pg);
}

template <class T>
ResponseMatrices<T> build_response_matrices(const ScenarioConfig& cfg, std::complex<T> alpha_T)
{
    const Geometry geo = make_geometry(cfg);
    ResponseMatrices<T> r;
    r.theta_A = T(geo.theta_A);
    r.theta_B = T(geo.theta_B);
    r.alpha_A = alpha_T * T(reflection_amplitude(geo.d_RJ, cfg.alpha_RJ, cfg));
    r.alpha_B = alpha_T * T(reflection_amplitude(geo.d_J, cfg.alpha_J, cfg));
    const CVec<T> aA = steering_vector<T>(r.theta_A, cfg.N_R);
    const CVec<T> aB = steering_vector<T>(r.theta_B, cfg.K);
    r.A = r.alpha_A * aA * aA.adjoint();
    r.B = r.alpha_B * aB * aB.adjoint();
    return r;
}

template <class T>
ResponseMatrices<T> build_response_matrices(const ScenarioConfig& cfg, Rng& rng)
{
    return build_response_matrices<T>(cfg, draw_cn<T>(rng, T(cfg.sigmaT_2)));
}

/// ||(G^H Lambda A Lambda G + B) w0||^2 with Lambda = diag(lambda).
template <class T>
T echo_power(const CMat<T>& G, const CVec<T>& lambda, const ResponseMatrices<T>& resp, const CVec<T>& w0)
{
    if (G.rows() != lambda.size() || G.cols() != w0.size() || resp.A.rows() != G.rows() ||
        resp.B.rows() != G.cols())
        throw std::invalid_argument("echo_power: dimension mismatch");
    const CVec<T> lg = lambda.asDiagonal() * (G * w0);
    const CVec<T> y = G.adjoint() * (lambda.asDiagonal() * (resp.A * lg)) + resp.B * w0;
    return y.squaredNorm();
}

/* Noise energy per sample is taken at its mean K sigma0^2. */
inline double noise_floor(const ScenarioConfig& cfg) { return cfg.K * cfg.sigma0_2; }

inline double threshold_for_pf(double pf_target, double tau1, const ScenarioConfig& cfg)
{
    if (!(tau1 > 0.0)) throw std::domain_error("threshold_for_pf: tau1 must be positive");
    return noise_floor(cfg) * (1.0 + gaussian_q_inv(pf_target) / std::sqrt(tau1 * cfg.fs));
}

inline double detection_prob(double tau1, double eps, double echo, const ScenarioConfig& cfg)
{
    return gaussian_q(std::sqrt(tau1 * cfg.fs) * (eps / (echo + noise_floor(cfg)) - 1.0));
}

inline double false_alarm_prob(double tau1, double eps, const ScenarioConfig& cfg)
{
    return gaussian_q(std::sqrt(tau1 * cfg.fs) * (eps / noise_floor(cfg) - 1.0));
}

struct SensingOutcome {
    double P_d = 0.0, P_f = 0.0;
    double P_11 = 0.0, P_10 = 0.0, P_00 = 0.0, P_01 = 0.0;
    double P_E = 0.0, P_C = 1.0;
    double threshold = 0.0;
    double tau1 = 0.0;
};

inline SensingOutcome case_probabilities(double Pd, double Pf, double PJ1)
{
    SensingOutcome s;
    s.P_d = Pd;
    s.P_f = Pf;
    s.P_11 = Pd * PJ1;
    s.P_10 = (1.0 - Pd) * PJ1;
    s.P_00 = (1.0 - Pf) * (1.0 - PJ1);
    s.P_01 = Pf * (1.0 - PJ1);
    s.P_E = PJ1 * (1.0 - Pd) + (1.0 - PJ1) * Pf;
    s.P_C = 1.0 - s.P_E;
    return s;
}

/// CFAR sensing outcome at a given ISAC duration and echo power.
inline SensingOutcome sense(double tau1, double echo, const ScenarioConfig& cfg)
{
    const double eps = threshold_for_pf(cfg.Pf_max, tau1, cfg);
    SensingOutcome s = case_probabilities(detection_prob(tau1, eps, echo, cfg), false_alarm_prob(tau1, eps, cfg),
                                          cfg.P_J1);
    s.threshold = eps;
    s.tau1 = tau1;
    return s;
}

} // namespace rsace
