#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rsace/config.hpp"
#include "rsace/types.hpp"

namespace rsace {

/// Large-scale power gain A0 (d/d0)^(-alpha).
inline double path_gain(double d, double alpha, const ScenarioConfig& cfg)
{
    if (!(d > 0.0)) throw std::domain_error("path_gain: distance must be positive");
    return cfg.A0() * std::pow(d / cfg.d0, -alpha);
}

/* Element k is exp(-j k pi sin(theta)). */
template <class T>
CVec<T> steering_vector(T theta, Eigen::Index n)
{
    if (n < 1) throw std::domain_error("steering_vector: n must be >= 1");
    CVec<T> a(n);
    const T s = std::sin(theta);
    for (Eigen::Index k = 0; k < n; ++k) a(k) = std::polar(T(1), -T(k) * T(EIGEN_PI) * s);
    return a;
}

/// Angle at `from` toward `to` relative to broadside of an array laid along the x-axis.
inline double array_angle(const Point& from, const Point& to)
{
    const double d = distance(from, to);
    return std::asin(std::clamp((to.x - from.x) / d, -1.0, 1.0));
}

struct Geometry {
    double d_BR, d_RI, d_RJ, d_I, d_J;
    double theta_BR;  // departure at BS toward RIS
    double theta_RB;  // arrival at RIS from BS
    double theta_A;   // RIS toward target
    double theta_B;   // BS toward target
};

inline Geometry make_geometry(const ScenarioConfig& cfg)
{
    Geometry g{};
    g.d_BR = distance(cfg.bs, cfg.ris);
    g.d_RI = distance(cfg.ris, cfg.cu);
    g.d_RJ = distance(cfg.ris, cfg.tc);
    g.d_I = distance(cfg.bs, cfg.cu);
    g.d_J = distance(cfg.bs, cfg.tc);
    g.theta_BR = array_angle(cfg.bs, cfg.ris);
    g.theta_RB = array_angle(cfg.ris, cfg.bs);
    g.theta_A = array_angle(cfg.ris, cfg.tc);
    g.theta_B = array_angle(cfg.bs, cfg.tc);
    return g;
}

template <class T>
struct ChannelSet {
    CMat<T> G;             // N_R x K, BS -> RIS
    CVec<T> g_RI, g_RJ;    // N_R, RIS -> CU-I / TC-J
    CVec<T> h_I, h_J;      // K, true direct links
    CVec<T> fhat_I, fhat_J;
    CVec<T> e_I, e_J;
    T L_I = T(0), L_J = T(0);
    T sigma_e2 = T(0);
    std::complex<T> alpha_T{};  // target reflection coefficient of this realization

    CVec<T> hhat_I() const { return L_I * fhat_I; }
    CVec<T> hhat_J() const { return L_J * fhat_J; }
};

/* Row n of G = beta_G (sqrt(g) a_NR(theta_RB) a_K^H(theta_BR) + sqrt(1-g) CN(0,1)). */
template <class T>
Eigen::Matrix<std::complex<T>, 1, Eigen::Dynamic> bs_ris_row(const ScenarioConfig& cfg, const Geometry& geo, Eigen::Index n, Rng& rng)
{
    const T beta = std::sqrt(T(path_gain(geo.d_BR, cfg.alpha_BR, cfg)));
    const std::complex<T> an = std::polar(T(1), -T(n) * T(EIGEN_PI) * std::sin(T(geo.theta_RB)));
    const Eigen::Matrix<std::complex<T>, 1, Eigen::Dynamic> los = an * steering_vector<T>(T(geo.theta_BR), cfg.K).adjoint();
    const Eigen::Matrix<std::complex<T>, 1, Eigen::Dynamic> nlos = draw_cn_vec<T>(rng, cfg.K).transpose();
    return beta * (std::sqrt(T(cfg.rician_g)) * los + std::sqrt(T(1) - T(cfg.rician_g)) * nlos);
}

/// BS-RIS channel drawn row by row, so a smaller surface is a prefix of a larger one.
template <class T>
CMat<T> gen_bs_ris_channel(const ScenarioConfig& cfg, Rng& rng)
{
    const Geometry geo = make_geometry(cfg);
    CMat<T> G(cfg.N_R, cfg.K);
    for (Eigen::Index n = 0; n < cfg.N_R; ++n) G.row(n) = bs_ris_row<T>(cfg, geo, n, rng);
    return G;
}

/// Draw order: fhat_I, e_I, fhat_J, e_J, alpha_T, then per RIS element n: row n of G, g_RI(n), g_RJ(n).
/// The direct links and the target do not depend on N_R, and an N-element surface is the prefix of any
/// larger one, so sweeps over N_R compare the same draws.
template <class T>
ChannelSet<T> gen_user_channels(const ScenarioConfig& cfg, Rng& rng)
{
    if (!(cfg.sigma_e2 >= 0.0 && cfg.sigma_e2 < 1.0))
        throw std::domain_error("gen_user_channels: sigma_e2 must lie in [0,1)");
    const Geometry geo = make_geometry(cfg);
    ChannelSet<T> ch;
    ch.sigma_e2 = T(cfg.sigma_e2);
    ch.L_I = std::sqrt(T(path_gain(geo.d_I, cfg.alpha_I, cfg)));
    ch.L_J = std::sqrt(T(path_gain(geo.d_J, cfg.alpha_J, cfg)));
    ch.fhat_I = draw_cn_vec<T>(rng, cfg.K, T(1) - ch.sigma_e2);
    ch.e_I = ch.sigma_e2 > T(0) ? draw_cn_vec<T>(rng, cfg.K, ch.sigma_e2) : CVec<T>::Zero(cfg.K).eval();
    ch.fhat_J = draw_cn_vec<T>(rng, cfg.K, T(1) - ch.sigma_e2);
    ch.e_J = ch.sigma_e2 > T(0) ? draw_cn_vec<T>(rng, cfg.K, ch.sigma_e2) : CVec<T>::Zero(cfg.K).eval();
    ch.h_I = ch.L_I * (ch.fhat_I + ch.e_I);
    ch.h_J = ch.L_J * (ch.fhat_J + ch.e_J);
    ch.alpha_T = draw_cn<T>(rng, T(cfg.sigmaT_2));

    const T bI = std::sqrt(T(path_gain(geo.d_RI, cfg.alpha_RI, cfg)));
    const T bJ = std::sqrt(T(path_gain(geo.d_RJ, cfg.alpha_RJ, cfg)));
    ch.G.resize(cfg.N_R, cfg.K);
    ch.g_RI.resize(cfg.N_R);
    ch.g_RJ.resize(cfg.N_R);
    for (Eigen::Index n = 0; n < cfg.N_R; ++n) {
        ch.G.row(n) = bs_ris_row<T>(cfg, geo, n, rng);
        ch.g_RI(n) = bI * draw_cn<T>(rng, T(1));
        ch.g_RJ(n) = bJ * draw_cn<T>(rng, T(1));
    }
    return ch;
}

} // namespace rsace
