#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

#include "rsace/channel.hpp"
#include "rsace/sensing.hpp"
#include "rsace/specfun.hpp"

namespace rsace {

/// Decision vector: ISAC duration, beams and RIS phase vectors (Lambda = diag(lambda), Theta = diag(psi)).
template <class T>
struct DesignVariables {
    T tau1 = T(0);
    CVec<T> w0, wI, wJ;
    CVec<T> lambda, psi;
};

/// g^H diag(psi) G w.
template <class T>
std::complex<T> cascaded_gain(const CVec<T>& g, const CVec<T>& psi, const CMat<T>& G, const CVec<T>& w)
{
    return (g.conjugate().cwiseProduct(psi)).transpose() * (G * w);
}

/// Row vector g^H diag(psi) G as a column (its conjugate transpose), so that gain = row^H w.
template <class T>
CVec<T> cascaded_row(const CVec<T>& g, const CVec<T>& psi, const CMat<T>& G)
{
    return (G.adjoint() * (psi.conjugate().cwiseProduct(g))).eval();
}

/* Quantile F^{-1}(p) of ||f||^2 given the estimate; degenerate at ||f_hat||^2 under perfect CSI. */
template <class T>
T norm2_quantile(T p, T fhat_norm2, int K, T sigma_e2)
{
    if (sigma_e2 <= T(0)) return fhat_norm2;
    const T scale = T(K) * sigma_e2;
    return ncchi2_cdf_inv(p, chi2_params_from_estimate(fhat_norm2, scale));
}

/// Per-realization constants of the outage transformation.
template <class T>
struct OutageCoefficients {
    T eps = T(0);
    T q_I = T(0), q_J = T(0);  // F^{-1}(eps/2) for ||f_I||^2 and ||f_J||^2
    T xi_I = T(0), xi_J = T(0);  // q L^2
    T c_J = T(0);   // 2 L_I^2 (||f_hat_I||^2 + K sigma_e^2)
    T c_JJ = T(0);  // 2 L_J^2 (||f_hat_J||^2 + K sigma_e^2), direct-link analogue for TC-J
};

template <class T>
OutageCoefficients<T> outage_coefficients(const ChannelSet<T>& ch, const ScenarioConfig& cfg)
{
    if (!(cfg.eps_out > 0.0 && cfg.eps_out < 1.0)) throw std::domain_error("eps_out must lie in (0,1)");
    OutageCoefficients<T> oc;
    const T K = T(cfg.K);
    oc.eps = T(cfg.eps_out);
    oc.q_I = norm2_quantile(oc.eps / T(2), ch.fhat_I.squaredNorm(), cfg.K, ch.sigma_e2);
    oc.q_J = norm2_quantile(oc.eps / T(2), ch.fhat_J.squaredNorm(), cfg.K, ch.sigma_e2);
    oc.xi_I = oc.q_I * ch.L_I * ch.L_I;
    oc.xi_J = oc.q_J * ch.L_J * ch.L_J;
    oc.c_J = T(2) * ch.L_I * ch.L_I * (ch.fhat_I.squaredNorm() + K * ch.sigma_e2);
    oc.c_JJ = T(2) * ch.L_J * ch.L_J * (ch.fhat_J.squaredNorm() + K * ch.sigma_e2);
    return oc;
}

/// Estimated-CSI SINRs of the four communication scenarios (surrogate |1^H w|^2 power terms).
template <class T>
T sinr_hat(int l, const ChannelSet<T>& ch, const DesignVariables<T>& dv, const ScenarioConfig& cfg)
{
    const T est = ch.L_I * ch.L_I * (T(1) - ch.sigma_e2);
    auto ones_dot = [](const CVec<T>& w) { return std::norm(w.sum()); };
    switch (l) {
    case 0:
        return (std::norm(cascaded_gain(ch.g_RI, dv.lambda, ch.G, dv.w0)) + est * ones_dot(dv.w0)) / T(cfg.sigmaI_2);
    case 1:
        return std::norm(cascaded_gain(ch.g_RI, dv.psi, ch.G, dv.wI)) / (est * ones_dot(dv.wJ) + T(cfg.sigmaI_2));
    case 2:
        return (std::norm(cascaded_gain(ch.g_RI, dv.psi, ch.G, dv.wI)) + est * ones_dot(dv.wI)) / T(cfg.sigmaI_2);
    case 3: {
        const T num = cfg.printed_gamma3 ? est * ones_dot(dv.wI)
                                         : std::norm(ch.hhat_J().dot(dv.wJ));
        return num / (std::norm(cascaded_gain(ch.g_RJ, dv.psi, ch.G, dv.wI)) + T(cfg.sigmaJ_2));
    }
    default:
        throw std::domain_error("sinr_hat: scenario index must be 0..3");
    }
}

/// Outage-safe transformed SINRs. l = 0..3 as in sinr_hat.
template <class T>
T transformed_sinr(int l, const ChannelSet<T>& ch, const DesignVariables<T>& dv, const ScenarioConfig& cfg,
                   const OutageCoefficients<T>& oc)
{
    const T sI = T(cfg.sigmaI_2);
    switch (l) {
    case 0:
        return (oc.xi_I * dv.w0.squaredNorm() + std::norm(cascaded_gain(ch.g_RI, dv.lambda, ch.G, dv.w0))) / sI;
    case 1:
        return oc.eps * std::norm(cascaded_gain(ch.g_RI, dv.psi, ch.G, dv.wI)) /
               (oc.c_J * dv.wJ.squaredNorm() + oc.eps * sI);
    case 2:
        return (oc.xi_I * dv.wI.squaredNorm() + std::norm(cascaded_gain(ch.g_RI, dv.psi, ch.G, dv.wI))) / sI;
    case 3:
        return oc.xi_J * dv.wJ.squaredNorm() /
               (std::norm(cascaded_gain(ch.g_RJ, dv.psi, ch.G, dv.wI)) + T(cfg.sigmaJ_2));
    default:
        throw std::domain_error("transformed_sinr: scenario index must be 0..3");
    }
}

template <class T>
T transformed_sinr(int l, const ChannelSet<T>& ch, const DesignVariables<T>& dv, const ScenarioConfig& cfg)
{
    return transformed_sinr(l, ch, dv, cfg, outage_coefficients(ch, cfg));
}

/* Split of the l = 2 transformed SINR into its direct and cascaded parts. */
template <class T>
std::array<T, 2> transformed_sinr2_split(const ChannelSet<T>& ch, const DesignVariables<T>& dv,
                                         const ScenarioConfig& cfg, const OutageCoefficients<T>& oc)
{
    const T sI = T(cfg.sigmaI_2);
    return {oc.xi_I * dv.wI.squaredNorm() / sI, std::norm(cascaded_gain(ch.g_RI, dv.psi, ch.G, dv.wI)) / sI};
}

/// Perfect-CSI SINRs used as ground truth: numerators c_l and denominators d_l with the true direct links.
enum class PerfectCsiForm {
    Decomposed,  // c_l = A_l + |h^H w|^2 (direct and cascaded powers add)
    Coherent,    // c_l = |g^H Theta G w + h^H w|^2
    NormBound    // direct power taken as ||h||^2 ||w||^2 (the bound the transformation is built on)
};

template <class T>
T sinr_true(int l, const ChannelSet<T>& ch, const DesignVariables<T>& dv, const ScenarioConfig& cfg,
            PerfectCsiForm form = PerfectCsiForm::Decomposed)
{
    const T sI = T(cfg.sigmaI_2);
    auto sig = [&](const CVec<T>& phase, const CVec<T>& w) {
        const std::complex<T> c = cascaded_gain(ch.g_RI, phase, ch.G, w);
        const std::complex<T> d = ch.h_I.dot(w);
        if (form == PerfectCsiForm::Coherent) return std::norm(c + d);
        if (form == PerfectCsiForm::NormBound) return std::norm(c) + ch.h_I.squaredNorm() * w.squaredNorm();
        return std::norm(c) + std::norm(d);
    };
    switch (l) {
    case 0: return sig(dv.lambda, dv.w0) / sI;
    case 1:
        return std::norm(cascaded_gain(ch.g_RI, dv.psi, ch.G, dv.wI)) / (std::norm(ch.h_I.dot(dv.wJ)) + sI);
    case 2: return sig(dv.psi, dv.wI) / sI;
    case 3:
        return std::norm(ch.h_J.dot(dv.wJ)) /
               (std::norm(cascaded_gain(ch.g_RJ, dv.psi, ch.G, dv.wI)) + T(cfg.sigmaJ_2));
    default: throw std::domain_error("sinr_true: scenario index must be 0..3");
    }
}

/// Scenario probabilities P_1, P_2, P_3 from the detection outcome.
struct ScenarioProbs {
    double P1 = 0.0, P2 = 0.0, P3 = 0.0;
};

inline ScenarioProbs scenario_probs(const SensingOutcome& s) { return {s.P_11 + s.P_01, s.P_10 + s.P_00, s.P_11}; }

/// Time/probability weights rho_0..rho_3.
inline std::array<double, 4> ast_weights(double tau1, const ScenarioProbs& p, const ScenarioConfig& cfg)
{
    if (!(tau1 > 0.0 && tau1 <= cfg.tau * (1.0 + 1e-12)))
        throw std::domain_error("ast_weights: tau1 must lie in (0, tau]");
    const double keep = 1.0 - cfg.eps_out;
    const double f0 = tau1 / cfg.tau;
    const double f1 = std::max(0.0, (cfg.tau - tau1) / cfg.tau);
    return {f0 * keep, f1 * p.P1 * keep, f1 * p.P2 * keep, f1 * p.P3 * keep};
}

template <class T>
struct RateReport {
    std::array<T, 4> gamma_hat{}, gamma_tilde{}, R_hat{}, R_tilde{};
    T gamma_21 = T(0), gamma_22 = T(0);
    ScenarioProbs P;
    std::array<double, 4> rho{};
    T O_T = T(0);        // throughput with every reliability term at 1 - eps_out
    T tilde_ast = T(0);  // sum rho_l log2(1 + gamma_tilde_l)
};

template <class T>
T tilde_ast(const std::array<double, 4>& rho, const std::array<T, 4>& gamma_tilde)
{
    T s = T(0);
    for (int l = 0; l < 4; ++l) s += T(rho[l]) * std::log2(T(1) + gamma_tilde[l]);
    return s;
}

template <class T>
RateReport<T> rate_report(const ChannelSet<T>& ch, const DesignVariables<T>& dv, const std::array<double, 4>& rho,
                          const ScenarioProbs& probs, const ScenarioConfig& cfg, const OutageCoefficients<T>& oc)
{
    RateReport<T> r;
    r.P = probs;
    r.rho = rho;
    for (int l = 0; l < 4; ++l) {
        r.gamma_hat[l] = sinr_hat(l, ch, dv, cfg);
        r.gamma_tilde[l] = transformed_sinr(l, ch, dv, cfg, oc);
        r.R_hat[l] = std::log2(T(1) + r.gamma_hat[l]);
        r.R_tilde[l] = std::log2(T(1) + r.gamma_tilde[l]);
        r.O_T += T(rho[l]) * r.R_hat[l];
    }
    const auto split = transformed_sinr2_split(ch, dv, cfg, oc);
    r.gamma_21 = split[0];
    r.gamma_22 = split[1];
    r.tilde_ast = tilde_ast(rho, r.gamma_tilde);
    return r;
}

/// Reliability-weighted throughput with each probability Pr[R_hat_l <= R_l | f_hat] estimated by redrawing
/// the CSI error around the stored estimate. Validation only.
template <class T>
T empirical_ast(const ChannelSet<T>& ch, const DesignVariables<T>& dv, const ScenarioProbs& probs,
                const ScenarioConfig& cfg, Rng& rng, int draws)
{
    std::array<T, 4> rhat{};
    for (int l = 0; l < 4; ++l) rhat[l] = std::log2(T(1) + sinr_hat(l, ch, dv, cfg));
    std::array<int, 4> ok{};
    ChannelSet<T> c = ch;
    for (int n = 0; n < draws; ++n) {
        c.e_I = draw_cn_vec<T>(rng, cfg.K, ch.sigma_e2);
        c.e_J = draw_cn_vec<T>(rng, cfg.K, ch.sigma_e2);
        c.h_I = c.L_I * (c.fhat_I + c.e_I);
        c.h_J = c.L_J * (c.fhat_J + c.e_J);
        for (int l = 0; l < 4; ++l)
            if (rhat[l] <= std::log2(T(1) + sinr_true(l, c, dv, cfg))) ++ok[l];
    }
    const double f0 = dv.tau1 / cfg.tau;
    const double f1 = 1.0 - f0;
    const std::array<double, 4> w{f0, f1 * probs.P1, f1 * probs.P2, f1 * probs.P3};
    T s = T(0);
    for (int l = 0; l < 4; ++l) s += T(w[l]) * rhat[l] * T(ok[l]) / T(draws);
    return s;
}

} // namespace rsace
