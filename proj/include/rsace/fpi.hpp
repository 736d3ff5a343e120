#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "rsace/qt.hpp"
#include "rsace/rates.hpp"
#include "rsace/sensing.hpp"

namespace rsace {

enum class Mechanism {
    RSACE,  // RIS-assisted sensing and communication
    RACE,   // RIS only, a-priori jamming probability instead of sensing
    SACE    // sensing without RIS, direct links only
};

inline const char* mechanism_name(Mechanism m)
{
    switch (m) {
    case Mechanism::RSACE: return "R-SACE";
    case Mechanism::RACE: return "R-ACE";
    case Mechanism::SACE: return "S-ACE";
    }
    return "?";
}

struct FpiConfig {
    double delta = 1e-5;  // stop when the objective moves less than this (bits/s/Hz)
    int max_iter = 200;
    double bisect_tol = 1e-9;
    int bisect_max_iter = 100;
    double tau_grid = 1e-3;  // grid step for tau1 as a fraction of tau
    bool unit_modulus = true;
    int theta_sweeps = 8;
    int theta_inner = 20;  // RIS steps per sweep, auxiliaries refreshed in between
    bool joint_align = true;
    bool scale_search = true;
    bool optimize_tau1 = true;
    bool optimize_beams = true;
    bool optimize_theta = true;
};

/// Quantities that stay fixed while one realization is optimized.
template <class T>
struct Problem {
    const ChannelSet<T>* ch = nullptr;
    ScenarioConfig cfg;
    Mechanism mech = Mechanism::RSACE;
    OutageCoefficients<T> oc;
    CVec<T> w0, lambda;
    T echo = T(0);
    T gamma0 = T(0);
    double tau_lo = 0.0;  // smallest admissible tau1
    bool feasible = true;
};

enum class Block { WJ, WI, Theta };

template <class T>
CVec<T> isac_beam(const ChannelSet<T>& ch, const ScenarioConfig& cfg)
{
    const CVec<T> lambda = CVec<T>::Ones(cfg.N_R);
    CVec<T> d = ch.hhat_I() + cascaded_row(ch.g_RI, lambda, ch.G);
    return (std::sqrt(T(cfg.p_Imax)) / d.norm()) * d;
}

template <class T>
Problem<T> make_problem(const ChannelSet<T>& ch, const ScenarioConfig& cfg, Mechanism mech)
{
    Problem<T> pb;
    pb.ch = &ch;
    pb.cfg = cfg;
    pb.mech = mech;
    pb.oc = outage_coefficients(ch, cfg);
    pb.lambda = CVec<T>::Ones(cfg.N_R);
    pb.w0 = isac_beam(ch, cfg);
    ResponseMatrices<T> resp = build_response_matrices<T>(cfg, ch.alpha_T);
    if (mech == Mechanism::SACE) resp.A.setZero();
    pb.echo = echo_power(ch.G, pb.lambda, resp, pb.w0);
    pb.gamma0 = (pb.oc.xi_I * pb.w0.squaredNorm() + std::norm(cascaded_gain(ch.g_RI, pb.lambda, ch.G, pb.w0))) /
                T(cfg.sigmaI_2);
    if (mech == Mechanism::RACE) {
        pb.tau_lo = 1e-3 * cfg.tau;
        return pb;
    }
    auto pd = [&](double t) { return sense(t, double(pb.echo), cfg).P_d; };
    if (pd(cfg.tau) < cfg.Pd_min) {
        pb.feasible = false;
        pb.tau_lo = cfg.tau;
        return pb;
    }
    double lo = 0.0, hi = cfg.tau;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * cfg.tau; ++it) {
        const double mid = 0.5 * (lo + hi);
        (pd(mid) >= cfg.Pd_min ? hi : lo) = mid;
    }
    pb.tau_lo = hi;
    return pb;
}

/// Sensing outcome and rho_0..rho_3 at a given ISAC duration.
struct Weighting {
    std::array<double, 4> rho{};
    SensingOutcome sensing;
    ScenarioProbs probs;
};

template <class T>
Weighting weights_at(const Problem<T>& pb, double tau1)
{
    Weighting w;
    if (pb.mech == Mechanism::RACE) {
        w.sensing = case_probabilities(pb.cfg.P_AJ, pb.cfg.P_AJ, pb.cfg.P_J1);
        w.sensing.tau1 = tau1;
    } else {
        w.sensing = sense(tau1, double(pb.echo), pb.cfg);
    }
    w.probs = scenario_probs(w.sensing);
    w.rho = ast_weights(tau1, w.probs, pb.cfg);
    if (pb.mech == Mechanism::SACE) w.rho[0] = 0.0;
    return w;
}

template <class T>
T theta_interference_bound(const Problem<T>& pb)
{
    return pb.cfg.theta_bound_over_pI ? T(pb.cfg.eps_J / pb.cfg.p_Imax) : T(pb.cfg.eps_J);
}

/// Leakage of w_I toward TC-J (cascaded for the RIS mechanisms, direct for S-ACE).
template <class T>
T interference(const Problem<T>& pb, const DesignVariables<T>& x)
{
    if (pb.mech == Mechanism::SACE) return std::norm(pb.ch->hhat_J().dot(x.wI));
    return std::norm(cascaded_gain(pb.ch->g_RJ, x.psi, pb.ch->G, x.wI));
}

/// Ratio terms l = 1..3 at the current design.
template <class T>
std::array<RatioTerm<T>, 3> ratio_terms(const Problem<T>& pb, const DesignVariables<T>& x)
{
    const auto& oc = pb.oc;
    const T sI = T(pb.cfg.sigmaI_2), sJ = T(pb.cfg.sigmaJ_2);
    std::array<RatioTerm<T>, 3> t;
    if (pb.mech == Mechanism::SACE) {
        t[0].a = std::sqrt(oc.xi_I) * x.wI;
        t[0].B = oc.c_J / oc.eps * x.wJ.squaredNorm() + sI;
        t[1].a = t[0].a;
        t[1].B = sI;
        t[2].a = std::sqrt(oc.xi_J) * x.wJ;
        t[2].B = oc.c_JJ / oc.eps * x.wI.squaredNorm() + sJ;
        return t;
    }
    const std::complex<T> zI = cascaded_gain(pb.ch->g_RI, x.psi, pb.ch->G, x.wI);
    const Eigen::Index K = x.wI.size();
    t[0].a = CVec<T>::Constant(1, std::sqrt(oc.eps) * zI);
    t[0].B = oc.c_J * x.wJ.squaredNorm() + oc.eps * sI;
    t[1].a.resize(K + 1);
    t[1].a << std::sqrt(oc.xi_I) * x.wI, zI;
    t[1].B = sI;
    t[2].a = std::sqrt(oc.xi_J) * x.wJ;
    t[2].B = std::norm(cascaded_gain(pb.ch->g_RJ, x.psi, pb.ch->G, x.wI)) + sJ;
    return t;
}

template <class T>
std::array<T, 4> gammas(const Problem<T>& pb, const DesignVariables<T>& x)
{
    const auto t = ratio_terms(pb, x);
    return {pb.gamma0, t[0].sinr(), t[1].sinr(), t[2].sinr()};
}

/// Transformed throughput sum rho_l log2(1 + gamma_l).
template <class T>
T ast_value(const std::array<double, 4>& rho, const std::array<T, 4>& g)
{
    T s = T(0);
    for (int l = 0; l < 4; ++l)
        if (rho[l] > 0.0) s += T(rho[l]) * std::log1p(g[l]);
    return s / T(std::log(2.0));
}

template <class T>
T ast_value(const Problem<T>& pb, const DesignVariables<T>& x)
{
    return ast_value(weights_at(pb, double(x.tau1)).rho, gammas(pb, x));
}

/// Affine form of the three terms in one block of variables.
template <class T>
std::array<AffineTerm<T>, 3> block_terms(const Problem<T>& pb, const DesignVariables<T>& x, Block blk)
{
    const auto& oc = pb.oc;
    const auto& ch = *pb.ch;
    const T sI = T(pb.cfg.sigmaI_2), sJ = T(pb.cfg.sigmaJ_2);
    const Eigen::Index K = x.wI.size();
    const Eigen::Index n = blk == Block::Theta ? x.psi.size() : K;
    std::array<AffineTerm<T>, 3> t;
    if (pb.mech == Mechanism::SACE) {
        if (blk == Block::Theta) throw std::invalid_argument("block_terms: S-ACE has no RIS block");
        const CMat<T> I = CMat<T>::Identity(K, K);
        const CMat<T> Z = CMat<T>::Zero(K, K);
        const CVec<T> z = CVec<T>::Zero(K);
        if (blk == Block::WJ) {
            t[0] = {Z, std::sqrt(oc.xi_I) * x.wI, (oc.c_J / oc.eps) * I, sI};
            t[1] = {Z, std::sqrt(oc.xi_I) * x.wI, CMat<T>(), sI};
            t[2] = {std::sqrt(oc.xi_J) * I, z, CMat<T>(), (oc.c_JJ / oc.eps) * x.wI.squaredNorm() + sJ};
        } else {
            t[0] = {std::sqrt(oc.xi_I) * I, z, CMat<T>(), (oc.c_J / oc.eps) * x.wJ.squaredNorm() + sI};
            t[1] = {std::sqrt(oc.xi_I) * I, z, CMat<T>(), sI};
            t[2] = {Z, std::sqrt(oc.xi_J) * x.wJ, (oc.c_JJ / oc.eps) * I, sJ};
        }
        return t;
    }
    const CVec<T> rI = cascaded_row(ch.g_RI, x.psi, ch.G);
    const CVec<T> rJ = cascaded_row(ch.g_RJ, x.psi, ch.G);
    const std::complex<T> zI = rI.dot(x.wI);
    switch (blk) {
    case Block::WJ: {
        CVec<T> b2(K + 1);
        b2 << std::sqrt(oc.xi_I) * x.wI, zI;
        t[0] = {CMat<T>::Zero(1, n), CVec<T>::Constant(1, std::sqrt(oc.eps) * zI), oc.c_J * CMat<T>::Identity(n, n),
                oc.eps * sI};
        t[1] = {CMat<T>::Zero(K + 1, n), b2, CMat<T>(), sI};
        t[2] = {std::sqrt(oc.xi_J) * CMat<T>::Identity(K, n), CVec<T>::Zero(K), CMat<T>(),
                std::norm(rJ.dot(x.wI)) + sJ};
        break;
    }
    case Block::WI: {
        CMat<T> A2(K + 1, n);
        A2 << std::sqrt(oc.xi_I) * CMat<T>::Identity(K, n), rI.adjoint();
        t[0] = {std::sqrt(oc.eps) * rI.adjoint(), CVec<T>::Zero(1), CMat<T>(), oc.c_J * x.wJ.squaredNorm() + oc.eps * sI};
        t[1] = {A2, CVec<T>::Zero(K + 1), CMat<T>(), sI};
        t[2] = {CMat<T>::Zero(K, n), std::sqrt(oc.xi_J) * x.wJ, rJ * rJ.adjoint(), sJ};
        break;
    }
    case Block::Theta: {
        const CVec<T> Gw = ch.G * x.wI;
        const CVec<T> p = ch.g_RI.cwiseProduct(Gw.conjugate());
        const CVec<T> s = ch.g_RJ.cwiseProduct(Gw.conjugate());
        CMat<T> A2 = CMat<T>::Zero(K + 1, n);
        A2.row(K) = p.adjoint();
        CVec<T> b2 = CVec<T>::Zero(K + 1);
        b2.head(K) = std::sqrt(oc.xi_I) * x.wI;
        t[0] = {std::sqrt(oc.eps) * p.adjoint(), CVec<T>::Zero(1), CMat<T>(), oc.c_J * x.wJ.squaredNorm() + oc.eps * sI};
        t[1] = {A2, b2, CMat<T>(), sI};
        t[2] = {CMat<T>::Zero(K, n), std::sqrt(oc.xi_J) * x.wJ, s * s.adjoint(), sJ};
        break;
    }
    }
    return t;
}

template <class T>
std::vector<QuadConstraint<T>> block_constraints(const Problem<T>& pb, const DesignVariables<T>& x, Block blk)
{
    const auto& ch = *pb.ch;
    switch (blk) {
    case Block::WJ: return {{CMat<T>(), T(pb.cfg.p_Jmax)}};
    case Block::WI: {
        const CVec<T> r = pb.mech == Mechanism::SACE ? ch.hhat_J() : cascaded_row(ch.g_RJ, x.psi, ch.G);
        return {{CMat<T>(), T(pb.cfg.p_Imax)}, {r * r.adjoint(), T(pb.cfg.eps_J)}};
    }
    case Block::Theta: {
        const CVec<T> s = ch.g_RJ.cwiseProduct((ch.G * x.wI).conjugate());
        return {{s * s.adjoint(), theta_interference_bound(pb)}};
    }
    }
    return {};
}

/* Nearest of 2^bits uniformly spaced phases; bits = 0 keeps the phase continuous. Zero entries keep `fallback`. */
template <class T>
CVec<T> project_discrete_phases(const CVec<T>& psi, int bits, const CVec<T>& fallback)
{
    CVec<T> out(psi.size());
    const T step = bits > 0 ? T(2) * T(EIGEN_PI) / T(1 << bits) : T(0);
    for (Eigen::Index n = 0; n < psi.size(); ++n) {
        const std::complex<T> c = std::abs(psi(n)) > T(0) ? psi(n) : fallback(n);
        T ph = std::arg(c);
        if (bits > 0) ph = step * std::round(ph / step);
        out(n) = std::polar(T(1), ph);
    }
    return out;
}

template <class T>
CVec<T> project_discrete_phases(const CVec<T>& psi, int bits)
{
    return project_discrete_phases(psi, bits, CVec<T>::Ones(psi.size()).eval());
}

/// Element-wise phase ascent on -psi^H M psi + 2 Re(r^H psi) over unit-modulus (optionally discrete) psi.
template <class T>
CVec<T> unit_modulus_ascent(const CMat<T>& M, const CVec<T>& r, CVec<T> psi, int sweeps, int bits = 0)
{
    const T step = bits > 0 ? T(2) * T(EIGEN_PI) / T(1 << bits) : T(0);
    for (int s = 0; s < sweeps; ++s) {
        T moved = T(0);
        for (Eigen::Index n = 0; n < psi.size(); ++n) {
            const std::complex<T> c = r(n) - (M.row(n) * psi)(0) + M(n, n) * psi(n);
            if (std::abs(c) == T(0)) continue;
            T ph = std::arg(c);
            if (bits > 0) ph = step * std::round(ph / step);
            const std::complex<T> nv = std::polar(T(1), ph);
            moved = std::max(moved, std::abs(nv - psi(n)));
            psi(n) = nv;
        }
        if (moved < T(1e-12)) break;
    }
    return psi;
}

template <class T>
struct BlockUpdate {
    CVec<T> z;
    std::vector<T> duals;
    bool fallback = false;
};

template <class T>
BlockUpdate<T> update_wJ(const Problem<T>& pb, const DesignVariables<T>& x, const std::array<double, 4>& rho,
                         const Aux<T>& aux, const FpiConfig& fc = {})
{
    const auto bq = block_quadratic(rho, aux, block_terms(pb, x, Block::WJ));
    auto sol = solve_qcqp<T>(bq.Q, bq.r, block_constraints(pb, x, Block::WJ), fc.bisect_max_iter, T(fc.bisect_tol));
    if (!sol.feasible || !(bq.value(sol.z) > bq.value(x.wJ))) return {x.wJ, sol.duals, !sol.feasible};
    return {sol.z, sol.duals, false};
}

template <class T>
BlockUpdate<T> update_wI(const Problem<T>& pb, const DesignVariables<T>& x, const std::array<double, 4>& rho,
                         const Aux<T>& aux, const FpiConfig& fc = {})
{
    const auto bq = block_quadratic(rho, aux, block_terms(pb, x, Block::WI));
    auto sol = solve_qcqp<T>(bq.Q, bq.r, block_constraints(pb, x, Block::WI), fc.bisect_max_iter, T(fc.bisect_tol));
    if (!sol.feasible || !(bq.value(sol.z) > bq.value(x.wI))) return {x.wI, sol.duals, !sol.feasible};
    return {sol.z, sol.duals, false};
}

/// Relaxed closed form of the RIS block (no unit-modulus constraint).
template <class T>
BlockUpdate<T> update_theta_relaxed(const Problem<T>& pb, const DesignVariables<T>& x,
                                    const std::array<double, 4>& rho, const Aux<T>& aux, const FpiConfig& fc = {})
{
    const auto bq = block_quadratic(rho, aux, block_terms(pb, x, Block::Theta));
    auto sol =
        solve_qcqp<T>(bq.Q, bq.r, block_constraints(pb, x, Block::Theta), fc.bisect_max_iter, T(fc.bisect_tol));
    return {sol.z, sol.duals, !sol.feasible};
}

/// RIS update: relaxed solution, unit-modulus projection and penalized phase ascent. The best feasible
/// candidate under the block surrogate is kept; if none beats the current phases they are retained.
template <class T>
BlockUpdate<T> update_theta(const Problem<T>& pb, const DesignVariables<T>& x, const std::array<double, 4>& rho,
                            const Aux<T>& aux, const FpiConfig& fc = {})
{
    if (!fc.unit_modulus) return update_theta_relaxed(pb, x, rho, aux, fc);
    const auto bq = block_quadratic(rho, aux, block_terms(pb, x, Block::Theta));
    const auto cons = block_constraints(pb, x, Block::Theta);
    const QuadConstraint<T>& c = cons[0];
    auto ok = [&](const CVec<T>& p) { return c.eval(p) <= c.bound * (T(1) + T(fc.bisect_tol)); };
    const auto relaxed = solve_qcqp<T>(bq.Q, bq.r, cons, fc.bisect_max_iter, T(fc.bisect_tol));

    BlockUpdate<T> best{x.psi, {T(0)}, false};
    T best_val = bq.value(x.psi);
    auto consider = [&](const CVec<T>& p, T mu) {
        if (!ok(p)) return;
        const T v = bq.value(p);
        if (v > best_val) {
            best_val = v;
            best = {p, {mu}, false};
        }
    };
    const CVec<T> proj = project_discrete_phases<T>(relaxed.z, 0, x.psi);
    consider(proj, relaxed.duals.empty() ? T(0) : relaxed.duals[0]);

    const CVec<T> start = ok(proj) && bq.value(proj) > bq.value(x.psi) ? proj : x.psi;
    auto ascend = [&](T mu) {
        CMat<T> M = bq.Q;
        detail::add_scaled(M, mu, c);
        return unit_modulus_ascent<T>(M, bq.r, start, fc.theta_sweeps);
    };
    CVec<T> cand = ascend(T(0));
    if (ok(cand)) {
        consider(cand, T(0));
    } else {
        T lo = T(0), hi = T(1);
        int grow = 0;
        for (cand = ascend(hi); !ok(cand) && grow < 400; ++grow) {
            lo = hi;
            hi *= T(2);
            cand = ascend(hi);
        }
        if (ok(cand)) {
            for (int it = 0; it < 60; ++it) {
                const T mid = T(0.5) * (lo + hi);
                CVec<T> cm = ascend(mid);
                if (ok(cm)) {
                    hi = mid;
                    cand = cm;
                } else {
                    lo = mid;
                }
            }
            consider(cand, hi);
        }
    }
    best.fallback = best.z == x.psi;
    return best;
}

/// Maximizes the objective over tau1 with beams fixed: grid over the admissible interval, then golden section.
template <class T>
double optimize_tau1(const Problem<T>& pb, const std::array<T, 4>& g, double current, const FpiConfig& fc = {})
{
    if (!pb.feasible) throw InfeasibleError("no ISAC duration meets the detection requirement");
    const double tau = pb.cfg.tau;
    const double lo = pb.tau_lo;
    auto f = [&](double t) { return double(ast_value(weights_at(pb, t).rho, g)); };
    double best_t = lo, best_f = f(lo);
    auto take = [&](double t) {
        if (!(t >= lo && t <= tau)) return;
        const double v = f(t);
        if (v > best_f) {
            best_f = v;
            best_t = t;
        }
    };
    const double step = fc.tau_grid * tau;
    const int n = int(std::floor(tau / step + 0.5));
    for (int k = 1; k <= n; ++k) take(std::min(tau, k * step));
    double a = std::max(lo, best_t - step), b = std::min(tau, best_t + step);
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - gr * (b - a), d = a + gr * (b - a);
    double fc_ = f(c), fd = f(d);
    for (int it = 0; it < 100 && b - a > 1e-12 * tau; ++it) {
        if (fc_ > fd) {
            b = d;
            d = c;
            fd = fc_;
            c = b - gr * (b - a);
            fc_ = f(c);
        } else {
            a = c;
            c = d;
            fc_ = fd;
            d = a + gr * (b - a);
            fd = f(d);
        }
    }
    take(0.5 * (a + b));
    take(current);
    return best_t;
}

template <class T>
struct FpiResult {
    Mechanism mech = Mechanism::RSACE;
    DesignVariables<T> x;
    std::vector<double> trajectory;
    int iterations = 0;
    bool converged = false;
    int theta_fallbacks = 0;
    Weighting weights;
    std::array<T, 4> gamma_tilde{};
    double ast = 0.0;
    double r_cu_isac = 0.0, r_cu_pc = 0.0, r_tc = 0.0;
    std::array<double, 3> duals{};  // eta_J, eta_I, mu_I of the last iteration
    double mu_theta = 0.0;
    double ms = 0.0;
};

/// Rescales w_I so that its leakage toward TC-J meets the bound.
template <class T>
void repair_interference(const Problem<T>& pb, DesignVariables<T>& x)
{
    const T leak = interference(pb, x);
    const T bound = T(pb.cfg.eps_J);
    if (leak > bound) x.wI *= std::sqrt(bound / leak) * T(1 - 1e-12);
}

/// Starting point: shortest admissible tau1, random RIS phases, matched-filter beams at 90 % of the budgets.
template <class T>
DesignVariables<T> initial_design(const Problem<T>& pb, Rng& rng)
{
    const auto& ch = *pb.ch;
    DesignVariables<T> x;
    x.tau1 = T(pb.tau_lo);
    x.w0 = pb.w0;
    x.lambda = pb.lambda;
    x.psi = draw_phases<T>(rng, pb.cfg.N_R);
    CVec<T> dI = ch.hhat_I();
    if (pb.mech != Mechanism::SACE) dI += cascaded_row(ch.g_RI, x.psi, ch.G);
    x.wI = (std::sqrt(T(0.9 * pb.cfg.p_Imax)) / dI.norm()) * dI;
    const CVec<T> dJ = ch.hhat_J();
    x.wJ = (std::sqrt(T(0.9 * pb.cfg.p_Jmax)) / dJ.norm()) * dJ;
    repair_interference(pb, x);
    return x;
}

template <class T>
void fill_report(const Problem<T>& pb, FpiResult<T>& res)
{
    res.weights = weights_at(pb, double(res.x.tau1));
    res.gamma_tilde = gammas(pb, res.x);
    const auto& rho = res.weights.rho;
    auto bits = [&](int l) { return rho[l] > 0.0 ? rho[l] * std::log2(1.0 + double(res.gamma_tilde[l])) : 0.0; };
    res.r_cu_isac = bits(0);
    res.r_cu_pc = bits(1) + bits(2);
    res.r_tc = bits(3);
    res.ast = res.r_cu_isac + res.r_cu_pc + res.r_tc;
}

/// Coordinate ascent over single RIS phases on the exact objective (beams fixed). Each phase is set to the
/// best of a uniform grid refined by golden section, or left unchanged if that is not better.
template <class T>
void theta_exact_sweeps(const Problem<T>& pb, DesignVariables<T>& x, const std::array<double, 4>& rho, int sweeps)
{
    const auto& ch = *pb.ch;
    const auto& oc = pb.oc;
    const CVec<T> Gw = ch.G * x.wI;
    const CVec<T> p = ch.g_RI.cwiseProduct(Gw.conjugate());
    const CVec<T> s = ch.g_RJ.cwiseProduct(Gw.conjugate());
    const T sI = T(pb.cfg.sigmaI_2), sJ = T(pb.cfg.sigmaJ_2);
    const T B1 = oc.c_J * x.wJ.squaredNorm() + oc.eps * sI;
    const T D = oc.xi_I * x.wI.squaredNorm();
    const T S3 = oc.xi_J * x.wJ.squaredNorm();
    const T bound = theta_interference_bound(pb);
    std::complex<T> zp = p.dot(x.psi), zs = s.dot(x.psi);
    auto f = [&](std::complex<T> a, std::complex<T> b) {
        const T I = std::norm(b);
        if (I > bound && I > std::norm(zs)) return -std::numeric_limits<T>::infinity();
        const T c = std::norm(a);
        return T(rho[1]) * std::log1p(oc.eps * c / B1) + T(rho[2]) * std::log1p((D + c) / sI) +
               T(rho[3]) * std::log1p(S3 / (I + sJ));
    };
    const int grid = 64;
    const T two_pi = T(2) * T(EIGEN_PI);
    for (int sw = 0; sw < sweeps; ++sw) {
        T moved = T(0);
        for (Eigen::Index n = 0; n < x.psi.size(); ++n) {
            const std::complex<T> pn = std::conj(p(n)), sn = std::conj(s(n));
            const std::complex<T> ap = zp - pn * x.psi(n), as = zs - sn * x.psi(n);
            auto g = [&](T th) {
                const std::complex<T> e = std::polar(T(1), th);
                return f(ap + pn * e, as + sn * e);
            };
            const T th0 = std::arg(x.psi(n));
            T best_th = th0, best = g(th0);
            const T base = best;
            T gth = th0;
            T gbest = -std::numeric_limits<T>::infinity();
            for (int k = 0; k < grid; ++k) {
                const T th = th0 + two_pi * T(k) / T(grid);
                const T v = g(th);
                if (v > gbest) {
                    gbest = v;
                    gth = th;
                }
            }
            T a = gth - two_pi / T(grid), b = gth + two_pi / T(grid);
            const T gr = T(0.5) * (std::sqrt(T(5)) - T(1));
            T c = b - gr * (b - a), d = a + gr * (b - a);
            T fc_ = g(c), fd = g(d);
            for (int it = 0; it < 60; ++it) {
                if (fc_ > fd) {
                    b = d; d = c; fd = fc_; c = b - gr * (b - a); fc_ = g(c);
                } else {
                    a = c; c = d; fc_ = fd; d = a + gr * (b - a); fd = g(d);
                }
            }
            for (T th : {gth, T(0.5) * (a + b)}) {
                const T v = g(th);
                if (v > best) {
                    best = v;
                    best_th = th;
                }
            }
            if (best > base) {
                const std::complex<T> e = std::polar(T(1), best_th);
                moved = std::max(moved, std::abs(e - x.psi(n)));
                x.psi(n) = e;
                zp = ap + pn * e;
                zs = as + sn * e;
            }
        }
        if (moved < T(1e-10)) break;
    }
}

/// Exact search over a common scale t of one beam (w_J or w_I), t limited by the power budget and, for
/// w_I, by the leakage bound. The scale is kept only when the objective improves.
template <class T>
bool beam_scale_search(const Problem<T>& pb, DesignVariables<T>& x, const std::array<double, 4>& rho, Block blk)
{
    CVec<T>& w = blk == Block::WJ ? x.wJ : x.wI;
    const T n2 = w.squaredNorm();
    if (!(n2 > T(0))) return false;
    T tmax = std::sqrt(T(blk == Block::WJ ? pb.cfg.p_Jmax : pb.cfg.p_Imax) / n2);
    if (blk == Block::WI) {
        const T leak = interference(pb, x);
        if (leak > T(0)) tmax = std::min(tmax, std::sqrt(T(pb.cfg.eps_J) / leak));
    }
    const CVec<T> w0 = w;
    auto f = [&](T t) {
        w = t * w0;
        return ast_value(rho, gammas(pb, x));
    };
    const T base = f(T(1));
    T best_t = T(1), best = base;
    const int grid = 32;
    for (int k = 1; k <= grid; ++k) {
        const T t = tmax * T(k) / T(grid);
        const T v = f(t);
        if (v > best) {
            best = v;
            best_t = t;
        }
    }
    T a = std::max(T(0), best_t - tmax / T(grid)), b = std::min(tmax, best_t + tmax / T(grid));
    const T gr = T(0.5) * (std::sqrt(T(5)) - T(1));
    T c = b - gr * (b - a), d = a + gr * (b - a);
    T fc_ = f(c), fd = f(d);
    for (int it = 0; it < 60; ++it) {
        if (fc_ > fd) {
            b = d; d = c; fd = fc_; c = b - gr * (b - a); fc_ = f(c);
        } else {
            a = c; c = d; fc_ = fd; d = a + gr * (b - a); fd = f(d);
        }
    }
    for (T t : {T(0.5) * (a + b), tmax}) {
        const T v = f(t);
        if (v > best) {
            best = v;
            best_t = t;
        }
    }
    w = best_t * w0;
    if (best_t * best_t * n2 > T(blk == Block::WJ ? pb.cfg.p_Jmax : pb.cfg.p_Imax))
        w *= std::sqrt(T(blk == Block::WJ ? pb.cfg.p_Jmax : pb.cfg.p_Imax) / w.squaredNorm());
    if (blk == Block::WI) repair_interference(pb, x);
    if (!(ast_value(rho, gammas(pb, x)) > base)) {
        w = w0;
        return false;
    }
    return true;
}

/// Joint move of (psi, w_I): coordinate ascent over single RIS phases where every candidate phase carries
/// w_I projected off the resulting cascaded TC-J row (norm kept). Kept only when the objective improves.
template <class T>
bool joint_null_sweeps(const Problem<T>& pb, DesignVariables<T>& x, const std::array<double, 4>& rho, int sweeps)
{
    const auto& ch = *pb.ch;
    const auto& oc = pb.oc;
    const T sI = T(pb.cfg.sigmaI_2), sJ = T(pb.cfg.sigmaJ_2);
    const T B1 = oc.c_J * x.wJ.squaredNorm() + oc.eps * sI;
    const T S3 = oc.xi_J * x.wJ.squaredNorm();
    const T nw = x.wI.norm();
    if (!(nw > T(0))) return false;
    auto null_beam = [&](const CVec<T>& rJ) {
        CVec<T> w = x.wI - (rJ.dot(x.wI) / rJ.squaredNorm()) * rJ;
        const T n = w.norm();
        return n > T(0) ? CVec<T>((nw / n) * w) : w;
    };
    auto score = [&](const CVec<T>& rI, const CVec<T>& rJ, const CVec<T>& w) {
        const T c = std::norm(rI.dot(w));
        const T I = std::norm(rJ.dot(w));
        return T(rho[1]) * std::log1p(oc.eps * c / B1) + T(rho[2]) * std::log1p((oc.xi_I * w.squaredNorm() + c) / sI) +
               T(rho[3]) * std::log1p(S3 / (I + sJ));
    };
    DesignVariables<T> c = x;
    CVec<T> rI = cascaded_row(ch.g_RI, c.psi, ch.G);
    CVec<T> rJ = cascaded_row(ch.g_RJ, c.psi, ch.G);
    const int grid = 32;
    const T two_pi = T(2) * T(EIGEN_PI);
    for (int sw = 0; sw < sweeps; ++sw) {
        T moved = T(0);
        for (Eigen::Index n = 0; n < c.psi.size(); ++n) {
            const CVec<T> Gn = ch.G.row(n).adjoint();
            const std::complex<T> gi = ch.g_RI(n), gj = ch.g_RJ(n);
            const std::complex<T> old = c.psi(n);
            auto eval = [&](T th) {
                const std::complex<T> d = std::conj(std::polar(T(1), th) - old);
                const CVec<T> ri = rI + (d * gi) * Gn;
                const CVec<T> rj = rJ + (d * gj) * Gn;
                return score(ri, rj, null_beam(rj));
            };
            const T th0 = std::arg(old);
            T best_th = th0, best = eval(th0);
            const T base = best;
            for (int k = 1; k < grid; ++k) {
                const T th = th0 + two_pi * T(k) / T(grid);
                const T v = eval(th);
                if (v > best) {
                    best = v;
                    best_th = th;
                }
            }
            T a = best_th - two_pi / T(grid), b = best_th + two_pi / T(grid);
            const T gr = T(0.5) * (std::sqrt(T(5)) - T(1));
            T cc = b - gr * (b - a), dd = a + gr * (b - a);
            T fc_ = eval(cc), fd = eval(dd);
            for (int it = 0; it < 40; ++it) {
                if (fc_ > fd) {
                    b = dd; dd = cc; fd = fc_; cc = b - gr * (b - a); fc_ = eval(cc);
                } else {
                    a = cc; cc = dd; fc_ = fd; dd = a + gr * (b - a); fd = eval(dd);
                }
            }
            const T mid = T(0.5) * (a + b);
            const T vm = eval(mid);
            if (vm > best) {
                best = vm;
                best_th = mid;
            }
            if (best > base) {
                const std::complex<T> e = std::polar(T(1), best_th);
                const std::complex<T> d = std::conj(e - old);
                rI += (d * gi) * Gn;
                rJ += (d * gj) * Gn;
                moved = std::max(moved, std::abs(e - old));
                c.psi(n) = e;
            }
        }
        if (moved < T(1e-10)) break;
    }
    c.wI = null_beam(cascaded_row(ch.g_RJ, c.psi, ch.G));
    repair_interference(pb, c);
    const T gain = ast_value(rho, gammas(pb, c)) - ast_value(rho, gammas(pb, x));
    if (!(gain > T(0))) return false;
    x = c;
    return true;
}

/// Block ascent from a given starting design: beams, RIS phases, then tau1 in every sweep.
/// Blocks disabled in `fc` stay at their initial values.
template <class T>
FpiResult<T> run_solver(const Problem<T>& pb, DesignVariables<T> x, const FpiConfig& fc = {})
{
    const auto t0 = std::chrono::steady_clock::now();
    if (!pb.feasible) throw InfeasibleError("no ISAC duration meets the detection requirement");
    FpiResult<T> res;
    res.mech = pb.mech;
    const bool has_ris = pb.mech != Mechanism::SACE;
    if (!(double(x.tau1) >= pb.tau_lo * (1 - 1e-12) && double(x.tau1) <= pb.cfg.tau))
        throw InfeasibleError("initial ISAC duration outside the admissible interval");
    double prev = double(ast_value(pb, x));
    res.trajectory.push_back(prev);
    for (int it = 1; it <= fc.max_iter; ++it) {
        const auto rho = weights_at(pb, double(x.tau1)).rho;
        const Aux<T> aux = optimal_aux(rho, ratio_terms(pb, x));
        if (fc.optimize_beams) {
            auto uJ = update_wJ(pb, x, rho, aux, fc);
            x.wJ = uJ.z;
            res.duals[0] = double(uJ.duals.empty() ? T(0) : uJ.duals[0]);
            if (fc.scale_search) beam_scale_search(pb, x, rho, Block::WJ);
            auto uI = update_wI(pb, x, rho, optimal_aux(rho, ratio_terms(pb, x)), fc);
            x.wI = uI.z;
            if (fc.scale_search) beam_scale_search(pb, x, rho, Block::WI);
            if (uI.duals.size() == 2) {
                res.duals[1] = double(uI.duals[0]);
                res.duals[2] = double(uI.duals[1]);
            }
        }
        if (fc.optimize_theta && has_ris) {
            T before = ast_value(pb, x);
            for (int k = 0; k < fc.theta_inner; ++k) {
                auto uT = update_theta(pb, x, rho, optimal_aux(rho, ratio_terms(pb, x)), fc);
                if (uT.fallback) {
                    if (k == 0) ++res.theta_fallbacks;
                    break;
                }
                x.psi = uT.z;
                res.mu_theta = double(uT.duals.empty() ? T(0) : uT.duals[0]);
                const T after = ast_value(pb, x);
                if (after - before <= T(0.01 * fc.delta)) break;
                before = after;
            }
        }
        if (fc.optimize_theta && has_ris && fc.unit_modulus) theta_exact_sweeps(pb, x, rho, fc.theta_sweeps);
        if (fc.optimize_theta && fc.optimize_beams && has_ris && fc.joint_align) joint_null_sweeps(pb, x, rho, fc.theta_sweeps);
        if (fc.optimize_tau1) x.tau1 = T(optimize_tau1(pb, gammas(pb, x), double(x.tau1), fc));
        const double cur = double(ast_value(pb, x));
        res.trajectory.push_back(cur);
        res.iterations = it;
        if (std::abs(cur - prev) <= fc.delta) {
            res.converged = true;
            break;
        }
        prev = cur;
    }
    if (pb.cfg.phase_bits > 0 && has_ris) {
        x.psi = project_discrete_phases<T>(x.psi, pb.cfg.phase_bits);
        repair_interference(pb, x);
    }
    res.x = x;
    fill_report(pb, res);
    res.ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

/// R-SACE optimization of one realization from a random starting point.
template <class T>
FpiResult<T> run_fpi(const ChannelSet<T>& ch, const ScenarioConfig& cfg, Rng& rng, const FpiConfig& fc = {})
{
    const Problem<T> pb = make_problem(ch, cfg, Mechanism::RSACE);
    if (!pb.feasible) throw InfeasibleError("no ISAC duration meets the detection requirement");
    return run_solver(pb, initial_design(pb, rng), fc);
}

/// Signed violations of C2..C7 (positive means violated).
struct ConstraintAudit {
    double detection = 0.0, false_alarm = 0.0, power_I = 0.0, power_J = 0.0, unit_modulus = 0.0,
           interference = 0.0, duration = 0.0;

    bool ok(double tol = 1e-9) const
    {
        return detection <= tol && false_alarm <= tol && power_I <= tol && power_J <= tol &&
               unit_modulus <= tol && interference <= tol && duration <= tol;
    }
};

template <class T>
ConstraintAudit audit_constraints(const Problem<T>& pb, const DesignVariables<T>& x)
{
    ConstraintAudit a;
    const auto& cfg = pb.cfg;
    if (pb.mech != Mechanism::RACE) {
        const SensingOutcome s = sense(double(x.tau1), double(pb.echo), cfg);
        a.detection = cfg.Pd_min - s.P_d;
        a.false_alarm = s.P_f - cfg.Pf_max;
    }
    a.power_I = double(x.wI.squaredNorm()) / cfg.p_Imax - 1.0;
    a.power_J = double(x.wJ.squaredNorm()) / cfg.p_Jmax - 1.0;
    if (pb.mech != Mechanism::SACE)
        a.unit_modulus = double((x.psi.cwiseAbs().array() - T(1)).abs().maxCoeff());
    a.interference = double(interference(pb, x)) / cfg.eps_J - 1.0;
    a.duration = std::max(-double(x.tau1), double(x.tau1) - cfg.tau);
    return a;
}

} // namespace rsace
