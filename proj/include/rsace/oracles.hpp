#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "rsace/baselines.hpp"

namespace rsace {

/// Deliberate corruptions used as negative controls for the oracle suite.
struct FaultInjection {
    bool detector = false;     // detection-probability formula evaluated with a scaled argument
    bool outage = false;       // direct-link quantile taken in the upper tail
    bool closed_form = false;  // v closed form with the wrong root
    bool qt = false;           // y closed form without the signal term in its denominator
    bool chi2 = false;         // noncentral chi-square CDF with doubled scale
};

struct OracleResult {
    std::string name;
    bool pass = false;
    double measured = 0.0;   // worst deviation (units per oracle)
    double tolerance = 0.0;
    std::string detail;
};

// ---------------------------------------------------------------------------------------------------------------
// numerics shared by the oracles

template <class F>
double golden_max(F&& f, double a, double b, int iters = 200)
{
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - gr * (b - a), d = a + gr * (b - a);
    double fc = f(c), fd = f(d);
    for (int i = 0; i < iters && b - a > 1e-15 * (std::abs(a) + std::abs(b) + 1e-300); ++i) {
        if (fc > fd) {
            b = d; d = c; fd = fc; c = b - gr * (b - a); fc = f(c);
        } else {
            a = c; c = d; fc = fd; d = a + gr * (b - a); fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

/* Maximizes a concave quadratic given only function values: Hessian and gradient by central differences
   (exact for quadratics up to rounding), then Newton steps. Returns the best value found. */
inline double blackbox_quadratic_max(const std::function<double(const Eigen::VectorXd&)>& f, Eigen::Index n)
{
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    double best = f(x);
    for (int pass = 0; pass < 3; ++pass) {
        const double h = 1.0;
        Eigen::VectorXd g(n);
        Eigen::MatrixXd H(n, n);
        const double f0 = f(x);
        for (Eigen::Index i = 0; i < n; ++i) {
            Eigen::VectorXd xp = x, xm = x;
            xp(i) += h;
            xm(i) -= h;
            const double fp = f(xp), fm = f(xm);
            g(i) = (fp - fm) / (2 * h);
            H(i, i) = (fp - 2 * f0 + fm) / (h * h);
        }
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = i + 1; j < n; ++j) {
                Eigen::VectorXd a = x, b = x, c = x, d = x;
                a(i) += h; a(j) += h;
                b(i) += h; b(j) -= h;
                c(i) -= h; c(j) += h;
                d(i) -= h; d(j) -= h;
                H(i, j) = H(j, i) = (f(a) - f(b) - f(c) + f(d)) / (4 * h * h);
            }
        const Eigen::VectorXd step = Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(-H).solve(g);
        x += step;
        best = std::max(best, f(x));
    }
    return best;
}

// ---------------------------------------------------------------------------------------------------------------
// detection statistics

struct DetectorCheck {
    double pd_emp = 0, pd_th = 0, pf_emp = 0, pf_th = 0;
    double pd_z = 0, pf_z = 0;
};

/// Energy detector with exponential per-sample energies (mean echo + K sigma0^2 under H1, K sigma0^2 under H0),
/// so the statistic is Gamma(n, mean/n) with n = tau1 fs samples; compared with the closed forms.
inline DetectorCheck detector_check(const ScenarioConfig& cfg, double tau1, double echo, int trials, Rng& rng,
                                    const FaultInjection& fault = {})
{
    const double n = std::floor(tau1 * cfg.fs);
    const double noise = noise_floor(cfg);
    const double eps = threshold_for_pf(cfg.Pf_max, tau1, cfg);
    std::gamma_distribution<double> h1(n, (echo + noise) / n), h0(n, noise / n);
    int det = 0, fa = 0;
    for (int t = 0; t < trials; ++t) {
        det += h1(rng) > eps;
        fa += h0(rng) > eps;
    }
    DetectorCheck c;
    c.pd_emp = double(det) / trials;
    c.pf_emp = double(fa) / trials;
    c.pd_th = fault.detector ? gaussian_q(1.5 * std::sqrt(tau1 * cfg.fs) * (eps / (echo + noise) - 1.0))
                             : detection_prob(tau1, eps, echo, cfg);
    c.pf_th = false_alarm_prob(tau1, eps, cfg);
    auto z = [&](double emp, double th) {
        const double se = std::sqrt(std::max(th * (1 - th), 1.0 / trials) / trials);
        return std::abs(emp - th) / se;
    };
    c.pd_z = z(c.pd_emp, c.pd_th);
    c.pf_z = z(c.pf_emp, c.pf_th);
    return c;
}

// ---------------------------------------------------------------------------------------------------------------
// special functions

struct SpecfunCheck {
    double marcum_z = 0;      // worst |MC - Q1| / SE over the test pairs
    double chi2_z = 0;        // worst |MC - F| / SE for the one-antenna norm
    double inverse_err = 0;   // worst |F(F^-1(p)) - p|
    double k4_tail = 0;       // Pr[||f||^2 < F^-1(0.025)] with K = 4 (model fit, informational)
};

inline SpecfunCheck specfun_check(int samples, Rng& rng, const FaultInjection& fault = {})
{
    SpecfunCheck c;
    std::normal_distribution<double> n01;
    auto z = [&](long hits, double th) {
        const double se = std::sqrt(std::max(th * (1 - th), 1.0 / samples) / samples);
        return std::abs(double(hits) / samples - th) / se;
    };
    const std::array<std::pair<double, double>, 5> ab{{{0.5, 1.0}, {1.0, 1.0}, {2.0, 1.5}, {3.0, 4.0}, {1.0, 3.0}}};
    for (auto [a, b] : ab) {
        long hits = 0;
        for (int s = 0; s < samples; ++s) hits += std::hypot(a + n01(rng), n01(rng)) > b;
        c.marcum_z = std::max(c.marcum_z, z(hits, marcum_q1(a, b)));
    }
    // one antenna: ||f_hat + e||^2 with e ~ CN(0, s) is exactly the two-dof model
    const double s2 = 0.05;
    for (double fh : {0.3, 1.0, 2.0}) {
        const CVec<double> fhat = CVec<double>::Constant(1, std::complex<double>(fh, 0));
        for (double p : {0.025, 0.5}) {
            double q = norm2_quantile(p, fh * fh, 1, s2);
            if (fault.chi2) q = ncchi2_cdf_inv(p, NoncentralChi2Params<double>{2 * fh * fh / (2 * s2), 2 * s2});
            long hits = 0;
            for (int s = 0; s < samples; ++s) hits += std::norm(fhat(0) + draw_cn<double>(rng, s2)) < q;
            c.chi2_z = std::max(c.chi2_z, z(hits, p));
        }
    }
    for (double nc : {0.0, 0.5, 4.0, 40.0, 400.0})
        for (double sc : {0.01, 0.2, 1.0})
            for (double p : {1e-4, 0.025, 0.1, 0.5, 0.9, 0.999}) {
                NoncentralChi2Params<double> prm{nc, sc};
                prm.threshold = ncchi2_cdf_inv(p, prm);
                c.inverse_err = std::max(c.inverse_err, std::abs(ncchi2_cdf(prm) - p));
            }
    const CVec<double> f4 = draw_cn_vec<double>(rng, 4, 1.0 - s2);
    const double q4 = norm2_quantile(0.025, f4.squaredNorm(), 4, s2);
    long below = 0;
    for (int s = 0; s < samples; ++s) below += (f4 + draw_cn_vec<double>(rng, 4, s2)).squaredNorm() < q4;
    c.k4_tail = double(below) / samples;
    return c;
}

// ---------------------------------------------------------------------------------------------------------------
// outage of the transformed rates

struct OutageCheck {
    std::array<long, 4> outages{};
    long draws = 0;
    std::array<double, 4> rate() const
    {
        std::array<double, 4> r{};
        for (int l = 0; l < 4; ++l) r[l] = draws ? double(outages[l]) / double(draws) : 0.0;
        return r;
    }
};

/// Redraws the CSI error around the stored estimate and counts R_l < R_tilde_l for the design x.
template <class T>
void outage_count(const Problem<T>& pb, const DesignVariables<T>& x, int draws, Rng& rng, OutageCheck& acc,
                  const FaultInjection& fault = {}, PerfectCsiForm form = PerfectCsiForm::Decomposed)
{
    const auto& ch = *pb.ch;
    const ScenarioConfig& cfg = pb.cfg;
    std::array<T, 4> g = gammas(pb, x);
    if (fault.outage) {
        const T up = norm2_quantile(T(1) - pb.oc.eps / T(2), ch.fhat_I.squaredNorm(), cfg.K, ch.sigma_e2);
        const T scale = up / pb.oc.q_I;
        g[0] = (scale * pb.oc.xi_I * x.w0.squaredNorm() + std::norm(cascaded_gain(ch.g_RI, x.lambda, ch.G, x.w0))) /
               T(cfg.sigmaI_2);
    }
    ChannelSet<T> c = ch;
    DesignVariables<T> dv = x;
    dv.w0 = pb.w0;
    dv.lambda = pb.lambda;
    for (int n = 0; n < draws; ++n) {
        c.e_I = draw_cn_vec<T>(rng, cfg.K, ch.sigma_e2);
        c.e_J = draw_cn_vec<T>(rng, cfg.K, ch.sigma_e2);
        c.h_I = c.L_I * (c.fhat_I + c.e_I);
        c.h_J = c.L_J * (c.fhat_J + c.e_J);
        for (int l = 0; l < 4; ++l)
            if (sinr_true(l, c, dv, cfg, form) < g[l] * (T(1) - T(1e-9))) ++acc.outages[l];  // ties within solver tolerance are not outages
    }
    acc.draws += draws;
}

// ---------------------------------------------------------------------------------------------------------------
// closed-form block updates against independent numerical maximization

struct RandomState {
    ChannelSet<double> ch;
    ScenarioConfig cfg;
    DesignVariables<double> x;
    std::array<double, 4> rho{};
};

/// Random channel, design and weights for the block oracles.
inline RandomState random_state(const ScenarioConfig& base, Rng& rng)
{
    RandomState s;
    s.cfg = base;
    s.ch = gen_user_channels<double>(s.cfg, rng);
    s.x.psi = draw_phases<double>(rng, s.cfg.N_R);
    s.x.wI = random_beam<double>(rng, s.cfg.K, 0.5 * s.cfg.p_Imax);
    s.x.wJ = random_beam<double>(rng, s.cfg.K, 0.5 * s.cfg.p_Jmax);
    s.x.lambda = CVec<double>::Ones(s.cfg.N_R);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    double tot = 0;
    for (double& r : s.rho) tot += (r = u(rng));
    for (double& r : s.rho) r /= tot;
    return s;
}

/* Random auxiliaries around the optimal ones so the block subproblems are not at their fixed point. */
inline Aux<double> perturbed_aux(const std::array<double, 4>& rho, const std::array<RatioTerm<double>, 3>& t,
                                 Rng& rng)
{
    Aux<double> a = optimal_aux(rho, t);
    std::uniform_real_distribution<double> u(0.5, 1.5);
    for (int l = 0; l < 3; ++l) {
        a.v[l] *= u(rng);
        CVec<double> noise = draw_cn_vec<double>(rng, a.y[l].size());
        a.y[l] += 0.3 * a.y[l].norm() / std::max(1e-300, noise.norm()) * noise;
    }
    return a;
}

/// Minimum over the multipliers of the Lagrangian dual of max -z^H Q z + 2 Re r^H z s.t. constraints.
/// Inner maximization by complete orthogonal decomposition; multipliers by golden section in log scale.
inline double qcqp_dual_value(const CMat<double>& Q, const CVec<double>& r,
                              const std::vector<QuadConstraint<double>>& cons)
{
    auto dual = [&](const std::vector<double>& lam) {
        CMat<double> M = Q;
        double s = 0;
        for (size_t i = 0; i < cons.size(); ++i) {
            detail::add_scaled(M, lam[i], cons[i]);
            s += lam[i] * cons[i].bound;
        }
        const CVec<double> z = Eigen::CompleteOrthogonalDecomposition<CMat<double>>(M).solve(r);
        return std::real(r.dot(z)) + s;
    };
    auto min_over = [&](auto&& g) {
        // g convex on [0, inf): scan log grid, then golden section on the bracketing cell
        double best_l = 0.0, best = g(0.0);
        double prev_l = 0.0;
        double lo = 0.0, hi = 0.0;
        for (int k = -60; k <= 60; ++k) {
            const double l = std::pow(10.0, 0.5 * k);
            const double v = g(l);
            if (v < best) {
                best = v;
                best_l = l;
                lo = prev_l;
                hi = std::pow(10.0, 0.5 * (k + 1));
            }
            prev_l = l;
        }
        if (best_l > 0.0) {
            const double l = golden_max([&](double t) { return -g(t); }, lo, hi, 300);
            best = std::min(best, g(l));
        }
        return best;
    };
    if (cons.size() == 1) return min_over([&](double a) { return dual({a}); });
    return min_over([&](double b) { return min_over([&](double a) { return dual({a, b}); }); });
}

struct BlockGap {
    double v = 0, y = 0, wJ = 0, wI = 0, theta = 0;
};

/// Relative objective gaps between each closed form and its numerical counterpart on one random state.
inline BlockGap block_gaps(const RandomState& s, Rng& rng, const FaultInjection& fault = {})
{
    BlockGap gap;
    const Problem<double> pb = make_problem(s.ch, s.cfg, Mechanism::RSACE);
    const auto terms = ratio_terms(pb, s.x);
    const Aux<double> aux = perturbed_aux(s.rho, terms, rng);

    for (int l = 0; l < 3; ++l) {
        const double rho = s.rho[l + 1];
        const double R = std::real(aux.y[l].dot(terms[l].a));
        auto h = [&](double v) { return rho * (std::log1p(v) - v) + 2 * std::sqrt(rho * (1 + v)) * R; };
        double vcf = qt_v_closed_form(rho, R);
        if (fault.closed_form) vcf = (R * R - R * std::sqrt(R * R + 4 * rho)) / (2 * rho);
        const double vnum = golden_max(h, -1.0 + 1e-12, std::max(10.0, 10 * (1 + std::abs(vcf))), 400);
        gap.v = std::max(gap.v, std::max(0.0, h(vnum) - h(vcf)) / std::max(1.0, std::abs(h(vnum))));

        const double sq = std::sqrt(rho * (1 + aux.v[l]));
        const RatioTerm<double>& t = terms[l];
        auto phi = [&](const CVec<double>& y) {
            const std::complex<double> ya = y.dot(t.a);
            return 2 * sq * std::real(ya) - std::norm(ya) - y.squaredNorm() * t.B;
        };
        CVec<double> ycf = qt_y_closed_form(rho, aux.v[l], t);
        if (fault.qt) ycf = (sq / t.B) * t.a;
        const Eigen::Index m = t.a.size();
        const double scale = std::sqrt(rho) / std::max(1e-300, t.a.norm());
        auto phi_real = [&](const Eigen::VectorXd& xr) {
            CVec<double> y(m);
            for (Eigen::Index i = 0; i < m; ++i) y(i) = scale * std::complex<double>(xr(i), xr(m + i));
            return phi(y);
        };
        const double ynum = blackbox_quadratic_max(phi_real, 2 * m);
        gap.y = std::max(gap.y, std::max(0.0, ynum - phi(ycf)) / std::max(1.0, std::abs(ynum)));
    }

    struct BlockCase {
        Block blk;
        double* out;
    };
    for (BlockCase bc : {BlockCase{Block::WJ, &gap.wJ}, BlockCase{Block::WI, &gap.wI}, BlockCase{Block::Theta, &gap.theta}}) {
        const auto bq = block_quadratic(s.rho, aux, block_terms(pb, s.x, bc.blk));
        const auto cons = block_constraints(pb, s.x, bc.blk);
        CVec<double> z;
        if (bc.blk == Block::WJ) z = update_wJ(pb, s.x, s.rho, aux).z;
        if (bc.blk == Block::WI) z = update_wI(pb, s.x, s.rho, aux).z;
        if (bc.blk == Block::Theta) z = update_theta_relaxed(pb, s.x, s.rho, aux).z;
        double viol = 0;
        for (const auto& c : cons) viol = std::max(viol, c.eval(z) / c.bound - 1.0);
        const double primal = bq.value(z);
        const double dual = qcqp_dual_value(bq.Q, bq.r, cons) + bq.c;
        *bc.out = std::max(*bc.out, std::max(0.0, dual - primal) / std::max(1.0, std::abs(dual)) +
                                        std::max(0.0, viol - 1e-8));
    }
    return gap;
}

// ---------------------------------------------------------------------------------------------------------------
// tau1 profile

/// Number of strict local maxima of the objective over a uniform tau1 grid on the admissible interval.
template <class T>
int tau1_local_maxima(const Problem<T>& pb, const DesignVariables<T>& x, int points = 200)
{
    const auto g = gammas(pb, x);
    std::vector<double> f(points);
    for (int i = 0; i < points; ++i) {
        const double t = pb.tau_lo + (pb.cfg.tau - pb.tau_lo) * double(i) / double(points - 1);
        f[i] = double(ast_value(weights_at(pb, std::max(t, 1e-12)).rho, g));
    }
    const double tol = 1e-10 * (1.0 + *std::max_element(f.begin(), f.end()));
    int peaks = 0;
    int dir = 0;  // +1 rising, -1 falling
    for (int i = 1; i < points; ++i) {
        const double d = f[i] - f[i - 1];
        if (d > tol) {
            dir = 1;
        } else if (d < -tol) {
            if (dir >= 0) ++peaks;
            dir = -1;
        }
    }
    if (dir == 1) ++peaks;
    return std::max(peaks, 1);
}

} // namespace rsace
