#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rsace/oracles.hpp"
#include "rsace/rates.hpp"

using namespace rsace;

namespace {

// sum_n conj(g_n) psi_n sum_k G_nk w_k, written out element by element.
std::complex<double> gain_loops(const CVec<double>& g, const CVec<double>& psi, const CMat<double>& G,
                                const CVec<double>& w)
{
    std::complex<double> s = 0;
    for (int n = 0; n < G.rows(); ++n) {
        std::complex<double> row = 0;
        for (int k = 0; k < G.cols(); ++k) row += G(n, k) * w(k);
        s += std::conj(g(n)) * psi(n) * row;
    }
    return s;
}

double sq(std::complex<double> z) { return z.real() * z.real() + z.imag() * z.imag(); }

double sum_sq(const CVec<double>& w)
{
    std::complex<double> s = 0;
    for (int k = 0; k < w.size(); ++k) s += w(k);
    return sq(s);
}

struct Fixture {
    ScenarioConfig cfg;
    ChannelSet<double> ch;
    DesignVariables<double> dv;
    Fixture()
    {
        Rng rng(21);
        ch = gen_user_channels<double>(cfg, rng);
        dv.tau1 = 0.05;
        dv.w0 = draw_cn_vec<double>(rng, cfg.K, 0.004);
        dv.wI = draw_cn_vec<double>(rng, cfg.K, 0.004);
        dv.wJ = draw_cn_vec<double>(rng, cfg.K, 0.004);
        dv.lambda = steering_vector(0.2, cfg.N_R);
        dv.psi = steering_vector(-0.9, cfg.N_R);
    }
};

} // namespace

TEST_CASE("estimated SINRs")
{
    Fixture f;
    const auto& cfg = f.cfg;
    const auto& ch = f.ch;
    auto dv = f.dv;
    const double est = ch.L_I * ch.L_I * (1 - ch.sigma_e2);
    const double g0 = (sq(gain_loops(ch.g_RI, dv.lambda, ch.G, dv.w0)) + est * sum_sq(dv.w0)) / cfg.sigmaI_2;
    const double g1 = sq(gain_loops(ch.g_RI, dv.psi, ch.G, dv.wI)) / (est * sum_sq(dv.wJ) + cfg.sigmaI_2);
    const double g2 = (sq(gain_loops(ch.g_RI, dv.psi, ch.G, dv.wI)) + est * sum_sq(dv.wI)) / cfg.sigmaI_2;
    std::complex<double> hj = 0;
    for (int k = 0; k < cfg.K; ++k) hj += std::conj(ch.L_J * ch.fhat_J(k)) * dv.wJ(k);
    const double g3 = sq(hj) / (sq(gain_loops(ch.g_RJ, dv.psi, ch.G, dv.wI)) + cfg.sigmaJ_2);
    CHECK(sinr_hat(0, ch, dv, cfg) == doctest::Approx(g0).epsilon(1e-12));
    CHECK(sinr_hat(1, ch, dv, cfg) == doctest::Approx(g1).epsilon(1e-12));
    CHECK(sinr_hat(2, ch, dv, cfg) == doctest::Approx(g2).epsilon(1e-12));
    CHECK(sinr_hat(3, ch, dv, cfg) == doctest::Approx(g3).epsilon(1e-12));
    CHECK_THROWS(sinr_hat(4, ch, dv, cfg));

    SUBCASE("no interference")
    {
        dv.wJ.setZero();
        CHECK(sinr_hat(1, ch, dv, cfg) ==
              doctest::Approx(sq(gain_loops(ch.g_RI, dv.psi, ch.G, dv.wI)) / cfg.sigmaI_2).epsilon(1e-12));
    }
    SUBCASE("printed TC-J numerator")
    {
        ScenarioConfig c = cfg;
        c.printed_gamma3 = true;
        dv.wI.setZero();
        // as printed, the numerator reads w_I; with w_I = 0 it vanishes
        CHECK(sinr_hat(3, ch, dv, c) == 0.0);
        dv = f.dv;
        dv.wI.setZero();
        CHECK(sinr_hat(3, ch, dv, cfg) == doctest::Approx(sq(hj) / cfg.sigmaJ_2).epsilon(1e-12));
    }
}

TEST_CASE("transformed SINRs")
{
    Fixture f;
    const auto& cfg = f.cfg;
    const auto& ch = f.ch;
    auto dv = f.dv;
    const auto oc = outage_coefficients(ch, cfg);
    // quantile coefficient against its defining CDF value
    NoncentralChi2Params<double> p = chi2_params_from_estimate(ch.fhat_I.squaredNorm(), cfg.K * ch.sigma_e2);
    p.threshold = oc.q_I;
    CHECK(ncchi2_cdf(p) == doctest::Approx(cfg.eps_out / 2).epsilon(1e-8));

    SUBCASE("zero TC-J beam")
    {
        dv.wJ.setZero();
        CHECK(transformed_sinr(3, ch, dv, cfg) == 0.0);
        CHECK(transformed_sinr(1, ch, dv, cfg) ==
              doctest::Approx(sq(gain_loops(ch.g_RI, dv.psi, ch.G, dv.wI)) / cfg.sigmaI_2).epsilon(1e-12));
    }
    SUBCASE("split sums to the l = 2 value")
    {
        const auto s = transformed_sinr2_split(ch, dv, cfg, oc);
        CHECK(s[0] + s[1] == doctest::Approx(transformed_sinr(2, ch, dv, cfg)).epsilon(1e-14));
    }
    SUBCASE("domain")
    {
        ScenarioConfig c = cfg;
        c.eps_out = 1.0;
        CHECK_THROWS(transformed_sinr(0, ch, dv, c));
    }
}

TEST_CASE("scenario probabilities and weights")
{
    const auto p = scenario_probs(case_probabilities(1.0, 0.0, 0.5));
    CHECK(p.P1 == 0.5);
    CHECK(p.P2 == 0.5);
    CHECK(p.P3 == 0.5);
    const auto q = scenario_probs(case_probabilities(0.9, 0.1, 0.5));
    CHECK(q.P1 == doctest::Approx(0.45 + 0.05));
    CHECK(q.P2 == doctest::Approx(0.05 + 0.45));
    CHECK(q.P3 == doctest::Approx(0.45));
    CHECK(scenario_probs(case_probabilities(0.9, 0.1, 0.0)).P3 == 0.0);

    ScenarioConfig cfg;
    const auto rho = ast_weights(cfg.tau, q, cfg);
    CHECK(rho[0] == doctest::Approx(1 - cfg.eps_out));
    CHECK(rho[1] == 0.0);
    CHECK(rho[2] == 0.0);
    CHECK(rho[3] == 0.0);
    const std::array<double, 4> g{3.0, 5.0, 7.0, 1.0};
    CHECK(tilde_ast(rho, g) == doctest::Approx((1 - cfg.eps_out) * 2.0));
    cfg.eps_out = 1.0 - 1e-12;
    const auto r2 = ast_weights(0.3, q, cfg);
    CHECK(tilde_ast(r2, g) < 1e-10);
    CHECK_THROWS(ast_weights(0.0, q, cfg));
    CHECK_THROWS(ast_weights(1.5, q, cfg));
}

TEST_CASE("relaxed objective term by term")
{
    Fixture f;
    const auto probs = scenario_probs(case_probabilities(0.93, 0.1, f.cfg.P_J1));
    const auto rho = ast_weights(f.dv.tau1, probs, f.cfg);
    const auto oc = outage_coefficients(f.ch, f.cfg);
    const auto rep = rate_report(f.ch, f.dv, rho, probs, f.cfg, oc);
    const double keep = 1 - f.cfg.eps_out;
    const double a = f.dv.tau1 / f.cfg.tau, b = 1 - a;
    double expect = a * keep * std::log2(1 + transformed_sinr(0, f.ch, f.dv, f.cfg));
    expect += b * probs.P1 * keep * std::log2(1 + transformed_sinr(1, f.ch, f.dv, f.cfg));
    expect += b * probs.P2 * keep * std::log2(1 + transformed_sinr(2, f.ch, f.dv, f.cfg));
    expect += b * probs.P3 * keep * std::log2(1 + transformed_sinr(3, f.ch, f.dv, f.cfg));
    CHECK(rep.tilde_ast == doctest::Approx(expect).epsilon(1e-13));
    for (int l = 0; l < 4; ++l) CHECK(rep.gamma_tilde[l] >= 0.0);
}

TEST_CASE("outage of an optimized design")
{
    ScenarioConfig cfg;
    FpiResult<double> res;
    ChannelSet<double> ch;
    for (std::uint64_t s = 1;; ++s) {
        Rng rng(s);
        ch = gen_user_channels<double>(cfg, rng);
        try {
            res = run_fpi(ch, cfg, rng);
            break;
        } catch (const InfeasibleError&) {
        }
    }
    const auto pb = make_problem(ch, cfg, Mechanism::RSACE);
    const int draws = 20000;
    const double se = std::sqrt(cfg.eps_out * (1 - cfg.eps_out) / draws);

    OutageCheck dec;
    Rng r1(31);
    outage_count(pb, res.x, draws, r1, dec);
    for (int l : {0, 1, 3}) CHECK(dec.rate()[l] <= cfg.eps_out + 3 * se);

    OutageCheck nb;
    Rng r2(32);
    outage_count(pb, res.x, draws, r2, nb, {}, PerfectCsiForm::NormBound);
    for (int l = 0; l < 4; ++l) CHECK(nb.rate()[l] <= cfg.eps_out + 3 * se);
}
