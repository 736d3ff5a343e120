// Acceptance run: one PASS/FAIL line per primary criterion, tolerances pinned below.
// Exit status is 0 when every criterion passes or fails only as a listed known failure.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>

#include "rsace/harness.hpp"

using namespace rsace;

namespace {

// pinned tolerances
constexpr double kZ = 3.0;                 // standard errors for Monte-Carlo agreement
constexpr double kPfTarget = 0.10, kPfBand = 0.01;
constexpr int kDetectorTrials = 10000;
constexpr int kOutageDraws = 100000;
constexpr int kOutageRealizations = 2;
constexpr int kBlockStates = 20;
constexpr double kClosedFormTol = 1e-6;
constexpr double kQtTol = 1e-8;
constexpr int kConvergenceRuns = 50;
constexpr double kMonotoneSlack = 1e-9;
constexpr double kConvergedFloor = 0.95;
constexpr int kUnimodalRealizations = 100;
constexpr double kUnimodalFloor = 0.95;
constexpr double kTau1Lo = 0.010, kTau1Hi = 0.080;
constexpr int kOrderingSeeds = 50;
constexpr double kRaceFloor = 0.10, kSaceFloor = 0.40;
constexpr int kTrendRealizations = 100;
constexpr int kSpecfunSamples = 1000000;
constexpr double kInverseTol = 1e-8;
constexpr std::uint64_t kSeed = 20240601;

struct Line {
    std::string name;
    bool pass = false;
    bool known = false;
    std::string detail;
};

std::vector<Line> lines;

void report(Line l)
{
    std::cout << (l.pass ? "PASS" : (l.known ? "FAIL (known)" : "FAIL")) << "  " << l.name << ": " << l.detail
              << std::endl;
    lines.push_back(std::move(l));
}

void info(const std::string& s) { std::cout << "      info: " << s << std::endl; }

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, int prec = 4)
{
    std::ostringstream os;
    os.precision(prec);
    os << v;
    return os.str();
}

int jobs() { return int(std::max(1u, std::thread::hardware_concurrency())); }

// Realization indices of feasible channels, drawn with the harness seed streams.
std::vector<std::pair<ChannelSet<double>, int>> feasible_draws(const ScenarioConfig& cfg, int want)
{
    std::vector<std::pair<ChannelSet<double>, int>> out;
    for (int r = 0; r < 1000 && int(out.size()) < want; ++r) {
        Rng rng(stream_seed(kSeed, std::uint64_t(r), 0));
        auto ch = gen_user_channels<double>(cfg, rng);
        if (make_problem(ch, cfg, Mechanism::RSACE).feasible) out.emplace_back(std::move(ch), r);
    }
    return out;
}

const SweepRow& row_of(const std::vector<SweepRow>& rows, double value, Algorithm a)
{
    for (const SweepRow& r : rows)
        if (r.value == value && r.algorithm == a) return r;
    throw std::logic_error("acceptance: missing sweep row");
}

// Realizations feasible in every listed row, so means compare the same draws.
std::vector<std::size_t> joint_feasible(const std::vector<const SweepRow*>& rows)
{
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < rows.front()->detail.size(); ++i) {
        bool ok = true;
        for (const SweepRow* r : rows) ok = ok && r->detail[i].feasible;
        if (ok) idx.push_back(i);
    }
    return idx;
}

using Field = std::function<double(const RealizationRecord&)>;
const Field kAst = [](const RealizationRecord& r) { return r.ast; };
const Field kCuI = [](const RealizationRecord& r) { return r.r_cu_isac + r.r_cu_pc; };
const Field kTc = [](const RealizationRecord& r) { return r.r_tc; };

double mean_over(const SweepRow& r, const std::vector<std::size_t>& idx, const Field& f)
{
    double s = 0;
    for (std::size_t i : idx) s += f(r.detail[i]);
    return idx.empty() ? std::nan("") : s / double(idx.size());
}

SweepSpec sweep(std::string param, std::vector<double> values, std::vector<Algorithm> algs, int realizations)
{
    SweepSpec s;
    s.param = std::move(param);
    s.values = std::move(values);
    s.algorithms = std::move(algs);
    s.realizations = realizations;
    s.seed = kSeed;
    s.jobs = jobs();
    return s;
}

// ---------------------------------------------------------------------------------------------------------------

void detector(const ScenarioConfig& cfg)
{
    const auto t0 = std::chrono::steady_clock::now();
    const auto draws = feasible_draws(cfg, 1);
    const auto pb = make_problem(draws.at(0).first, cfg, Mechanism::RSACE);
    bool ok = true;
    std::string d;
    for (double tau1 : {0.037, pb.tau_lo}) {
        Rng rng(stream_seed(kSeed, 11, std::uint64_t(tau1 * 1e6)));
        const DetectorCheck c = detector_check(cfg, tau1, pb.echo, kDetectorTrials, rng);
        ok = ok && c.pd_z <= kZ && c.pf_z <= kZ && std::abs(c.pf_emp - kPfTarget) <= kPfBand;
        d += "tau1=" + fmt(tau1 * 1e3) + "ms Pd " + fmt(c.pd_emp) + " vs " + fmt(c.pd_th) + " (z " + fmt(c.pd_z, 2) +
             "), Pf " + fmt(c.pf_emp) + " vs " + fmt(c.pf_th) + " (z " + fmt(c.pf_z, 2) + "); ";
    }
    const double secs = seconds_since(t0);
    ok = ok && secs <= 30;
    report({"detection statistics vs energy-detector simulation", ok, false, d + fmt(secs, 3) + " s"});
}

void outage(const ScenarioConfig& base)
{
    const auto t0 = std::chrono::steady_clock::now();
    std::array<double, 4> worst{};  // largest (rate - tolerance) per l
    std::array<double, 4> worst_nb{};
    worst.fill(-1);
    worst_nb.fill(-1);
    std::string per_eps;
    for (double eps : {0.02, 0.05, 0.1}) {
        ScenarioConfig cfg = base;
        cfg.eps_out = eps;
        const double tol = eps + kZ * std::sqrt(eps * (1 - eps) / kOutageDraws);
        std::array<double, 4> hi{};
        for (const auto& [ch, r] : feasible_draws(cfg, kOutageRealizations)) {
            const auto pb = make_problem(ch, cfg, Mechanism::RSACE);
            Rng rng(stream_seed(kSeed, std::uint64_t(r), 1));
            const auto res = run_solver(pb, initial_design(pb, rng));
            OutageCheck dec, nb;
            Rng mc(stream_seed(kSeed, std::uint64_t(r), 2));
            outage_count(pb, res.x, kOutageDraws, mc, dec);
            Rng mc2(stream_seed(kSeed, std::uint64_t(r), 2));
            outage_count(pb, res.x, kOutageDraws, mc2, nb, {}, PerfectCsiForm::NormBound);
            for (int l = 0; l < 4; ++l) {
                worst[l] = std::max(worst[l], dec.rate()[l] - tol);
                worst_nb[l] = std::max(worst_nb[l], nb.rate()[l] - tol);
                hi[l] = std::max(hi[l], dec.rate()[l]);
            }
        }
        per_eps += "eps " + fmt(eps) + ": [" + fmt(hi[0], 3) + ", " + fmt(hi[1], 3) + ", " + fmt(hi[2], 3) + ", " +
                   fmt(hi[3], 3) + "] ";
    }
    const double secs = seconds_since(t0);
    const bool l013 = worst[0] <= 0 && worst[1] <= 0 && worst[3] <= 0 && secs <= 120;
    const bool l2 = worst[2] <= 0;
    // l = 2 is a known failure of the transformation under the decomposed true SINR; anything else is not
    report({"outage probability <= eps_out + 3 SE for l = 0..3", l013 && l2, l013 && !l2,
            "max empirical outage per l " + per_eps + "(" + fmt(secs, 3) + " s)" +
                (l013 && !l2 ? "; l = 2 exceeds eps_out, see README known issues" : "")});
    const bool nb_ok = *std::max_element(worst_nb.begin(), worst_nb.end()) <= 0;
    info(std::string("under the norm-bound true SINR every l ") + (nb_ok ? "meets" : "misses") + " the bound");
}

void closed_forms(const ScenarioConfig& cfg)
{
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(stream_seed(kSeed, 31));
    BlockGap w;
    for (int k = 0; k < kBlockStates; ++k) {
        const BlockGap g = block_gaps(random_state(cfg, rng), rng);
        w.v = std::max(w.v, g.v);
        w.y = std::max(w.y, g.y);
        w.wJ = std::max(w.wJ, g.wJ);
        w.wI = std::max(w.wI, g.wI);
        w.theta = std::max(w.theta, g.theta);
    }
    const double m = std::max({w.v, w.y, w.wJ, w.wI, w.theta});
    const double secs = seconds_since(t0);
    report({"closed-form block updates vs numerical maximization", m <= kClosedFormTol && secs <= 60, false,
            "worst relative gap v " + fmt(w.v, 2) + ", u/y " + fmt(w.y, 2) + ", w_J " + fmt(w.wJ, 2) + ", w_I " +
                fmt(w.wI, 2) + ", Theta " + fmt(w.theta, 2) + " over " + std::to_string(kBlockStates) + " states (" +
                fmt(secs, 3) + " s)"});
}

void qt_equivalence(const ScenarioConfig& cfg)
{
    Rng rng(stream_seed(kSeed, 41));
    double worst = 0;
    for (int k = 0; k < kBlockStates; ++k) {
        const RandomState st = random_state(cfg, rng);
        const auto pb = make_problem(st.ch, st.cfg, Mechanism::RSACE);
        const auto terms = ratio_terms(pb, st.x);
        double direct = 0;
        for (int l = 0; l < 3; ++l) direct += st.rho[l + 1] * std::log1p(terms[l].sinr());
        const double qt = qt_value(st.rho, optimal_aux(st.rho, terms), terms);
        worst = std::max(worst, std::abs(qt - direct) / std::max(1.0, std::abs(direct)));
    }
    report({"surrogate at optimal auxiliaries equals the objective", worst <= kQtTol, false,
            "worst relative gap " + fmt(worst, 2) + " over " + std::to_string(kBlockStates) + " settings"});
}

void convergence(const ScenarioConfig& cfg)
{
    const auto draws = feasible_draws(cfg, kConvergenceRuns);
    int monotone = 0, converged = 0;
    double worst_drop = 0, iters = 0;
    for (const auto& [ch, r] : draws) {
        const auto pb = make_problem(ch, cfg, Mechanism::RSACE);
        Rng rng(stream_seed(kSeed, std::uint64_t(r), 1));
        const auto res = run_solver(pb, initial_design(pb, rng));
        double drop = 0;
        for (std::size_t i = 1; i < res.trajectory.size(); ++i)
            drop = std::max(drop, res.trajectory[i - 1] - res.trajectory[i]);
        worst_drop = std::max(worst_drop, drop);
        monotone += drop <= kMonotoneSlack;
        converged += res.converged;
        iters += res.iterations;
    }
    const int n = int(draws.size());
    const double frac = double(converged) / n;
    report({"solver ascent and convergence", n == kConvergenceRuns && monotone == n && frac >= kConvergedFloor, false,
            std::to_string(monotone) + "/" + std::to_string(n) + " monotone (worst drop " + fmt(worst_drop, 2) +
                "), " + std::to_string(converged) + "/" + std::to_string(n) + " converged within " +
                std::to_string(FpiConfig{}.max_iter) + " iterations, mean " + fmt(iters / n, 3) + " iterations"});
}

void unimodality(const ScenarioConfig& cfg)
{
    const auto rep = unimodality_audit(cfg, kUnimodalRealizations, kSeed, {}, jobs());
    const double frac = rep.feasible ? double(rep.unimodal) / rep.feasible : 0.0;
    const bool ok = frac >= kUnimodalFloor && rep.mean_tau1 > kTau1Lo && rep.mean_tau1 < kTau1Hi;
    report({"single tau1 maximum and interior optimum", ok, false,
            std::to_string(rep.unimodal) + "/" + std::to_string(rep.feasible) + " unimodal (" +
                std::to_string(rep.infeasible) + " infeasible excluded), mean tau1* " + fmt(rep.mean_tau1 * 1e3) +
                " ms"});
}

void algorithm_ordering(const std::vector<SweepRow>& rows)
{
    const std::vector<double> eps{0.02, 0.05, 0.1};
    const std::vector<Algorithm> algs{Algorithm::RSACE, Algorithm::JBPO, Algorithm::JTPO, Algorithm::JTBO};
    bool ok = true;
    std::string d;
    std::vector<double> prev(algs.size(), std::numeric_limits<double>::infinity());
    bool decreasing = true;
    for (double e : eps) {
        std::vector<const SweepRow*> rs;
        for (Algorithm a : algs) rs.push_back(&row_of(rows, e, a));
        const auto idx = joint_feasible(rs);
        d += "eps " + fmt(e) + " (n=" + std::to_string(idx.size()) + "):";
        std::vector<double> m;
        for (std::size_t k = 0; k < algs.size(); ++k) {
            m.push_back(mean_over(*rs[k], idx, kAst));
            d += std::string(" ") + algorithm_tag(algs[k]) + " " + fmt(m.back());
            decreasing = decreasing && m.back() < prev[k];
            prev[k] = m.back();
        }
        for (std::size_t k = 1; k < m.size(); ++k) ok = ok && m[0] >= m[k];
        d += "; ";
    }
    report({"R-SACE leads J-BPO/J-TPO/J-TBO and AST falls with eps_out", ok && decreasing, false,
            d + (decreasing ? "strictly decreasing in eps_out" : "NOT strictly decreasing in eps_out")});
}

struct PairwiseOutcome {
    bool pointwise = true;
    std::string detail;
};

void pairwise(const std::vector<SweepRow>& rows, const std::vector<double>& values, Algorithm other,
              const std::string& what, PairwiseOutcome& out)
{
    out.detail += what + ":";
    for (double v : values) {
        const SweepRow& a = row_of(rows, v, Algorithm::RSACE);
        const SweepRow& b = row_of(rows, v, other);
        const auto idx = joint_feasible({&a, &b});
        const double ma = mean_over(a, idx, kAst), mb = mean_over(b, idx, kAst);
        out.pointwise = out.pointwise && ma >= mb;
        out.detail += " " + fmt(v) + " " + fmt(ma) + "/" + fmt(mb);
    }
    out.detail += "; ";
}

double improvement(const std::vector<SweepRow>& rows, double value, Algorithm other)
{
    const SweepRow& a = row_of(rows, value, Algorithm::RSACE);
    const SweepRow& b = row_of(rows, value, other);
    const auto idx = joint_feasible({&a, &b});
    return mean_over(a, idx, kAst) / mean_over(b, idx, kAst) - 1.0;
}

void trends(const std::vector<SweepRow>& nr, const std::vector<SweepRow>& pj1, const std::vector<SweepRow>& dist,
            const std::vector<double>& nr_v, const std::vector<double>& pj1_v, const std::vector<double>& dist_v)
{
    auto series = [](const std::vector<SweepRow>& rows, const std::vector<double>& vals, const Field& f, int& n) {
        std::vector<const SweepRow*> rs;
        for (double v : vals) rs.push_back(&row_of(rows, v, Algorithm::RSACE));
        const auto idx = joint_feasible(rs);
        n = int(idx.size());
        std::vector<double> m;
        for (const SweepRow* r : rs) m.push_back(mean_over(*r, idx, f));
        return m;
    };
    auto show = [](const std::vector<double>& m) {
        std::string s = "[";
        for (std::size_t i = 0; i < m.size(); ++i) s += (i ? ", " : "") + fmt(m[i]);
        return s + "]";
    };
    int n1 = 0, n2 = 0, n3 = 0;
    const auto ast_nr = series(nr, nr_v, kAst, n1);
    const auto tc_pj = series(pj1, pj1_v, kTc, n2);
    const auto cu_pj = series(pj1, pj1_v, kCuI, n2);
    const auto cu_d = series(dist, dist_v, kCuI, n3);
    bool a = true, b = true, c = true, d = true;
    for (std::size_t i = 1; i < ast_nr.size(); ++i) a = a && ast_nr[i] >= ast_nr[i - 1];
    for (std::size_t i = 1; i < tc_pj.size(); ++i) b = b && tc_pj[i] >= tc_pj[i - 1];
    for (std::size_t i = 1; i < cu_pj.size(); ++i) c = c && cu_pj[i] <= cu_pj[i - 1];
    for (std::size_t i = 1; i < cu_d.size(); ++i) d = d && cu_d[i] < cu_d[i - 1];
    report({"trends in N_R, P_J1 and BS-CU distance", a && b && c && d, false,
            "AST vs N_R " + show(ast_nr) + " (n=" + std::to_string(n1) + ")" + (a ? "" : " NOT nondecreasing") +
                "; TC-J vs P_J1 " + show(tc_pj) + (b ? "" : " NOT nondecreasing") + "; CU-I vs P_J1 " +
                show(cu_pj) + " (n=" + std::to_string(n2) + ")" + (c ? "" : " NOT nonincreasing") +
                "; CU-I vs distance " + show(cu_d) + " (n=" + std::to_string(n3) + ")" +
                (d ? "" : " NOT decreasing")});
}

void specfun()
{
    Rng rng(stream_seed(kSeed, 51));
    const SpecfunCheck s = specfun_check(kSpecfunSamples, rng);
    report({"Marcum Q and noncentral chi-square vs Monte Carlo", s.marcum_z <= kZ && s.chi2_z <= kZ &&
                                                                      s.inverse_err <= kInverseTol,
            false,
            "worst z Marcum " + fmt(s.marcum_z, 3) + ", chi-square " + fmt(s.chi2_z, 3) + "; inverse round-trip " +
                fmt(s.inverse_err, 2)});
    info("K = 4 norm below its model 0.025 quantile with probability " + fmt(s.k4_tail, 3) +
         " (the two-dof model is exact only for one antenna)");
}

} // namespace

int main()
{
    const ScenarioConfig cfg;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        detector(cfg);
        outage(cfg);
        closed_forms(cfg);
        qt_equivalence(cfg);
        convergence(cfg);
        unimodality(cfg);

        const std::vector<double> eps{0.02, 0.05, 0.1};
        const auto eps_rows = run_sweep(cfg, sweep("eps_out", eps,
                                                   {Algorithm::RSACE, Algorithm::JBPO, Algorithm::JTPO,
                                                    Algorithm::JTBO, Algorithm::RACE, Algorithm::SACE},
                                                   kOrderingSeeds));
        algorithm_ordering(eps_rows);

        const std::vector<double> pj1{0.1, 0.3, 0.5, 0.7, 0.9};
        const std::vector<double> dist{20, 30, 40, 50, 60};
        const auto pj1_rows =
            run_sweep(cfg, sweep("P_J1", pj1, {Algorithm::RSACE, Algorithm::RACE}, kTrendRealizations));
        const auto dist_rows =
            run_sweep(cfg, sweep("d_bs_cu", dist, {Algorithm::RSACE, Algorithm::SACE}, kTrendRealizations));
        {
            PairwiseOutcome o;
            pairwise(eps_rows, eps, Algorithm::RACE, "vs R-ACE over eps_out", o);
            pairwise(pj1_rows, pj1, Algorithm::RACE, "vs R-ACE over P_J1", o);
            pairwise(eps_rows, eps, Algorithm::SACE, "vs S-ACE over eps_out", o);
            pairwise(dist_rows, dist, Algorithm::SACE, "vs S-ACE over distance", o);
            const double race = improvement(eps_rows, cfg.eps_out, Algorithm::RACE);
            const double sace = improvement(eps_rows, cfg.eps_out, Algorithm::SACE);
            report({"R-SACE leads R-ACE and S-ACE", o.pointwise && race >= kRaceFloor && sace >= kSaceFloor, false,
                    o.detail + "gain at defaults " + fmt(100 * race, 3) + " % over R-ACE (floor " +
                        fmt(100 * kRaceFloor) + " %), " + fmt(100 * sace, 3) + " % over S-ACE (floor " +
                        fmt(100 * kSaceFloor) + " %)"});
        }

        const std::vector<double> nr{8, 16, 32};
        const auto nr_rows = run_sweep(cfg, sweep("N_R", nr, {Algorithm::RSACE}, kTrendRealizations));
        trends(nr_rows, pj1_rows, dist_rows, nr, pj1, dist);

        specfun();
    } catch (const std::exception& e) {
        std::cout << "FAIL  acceptance aborted: " << e.what() << std::endl;
        return 1;
    }

    int failed = 0, known = 0;
    for (const Line& l : lines) {
        if (l.pass) continue;
        (l.known ? known : failed)++;
    }
    std::cout << lines.size() - failed - known << "/" << lines.size() << " criteria pass, " << known
              << " known failure(s), " << failed << " unexpected failure(s); " << fmt(seconds_since(t0), 4) << " s"
              << std::endl;
    return failed ? 1 : 0;
}
