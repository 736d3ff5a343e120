#include "rsace/harness.hpp"

#include <atomic>
#include <cmath>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

namespace rsace {

using nlohmann::json;

ScenarioConfig apply_param(ScenarioConfig cfg, const std::string& param, double value,
                           std::optional<double>& fixed_tau1)
{
    fixed_tau1.reset();
    auto integral = [&](const char* name) {
        if (value != std::floor(value)) throw std::invalid_argument(std::string(name) + ": expected an integer value");
        return int(value);
    };
    if (param.empty()) {
    } else if (param == "eps_out") {
        cfg.eps_out = value;
    } else if (param == "tau1") {
        if (!(value > 0.0 && value <= cfg.tau)) throw std::invalid_argument("tau1: must lie in (0, tau]");
        fixed_tau1 = value;
    } else if (param == "N_R") {
        cfg.N_R = integral("N_R");
    } else if (param == "P_J1") {
        cfg.P_J1 = value;
    } else if (param == "sigma2") {
        const double w = std::pow(10.0, (value - 30.0) / 10.0);
        cfg.sigma0_2 = cfg.sigmaI_2 = cfg.sigmaJ_2 = w;
    } else if (param == "d_bs_cu") {
        const double d = distance(cfg.bs, cfg.cu);
        if (!(value > 0.0)) throw std::invalid_argument("d_bs_cu: must be positive");
        cfg.cu = {cfg.bs.x + (cfg.cu.x - cfg.bs.x) * value / d, cfg.bs.y + (cfg.cu.y - cfg.bs.y) * value / d};
    } else if (param == "eps_J") {
        cfg.eps_J = value;
    } else if (param == "b") {
        cfg.phase_bits = integral("b");
    } else {
        throw std::invalid_argument("param: unknown sweep parameter '" + param + "'");
    }
    cfg.validate();
    return cfg;
}

std::vector<RealizationRecord> run_realization(const ScenarioConfig& cfg, const std::vector<Algorithm>& algs,
                                               int realization, std::uint64_t base_seed, const FpiConfig& fc,
                                               std::optional<double> fixed_tau1, bool timing)
{
    Rng chan_rng(stream_seed(base_seed, std::uint64_t(realization), 0));
    const ChannelSet<double> ch = gen_user_channels<double>(cfg, chan_rng);
    const std::uint64_t solver_seed = stream_seed(base_seed, std::uint64_t(realization), 1);
    std::vector<RealizationRecord> out;
    out.reserve(algs.size());
    for (Algorithm a : algs) {
        RealizationRecord rec;
        rec.realization = realization;
        rec.seed = solver_seed;
        Rng rng(solver_seed);
        try {
            const FpiResult<double> r = run_algorithm(a, ch, cfg, rng, fc, fixed_tau1);
            rec.feasible = true;
            rec.converged = r.converged;
            rec.ast = r.ast;
            rec.r_cu_isac = r.r_cu_isac;
            rec.r_cu_pc = r.r_cu_pc;
            rec.r_tc = r.r_tc;
            rec.pd = r.weights.sensing.P_d;
            rec.pf = r.weights.sensing.P_f;
            rec.pe = r.weights.sensing.P_E;
            rec.tau1 = double(r.x.tau1);
            rec.iters = r.iterations;
            rec.ms = timing ? r.ms : 0.0;
        } catch (const InfeasibleError&) {
            rec.feasible = false;
        }
        out.push_back(rec);
    }
    return out;
}

namespace {

/* Runs f(i) for i in [0, n) on up to `jobs` threads. */
template <class F>
void parallel_for(int n, int jobs, F&& f)
{
    jobs = std::max(1, std::min(jobs, n));
    if (jobs == 1) {
        for (int i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr err;
    std::mutex err_mu;
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j)
        pool.emplace_back([&] {
            for (int i = next++; i < n; i = next++) {
                try {
                    f(i);
                } catch (...) {
                    std::lock_guard lk(err_mu);
                    if (!err) err = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

} // namespace

std::vector<SweepRow> run_sweep(const ScenarioConfig& base, const SweepSpec& spec)
{
    if (spec.realizations < 1) throw std::invalid_argument("realizations: must be >= 1");
    if (spec.algorithms.empty()) throw std::invalid_argument("mechanisms: at least one is required");
    std::vector<double> values = spec.values;
    if (spec.param.empty()) values = {0.0};
    if (values.empty()) throw std::invalid_argument("values: at least one is required");

    struct Point {
        ScenarioConfig cfg;
        std::optional<double> fixed_tau1;
    };
    std::vector<Point> points;
    for (double v : values) {
        Point p;
        p.cfg = apply_param(base, spec.param, v, p.fixed_tau1);
        points.push_back(std::move(p));
    }

    const int R = spec.realizations;
    const int tasks = int(values.size()) * R;
    std::vector<std::vector<RealizationRecord>> results(static_cast<std::size_t>(tasks));
    parallel_for(tasks, spec.jobs, [&](int i) {
        const Point& p = points[std::size_t(i / R)];
        results[std::size_t(i)] = run_realization(p.cfg, spec.algorithms, i % R, spec.seed, spec.fc, p.fixed_tau1, spec.timing);
    });

    std::vector<SweepRow> rows;
    for (std::size_t vi = 0; vi < values.size(); ++vi)
        for (std::size_t ai = 0; ai < spec.algorithms.size(); ++ai) {
            SweepRow row;
            row.param = spec.param;
            row.value = values[vi];
            row.algorithm = spec.algorithms[ai];
            row.seed = spec.seed;
            row.label = spec.label;
            double sum2 = 0;
            int conv = 0;
            for (int r = 0; r < R; ++r) {
                const RealizationRecord& rec = results[vi * std::size_t(R) + std::size_t(r)][ai];
                row.detail.push_back(rec);
                if (!rec.feasible) {
                    ++row.infeasible;
                    continue;
                }
                ++row.n;
                row.ast += rec.ast;
                sum2 += rec.ast * rec.ast;
                row.r_cu_isac += rec.r_cu_isac;
                row.r_cu_pc += rec.r_cu_pc;
                row.r_tc += rec.r_tc;
                row.pd += rec.pd;
                row.pf += rec.pf;
                row.pe += rec.pe;
                row.tau1_opt += rec.tau1;
                row.iters += rec.iters;
                row.ms += rec.ms;
                conv += rec.converged;
            }
            if (row.n > 0) {
                const double n = row.n;
                for (double* f : {&row.ast, &row.r_cu_isac, &row.r_cu_pc, &row.r_tc, &row.pd, &row.pf, &row.pe,
                                  &row.tau1_opt, &row.iters, &row.ms})
                    *f /= n;
                const double var = row.n > 1 ? std::max(0.0, (sum2 - n * row.ast * row.ast) / (n - 1)) : 0.0;
                row.ast_se = std::sqrt(var / n);
                row.converged = conv / n;
            } else {
                for (double* f : {&row.ast, &row.ast_se, &row.r_cu_isac, &row.r_cu_pc, &row.r_tc, &row.pd, &row.pf,
                                  &row.pe, &row.tau1_opt, &row.iters, &row.ms})
                    *f = std::nan("");
            }
            rows.push_back(std::move(row));
        }
    return rows;
}

namespace {

std::string mechanism_label(const SweepRow& r)
{
    std::string s = algorithm_tag(r.algorithm);
    if (!r.label.empty()) s += "|" + r.label;
    return s;
}

} // namespace

std::string sweep_csv(const std::vector<SweepRow>& rows)
{
    std::ostringstream os;
    os.precision(10);
    os << kSweepCsvHeader << '\n';
    for (const SweepRow& r : rows) {
        os << (r.param.empty() ? "none" : r.param) << ',' << r.value << ',' << mechanism_label(r) << ','
           << r.seed << ',' << r.ast << ',' << r.ast_se << ',' << r.r_cu_isac << ',' << r.r_cu_pc << ',' << r.r_tc
           << ',' << r.pd << ',' << r.pf << ',' << r.pe << ',' << r.tau1_opt << ',' << r.iters << ',' << r.ms
           << '\n';
    }
    return os.str();
}

namespace {

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json cvec_json(const CVec<double>& v)
{
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(json::array({v(i).real(), v(i).imag()}));
    return a;
}

} // namespace

std::string sweep_json(const std::vector<SweepRow>& rows, const ScenarioConfig& base, const SweepSpec& spec)
{
    json j;
    j["config"] = json::parse(config_to_json_text(base));
    j["param"] = spec.param.empty() ? "none" : spec.param;
    j["seed"] = spec.seed;
    j["realizations"] = spec.realizations;
    j["rows"] = json::array();
    for (const SweepRow& r : rows) {
        json row{{"param", r.param.empty() ? "none" : r.param},
                 {"value", r.value},
                 {"mechanism", mechanism_label(r)},
                 {"seed", r.seed},
                 {"n", r.n},
                 {"infeasible", r.infeasible},
                 {"converged", num(r.converged)},
                 {"ast", num(r.ast)},
                 {"ast_se", num(r.ast_se)},
                 {"r_cu_isac", num(r.r_cu_isac)},
                 {"r_cu_pc", num(r.r_cu_pc)},
                 {"r_tc", num(r.r_tc)},
                 {"pd", num(r.pd)},
                 {"pf", num(r.pf)},
                 {"pe", num(r.pe)},
                 {"tau1_opt", num(r.tau1_opt)},
                 {"iters", num(r.iters)},
                 {"ms", num(r.ms)}};
        json det = json::array();
        for (const RealizationRecord& d : r.detail) {
            json e{{"realization", d.realization}, {"seed", d.seed}, {"feasible", d.feasible}};
            if (d.feasible) {
                e["converged"] = d.converged;
                e["ast"] = d.ast;
                e["tau1"] = d.tau1;
                e["iters"] = d.iters;
            }
            det.push_back(e);
        }
        row["realizations"] = det;
        j["rows"].push_back(row);
    }
    return j.dump(2);
}

std::string result_json(const FpiResult<double>& r, Algorithm a, const ScenarioConfig& cfg, std::uint64_t seed)
{
    const auto& s = r.weights.sensing;
    json j{{"mechanism", algorithm_tag(a)},
           {"seed", seed},
           {"converged", r.converged},
           {"iterations", r.iterations},
           {"ast", r.ast},
           {"r_cu_isac", r.r_cu_isac},
           {"r_cu_pc", r.r_cu_pc},
           {"r_tc", r.r_tc},
           {"tau1", double(r.x.tau1)},
           {"gamma_tilde", {r.gamma_tilde[0], r.gamma_tilde[1], r.gamma_tilde[2], r.gamma_tilde[3]}},
           {"rho", {r.weights.rho[0], r.weights.rho[1], r.weights.rho[2], r.weights.rho[3]}},
           {"sensing",
            {{"pd", s.P_d}, {"pf", s.P_f}, {"p11", s.P_11}, {"p10", s.P_10}, {"p00", s.P_00}, {"p01", s.P_01},
             {"pe", s.P_E}, {"pc", s.P_C}, {"threshold", s.threshold}}},
           {"duals", {{"eta_J", r.duals[0]}, {"eta_I", r.duals[1]}, {"mu_I", r.duals[2]}, {"mu_theta", r.mu_theta}}},
           {"theta_fallbacks", r.theta_fallbacks},
           {"trajectory", r.trajectory},
           {"ms", r.ms},
           {"w0", cvec_json(r.x.w0)},
           {"wI", cvec_json(r.x.wI)},
           {"wJ", cvec_json(r.x.wJ)},
           {"psi", cvec_json(r.x.psi)},
           {"config", json::parse(config_to_json_text(cfg))}};
    return j.dump(2);
}

std::vector<FigureSweep> canonical_figures(const ScenarioConfig& base, int realizations, std::uint64_t seed, int jobs,
                                           bool timing)
{
    auto spec = [&](std::string param, std::vector<double> values, std::vector<Algorithm> algs, std::string label = "") {
        SweepSpec s;
        s.param = std::move(param);
        s.values = std::move(values);
        s.algorithms = std::move(algs);
        s.realizations = realizations;
        s.seed = seed;
        s.jobs = jobs;
        s.label = std::move(label);
        s.timing = timing;
        return s;
    };
    const std::vector<double> tau1{0.02, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    const std::vector<double> eps{0.01, 0.02, 0.04, 0.06, 0.08, 0.1};
    const std::vector<Algorithm> rs{Algorithm::RSACE};

    std::vector<FigureSweep> f;
    {
        FigureSweep s{"F3", "fig03_tau1_csi.csv", {}};
        ScenarioConfig perfect = base;
        perfect.sigma_e2 = 0.0;
        s.series.emplace_back(perfect, spec("tau1", tau1, rs, "perfect"));
        for (double e : {0.02, 0.05, 0.1}) {
            ScenarioConfig c = base;
            c.eps_out = e;
            std::ostringstream os;
            os << "eps=" << e;
            s.series.emplace_back(c, spec("tau1", tau1, rs, os.str()));
        }
        f.push_back(std::move(s));
    }
    f.push_back({"F4", "fig04_sensing_noise.csv", {{base, spec("sigma2", {-120, -115, -110, -105, -100, -95}, rs)}}});
    {
        FigureSweep s{"F5", "fig05_tau1_nr.csv", {}};
        for (int n : {8, 16, 32}) {
            ScenarioConfig c = base;
            c.N_R = n;
            s.series.emplace_back(c, spec("tau1", tau1, rs, "N_R=" + std::to_string(n)));
        }
        f.push_back(std::move(s));
    }
    f.push_back({"F6", "fig06_tradeoff_pe.csv", {{base, spec("tau1", tau1, rs)}}});
    f.push_back({"F7", "fig07_algorithms_eps.csv",
                 {{base, spec("eps_out", eps, {Algorithm::RSACE, Algorithm::JBPO, Algorithm::JTPO, Algorithm::JTBO})}}});
    f.push_back({"F8", "fig08_race_eps.csv", {{base, spec("eps_out", eps, {Algorithm::RSACE, Algorithm::RACE})}}});
    f.push_back({"F9", "fig09_race_pj1.csv",
                 {{base, spec("P_J1", {0.1, 0.3, 0.5, 0.7, 0.9}, {Algorithm::RSACE, Algorithm::RACE})}}});
    f.push_back({"F10", "fig10_sace_distance.csv",
                 {{base, spec("d_bs_cu", {20, 30, 40, 44.72, 50, 60}, {Algorithm::RSACE, Algorithm::SACE})}}});
    f.push_back({"F11", "fig11_sace_eps.csv", {{base, spec("eps_out", eps, {Algorithm::RSACE, Algorithm::SACE})}}});
    return f;
}

UnimodalityReport unimodality_audit(const ScenarioConfig& cfg, int realizations, std::uint64_t seed,
                                    const FpiConfig& fc, int jobs)
{
    struct Cell {
        bool feasible = false;
        bool unimodal = false;
        double tau1 = 0;
    };
    std::vector<Cell> cells(std::size_t(std::max(0, realizations)));
    parallel_for(realizations, jobs, [&](int r) {
        Rng chan_rng(stream_seed(seed, std::uint64_t(r), 0));
        const ChannelSet<double> ch = gen_user_channels<double>(cfg, chan_rng);
        const Problem<double> pb = make_problem(ch, cfg, Mechanism::RSACE);
        if (!pb.feasible) return;
        Rng rng(stream_seed(seed, std::uint64_t(r), 1));
        const FpiResult<double> res = run_solver(pb, initial_design(pb, rng), fc);
        Cell& c = cells[std::size_t(r)];
        c.feasible = true;
        c.unimodal = tau1_local_maxima(pb, res.x) == 1;
        c.tau1 = double(res.x.tau1);
    });
    UnimodalityReport rep;
    for (const Cell& c : cells) {
        if (!c.feasible) {
            ++rep.infeasible;
            continue;
        }
        ++rep.feasible;
        rep.unimodal += c.unimodal;
        rep.mean_tau1 += c.tau1;
    }
    if (rep.feasible) rep.mean_tau1 /= rep.feasible;
    return rep;
}

std::string validate_oracles(const ScenarioConfig& cfg, std::uint64_t seed, const ValidateOptions& opt, bool& pass)
{
    json j;
    j["seed"] = seed;
    json checks = json::array();
    pass = true;
    auto add = [&](const std::string& name, bool ok, json detail, bool known_failure = false) {
        detail["name"] = name;
        detail["pass"] = ok;
        if (known_failure) detail["known_failure"] = true;
        if (!ok && !known_failure) pass = false;
        checks.push_back(std::move(detail));
    };

    // feasible realization for the detector and outage checks
    std::vector<std::pair<ChannelSet<double>, int>> feasible;
    for (int r = 0; r < 200 && int(feasible.size()) < std::max(1, opt.outage_realizations); ++r) {
        Rng chan_rng(stream_seed(seed, std::uint64_t(r), 0));
        ChannelSet<double> ch = gen_user_channels<double>(cfg, chan_rng);
        if (make_problem(ch, cfg, Mechanism::RSACE).feasible) feasible.emplace_back(std::move(ch), r);
    }
    if (feasible.empty()) throw InfeasibleError("validate: no feasible realization among 200 draws");

    {
        const Problem<double> pb = make_problem(feasible[0].first, cfg, Mechanism::RSACE);
        Rng rng(stream_seed(seed, 101));
        const DetectorCheck d = detector_check(cfg, pb.tau_lo, pb.echo, opt.detector_trials, rng, opt.fault);
        add("detector", d.pd_z <= 3 && d.pf_z <= 3,
            {{"tau1", pb.tau_lo}, {"pd_emp", d.pd_emp}, {"pd_th", d.pd_th}, {"pf_emp", d.pf_emp},
             {"pf_th", d.pf_th}, {"pd_z", d.pd_z}, {"pf_z", d.pf_z}, {"tolerance_z", 3}});
    }
    {
        Rng rng(stream_seed(seed, 102));
        const SpecfunCheck s = specfun_check(opt.specfun_samples, rng, opt.fault);
        add("specfun", s.marcum_z <= 3.5 && s.chi2_z <= 3.5 && s.inverse_err <= 1e-8,
            {{"marcum_z", s.marcum_z}, {"chi2_z", s.chi2_z}, {"inverse_err", s.inverse_err},
             {"k4_tail_at_0.025", s.k4_tail}});
    }
    {
        Rng rng(stream_seed(seed, 103));
        double worst = 0;
        for (int k = 0; k < 20; ++k) {
            const RandomState st = random_state(cfg, rng);
            const Problem<double> pb = make_problem(st.ch, st.cfg, Mechanism::RSACE);
            const auto terms = ratio_terms(pb, st.x);
            Aux<double> aux = optimal_aux(st.rho, terms);
            if (opt.fault.qt)
                for (int l = 0; l < 3; ++l)
                    aux.y[l] = (std::sqrt(st.rho[l + 1] * (1 + aux.v[l])) / terms[l].B) * terms[l].a;
            double direct = 0;
            for (int l = 0; l < 3; ++l) direct += st.rho[l + 1] * std::log1p(terms[l].sinr());
            worst = std::max(worst, std::abs(qt_value(st.rho, aux, terms) - direct) / std::max(1.0, std::abs(direct)));
        }
        add("qt_equivalence", worst <= 1e-8, {{"max_rel_gap", worst}, {"tolerance", 1e-8}});
    }
    {
        Rng rng(stream_seed(seed, 104));
        BlockGap worst;
        for (int k = 0; k < opt.block_states; ++k) {
            const RandomState st = random_state(cfg, rng);
            const BlockGap g = block_gaps(st, rng, opt.fault);
            worst.v = std::max(worst.v, g.v);
            worst.y = std::max(worst.y, g.y);
            worst.wJ = std::max(worst.wJ, g.wJ);
            worst.wI = std::max(worst.wI, g.wI);
            worst.theta = std::max(worst.theta, g.theta);
        }
        const double m = std::max({worst.v, worst.y, worst.wJ, worst.wI, worst.theta});
        add("closed_forms", m <= 1e-6,
            {{"v", worst.v}, {"y", worst.y}, {"w_J", worst.wJ}, {"w_I", worst.wI}, {"theta_relaxed", worst.theta},
             {"tolerance", 1e-6}});
    }
    {
        OutageCheck dec, nb;
        for (const auto& [ch, r] : feasible) {
            Rng rng(stream_seed(seed, std::uint64_t(r), 1));
            const Problem<double> pb = make_problem(ch, cfg, Mechanism::RSACE);
            const FpiResult<double> res = run_solver(pb, initial_design(pb, rng), FpiConfig{});
            Rng mc(stream_seed(seed, std::uint64_t(r), 2));
            outage_count(pb, res.x, opt.outage_draws, mc, dec, opt.fault, PerfectCsiForm::Decomposed);
            Rng mc2(stream_seed(seed, std::uint64_t(r), 2));
            outage_count(pb, res.x, opt.outage_draws, mc2, nb, opt.fault, PerfectCsiForm::NormBound);
        }
        const double eps = cfg.eps_out;
        auto report = [&](const OutageCheck& o, const std::string& name, bool l2_known) {
            const auto rate = o.rate();
            const double se = std::sqrt(eps * (1 - eps) / double(o.draws));
            bool ok_l2 = true, ok_rest = true;
            for (int l = 0; l < 4; ++l) {
                const bool ok = rate[l] <= eps + 3 * se;
                if (l == 2 && l2_known) ok_l2 = ok;
                else ok_rest = ok_rest && ok;
            }
            json d{{"eps", eps}, {"draws", o.draws}, {"rate", rate}, {"tolerance", eps + 3 * se}};
            add(l2_known ? name + "_l013" : name, ok_rest, d);
            if (l2_known) add(name + "_l2", ok_l2, d, true);
        };
        report(dec, "outage", true);
        report(nb, "outage_norm_bound", false);
    }
    j["checks"] = checks;
    j["pass"] = pass;
    return j.dump(2);
}

} // namespace rsace
