// rsace: single runs, sweeps, oracle validation and the canonical figure dataset.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "rsace/harness.hpp"

namespace fs = std::filesystem;
using namespace rsace;

namespace {

constexpr int kOk = 0, kInfeasible = 1, kOracleFailure = 2, kUsage = 64, kInternal = 70;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Options {
    std::string config;
    std::string out = ".";
    std::optional<std::uint64_t> seed;
    std::string param;
    std::string values;
    std::string mechanisms;
    std::string format = "csv";
    int jobs = 0;
    int realizations = 0;
    std::string inject;
    bool timing = false;
};

std::vector<double> parse_values(const std::string& text)
{
    std::vector<double> v;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            v.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw UsageError("--values: '" + item + "' is not a number");
        }
    }
    if (v.empty()) throw UsageError("--values: at least one value is required");
    return v;
}

std::vector<Algorithm> parse_mechanisms(const std::string& text, std::vector<Algorithm> fallback)
{
    if (text.empty()) return fallback;
    std::vector<Algorithm> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto a = parse_algorithm(item);
        if (!a) throw UsageError("--mechanisms: unknown tag '" + item + "' (expected R-SACE, J-BPO, J-TPO, J-TBO, R-ACE, S-ACE)");
        out.push_back(*a);
    }
    return out;
}

ScenarioConfig load(const Options& o)
{
    ScenarioConfig cfg;
    if (!o.config.empty()) {
        if (!fs::exists(o.config)) throw UsageError("--config: file not found: " + o.config);
        try {
            cfg = load_config(o.config);
        } catch (const std::invalid_argument& e) {
            throw UsageError(std::string("--config: ") + e.what());
        }
    }
    if (o.seed) {
        cfg.seed = *o.seed;
    } else if (const char* env = std::getenv("RSACE_SEED")) {
        try {
            cfg.seed = std::stoull(env);
        } catch (const std::exception&) {
            throw UsageError("RSACE_SEED: not an unsigned integer");
        }
    }
    return cfg;
}

int jobs_of(const Options& o)
{
    if (o.jobs > 0) return o.jobs;
    return std::max(1u, std::thread::hardware_concurrency());
}

fs::path out_dir(const Options& o)
{
    fs::path d(o.out);
    std::error_code ec;
    fs::create_directories(d, ec);
    if (!fs::is_directory(d)) throw UsageError("--out: cannot create directory " + o.out);
    return d;
}

void write(const fs::path& p, const std::string& text)
{
    std::ofstream f(p);
    if (!(f << text)) throw UsageError("cannot write " + p.string());
}

void check_format(const Options& o)
{
    if (o.format != "csv" && o.format != "json") throw UsageError("--format: expected csv or json");
}

int cmd_run(const Options& o)
{
    check_format(o);
    const ScenarioConfig cfg = load(o);
    const auto algs = parse_mechanisms(o.mechanisms, {Algorithm::RSACE});
    const fs::path dir = out_dir(o);
    Rng chan_rng(stream_seed(cfg.seed, 0, 0));
    const ChannelSet<double> ch = gen_user_channels<double>(cfg, chan_rng);
    const std::uint64_t solver_seed = stream_seed(cfg.seed, 0, 1);
    int status = kOk;
    std::vector<SweepRow> rows;
    for (Algorithm a : algs) {
        Rng rng(solver_seed);
        try {
            FpiResult<double> r = run_algorithm(a, ch, cfg, rng);
            if (!o.timing) r.ms = 0.0;
            std::string tag = algorithm_tag(a);
            write(dir / ("run_" + tag + ".json"), result_json(r, a, cfg, cfg.seed));
            SweepRow row;
            row.algorithm = a;
            row.seed = cfg.seed;
            row.n = 1;
            row.ast = r.ast;
            row.r_cu_isac = r.r_cu_isac;
            row.r_cu_pc = r.r_cu_pc;
            row.r_tc = r.r_tc;
            row.pd = r.weights.sensing.P_d;
            row.pf = r.weights.sensing.P_f;
            row.pe = r.weights.sensing.P_E;
            row.tau1_opt = double(r.x.tau1);
            row.iters = r.iterations;
            row.ms = r.ms;
            rows.push_back(row);
            std::cout << tag << ": AST " << r.ast << " bit/s/Hz, tau1* " << double(r.x.tau1) << " s, "
                      << r.iterations << " iterations" << (r.converged ? "" : " (not converged)") << '\n';
        } catch (const InfeasibleError& e) {
            std::cerr << algorithm_tag(a) << ": infeasible: " << e.what() << '\n';
            status = kInfeasible;
        }
    }
    if (o.format == "csv" && !rows.empty()) write(dir / "run.csv", sweep_csv(rows));
    return status;
}

int cmd_sweep(const Options& o)
{
    check_format(o);
    const ScenarioConfig cfg = load(o);
    SweepSpec spec;
    spec.param = o.param;
    if (spec.param.empty()) throw UsageError("sweep: --param is required");
    spec.values = parse_values(o.values);
    spec.algorithms = parse_mechanisms(o.mechanisms, spec.algorithms);
    spec.seed = cfg.seed;
    spec.jobs = jobs_of(o);
    spec.timing = o.timing;
    if (o.realizations > 0) spec.realizations = o.realizations;
    std::vector<SweepRow> rows;
    try {
        rows = run_sweep(cfg, spec);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    const fs::path dir = out_dir(o);
    const std::string stem = "sweep_" + spec.param;
    if (o.format == "csv") write(dir / (stem + ".csv"), sweep_csv(rows));
    write(dir / (stem + ".json"), sweep_json(rows, cfg, spec));
    int infeasible = 0, n = 0;
    for (const SweepRow& r : rows) {
        infeasible += r.infeasible;
        n += r.n;
    }
    std::cout << rows.size() << " rows, " << n << " runs, " << infeasible << " infeasible realizations excluded\n";
    return n == 0 ? kInfeasible : kOk;
}

int cmd_validate(const Options& o)
{
    const ScenarioConfig cfg = load(o);
    ValidateOptions vo;
    if (!o.inject.empty()) {
        if (o.inject == "detector") vo.fault.detector = true;
        else if (o.inject == "outage") vo.fault.outage = true;
        else if (o.inject == "closed_form") vo.fault.closed_form = true;
        else if (o.inject == "qt") vo.fault.qt = true;
        else if (o.inject == "chi2") vo.fault.chi2 = true;
        else throw UsageError("--inject: expected detector, outage, closed_form, qt or chi2");
    }
    bool pass = false;
    const std::string report = validate_oracles(cfg, cfg.seed, vo, pass);
    write(out_dir(o) / "validate.json", report);
    std::cout << (pass ? "all oracles pass" : "oracle failure") << " (report: validate.json)\n";
    return pass ? kOk : kOracleFailure;
}

int cmd_figures(const Options& o)
{
    const ScenarioConfig cfg = load(o);
    const fs::path dir = out_dir(o);
    const int R = o.realizations > 0 ? o.realizations : 100;
    for (const FigureSweep& f : canonical_figures(cfg, R, cfg.seed, jobs_of(o), o.timing)) {
        std::vector<SweepRow> all;
        for (const auto& [c, spec] : f.series) {
            auto rows = run_sweep(c, spec);
            all.insert(all.end(), std::make_move_iterator(rows.begin()), std::make_move_iterator(rows.end()));
        }
        write(dir / f.file, sweep_csv(all));
        std::cout << f.id << " -> " << f.file << '\n';
    }
    return kOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"R-SACE simulator and optimizer"};
    app.require_subcommand(1);
    Options o;
    auto common = [&](CLI::App* s) {
        s->add_option("--config", o.config, "scenario JSON");
        s->add_option("--out", o.out, "output directory");
        s->add_option("--seed", o.seed, "base seed (falls back to RSACE_SEED, then the config)");
        s->add_flag("--timing", o.timing, "record wall time in ms columns (output no longer bit-reproducible)");
    };
    auto* run = app.add_subcommand("run", "optimize one realization");
    common(run);
    run->add_option("--mechanisms", o.mechanisms, "comma-separated tags (default R-SACE)");
    run->add_option("--format", o.format, "csv or json");

    auto* sweep = app.add_subcommand("sweep", "Monte-Carlo sweep over one parameter");
    common(sweep);
    sweep->add_option("--param", o.param, "eps_out, tau1, N_R, P_J1, sigma2, d_bs_cu, eps_J or b");
    sweep->add_option("--values", o.values, "comma-separated values");
    sweep->add_option("--mechanisms", o.mechanisms, "comma-separated tags (default all)");
    sweep->add_option("--format", o.format, "csv or json");
    sweep->add_option("--jobs", o.jobs, "worker threads (default: hardware)");
    sweep->add_option("--realizations", o.realizations, "realizations per value (default 100)");

    auto* validate = app.add_subcommand("validate", "run the oracle suite");
    common(validate);
    validate->add_option("--inject", o.inject, "negative control: detector, outage, closed_form, qt or chi2");

    auto* figures = app.add_subcommand("figures", "canonical sweep set behind the plots");
    common(figures);
    figures->add_option("--jobs", o.jobs, "worker threads (default: hardware)");
    figures->add_option("--realizations", o.realizations, "realizations per value (default 100)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }
    try {
        if (run->parsed()) return cmd_run(o);
        if (sweep->parsed()) return cmd_sweep(o);
        if (validate->parsed()) return cmd_validate(o);
        if (figures->parsed()) return cmd_figures(o);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const InfeasibleError& e) {
        std::cerr << "infeasible: " << e.what() << '\n';
        return kInfeasible;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInternal;
    }
    return kUsage;
}
