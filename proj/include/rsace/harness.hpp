#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rsace/baselines.hpp"
#include "rsace/config.hpp"
#include "rsace/oracles.hpp"

namespace rsace {

/// Parameters a sweep can vary. "tau1" fixes the ISAC duration (seconds), "sigma2" sets all three noise
/// powers in dBm, "d_bs_cu" moves CU-I along the BS-CU ray, "b" sets the RIS phase resolution.
inline const std::vector<std::string>& sweep_params()
{
    static const std::vector<std::string> p{"eps_out", "tau1", "N_R", "P_J1", "sigma2", "d_bs_cu", "eps_J", "b"};
    return p;
}

struct SweepSpec {
    std::string param;  // empty: one point at the base configuration
    std::vector<double> values;
    int realizations = 100;
    std::uint64_t seed = 1;
    std::vector<Algorithm> algorithms{kAllAlgorithms.begin(), kAllAlgorithms.end()};
    int jobs = 1;
    FpiConfig fc;
    std::string label;  // appended to the mechanism tag as "tag|label" to separate series in one table
    bool timing = false;  // record wall time; off keeps the output bit-reproducible (ms = 0)
};

struct RealizationRecord {
    int realization = 0;
    std::uint64_t seed = 0;
    bool feasible = false;
    bool converged = false;
    double ast = 0, r_cu_isac = 0, r_cu_pc = 0, r_tc = 0;
    double pd = 0, pf = 0, pe = 0, tau1 = 0;
    int iters = 0;
    double ms = 0;
};

/// Mean over the feasible realizations of one (value, algorithm) cell.
struct SweepRow {
    std::string param;
    double value = 0;
    Algorithm algorithm = Algorithm::RSACE;
    std::uint64_t seed = 0;
    std::string label;
    int n = 0;           // feasible realizations averaged
    int infeasible = 0;  // realizations skipped (no admissible tau1)
    double ast = 0, ast_se = 0, r_cu_isac = 0, r_cu_pc = 0, r_tc = 0;
    double pd = 0, pf = 0, pe = 0, tau1_opt = 0, iters = 0, ms = 0;
    double converged = 0;  // fraction of feasible runs that met the stopping rule
    std::vector<RealizationRecord> detail;
};

/// Configuration with `param` set to `value`; a fixed tau1 is returned through `fixed_tau1`.
ScenarioConfig apply_param(ScenarioConfig cfg, const std::string& param, double value,
                           std::optional<double>& fixed_tau1);

/// One realization of every requested algorithm. Channel and solver seeds depend only on the base seed and
/// the realization index, so every value and algorithm sees the same draws.
std::vector<RealizationRecord> run_realization(const ScenarioConfig& cfg, const std::vector<Algorithm>& algs,
                                               int realization, std::uint64_t base_seed, const FpiConfig& fc,
                                               std::optional<double> fixed_tau1 = std::nullopt, bool timing = false);

/// Full sweep on a thread pool; rows are ordered by value, then algorithm, independent of `jobs`.
std::vector<SweepRow> run_sweep(const ScenarioConfig& base, const SweepSpec& spec);

inline constexpr const char* kSweepCsvHeader =
    "param,value,mechanism,seed,ast,ast_se,r_cu_isac,r_cu_pc,r_tc,pd,pf,pe,tau1_opt,iters,ms";

std::string sweep_csv(const std::vector<SweepRow>& rows);
std::string sweep_json(const std::vector<SweepRow>& rows, const ScenarioConfig& base, const SweepSpec& spec);

/// Single-realization result as JSON (complex entries as [re, im] pairs).
std::string result_json(const FpiResult<double>& r, Algorithm a, const ScenarioConfig& cfg, std::uint64_t seed);

/// One table of the canonical dataset; series are concatenated into one CSV.
struct FigureSweep {
    std::string id;    // F3 ... F11
    std::string file;  // CSV name inside the output directory
    std::vector<std::pair<ScenarioConfig, SweepSpec>> series;
};

/// The sweep set behind the nine plotted tables, built on `base`.
std::vector<FigureSweep> canonical_figures(const ScenarioConfig& base, int realizations, std::uint64_t seed, int jobs,
                                           bool timing = false);

struct UnimodalityReport {
    int feasible = 0;
    int unimodal = 0;
    double mean_tau1 = 0;  // seconds, over feasible realizations
    int infeasible = 0;
};

/// R-SACE on `realizations` draws: counts tau1 profiles with a single maximum at the returned design.
UnimodalityReport unimodality_audit(const ScenarioConfig& cfg, int realizations, std::uint64_t seed,
                                    const FpiConfig& fc = {}, int jobs = 1);

struct ValidateOptions {
    int detector_trials = 10000;
    int specfun_samples = 100000;
    int outage_realizations = 2;
    int outage_draws = 10000;
    int block_states = 5;
    FaultInjection fault;
};

/// Runs the oracle suite; returns a JSON report. `pass` excludes checks listed as known failures.
std::string validate_oracles(const ScenarioConfig& cfg, std::uint64_t seed, const ValidateOptions& opt, bool& pass);

} // namespace rsace
