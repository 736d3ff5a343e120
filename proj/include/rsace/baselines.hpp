#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include "rsace/fpi.hpp"

namespace rsace {

/// Algorithms and mechanisms that can be run on one realization.
enum class Algorithm { RSACE, JBPO, JTPO, JTBO, RACE, SACE };

inline constexpr std::array<Algorithm, 6> kAllAlgorithms{Algorithm::RSACE, Algorithm::JBPO, Algorithm::JTPO,
                                                         Algorithm::JTBO,  Algorithm::RACE, Algorithm::SACE};

inline const char* algorithm_tag(Algorithm a)
{
    switch (a) {
    case Algorithm::RSACE: return "R-SACE";
    case Algorithm::JBPO: return "J-BPO";
    case Algorithm::JTPO: return "J-TPO";
    case Algorithm::JTBO: return "J-TBO";
    case Algorithm::RACE: return "R-ACE";
    case Algorithm::SACE: return "S-ACE";
    }
    return "?";
}

inline std::optional<Algorithm> parse_algorithm(std::string_view tag)
{
    for (Algorithm a : kAllAlgorithms)
        if (tag == algorithm_tag(a)) return a;
    return std::nullopt;
}

inline Mechanism mechanism_of(Algorithm a)
{
    if (a == Algorithm::RACE) return Mechanism::RACE;
    if (a == Algorithm::SACE) return Mechanism::SACE;
    return Mechanism::RSACE;
}

/* Random beam with i.i.d. CN(0,1) entries scaled onto the power budget. */
template <class T>
CVec<T> random_beam(Rng& rng, Eigen::Index K, double power)
{
    CVec<T> w = draw_cn_vec<T>(rng, K);
    return (std::sqrt(T(power)) / w.norm()) * w;
}

/// J-BPO: tau1 uniform on the admissible interval [tau_lo, tau], beams and phases optimized.
template <class T>
FpiResult<T> run_jbpo(const Problem<T>& pb, Rng& rng, FpiConfig fc = {})
{
    DesignVariables<T> x = initial_design(pb, rng);
    std::uniform_real_distribution<double> u(pb.tau_lo, pb.cfg.tau);
    x.tau1 = T(u(rng));
    fc.optimize_tau1 = false;
    return run_solver(pb, x, fc);
}

/// J-TPO: beams drawn at random on their budgets (w_I scaled for the leakage bound), tau1 and phases optimized.
template <class T>
FpiResult<T> run_jtpo(const Problem<T>& pb, Rng& rng, FpiConfig fc = {})
{
    DesignVariables<T> x = initial_design(pb, rng);
    x.wI = random_beam<T>(rng, pb.cfg.K, pb.cfg.p_Imax);
    x.wJ = random_beam<T>(rng, pb.cfg.K, pb.cfg.p_Jmax);
    repair_interference(pb, x);
    fc.optimize_beams = false;
    return run_solver(pb, x, fc);
}

/// J-TBO: phases drawn uniformly and frozen, tau1 and beams optimized.
template <class T>
FpiResult<T> run_jtbo(const Problem<T>& pb, Rng& rng, FpiConfig fc = {})
{
    DesignVariables<T> x = initial_design(pb, rng);
    fc.optimize_theta = false;
    return run_solver(pb, x, fc);
}

template <class T>
FpiResult<T> run_algorithm(Algorithm a, const ChannelSet<T>& ch, const ScenarioConfig& cfg, Rng& rng,
                           const FpiConfig& fc = {}, std::optional<double> fixed_tau1 = std::nullopt)
{
    const Problem<T> pb = make_problem(ch, cfg, mechanism_of(a));
    if (!pb.feasible) throw InfeasibleError("no ISAC duration meets the detection requirement");
    FpiConfig f = fc;
    DesignVariables<T> x;
    switch (a) {
    case Algorithm::JBPO:
        if (fixed_tau1) break;
        return run_jbpo(pb, rng, f);
    case Algorithm::JTPO:
        if (fixed_tau1) {
            x = initial_design(pb, rng);
            x.wI = random_beam<T>(rng, cfg.K, cfg.p_Imax);
            x.wJ = random_beam<T>(rng, cfg.K, cfg.p_Jmax);
            repair_interference(pb, x);
            f.optimize_beams = false;
            f.optimize_tau1 = false;
            x.tau1 = T(*fixed_tau1);
            if (*fixed_tau1 < pb.tau_lo) throw InfeasibleError("fixed tau1 violates the detection requirement");
            return run_solver(pb, x, f);
        }
        return run_jtpo(pb, rng, f);
    case Algorithm::JTBO: f.optimize_theta = false; break;
    case Algorithm::SACE: f.optimize_theta = false; break;
    default: break;
    }
    x = initial_design(pb, rng);
    if (fixed_tau1) {
        if (*fixed_tau1 < pb.tau_lo) throw InfeasibleError("fixed tau1 violates the detection requirement");
        x.tau1 = T(*fixed_tau1);
        f.optimize_tau1 = false;
    }
    return run_solver(pb, x, f);
}

/// Mechanism AST of a given design (rates, weights and transformation as used by the optimizer).
template <class T>
FpiResult<T> evaluate_mechanism(const ChannelSet<T>& ch, const DesignVariables<T>& x, const ScenarioConfig& cfg,
                                Mechanism m)
{
    const Problem<T> pb = make_problem(ch, cfg, m);
    FpiResult<T> r;
    r.mech = m;
    r.x = x;
    fill_report(pb, r);
    return r;
}

} // namespace rsace
