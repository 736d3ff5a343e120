#include "rsace/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace rsace {

using nlohmann::json;

namespace {

json point_json(const Point& p) { return json::array({p.x, p.y}); }

Point point_from(const json& j, const char* key)
{
    if (!j.is_array() || j.size() != 2) throw std::invalid_argument(std::string(key) + ": expected [x, y]");
    return {j[0].get<double>(), j[1].get<double>()};
}

void require(bool ok, const char* field, const char* what)
{
    if (!ok) throw std::invalid_argument(std::string(field) + ": " + what);
}

} // namespace

void ScenarioConfig::validate() const
{
    require(schema_version == kConfigSchemaVersion, "schema_version", "unsupported version");
    require(K >= 1, "K", "must be >= 1");
    require(N_R >= 1, "N_R", "must be >= 1");
    require(d0 > 0.0, "d0", "must be positive");
    require(rician_g >= 0.0 && rician_g <= 1.0, "rician_g", "must lie in [0,1]");
    require(sigma0_2 > 0.0, "sigma0_2", "must be positive");
    require(sigmaI_2 > 0.0, "sigmaI_2", "must be positive");
    require(sigmaJ_2 > 0.0, "sigmaJ_2", "must be positive");
    require(fs > 0.0, "fs", "must be positive");
    require(tau > 0.0, "tau", "must be positive");
    require(P_J1 >= 0.0 && P_J1 <= 1.0, "P_J1", "must lie in [0,1]");
    require(sigmaT_2 >= 0.0, "sigmaT_2", "must be non-negative");
    require(sigma_e2 >= 0.0 && sigma_e2 < 1.0, "sigma_e2", "must lie in [0,1)");
    require(eps_out > 0.0 && eps_out < 1.0, "eps_out", "must lie in (0,1)");
    require(p_Imax > 0.0, "p_Imax", "must be positive");
    require(p_Jmax > 0.0, "p_Jmax", "must be positive");
    require(eps_J > 0.0, "eps_J", "must be positive");
    require(Pd_min > 0.0 && Pd_min < 1.0, "Pd_min", "must lie in (0,1)");
    require(Pf_max > 0.0 && Pf_max < 1.0, "Pf_max", "must lie in (0,1)");
    require(P_AJ >= 0.0 && P_AJ <= 1.0, "P_AJ", "must lie in [0,1]");
    require(phase_bits >= 0 && phase_bits <= 16, "phase_bits", "must lie in [0,16]");
    for (const auto& [name, p] : {std::pair{"bs", bs}, {"cu", cu}, {"tc", tc}, {"ris", ris}})
        require(std::isfinite(p.x) && std::isfinite(p.y), name, "coordinates must be finite");
    require(distance(bs, ris) > 0.0 && distance(ris, cu) > 0.0 && distance(ris, tc) > 0.0 &&
                distance(bs, cu) > 0.0 && distance(bs, tc) > 0.0,
            "positions", "nodes must not coincide");
}

std::string config_to_json_text(const ScenarioConfig& c)
{
    json j;
    j["schema_version"] = c.schema_version;
    j["bs"] = point_json(c.bs);
    j["cu"] = point_json(c.cu);
    j["tc"] = point_json(c.tc);
    j["ris"] = point_json(c.ris);
    j["K"] = c.K;
    j["N_R"] = c.N_R;
    j["A0_dB"] = c.A0_dB;
    j["d0"] = c.d0;
    j["alpha_BR"] = c.alpha_BR;
    j["alpha_RI"] = c.alpha_RI;
    j["alpha_RJ"] = c.alpha_RJ;
    j["alpha_I"] = c.alpha_I;
    j["alpha_J"] = c.alpha_J;
    j["rician_g"] = c.rician_g;
    j["sigma0_2"] = c.sigma0_2;
    j["sigmaI_2"] = c.sigmaI_2;
    j["sigmaJ_2"] = c.sigmaJ_2;
    j["fs"] = c.fs;
    j["tau"] = c.tau;
    j["P_J1"] = c.P_J1;
    j["sigmaT_2"] = c.sigmaT_2;
    j["sigma_e2"] = c.sigma_e2;
    j["eps_out"] = c.eps_out;
    j["p_Imax"] = c.p_Imax;
    j["p_Jmax"] = c.p_Jmax;
    j["eps_J"] = c.eps_J;
    j["Pd_min"] = c.Pd_min;
    j["Pf_max"] = c.Pf_max;
    j["P_AJ"] = c.P_AJ;
    j["round_trip_echo"] = c.round_trip_echo;
    j["printed_gamma3"] = c.printed_gamma3;
    j["theta_bound_over_pI"] = c.theta_bound_over_pI;
    j["phase_bits"] = c.phase_bits;
    j["seed"] = c.seed;
    return j.dump(2);
}

ScenarioConfig config_from_json_text(const std::string& text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config: malformed JSON: ") + e.what());
    }
    if (!j.is_object()) throw std::invalid_argument("config: top level must be an object");
    ScenarioConfig c;
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& k = it.key();
        const json& v = it.value();
        try {
            if (k == "schema_version") c.schema_version = v.get<int>();
            else if (k == "bs") c.bs = point_from(v, "bs");
            else if (k == "cu") c.cu = point_from(v, "cu");
            else if (k == "tc") c.tc = point_from(v, "tc");
            else if (k == "ris") c.ris = point_from(v, "ris");
            else if (k == "K") c.K = v.get<int>();
            else if (k == "N_R") c.N_R = v.get<int>();
            else if (k == "A0_dB") c.A0_dB = v.get<double>();
            else if (k == "d0") c.d0 = v.get<double>();
            else if (k == "alpha_BR") c.alpha_BR = v.get<double>();
            else if (k == "alpha_RI") c.alpha_RI = v.get<double>();
            else if (k == "alpha_RJ") c.alpha_RJ = v.get<double>();
            else if (k == "alpha_I") c.alpha_I = v.get<double>();
            else if (k == "alpha_J") c.alpha_J = v.get<double>();
            else if (k == "rician_g") c.rician_g = v.get<double>();
            else if (k == "sigma0_2") c.sigma0_2 = v.get<double>();
            else if (k == "sigmaI_2") c.sigmaI_2 = v.get<double>();
            else if (k == "sigmaJ_2") c.sigmaJ_2 = v.get<double>();
            else if (k == "fs") c.fs = v.get<double>();
            else if (k == "tau") c.tau = v.get<double>();
            else if (k == "P_J1") c.P_J1 = v.get<double>();
            else if (k == "sigmaT_2") c.sigmaT_2 = v.get<double>();
            else if (k == "sigma_e2") c.sigma_e2 = v.get<double>();
            else if (k == "eps_out") c.eps_out = v.get<double>();
            else if (k == "p_Imax") c.p_Imax = v.get<double>();
            else if (k == "p_Jmax") c.p_Jmax = v.get<double>();
            else if (k == "eps_J") c.eps_J = v.get<double>();
            else if (k == "Pd_min") c.Pd_min = v.get<double>();
            else if (k == "Pf_max") c.Pf_max = v.get<double>();
            else if (k == "P_AJ") c.P_AJ = v.get<double>();
            else if (k == "round_trip_echo") c.round_trip_echo = v.get<bool>();
            else if (k == "printed_gamma3") c.printed_gamma3 = v.get<bool>();
            else if (k == "theta_bound_over_pI") c.theta_bound_over_pI = v.get<bool>();
            else if (k == "phase_bits") c.phase_bits = v.get<int>();
            else if (k == "seed") c.seed = v.get<std::uint64_t>();
            else throw std::invalid_argument(k + ": unknown field");
        } catch (const json::type_error&) {
            throw std::invalid_argument(k + ": wrong type");
        }
    }
    c.validate();
    return c;
}

ScenarioConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return config_from_json_text(ss.str());
}

} // namespace rsace
