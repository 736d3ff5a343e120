#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "rsace/types.hpp"

namespace rsace {

inline constexpr int kConfigSchemaVersion = 1;

/// Single source of truth for one experiment. Defaults reproduce the simulation setup of the model;
/// values the model leaves open are documented in README.md.
struct ScenarioConfig {
    int schema_version = kConfigSchemaVersion;

    Point bs{-20.0, 20.0};
    Point cu{20.0, 0.0};
    Point tc{0.0, 10.0};
    Point ris{-5.0, 15.0};

    int K = 4;
    int N_R = 16;

    double A0_dB = -30.0;
    double d0 = 1.0;
    double alpha_BR = 2.5;
    double alpha_RI = 2.5;
    double alpha_RJ = 2.5;
    double alpha_I = 3.5;
    double alpha_J = 3.0;
    double rician_g = 0.8;

    double sigma0_2 = 1e-14;  // -110 dBm
    double sigmaI_2 = 1e-14;
    double sigmaJ_2 = 1e-14;

    double fs = 10e6;
    double tau = 1.0;
    double P_J1 = 0.5;
    double sigmaT_2 = 1.0;
    double sigma_e2 = 0.05;
    double eps_out = 0.05;

    double p_Imax = 0.05;
    double p_Jmax = 0.05;
    double eps_J = 1e-12;
    double Pd_min = 0.9;
    double Pf_max = 0.1;

    double P_AJ = 0.5;

    bool round_trip_echo = true;     // false: one-way amplitude path loss for the target reflections
    bool printed_gamma3 = false;     // true: TC-J estimated SINR numerator uses L_I^2(1-s_e^2)|1^H w_I|^2
    bool theta_bound_over_pI = false;  // true: RIS interference bound eps_J / p_Imax
    int phase_bits = 0;              // 0: continuous RIS phases

    std::uint64_t seed = 1;

    double A0() const { return std::pow(10.0, A0_dB / 10.0); }

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;
};

ScenarioConfig load_config(const std::string& path);
ScenarioConfig config_from_json_text(const std::string& text);
std::string config_to_json_text(const ScenarioConfig& cfg);

} // namespace rsace
