#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rsam/model.hpp"

namespace rsam {

// One run = one config file. CLI flags override only scalar fields.
struct RunConfig {
    MarketModel model;

    // grid section
    VectorXd grid_radius;          // per factor dimension
    std::vector<int> grid_nodes;   // per dimension
    double grid_dt = 0.005;

    // solver section
    double tol_pi = 1e-8;
    int k_max = 50;
    bool inline_howard = false;
    std::string time_scheme = "backward_euler";  // or "crank_nicolson"
    std::string drift_scheme = "hybrid";         // or "upwind"
    double opt_tol = 1e-9;
    double delta = 1e-6;
    double box_bound = 1e3;
    std::optional<VectorXd> zero_beta_h;  // boundary policy override

    // mc section
    long paths = 10000;
    std::uint64_t seed = 1;
    int mc_steps = 200;
    VectorXd x0;  // initial factor state, defaults to zeros

    // filter section
    VectorXd m0;
    MatrixXd P0;
    double jump_threshold_scale = 0.5;
    long filter_paths = 1000;

    // output section
    std::string out_dir = "out";
    int threads = 1;

    std::string raw_json;  // canonical dump, hashed into reports
};

RunConfig load_config(const std::string& path);

// Model-only loader (shared by the full config loader).
MarketModel parse_model_json(const std::string& json_text);

}  // namespace rsam
