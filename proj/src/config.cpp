#include "rsam/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "rsam/errors.hpp"

namespace rsam {

namespace {

using nlohmann::json;

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ConfigError("config parse error in " + path + ": " + e.what());
    }
    return j;
}

VectorXd to_vector(const json& j, const std::string& name) {
    if (!j.is_array()) throw ConfigError(name + " must be an array");
    VectorXd v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw ConfigError(name + " must be numeric");
        v(static_cast<int>(i)) = j[i].get<double>();
    }
    return v;
}

MatrixXd to_matrix(const json& j, const std::string& name) {
    if (!j.is_array() || j.empty() || !j[0].is_array())
        throw ConfigError(name + " must be an array of arrays");
    const std::size_t cols = j[0].size();
    MatrixXd m(j.size(), cols);
    for (std::size_t r = 0; r < j.size(); ++r) {
        if (!j[r].is_array() || j[r].size() != cols)
            throw ConfigError(name + " rows must have equal length");
        for (std::size_t c = 0; c < cols; ++c)
            m(static_cast<int>(r), static_cast<int>(c)) = j[r][c].get<double>();
    }
    return m;
}

template <typename T>
T field(const json& j, const std::string& name, const T& fallback) {
    if (!j.contains(name)) return fallback;
    return j.at(name).get<T>();
}

MarketModel parse_model(const json& jm) {
    MarketModel m;
    try {
        m.n = jm.at("n").get<int>();
        m.m = jm.at("m").get<int>();
        m.M = m.n + m.m;
        m.b = to_vector(jm.at("b"), "b");
        m.B = to_matrix(jm.at("B"), "B");
        m.Lambda = to_matrix(jm.at("Lambda"), "Lambda");
        m.a0 = jm.at("a0").get<double>();
        m.A0 = to_vector(jm.at("A0"), "A0");
        m.a = to_vector(jm.at("a"), "a");
        m.A = to_matrix(jm.at("A"), "A");
        m.Sigma = to_matrix(jm.at("Sigma"), "Sigma");
        m.theta = jm.at("theta").get<double>();
        m.T = jm.at("T").get<double>();
        m.v = jm.at("v").get<double>();
        if (jm.contains("atoms")) {
            for (const auto& ja : jm.at("atoms")) {
                JumpAtom atom;
                atom.gamma = to_vector(ja.at("gamma"), "atom gamma");
                atom.weight = ja.at("weight").get<double>();
                atom.in_z0 = ja.at("in_z0").get<bool>();
                if (atom.weight <= 0.0)
                    throw ConfigError("atom weight must be positive");
                for (int i = 0; i < atom.gamma.size(); ++i)
                    if (atom.gamma(i) <= -1.0)
                        throw ConfigError("atom gamma must be > -1 componentwise");
                m.jumps.atoms.push_back(std::move(atom));
            }
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("model section: ") + e.what());
    }
    try {
        m.check_dimensions();
    } catch (const DimensionMismatch& e) {
        throw ConfigError(std::string("model dimensions: ") + e.what());
    }
    return m;
}

}  // namespace

MarketModel parse_model_json(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("model parse error: ") + e.what());
    }
    return parse_model(j.contains("model") ? j.at("model") : j);
}

RunConfig load_config(const std::string& path) {
    const json j = load_json_file(path);
    if (!j.contains("model")) throw ConfigError("config needs a model section");

    RunConfig cfg;
    cfg.model = parse_model(j.at("model"));
    cfg.raw_json = j.dump();

    const json jg = j.value("grid", json::object());
    cfg.grid_radius = jg.contains("radius")
                          ? to_vector(jg.at("radius"), "grid.radius")
                          : VectorXd::Ones(cfg.model.n);
    cfg.grid_nodes = jg.contains("nodes")
                         ? jg.at("nodes").get<std::vector<int>>()
                         : std::vector<int>(cfg.model.n, 101);
    cfg.grid_dt = field(jg, "dt", 0.005);
    if (cfg.grid_dt <= 0.0) throw ConfigError("grid.dt must be positive");

    const json js = j.value("solver", json::object());
    cfg.tol_pi = field(js, "tol_pi", 1e-8);
    cfg.k_max = field(js, "k_max", 50);
    cfg.inline_howard = field(js, "inline_howard", false);
    cfg.time_scheme = field<std::string>(js, "time_scheme", "backward_euler");
    cfg.drift_scheme = field<std::string>(js, "drift_scheme", "hybrid");
    if (cfg.time_scheme != "backward_euler" && cfg.time_scheme != "crank_nicolson")
        throw ConfigError("solver.time_scheme must be backward_euler or crank_nicolson");
    if (cfg.drift_scheme != "hybrid" && cfg.drift_scheme != "upwind")
        throw ConfigError("solver.drift_scheme must be hybrid or upwind");
    cfg.opt_tol = field(js, "opt_tol", 1e-9);
    cfg.delta = field(js, "delta", 1e-6);
    cfg.box_bound = field(js, "box_bound", 1e3);
    if (cfg.tol_pi <= 0.0 || cfg.k_max <= 0 || cfg.opt_tol <= 0.0 ||
        cfg.delta <= 0.0 || cfg.box_bound <= 0.0)
        throw ConfigError("solver parameters must be positive");
    if (js.contains("zero_beta_h")) {
        const VectorXd h = to_vector(js.at("zero_beta_h"), "solver.zero_beta_h");
        if (h.size() != cfg.model.m)
            throw ConfigError("solver.zero_beta_h must have length m");
        const VectorXd resid =
            cfg.model.A_hat().transpose() * h + cfg.model.A0;
        if (resid.lpNorm<Eigen::Infinity>() > 1e-10)
            throw ConfigError("solver.zero_beta_h does not satisfy h'A_hat = -A0");
        if (!cfg.model.admissible_set(cfg.delta, cfg.box_bound)
                 .contains_strict(h, cfg.delta))
            throw ConfigError("solver.zero_beta_h is not strictly admissible");
        cfg.zero_beta_h = h;
    }

    const json jmc = j.value("mc", json::object());
    cfg.paths = field<long>(jmc, "paths", 10000);
    cfg.seed = field<std::uint64_t>(jmc, "seed", 1);
    cfg.mc_steps = field(jmc, "steps", 200);
    cfg.x0 = jmc.contains("x0") ? to_vector(jmc.at("x0"), "mc.x0")
                                : VectorXd::Zero(cfg.model.n);
    if (cfg.paths <= 0 || cfg.mc_steps <= 0)
        throw ConfigError("mc.paths and mc.steps must be positive");
    if (cfg.x0.size() != cfg.model.n)
        throw ConfigError("mc.x0 must have length n");

    const json jf = j.value("filter", json::object());
    cfg.m0 = jf.contains("m0") ? to_vector(jf.at("m0"), "filter.m0")
                               : VectorXd::Zero(cfg.model.n);
    cfg.P0 = jf.contains("P0")
                 ? to_matrix(jf.at("P0"), "filter.P0")
                 : MatrixXd(0.01 * MatrixXd::Identity(cfg.model.n, cfg.model.n));
    cfg.jump_threshold_scale = field(jf, "threshold_scale", 0.5);
    cfg.filter_paths = field<long>(jf, "paths", 1000);
    if (cfg.m0.size() != cfg.model.n ||
        cfg.P0.rows() != cfg.model.n || cfg.P0.cols() != cfg.model.n)
        throw ConfigError("filter.m0 / filter.P0 dimensions must match n");

    const json jo = j.value("output", json::object());
    cfg.out_dir = field<std::string>(jo, "dir", "");
    if (cfg.out_dir.empty()) {
        const char* env = std::getenv("RSAM_OUT");
        cfg.out_dir = env ? env : "out";
    }
    cfg.threads = field(jo, "threads", 1);

    if (cfg.grid_radius.size() != cfg.model.n ||
        static_cast<int>(cfg.grid_nodes.size()) != cfg.model.n)
        throw ConfigError("grid.radius/grid.nodes must match the factor dimension");
    return cfg;
}

}  // namespace rsam
