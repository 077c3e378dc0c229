#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "rsam/config.hpp"
#include "rsam/errors.hpp"
#include "rsam/hjb.hpp"
#include "rsam/io.hpp"
#include "test_models.hpp"

using namespace rsam;
using namespace rsam::testmodels;

namespace {

std::filesystem::path tmp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / name;
}

int count_lines(const std::filesystem::path& p) {
    std::ifstream in(p);
    int n = 0;
    std::string line;
    while (std::getline(in, line)) ++n;
    return n;
}

}  // namespace

TEST_CASE("format_double round-trips") {
    for (double x : {0.1, 1.0 / 3.0, -1.5e17, 1e-300, 0.0, 2.5,
                     123456.789012345, -0.000123}) {
        const std::string s = format_double(x);
        CHECK(std::strtod(s.c_str(), nullptr) == x);
    }
}

TEST_CASE("fnv hash is stable and discriminates") {
    CHECK(fnv1a_hex("abc") == fnv1a_hex("abc"));
    CHECK(fnv1a_hex("abc") != fnv1a_hex("abd"));
    CHECK(fnv1a_hex("").size() == 16);
}

TEST_CASE("checkpoint round trip is bitwise") {
    const MarketModel m = with_jumps();
    const Grid g = Grid::make(vec({1.0}), {21}, 0.05, m.T);
    const auto res = policy_iteration(g, m);
    const auto path = tmp_file("rsam_ckpt_test.bin");
    write_checkpoint(path.string(), res.values, res.policy);
    const Checkpoint ck = read_checkpoint(path.string());
    REQUIRE(ck.values.slices.size() == res.values.slices.size());
    for (std::size_t j = 0; j < ck.values.slices.size(); ++j) {
        CHECK((ck.values.slices[j] - res.values.slices[j])
                  .lpNorm<Eigen::Infinity>() == 0.0);
        CHECK((ck.policy.slices[j] - res.policy.slices[j])
                  .lpNorm<Eigen::Infinity>() == 0.0);
    }
    CHECK(ck.values.grid.dt == res.values.grid.dt);
    std::filesystem::remove(path);
}

TEST_CASE("corrupt checkpoints are rejected") {
    const auto path = tmp_file("rsam_ckpt_bad.bin");
    std::ofstream(path) << "NOTACKPTxxxxxxxxxxxxxxxx";
    CHECK_THROWS_AS(read_checkpoint(path.string()), ConfigError);
    std::filesystem::remove(path);
}

TEST_CASE("grid csv has the versioned schema") {
    const MarketModel m = nojump();
    const Grid g = Grid::make(vec({0.5}), {11}, 0.1, m.T);
    const auto res = policy_iteration(g, m);
    const auto path = tmp_file("rsam_grid_test.csv");
    write_grid_csv(path.string(), res.values, res.policy, m.theta);
    std::ifstream in(path);
    std::string l0, l1;
    std::getline(in, l0);
    std::getline(in, l1);
    CHECK(l0 == "# rsam grid csv v1");
    CHECK(l1 == "t,x1,phi_tilde,phi,h1,h2");
    CHECK(count_lines(path) == 2 + (g.nt + 1) * g.node_count());
    std::filesystem::remove(path);
}

TEST_CASE("path and filter csv smoke") {
    const MarketModel m = with_jumps();
    const PathMesh mesh{m.T, 20};
    const SimPath p = simulate_path(m, constant_policy(vec({0.1, 0.1})), mesh,
                                    vec({0.0}), 3);
    const auto pf = tmp_file("rsam_path_test.csv");
    write_path_csv(pf.string(), p);
    CHECK(count_lines(pf) == 2 + mesh.steps + 1);
    std::filesystem::remove(pf);

    const auto dec = decompose_observations(p, m);
    const auto run = run_filter(dec.dY1, mesh, vec({0.0}), mat({{0.02}}), m);
    const auto ff = tmp_file("rsam_filter_test.csv");
    write_filter_csv(ff.string(), run, mesh);
    CHECK(count_lines(ff) == 2 + mesh.steps + 1);
    std::filesystem::remove(ff);
}

TEST_CASE("config loading") {
    SUBCASE("full config with defaults") {
        const RunConfig cfg = load_config(std::string(RSAM_TEST_DATA) +
                                          "/run_small.json");
        CHECK(cfg.model.n == 1);
        CHECK(cfg.model.m == 2);
        CHECK(cfg.model.M == 3);
        CHECK(cfg.model.jumps.atoms.size() == 2);
        CHECK(cfg.model.jumps.atoms[0].in_z0);
        CHECK_FALSE(cfg.model.jumps.atoms[1].in_z0);
        CHECK(cfg.grid_nodes == std::vector<int>{41});
        CHECK(cfg.paths == 2000);
        CHECK(cfg.seed == 7);
        CHECK(cfg.out_dir == "out_small");
        CHECK(cfg.tol_pi == 1e-8);
        CHECK(!cfg.raw_json.empty());
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(load_config("/nonexistent/rsam.json"), ConfigError);
    }
    SUBCASE("raw model document without wrapper") {
        const MarketModel m = parse_model_json(R"({
            "n": 1, "m": 2,
            "b": [0.0], "B": [[-1.0]],
            "Lambda": [[0.1, 0.0, 0.2]],
            "a0": 0.0, "A0": [0.0],
            "a": [0.05, 0.04], "A": [[0.2], [0.1]],
            "Sigma": [[0.2, 0.0, 0.0], [0.0, 0.2, 0.0]],
            "theta": 1.0, "T": 0.5, "v": 1.0
        })");
        CHECK(m.T == 0.5);
    }
    SUBCASE("bankruptcy-level atom is rejected") {
        CHECK_THROWS_AS(parse_model_json(R"({
            "n": 1, "m": 1,
            "b": [0.0], "B": [[-1.0]],
            "Lambda": [[0.1, 0.0]],
            "a0": 0.0, "A0": [0.0],
            "a": [0.05], "A": [[0.2]],
            "Sigma": [[0.2, 0.0]],
            "atoms": [ { "gamma": [-1.5], "weight": 1.0, "in_z0": true } ],
            "theta": 1.0, "T": 0.5, "v": 1.0
        })"), ConfigError);
    }
    SUBCASE("shape errors become ConfigError") {
        CHECK_THROWS_AS(parse_model_json(R"({
            "n": 2, "m": 2,
            "b": [0.0], "B": [[-1.0]],
            "Lambda": [[0.1, 0.0]],
            "a0": 0.0, "A0": [0.0],
            "a": [0.05, 0.04], "A": [[0.2], [0.1]],
            "Sigma": [[0.2, 0.0], [0.0, 0.2]],
            "theta": 1.0, "T": 0.5, "v": 1.0
        })"), ConfigError);
    }
}

TEST_CASE("zero-beta boundary policy override") {
    const std::string base = R"({
      "model": {
        "n": 1, "m": 2,
        "b": [0.0], "B": [[-1.5]],
        "Lambda": [[0.05, 0.03, 0.14]],
        "a0": 0.05, "A0": [0.02],
        "a": [0.075, 0.065], "A": [[0.10], [0.05]],
        "Sigma": [[0.20, 0.04, 0.0], [0.04, 0.22, 0.0]],
        "theta": 2.0, "T": 1.0, "v": 1.0
      },
      "solver": { "zero_beta_h": [HVAL] }
    })";
    auto with_h = [&](const std::string& h) {
        std::string doc = base;
        doc.replace(doc.find("HVAL"), 4, h);
        const auto path = tmp_file("rsam_zb_cfg.json");
        std::ofstream(path) << doc;
        return path;
    };
    // A_hat = [0.08, 0.03]', constraint h'A_hat = -0.02
    {
        const auto path = with_h("-0.325, 0.2");
        const RunConfig cfg = load_config(path.string());
        REQUIRE(cfg.zero_beta_h.has_value());
        CHECK((*cfg.zero_beta_h)(1) == 0.2);
        std::filesystem::remove(path);
    }
    {
        const auto path = with_h("0.1, 0.1");  // violates the identity
        CHECK_THROWS_AS(load_config(path.string()), ConfigError);
        std::filesystem::remove(path);
    }
}

TEST_CASE("config hash changes with any field") {
    const std::string base = R"({"model": 1, "seed": 2})";
    const std::string other = R"({"model": 1, "seed": 3})";
    CHECK(fnv1a_hex(base) != fnv1a_hex(other));
}
