#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "stratlab/cli_report.hpp"
#include "stratlab/model_spaces.hpp"

using namespace stratlab;

namespace {

json s_alpha_json() { return StratifiedModel::s_alpha(2, 0.5).to_json(); }
json cone_json() { return StratifiedModel::euclidean_cone(LinkSpace::circle(0.5), 1.0).to_json(); }

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto d = std::filesystem::temp_directory_path() / ("stratlab_test_" + name);
  std::filesystem::remove_all(d);
  std::filesystem::create_directories(d);
  return d;
}

// Several cheap sampling checks, so worker scheduling actually interleaves.
json mixed_config(unsigned workers) {
  return {{"seed", 11},
          {"model", cone_json()},
          {"workers", workers},
          {"checks",
           {{{"kind", "volume"}, {"center", "apex"}, {"r", 0.5}, {"samples", 20000}},
            {{"kind", "classify"}, {"K", 0}, {"N", 2}},
            {{"kind", "distance"}, {"p", {0.5, 0.0}}, {"q", {0.5, 1.0}}},
            {{"kind", "bishop_gromov"}, {"center", {0.0}}, {"radii", {0.1, 0.3, 0.6}}, {"K", 0}, {"n", 2},
             {"samples", 20000}},
            {{"kind", "spectrum"}, {"nodes", 800}, {"count", 4}},
            {{"kind", "volume"}, {"center", {0.3, 0.2}}, {"r", 0.2}, {"samples", 20000}, {"seed", 5}},
            {{"kind", "classify"}, {"model", s_alpha_json()}, {"K", 1}, {"N", 2}}}}};
}

}  // namespace

TEST_SUITE("cli_report") {
  TEST_CASE("config validation exits 2") {
    const json ok = {{"seed", 1}, {"model", s_alpha_json()}, {"checks", {{{"kind", "classify"}, {"K", 1}, {"N", 2}}}}};
    CHECK(run_json(ok).exit_code == 0);

    json no_seed = ok;
    no_seed.erase("seed");
    const auto r = run_json(no_seed);
    CHECK(r.exit_code == 2);
    CHECK(r.message.find("seed") != std::string::npos);
    CHECK(r.rows.empty());

    auto broken = [&](auto mutate) {
      json j = ok;
      mutate(j);
      return run_json(j).exit_code;
    };
    CHECK(broken([](json& j) { j["seed"] = -3; }) == 2);
    CHECK(broken([](json& j) { j["seed"] = "7"; }) == 2);
    CHECK(broken([](json& j) { j["tolerances"] = {{"z_tol", -1.0}}; }) == 2);
    CHECK(broken([](json& j) { j["tolerances"] = {{"z_tol", 0.0}}; }) == 2);
    CHECK(broken([](json& j) { j["tolerances"] = {{"slack", 1.0}}; }) == 2);
    CHECK(broken([](json& j) { j["checks"][0]["kind"] = "curvature"; }) == 2);
    CHECK(broken([](json& j) { j["checks"][0]["expect"] = "maybe"; }) == 2);
    CHECK(broken([](json& j) { j["model"]["family"] = "torus"; }) == 2);
    CHECK(broken([](json& j) { j.erase("model"); }) == 2);
    CHECK(broken([](json& j) { j["samples"] = 0; }) == 2);
    CHECK(broken([](json& j) { j["checks"] = "classify"; }) == 2);
    CHECK(run_json(json::array()).exit_code == 2);
    CHECK_THROWS_AS(ExperimentConfig::from_json({{"checks", json::array()}}), ConfigError);
  }

  TEST_CASE("errors raised by a check") {
    // Missing parameter and out-of-domain point: invalid input, exit 2.
    json j = {{"seed", 1}, {"model", cone_json()}, {"checks", {{{"kind", "classify"}, {"K", 1}}}}};
    CHECK(run_json(j).exit_code == 2);
    j["checks"] = {{{"kind", "distance"}, {"p", {-1.0, 0.0}}, {"q", {0.5, 0.0}}}};
    CHECK(run_json(j).exit_code == 2);
    // A cut-off graph too large to build: numerical failure, exit 3.
    j["checks"] = {{{"kind", "cutoff"}, {"eps", 0.001}}};
    const auto r = run_json(j);
    CHECK(r.exit_code == 3);
    CHECK(r.message.find("cutoff") != std::string::npos);
  }

  TEST_CASE("classify-only config on S2_alpha") {
    const json j = {{"seed", 3}, {"model", s_alpha_json()}, {"checks", {{{"kind", "classify"}, {"K", 1}, {"N", 2}}}}};
    const auto r = run_json(j);
    REQUIRE(r.exit_code == 0);
    REQUIRE(r.rows.size() == 1);
    CHECK(r.rows[0].result.at("is_rcd") == true);
    CHECK(r.rows[0].pass);
    const auto rep = r.report_json();
    CHECK(rep.at("schema") == 1);
    CHECK(rep.at("rows")[0].at("result").at("is_rcd") == true);
    CHECK(rep.at("rows")[0].at("model_hash") == StratifiedModel::s_alpha(2, 0.5).hash());
  }

  TEST_CASE("expectations decide the exit status") {
    json j = {{"seed", 3},
              {"model", cone_json()},
              {"checks", {{{"kind", "classify"}, {"K", 0.5}, {"N", 2}, {"expect", "fail"}}}}};
    CHECK(run_json(j).exit_code == 0);
    j["checks"][0]["expect"] = "pass";
    const auto r = run_json(j);
    CHECK(r.exit_code == 1);
    CHECK_FALSE(r.rows[0].as_expected());
    // Without an expectation a false verdict is just the answer.
    j["checks"][0].erase("expect");
    const auto plain = run_json(j);
    CHECK(plain.exit_code == 0);
    CHECK_FALSE(plain.rows[0].pass);
    CHECK(plain.rows[0].as_expected());
    // The 3π cone fails Bishop-Gromov, which is what the expectation says.
    const auto wide = StratifiedModel::euclidean_cone(LinkSpace::circle(1.5), 6.0);
    j = {{"seed", 2},
         {"model", wide.to_json()},
         {"checks",
          {{{"kind", "bishop_gromov"}, {"center", {1.0, 0.0}}, {"radii", {0.25, 1.0, 4.0}}, {"K", 0}, {"n", 2},
            {"samples", 50000}, {"expect", "fail"}}}}};
    const auto bg = run_json(j);
    CHECK(bg.exit_code == 0);
    CHECK_FALSE(bg.rows[0].pass);
  }

  TEST_CASE("volume rows against a reference") {
    const double exact = 0.5 * kPi * 0.25;
    json j = {{"seed", 0},
              {"model", cone_json()},
              {"checks", {{{"kind", "volume"}, {"center", "apex"}, {"r", 0.5}, {"samples", 200000}, {"expected", exact}}}}};
    const auto r = run_json(j);
    REQUIRE(r.exit_code == 0);
    const auto& d = r.rows[0].result.at("diagnostics");
    CHECK(std::abs(d.at("estimate").get<double>() - exact) <= 3.0 * d.at("stderr").get<double>());
    CHECK(r.rows[0].tolerance == doctest::Approx(3.0 * d.at("stderr").get<double>()));
    j["checks"][0]["expected"] = 2.0 * exact;
    CHECK(run_json(j).exit_code == 1);
  }

  TEST_CASE("rows carry what is needed to reproduce") {
    const auto r = run_json(mixed_config(1));
    REQUIRE(r.exit_code == 0);
    REQUIRE(r.rows.size() == 7);
    for (std::size_t i = 0; i < r.rows.size(); ++i) {
      const auto& row = r.rows[i];
      CHECK(row.index == i);
      CHECK(row.model_hash.size() == 16);
      CHECK_FALSE(row.kind.empty());
    }
    CHECK(r.rows[0].seed == 11);
    CHECK(r.rows[5].seed == 5);
    CHECK(r.rows[6].model_hash == StratifiedModel::s_alpha(2, 0.5).hash());
    const auto csv = r.report_csv();
    CHECK(csv.rfind(report_csv_header(), 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 8);
    // Model ids containing commas are quoted.
    CHECK(csv.find("\"cone[Circle(0.5),R=1]\"") != std::string::npos);
  }

  TEST_CASE("byte-identical reports across runs and worker counts") {
    const auto base = run_json(mixed_config(1));
    const std::string j1 = base.report_json().dump(), c1 = base.report_csv();
    for (unsigned w : {1u, 2u, 4u}) {
      const auto r = run_json(mixed_config(w));
      CHECK(r.report_json().dump() == j1);
      CHECK(r.report_csv() == c1);
    }
    auto other = mixed_config(1);
    other["seed"] = 12;
    CHECK(run_json(other).report_json().dump() != j1);
  }

  TEST_CASE("outputs are written atomically") {
    const auto dir = scratch_dir("atomic");
    const auto target = dir / "sub" / "report.json";
    write_atomic(target.string(), "first\n");
    CHECK(slurp(target) == "first\n");
    write_atomic(target.string(), "second\n");
    CHECK(slurp(target) == "second\n");
    std::size_t files = 0;
    for (const auto& e : std::filesystem::directory_iterator(dir / "sub")) {
      ++files;
      CHECK(e.path().filename() == "report.json");
    }
    CHECK(files == 1);

    auto cfg = mixed_config(2);
    cfg["output"] = {{"json", (dir / "r.json").string()}, {"csv", (dir / "r.csv").string()}};
    const auto r = run_json(cfg);
    REQUIRE(r.exit_code == 0);
    CHECK(slurp(dir / "r.csv") == r.report_csv());
    CHECK(json::parse(slurp(dir / "r.json")) == r.report_json());
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("config round trip") {
    auto j = mixed_config(3);
    j["tolerances"] = {{"z_tol", 4.0}};
    j["scale"] = 0.5;
    const auto c = ExperimentConfig::from_json(j);
    CHECK(c.workers == 3);
    CHECK(c.tolerances.at("z_tol") == 4.0);
    const auto back = ExperimentConfig::from_json(c.to_json());
    CHECK(back.to_json() == c.to_json());
    CHECK(c.to_json().at("schema") == 1);
  }

  TEST_CASE("catalog smoke run") {
    auto cfg = catalog_config(5, 0.1);
    cfg.workers = 2;
    const auto r = run(cfg);
    INFO(r.message);
    CHECK(r.exit_code == 0);
    CHECK(r.rows.size() >= 12);
    std::size_t consistency = 0, expected_failures = 0;
    for (const auto& row : r.rows) {
      CHECK(row.as_expected());
      if (row.kind == "cross_consistency") ++consistency;
      if (row.expected == "fail") ++expected_failures;
    }
    CHECK(consistency == 14);
    CHECK(expected_failures >= 3);
  }
}
