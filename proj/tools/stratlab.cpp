#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "stratlab/acceptance.hpp"
#include "stratlab/cli_report.hpp"
#include "stratlab/rcd_classifier.hpp"

using namespace stratlab;

namespace {

// "@path" reads a file; anything else is parsed as inline JSON.
json load_json(const std::string& arg) {
  if (!arg.empty() && arg[0] == '@') {
    std::ifstream f(arg.substr(1));
    if (!f) throw ConfigError("cannot read " + arg.substr(1));
    return json::parse(f);
  }
  return json::parse(arg);
}

json point_arg(const std::string& arg) {
  if (arg == "apex") return "apex";
  return load_json(arg);
}

struct Output {
  std::string out;
  std::string format = "json";
};

int emit(const RunResult& r, const Output& o) {
  const std::string text = o.format == "csv" ? r.report_csv() : r.report_json().dump(2) + "\n";
  if (o.out.empty())
    std::cout << text;
  else
    write_atomic(o.out, text);
  if (r.exit_code != 0) std::cerr << "stratlab: " << r.message << "\n";
  return r.exit_code;
}

void add_output(CLI::App* sub, Output& o) {
  sub->add_option("--out", o.out, "Write the report here (atomically) instead of stdout");
  sub->add_option("--format", o.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Comparison checks on stratified model spaces"};
  app.require_subcommand(1);

  std::string model;
  std::uint64_t seed = 0;
  Output o;
  json check;

  auto model_opt = [&](CLI::App* sub) {
    sub->add_option("--model", model, "Model JSON, inline or @file.json")->required();
  };
  auto seed_opt = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "Random seed")->required();
  };

  double K = 0, N = 0, k_alex = 0;
  auto* classify = app.add_subcommand("classify", "RCD(K,N) verdict, or CBB(k) with --alexandrov");
  model_opt(classify);
  classify->add_option("--K", K, "Ricci lower bound");
  classify->add_option("--N", N, "Dimension upper bound");
  auto* alex = classify->add_option("--alexandrov", k_alex, "Decide CBB(k) instead");
  add_output(classify, o);

  std::string p_arg, q_arg;
  auto* distance = app.add_subcommand("distance", "Exact distance between two points");
  model_opt(distance);
  distance->add_option("--p", p_arg, "First point (JSON array)")->required();
  distance->add_option("--q", q_arg, "Second point (JSON array)")->required();
  add_output(distance, o);

  std::string center = "apex";
  double r = 0, expected = 0;
  std::size_t samples = 200000;
  auto* volume = app.add_subcommand("volume", "Monte Carlo ball volume");
  model_opt(volume);
  seed_opt(volume);
  volume->add_option("--center", center, "apex or a JSON array");
  volume->add_option("--r", r, "Radius")->required();
  volume->add_option("--samples", samples, "Sample count");
  auto* expected_opt = volume->add_option("--expected", expected, "Reference volume, checked to 3 stderr");
  add_output(volume, o);

  std::size_t nodes = 4000, count = 10;
  double eps = 0;
  auto* spectrum = app.add_subcommand("spectrum", "Graph Laplacian eigenvalues");
  model_opt(spectrum);
  seed_opt(spectrum);
  spectrum->add_option("--nodes", nodes, "Graph size");
  spectrum->add_option("--count", count, "Number of eigenvalues");
  auto* eps_opt = spectrum->add_option("--eps", eps, "Bandwidth (default: about 160 neighbours)");
  add_output(spectrum, o);

  std::string kind, params = "{}", expect;
  auto* compare = app.add_subcommand("compare", "One comparison check");
  model_opt(compare);
  seed_opt(compare);
  compare->add_option("--check", kind, "bishop_gromov, quadruple, laplacian, levy_gromov, bochner, mcp, ae_convexity")
      ->required();
  compare->add_option("--params", params, "Check parameters, inline JSON or @file.json");
  compare->add_option("--expect", expect, "pass or fail")->check(CLI::IsMember({"pass", "fail"}));
  add_output(compare, o);

  auto* bochner = app.add_subcommand("bochner", "Discrete Bochner inequality over the low eigenfunctions");
  model_opt(bochner);
  seed_opt(bochner);
  bochner->add_option("--nodes", nodes, "Graph size");
  bochner->add_option("--K", K, "Ricci lower bound")->required();
  bochner->add_option("--N", N, "Dimension upper bound")->required();
  add_output(bochner, o);

  bool run_catalog = false;
  double scale = 1.0;
  unsigned workers = 1;
  auto* cat = app.add_subcommand("catalog", "Print the model catalog, or run it with --run");
  cat->add_flag("--run", run_catalog, "Run every catalog check");
  cat->add_option("--seed", seed, "Random seed for --run");
  cat->add_option("--scale", scale, "Sample-count multiplier");
  cat->add_option("--workers", workers, "Worker threads");
  add_output(cat, o);

  std::string config, suite;
  std::string csv_out;
  auto* report = app.add_subcommand("report", "Run a config file or a built-in suite");
  auto* config_opt = report->add_option("--config", config, "Experiment config, @file.json or inline");
  report->add_option("--suite", suite, "catalog or acceptance")
      ->check(CLI::IsMember({"catalog", "acceptance"}))
      ->excludes(config_opt);
  report->add_option("--seed", seed, "Seed for --suite");
  report->add_option("--scale", scale, "Sample-count multiplier for --suite catalog");
  report->add_option("--workers", workers, "Worker threads");
  report->add_option("--csv", csv_out, "Also write the CSV report here");
  add_output(report, o);

  CLI11_PARSE(app, argc, argv);

  try {
    auto single = [&](const std::string& k, json c) {
      c["kind"] = k;
      json cfg = {{"seed", seed}, {"model", load_json(model)}, {"checks", json::array({c})}};
      return emit(run_json(cfg), o);
    };
    if (classify->parsed()) {
      if (alex->count()) return single("alexandrov", {{"k", k_alex}});
      return single("classify", {{"K", K}, {"N", N}});
    }
    if (distance->parsed()) return single("distance", {{"p", point_arg(p_arg)}, {"q", point_arg(q_arg)}});
    if (volume->parsed()) {
      json c = {{"center", point_arg(center)}, {"r", r}, {"samples", samples}};
      if (expected_opt->count()) c["expected"] = expected;
      return single("volume", c);
    }
    if (spectrum->parsed()) {
      json c = {{"nodes", nodes}, {"count", count}};
      if (eps_opt->count()) c["eps"] = eps;
      return single("spectrum", c);
    }
    if (compare->parsed()) {
      json c = load_json(params);
      if (!expect.empty()) c["expect"] = expect;
      return single(kind, c);
    }
    if (bochner->parsed()) return single("bochner", {{"nodes", nodes}, {"K", K}, {"N", N}});
    if (cat->parsed()) {
      if (!run_catalog) {
        std::cout << catalog_markdown(catalog());
        return 0;
      }
      auto cfg = catalog_config(seed, scale);
      cfg.workers = workers;
      return emit(run(cfg), o);
    }
    if (report->parsed()) {
      if (suite == "acceptance") {
        const auto results = run_acceptance(seed);
        bool ok = true;
        for (const auto& c : results) {
          std::cout << acceptance_line(c) << "\n";
          ok = ok && c.pass;
        }
        if (!o.out.empty()) write_atomic(o.out, acceptance_csv(results));
        return ok ? 0 : 1;
      }
      json cfg;
      if (suite == "catalog") {
        auto c = catalog_config(seed, scale);
        c.workers = workers;
        cfg = c.to_json();
      } else if (!config.empty()) {
        cfg = load_json(config);
        if (report->count("--workers")) cfg["workers"] = workers;
      } else {
        std::cerr << "stratlab: report needs --config or --suite\n";
        return 2;
      }
      if (!csv_out.empty()) cfg["output"]["csv"] = csv_out;
      return emit(run_json(cfg), o);
    }
  } catch (const json::exception& e) {
    std::cerr << "stratlab: invalid JSON: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "stratlab: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
