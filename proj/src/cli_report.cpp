#include "stratlab/cli_report.hpp"

#include <atomic>
#include <charconv>
#include <exception>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "stratlab/comparison_suite.hpp"
#include "stratlab/cone_geometry.hpp"
#include "stratlab/measure_mc.hpp"
#include "stratlab/rcd_classifier.hpp"
#include "stratlab/spectral.hpp"

namespace stratlab {

namespace {

const std::set<std::string> kComparisonKinds = {"bishop_gromov", "quadruple", "laplacian", "levy_gromov",
                                                "bochner",       "mcp",       "ae_convexity"};
const std::set<std::string> kOwnKinds = {"classify", "alexandrov", "distance",   "volume",
                                         "spectrum", "lichnerowicz", "cutoff", "catalog"};
const std::set<std::string> kToleranceKeys = {"z_tol", "tol_factor", "band"};

Coords point_of(const json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "apex") return Coords{0.0};
    throw ConfigError("unknown point name " + j.dump());
  }
  const auto values = j.get<std::vector<double>>();
  return Coords(std::span<const double>(values));
}

bool non_negative_integer(const json& v) {
  return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

std::size_t positive_count(const json& j, const char* key, std::size_t fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!non_negative_integer(v) || v.get<std::uint64_t>() == 0)
    throw ConfigError(std::string(key) + " must be a positive integer");
  return v.get<std::size_t>();
}

std::string shortest(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

// One unit of work. Catalog checks carry their entry so that the
// cross-consistency rows can be assembled afterwards.
struct Task {
  std::string kind;
  std::optional<StratifiedModel> model;
  json params;
  std::string expected;
  std::uint64_t seed = 0;
  std::optional<std::size_t> entry;
  std::string entry_name;
};

struct Outcome {
  ReportRow row;
  std::optional<CheckReport> report;
  std::exception_ptr error;
};

ReportRow row_from(const CheckReport& r, const std::string& kind) {
  ReportRow row;
  row.kind = kind;
  row.model_id = r.model_id;
  row.model_hash = r.model_hash;
  row.seed = r.seed;
  row.samples = r.samples;
  row.tolerance = r.tolerance;
  row.margin = r.margin;
  row.pass = r.pass;
  row.result = r.to_json();
  return row;
}

ReportRow verdict_row(const StratifiedModel& m, const std::string& kind, const CurvatureVerdict& v,
                      std::uint64_t seed) {
  ReportRow row;
  row.kind = kind;
  row.model_id = m.id();
  row.model_hash = m.hash();
  row.seed = seed;
  row.pass = v.is_rcd;
  row.margin = v.is_rcd ? 0.0 : -1.0;
  row.result = v.to_json();
  row.verdict = true;
  return row;
}

Outcome execute(const ExperimentConfig& cfg, const Task& t) {
  Outcome out;
  const auto& p = t.params;
  const StratifiedModel& m = *t.model;
  ReportRow row;
  if (t.kind == "classify") {
    row = verdict_row(m, t.kind, classify(m, p.at("K"), p.at("N")), t.seed);
  } else if (t.kind == "alexandrov") {
    row = verdict_row(m, t.kind, alexandrov_classify(m, p.at("k")), t.seed);
  } else if (t.kind == "distance") {
    const double d = model_distance(m, point_of(p.at("p")), point_of(p.at("q")));
    row.kind = t.kind;
    row.model_id = m.id();
    row.model_hash = m.hash();
    row.seed = t.seed;
    row.pass = true;
    row.result = {{"distance", d}};
  } else if (t.kind == "volume") {
    const auto samples = positive_count(p, "samples", cfg.samples);
    const auto v = ball_volume_mc(m, point_of(p.at("center")), p.at("r"), samples, t.seed);
    CheckReport r;
    r.name = "volume";
    r.model_id = m.id();
    r.model_hash = m.hash();
    r.samples = samples;
    r.seed = t.seed;
    r.diagnostics["estimate"] = v.estimate;
    r.diagnostics["stderr"] = v.stderr_;
    r.diagnostics["radius"] = v.radius;
    if (p.contains("expected")) {
      const double want = p.at("expected");
      const double z = cfg.tolerances.count("z_tol") ? cfg.tolerances.at("z_tol") : 3.0;
      r.diagnostics["expected"] = want;
      r.tolerance = z * v.stderr_;
      r.margin = -std::abs(v.estimate - want);
      r.decide();
    } else {
      r.pass = true;
    }
    row = row_from(r, t.kind);
  } else if (t.kind == "spectrum" || t.kind == "lichnerowicz") {
    const auto nodes = positive_count(p, "nodes", cfg.nodes);
    const double eps = p.value("eps", default_bandwidth(m, nodes));
    const auto g = build_graph(m, qmc_cloud(m, nodes, t.seed), eps);
    const auto sp = eigen(g, positive_count(p, "count", t.kind == "spectrum" ? 10 : 4));
    if (t.kind == "spectrum") {
      row.kind = t.kind;
      row.model_id = m.id();
      row.model_hash = m.hash();
      row.seed = t.seed;
      row.samples = nodes;
      row.pass = true;
      const double radius = p.value("gradient_radius", 4.0 * g.eps);
      row.result = {{"eps", g.eps},
                    {"cutoff", sp.cutoff},
                    {"eigenvalues", sp.eigenvalues},
                    {"residuals", sp.residuals},
                    {"gradient_radius", radius},
                    {"max_gradient_near_singular", gradient_near_singular(m, g, sp, radius)}};
    } else {
      const auto k_reg = m.k_reg();
      if (!k_reg) throw UnsupportedModelError("lichnerowicz needs an analytic K_reg for " + m.id());
      auto r = lichnerowicz_check(sp, m.dim(), *k_reg, p.value("tol", 0.07));
      r.model_id = m.id();
      r.model_hash = m.hash();
      r.samples = nodes;
      r.seed = t.seed;
      row = row_from(r, t.kind);
    }
  } else if (t.kind == "cutoff") {
    const double eps = p.at("eps");
    if (m.family() != Family::EuclideanCone || m.dim() != 2)
      throw UnsupportedModelError("cutoff runs on two-dimensional cones");
    const auto g = cutoff_approximation(m, eps, t.seed);
    const auto c = cutoff_family(m, eps, g);
    const double target = m.strata().front().angle / std::log(1.0 / eps);
    CheckReport r;
    r.name = "cutoff";
    r.model_id = m.id();
    r.model_hash = m.hash();
    r.samples = g.size();
    r.seed = t.seed;
    r.diagnostics["eps"] = eps;
    r.diagnostics["grad_l2_sq"] = c.grad_l2_sq;
    r.diagnostics["grad_l2_sq_raw"] = c.grad_l2_sq_raw;
    r.diagnostics["lap_l1"] = c.lap_l1;
    r.diagnostics["target"] = target;
    r.tolerance = p.value("rel_tol", 0.10);
    r.margin = -std::abs(c.grad_l2_sq / target - 1.0);
    r.decide();
    row = row_from(r, t.kind);
  } else {
    json params = p;
    for (const auto& [k, v] : cfg.tolerances)
      if (!params.contains(k)) params[k] = v;
    CatalogCheck check{t.kind, params, t.expected != "fail", false};
    auto r = run_catalog_check(m, check, t.seed, t.entry ? cfg.scale : 1.0);
    if (t.entry) r.notes["entry"] = t.entry_name;
    out.report = r;
    row = row_from(r, t.kind);
  }
  row.expected = t.expected;
  out.row = std::move(row);
  return out;
}

json strip(const json& check) {
  json p = check;
  for (const char* k : {"kind", "expect", "seed", "model"}) p.erase(k);
  return p;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig c;
  if (!j.contains("seed")) throw ConfigError("config needs a seed");
  if (!non_negative_integer(j.at("seed"))) throw ConfigError("seed must be an unsigned integer");
  c.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("model")) {
    try {
      (void)StratifiedModel::from_json(j.at("model"));
    } catch (const std::exception& e) {
      throw ConfigError(std::string("model: ") + e.what());
    }
    c.model = j.at("model");
  }
  if (j.contains("checks")) {
    if (!j.at("checks").is_array()) throw ConfigError("checks must be an array");
    c.checks = j.at("checks");
  }
  for (std::size_t i = 0; i < c.checks.size(); ++i) {
    const auto& ch = c.checks[i];
    const std::string at = "check " + std::to_string(i) + ": ";
    if (!ch.is_object() || !ch.contains("kind") || !ch.at("kind").is_string())
      throw ConfigError(at + "needs a string kind");
    const std::string kind = ch.at("kind");
    if (!kComparisonKinds.count(kind) && !kOwnKinds.count(kind)) throw ConfigError(at + "unknown kind " + kind);
    if (ch.contains("expect")) {
      const auto& e = ch.at("expect");
      if (!e.is_string() || (e != "pass" && e != "fail")) throw ConfigError(at + "expect must be pass or fail");
    }
    if (ch.contains("seed") && !non_negative_integer(ch.at("seed")))
      throw ConfigError(at + "seed must be an unsigned integer");
    if (kind != "catalog" && !ch.contains("model") && !c.model) throw ConfigError(at + "no model");
    if (ch.contains("model")) {
      try {
        (void)StratifiedModel::from_json(ch.at("model"));
      } catch (const std::exception& e) {
        throw ConfigError(at + "model: " + e.what());
      }
    }
  }
  c.samples = positive_count(j, "samples", c.samples);
  c.nodes = positive_count(j, "nodes", c.nodes);
  if (j.contains("scale")) {
    if (!j.at("scale").is_number() || !(j.at("scale").get<double>() > 0)) throw ConfigError("scale must be positive");
    c.scale = j.at("scale");
  }
  if (j.contains("workers")) c.workers = static_cast<unsigned>(positive_count(j, "workers", 1));
  if (j.contains("output")) {
    const auto& o = j.at("output");
    if (!o.is_object()) throw ConfigError("output must be an object");
    if (o.contains("json")) c.json_path = o.at("json").get<std::string>();
    if (o.contains("csv")) c.csv_path = o.at("csv").get<std::string>();
  }
  if (j.contains("tolerances")) {
    const auto& t = j.at("tolerances");
    if (!t.is_object()) throw ConfigError("tolerances must be an object");
    for (const auto& [k, v] : t.items()) {
      if (!kToleranceKeys.count(k)) throw ConfigError("unknown tolerance " + k);
      if (!v.is_number() || !(v.get<double>() > 0)) throw ConfigError("tolerance " + k + " must be positive");
      c.tolerances[k] = v.get<double>();
    }
  }
  return c;
}

json ExperimentConfig::to_json() const {
  json j = {{"schema", 1}, {"seed", seed}, {"checks", checks}, {"samples", samples},
            {"nodes", nodes},  {"scale", scale}, {"workers", workers}};
  if (model) j["model"] = *model;
  json out = json::object();
  if (json_path) out["json"] = *json_path;
  if (csv_path) out["csv"] = *csv_path;
  if (!out.empty()) j["output"] = out;
  if (!tolerances.empty()) j["tolerances"] = tolerances;
  return j;
}

std::string report_csv_header() {
  return "index,check,model_id,model_hash,seed,samples,tolerance,margin,pass,expected,outcome\n";
}

json RunResult::report_json() const {
  json rows_j = json::array();
  for (const auto& r : rows)
    rows_j.push_back({{"index", r.index},
                      {"check", r.kind},
                      {"model_id", r.model_id},
                      {"model_hash", r.model_hash},
                      {"seed", r.seed},
                      {"samples", r.samples},
                      {"tolerance", r.tolerance},
                      {"margin", r.margin},
                      {"pass", r.pass},
                      {"expected", r.expected},
                      {"as_expected", r.as_expected()},
                      {"result", r.result}});
  return {{"schema", 1}, {"exit_code", exit_code}, {"message", message}, {"rows", rows_j}};
}

std::string RunResult::report_csv() const {
  std::ostringstream os;
  os << report_csv_header();
  for (const auto& r : rows)
    os << r.index << ',' << csv_field(r.kind) << ',' << csv_field(r.model_id) << ',' << r.model_hash << ','
       << r.seed << ',' << r.samples << ',' << shortest(r.tolerance) << ',' << shortest(r.margin) << ','
       << (r.pass ? "pass" : "fail") << ',' << r.expected << ',' << (r.as_expected() ? "ok" : "unexpected")
       << '\n';
  return os.str();
}

void write_atomic(const std::string& path, const std::string& contents) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot open " + tmp.string());
    f << contents;
    f.flush();
    if (!f) {
      f.close();
      fs::remove(tmp);
      throw Error("cannot write " + tmp.string());
    }
  }
  fs::rename(tmp, target);
}

RunResult run(const ExperimentConfig& cfg) {
  RunResult result;
  std::vector<Task> tasks;
  std::vector<CatalogEntry> entries;
  // Per entry: indices of its tasks, in entry.checks order.
  std::vector<std::vector<std::size_t>> entry_tasks;
  // Output order: a task index, or an entry index for a cross-consistency row.
  std::vector<std::pair<bool, std::size_t>> layout;

  for (std::size_t i = 0; i < cfg.checks.size(); ++i) {
    const auto& ch = cfg.checks[i];
    const std::string kind = ch.at("kind");
    const std::uint64_t seed = ch.value("seed", cfg.seed);
    if (kind == "catalog") {
      if (entries.empty()) entries = catalog();
      entry_tasks.assign(entries.size(), {});
      for (std::size_t e = 0; e < entries.size(); ++e) {
        for (std::size_t k = 0; k < entries[e].checks.size(); ++k) {
          const auto& c = entries[e].checks[k];
          entry_tasks[e].push_back(tasks.size());
          layout.emplace_back(false, tasks.size());
          tasks.push_back({c.kind, entries[e].model, c.params, c.expect_pass ? "pass" : "fail",
                           derive_seed(seed, e * 64 + k), e, entries[e].name});
        }
        layout.emplace_back(true, e);
      }
      continue;
    }
    Task t;
    t.kind = kind;
    t.model = StratifiedModel::from_json(ch.contains("model") ? ch.at("model") : *cfg.model);
    t.params = strip(ch);
    t.expected = ch.value("expect", "");
    t.seed = seed;
    layout.emplace_back(false, tasks.size());
    tasks.push_back(std::move(t));
  }

  std::vector<Outcome> outcomes(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < tasks.size();) {
      try {
        outcomes[i] = execute(cfg, tasks[i]);
      } catch (...) {
        outcomes[i].error = std::current_exception();
      }
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(cfg.workers, static_cast<unsigned>(tasks.size())));
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < threads; ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (!outcomes[i].error) continue;
    const std::string at = "check " + std::to_string(i) + " (" + tasks[i].kind + "): ";
    try {
      std::rethrow_exception(outcomes[i].error);
    } catch (const NumericalError& e) {
      result.exit_code = 3;
      result.message = at + e.what();
    } catch (const ResolutionError& e) {
      result.exit_code = 3;
      result.message = at + e.what();
    } catch (const std::exception& e) {
      result.exit_code = 2;
      result.message = at + e.what();
    }
    return result;
  }

  std::size_t index = 0;
  for (const auto& [is_entry, k] : layout) {
    ReportRow row;
    if (is_entry) {
      std::vector<CheckReport> reports;
      for (std::size_t t : entry_tasks[k]) reports.push_back(*outcomes[t].report);
      const auto r = cross_consistency(entries[k], reports);
      row = row_from(r, "cross_consistency");
      row.expected = "pass";
    } else {
      row = outcomes[k].row;
    }
    row.index = index++;
    if (!row.as_expected() && result.exit_code == 0) {
      result.exit_code = 1;
      result.message = "row " + std::to_string(row.index) + " (" + row.kind + ", " + row.model_id + ") " +
                       (row.pass ? "passed" : "failed") + " against expectation";
    }
    result.rows.push_back(std::move(row));
  }

  if (cfg.json_path) write_atomic(*cfg.json_path, result.report_json().dump(2) + "\n");
  if (cfg.csv_path) write_atomic(*cfg.csv_path, result.report_csv());
  return result;
}

RunResult run_json(const json& config) {
  try {
    return run(ExperimentConfig::from_json(config));
  } catch (const ConfigError& e) {
    RunResult r;
    r.exit_code = 2;
    r.message = e.what();
    return r;
  } catch (const json::exception& e) {
    RunResult r;
    r.exit_code = 2;
    r.message = e.what();
    return r;
  }
}

ExperimentConfig catalog_config(std::uint64_t seed, double scale) {
  ExperimentConfig c;
  c.seed = seed;
  c.scale = scale;
  c.checks = json::array({{{"kind", "catalog"}}});
  return c;
}

}  // namespace stratlab
