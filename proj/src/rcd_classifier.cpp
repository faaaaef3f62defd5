#include "stratlab/rcd_classifier.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "stratlab/comparison_suite.hpp"

namespace stratlab {

namespace {

constexpr double kAngleSlack = 1e-12;

std::string num(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

// Shared angle clause. Returns false when some codimension-2 angle exceeds 2π.
bool angle_clause(const StratifiedModel& model, CurvatureVerdict& v) {
  bool ok = true;
  for (const auto& s : model.strata()) {
    if (s.codim != 2) continue;
    const bool within = s.angle <= kTwoPi * (1.0 + kAngleSlack);
    v.angle_report.push_back({s.label, s.angle, within});
    if (!within) {
      ok = false;
      v.reasons.push_back("angle " + format_angle(s.angle) + " > 2π along " + s.label);
    }
  }
  return ok;
}

void finish(CurvatureVerdict& v, bool determinable_fail, bool bound_known) {
  if (determinable_fail) {
    v.is_rcd = false;
    v.indeterminate = false;
  } else if (!bound_known) {
    v.is_rcd = false;
    v.indeterminate = true;
  } else {
    v.is_rcd = true;
  }
}

Coords coords_of(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Coords(std::span<const double>(values));
}

std::size_t scaled(const json& params, const char* key, std::size_t fallback, double scale, std::size_t floor) {
  const double base = static_cast<double>(params.value(key, fallback));
  return std::max(floor, static_cast<std::size_t>(std::llround(base * scale)));
}

DiscreteApproximation catalog_graph(const StratifiedModel& model, std::size_t nodes, std::uint64_t seed) {
  return build_graph(model, qmc_cloud(model, nodes, seed), default_bandwidth(model, nodes));
}

// The worst of the per-function reports, by slack (margin + tol) / tol.
CheckReport bochner_all(const StratifiedModel& model, const json& p, std::uint64_t seed, double scale) {
  const auto nodes = scaled(p, "nodes", 4000, scale, 1000);
  const auto g = catalog_graph(model, nodes, seed);
  const auto wide = rescale_graph(model, g, 2.0);
  const auto sp = eigen(g, p.value("count", std::size_t{8}));
  const double K = p.at("K"), N = p.at("N"), tol = p.value("tol_factor", 5.0);
  const std::vector<double> one(g.size(), 1.0);
  std::vector<CheckReport> all;
  for (std::size_t k = 0; k < sp.count(); ++k) all.push_back(bochner_check(g, wide, sp, sp.eigenvectors[k], one, K, N, tol));
  if (sp.count() > 2) all.push_back(bochner_check(g, wide, sp, sp.eigenvectors[1], bochner_test_function(sp, 2), K, N, tol));
  auto slack = [](const CheckReport& c) { return (c.margin + c.tolerance) / c.tolerance; };
  std::size_t worst = 0;
  for (std::size_t i = 1; i < all.size(); ++i)
    if (slack(all[i]) < slack(all[worst])) worst = i;
  auto r = all[worst];
  r.samples = nodes;
  r.seed = seed;
  r.diagnostics["functions"] = static_cast<double>(all.size());
  r.diagnostics["worst_index"] = static_cast<double>(worst);
  return r;
}

}  // namespace

json CurvatureVerdict::to_json() const {
  json angles = json::array();
  for (const auto& a : angle_report) angles.push_back({{"stratum", a.stratum}, {"angle", a.angle}, {"within_2pi", a.within_2pi}});
  json j = {{"schema", 1},
            {"is_rcd", is_rcd},
            {"indeterminate", indeterminate},
            {"K", K},
            {"N", N},
            {"reasons", reasons},
            {"angle_report", angles},
            {"dimension_check", dimension_check}};
  if (ricci_estimate) j["ricci_estimate"] = *ricci_estimate;
  return j;
}

CurvatureVerdict classify(const StratifiedModel& model, double K, double N) {
  if (!std::isfinite(K) || std::isnan(N)) throw ArgumentError("classify: K must be finite and N a number");
  CurvatureVerdict v;
  v.K = K;
  v.N = N;
  bool fail = false;
  v.dimension_check = static_cast<double>(model.dim()) <= N;
  if (!v.dimension_check) {
    fail = true;
    v.reasons.push_back("dimension " + std::to_string(model.dim()) + " > N = " + num(N));
  }
  const auto kreg = model.k_reg();
  if (kreg && *kreg < K) {
    fail = true;
    v.reasons.push_back("K_reg = " + num(*kreg) + " < K = " + num(K));
  }
  if (!angle_clause(model, v)) fail = true;
  if (!kreg) {
    if (model.family() == Family::FermiSphere) v.ricci_estimate = fermi_ricci_estimate(model);
    if (!fail) {
      std::string why = "K_reg unknown for " + model.id();
      if (v.ricci_estimate) why += "; numeric Ricci lower estimate " + num(*v.ricci_estimate);
      v.reasons.push_back(why);
    }
  }
  finish(v, fail, kreg.has_value());
  return v;
}

CurvatureVerdict alexandrov_classify(const StratifiedModel& model, double k) {
  if (!std::isfinite(k)) throw ArgumentError("alexandrov_classify: k must be finite");
  CurvatureVerdict v;
  v.K = k;
  v.N = model.dim();
  bool fail = false;
  const auto sec = model.sectional_lower();
  if (sec && *sec < k) {
    fail = true;
    v.reasons.push_back("sectional curvature " + num(*sec) + " < k = " + num(k));
  }
  if (!angle_clause(model, v)) fail = true;
  if (!sec && !fail) v.reasons.push_back("sectional lower bound unknown for " + model.id());
  finish(v, fail, sec.has_value());
  return v;
}

std::vector<CatalogEntry> catalog() {
  std::vector<CatalogEntry> out;
  auto bg = [](Coords c, std::vector<double> radii, double K, int n, bool pass, bool designated = false) {
    return CatalogCheck{"bishop_gromov",
                        {{"center", std::vector<double>(c.begin(), c.end())}, {"radii", radii}, {"K", K}, {"n", n},
                         {"samples", 200000}},
                        pass, designated};
  };
  auto quad = [](Coords p, Coords a, Coords b, Coords c, double k, bool pass, bool designated = false) {
    auto v = [](const Coords& x) { return std::vector<double>(x.begin(), x.end()); };
    return CatalogCheck{"quadruple", {{"p", v(p)}, {"a", v(a)}, {"b", v(b)}, {"c", v(c)}, {"k", k}}, pass, designated};
  };
  auto lap = [](Coords c, double k, int n) {
    return CatalogCheck{"laplacian",
                        {{"center", std::vector<double>(c.begin(), c.end())}, {"k", k}, {"n", n}, {"nodes", 4000}},
                        true, false};
  };
  auto boch = [](double K, double N) {
    return CatalogCheck{"bochner", {{"nodes", 4000}, {"count", 8}, {"K", K}, {"N", N}}, true, false};
  };
  auto ae = [](bool pass) {
    return CatalogCheck{"ae_convexity", {{"pairs", 100000}, {"eps_ladder", {0.2, 0.1, 0.05, 0.025}}}, pass, false};
  };
  auto mcp = [] {
    return CatalogCheck{"mcp", {{"x0", json::array({0.0})}, {"t_grid", {0.25, 0.5, 0.75, 1.0}}, {"samples", 50000}}, true, false};
  };
  // Three directions at a cone point, spread evenly around a link of angle α.
  auto around = [](double alpha, double r) {
    return std::array<Coords, 3>{Coords{r, 0.0}, Coords{r, alpha / 3}, Coords{r, 2 * alpha / 3}};
  };

  {
    CatalogEntry e{"round sphere S2", StratifiedModel::round_sphere(2), {}, 1.0, true, false, {}};
    e.queries = {{1, 2, true, false}, {1, 1, false, false}, {1.5, 2, false, false}, {0, 5, true, false}};
    e.checks = {bg({0, 0, 1}, {0.25, 0.5, 1, 2, 3}, 1, 2, true), lap({0, 0, 1}, 1, 2),
                {"levy_gromov", {{"region", {{"kind", "ball"}, {"center", {0, 0, 1}}, {"radius", kPi / 2}}}, {"n", 2}, {"samples", 400000}}, true, false},
                boch(1, 2)};
    out.push_back(std::move(e));
  }
  {
    CatalogEntry e{"round sphere S3", StratifiedModel::round_sphere(3), {}, 1.0, true, false, {}};
    e.queries = {{2, 3, true, false}, {2, 2.5, false, false}};
    e.checks = {bg({0, 0, 0, 1}, {0.25, 0.5, 1, 2, 3}, 2, 3, true)};
    out.push_back(std::move(e));
  }
  for (double a : {0.25, 0.5, 1.0}) {
    CatalogEntry e{"spherical suspension S2_alpha a=" + num(a), StratifiedModel::s_alpha(2, a), {}, 1.0, true, false, {}};
    e.queries = {{1, 2, true, false}, {1, 1.5, false, false}, {0, 2, true, false}};
    e.checks = {bg({0.3, 0.2 * a}, {0.1, 0.2, 0.4, 0.8, 1.6}, 1, 2, true), lap({0.0, 0.0}, 1, 2),
                {"levy_gromov", {{"region", {{"kind", "pole_sublevel"}, {"t0", kPi / 2}}}, {"n", 2}, {"samples", 400000}}, true, false},
                boch(1, 2)};
    if (a < 1.0) e.checks.push_back(ae(true));
    out.push_back(std::move(e));
  }
  {
    CatalogEntry e{"spherical suspension S3_alpha a=0.5", StratifiedModel::s_alpha(3, 0.5), {}, 1.0, true, false, {}};
    e.queries = {{2, 3, true, false}};
    e.checks = {bg({0.3, 0.5, 1.0}, {0.1, 0.2, 0.4, 0.8, 1.6}, 2, 3, true)};
    out.push_back(std::move(e));
  }
  for (int k : {2, 3}) {
    const double a = 1.0 / k;
    CatalogEntry e{"orbifold cone C(Circle(1/" + std::to_string(k) + "))",
                   StratifiedModel::euclidean_cone(LinkSpace::circle(a), 1.0), {}, 0.0, true, false, {}};
    e.queries = {{0, 2, true, false}, {0.1, 2, false, false}};
    const auto d = around(kTwoPi * a, 0.5);
    e.checks = {bg({0.0}, {0.05, 0.1, 0.2, 0.4, 0.8}, 0, 2, true), quad({0.0}, d[0], d[1], d[2], 0, true),
                lap({0.0}, 0, 2), boch(0, 2), mcp(), ae(true)};
    out.push_back(std::move(e));
  }
  {
    CatalogEntry e{"flat cone angle 2pi", StratifiedModel::euclidean_cone(LinkSpace::circle(1.0), 1.0), {}, 0.0, true, false, {}};
    e.queries = {{0, 2, true, false}};
    const auto d = around(kTwoPi, 0.5);
    e.checks = {bg({0.0}, {0.05, 0.1, 0.2, 0.4, 0.8}, 0, 2, true), quad({0.0}, d[0], d[1], d[2], 0, true)};
    out.push_back(std::move(e));
  }
  {
    CatalogEntry e{"flat cone angle 3pi", StratifiedModel::euclidean_cone(LinkSpace::circle(1.5), 6.0), {}, 0.0, false, false, {}};
    e.queries = {{0, 2, false, false}, {-1, 10, false, false}};
    const auto d = around(3 * kPi, 1.0);
    e.checks = {bg({1.0, 0.0}, {0.25, 0.5, 1, 2, 4}, 0, 2, false, true), quad({0.0}, d[0], d[1], d[2], 0, false, true),
                ae(false)};
    out.push_back(std::move(e));
  }
  {
    CatalogEntry e{"spherical suspension angle 3pi", StratifiedModel::suspension(LinkSpace::circle(1.5)), {}, 1.0, false, false, {}};
    e.queries = {{1, 2, false, false}};
    const auto d = around(3 * kPi, 0.3);
    e.checks = {bg({0.5, 0.0}, {0.25, 0.5, 1, 2}, 1, 2, false, true),
                quad({0.0, 0.0}, d[0], d[1], d[2], 1, false, true)};
    out.push_back(std::move(e));
  }
  {
    CatalogEntry e{"3D cone over S2_alpha a=0.5",
                   StratifiedModel::euclidean_cone(LinkSpace::suspension(LinkSpace::circle(0.5)), 1.0), {}, 0.0, true,
                   false, {}};
    e.queries = {{0, 3, true, false}, {0, 2, false, false}};
    e.checks = {bg({0.0}, {0.05, 0.1, 0.2, 0.4, 0.8}, 0, 3, true), boch(0, 3)};
    out.push_back(std::move(e));
  }
  for (double alpha : {kPi, 3 * kPi}) {
    const double beta = kPi / 4;
    const bool small = alpha <= kTwoPi;
    auto f = [&](double r, double phi) {
      const auto x = fermi_embed(beta, r, 0.0, phi);
      return Coords(std::span<const double>(x));
    };
    CatalogEntry e{std::string("Fermi sphere angle ") + (small ? "pi" : "3pi"),
                   StratifiedModel::fermi_sphere(beta, alpha, 0.3), {}, 1.0, false, small, {}};
    e.queries = {{2, 3, false, small}};
    e.checks = {quad(f(0.001, 0.0), f(0.04, 0.0), f(0.04, kTwoPi / 3), f(0.04, 2 * kTwoPi / 3), 0, small, !small)};
    if (small) e.checks.push_back(ae(true));
    out.push_back(std::move(e));
  }
  return out;
}

std::string catalog_markdown(const std::vector<CatalogEntry>& entries) {
  std::ostringstream os;
  os << "| entry | model | n | codim-2 angles | RCD(K,N) expected | CBB(k) expected | checks |\n";
  os << "|---|---|---|---|---|---|---|\n";
  auto verdict = [](bool v, bool ind) { return ind ? std::string("indeterminate") : (v ? "true" : "false"); };
  for (const auto& e : entries) {
    std::string angles;
    for (const auto& s : e.model.strata())
      if (s.codim == 2) angles += (angles.empty() ? "" : ", ") + format_angle(s.angle);
    if (angles.empty()) angles = "none";
    std::string queries;
    for (const auto& q : e.queries)
      queries += (queries.empty() ? "" : "; ") + std::string("(") + num(q.K) + ", " + num(q.N) + ") " +
                 verdict(q.expect_rcd, q.expect_indeterminate);
    std::string checks;
    for (const auto& c : e.checks)
      checks += (checks.empty() ? "" : ", ") + c.kind + (c.expect_pass ? " pass" : " fail") + (c.designated ? "*" : "");
    os << "| " << e.name << " | `" << e.model.id() << "` | " << e.model.dim() << " | " << angles << " | " << queries
       << " | k=" << num(e.alexandrov_k) << " " << verdict(e.expect_alexandrov, e.expect_alexandrov_indeterminate)
       << " | " << checks << " |\n";
  }
  return os.str();
}

CheckReport run_catalog_check(const StratifiedModel& model, const CatalogCheck& check, std::uint64_t seed,
                              double scale) {
  if (!(scale > 0.0)) throw ArgumentError("scale must be positive");
  const auto& p = check.params;
  CheckReport r;
  if (check.kind == "bishop_gromov") {
    r = bishop_gromov_check(model, coords_of(p.at("center")), p.at("radii").get<std::vector<double>>(), p.at("K"),
                            p.at("n"), scaled(p, "samples", 200000, scale, 20000), seed, p.value("z_tol", 3.0));
  } else if (check.kind == "quadruple") {
    r = quadruple_comparison(model, coords_of(p.at("p")), coords_of(p.at("a")), coords_of(p.at("b")),
                             coords_of(p.at("c")), p.at("k"));
    r.seed = seed;
  } else if (check.kind == "laplacian") {
    const auto nodes = scaled(p, "nodes", 4000, scale, 1000);
    r = laplacian_comparison_check(model, coords_of(p.at("center")), p.at("k"), p.at("n"),
                                   catalog_graph(model, nodes, seed), p.value("tol_factor", 5.0));
    r.samples = nodes;
    r.seed = seed;
  } else if (check.kind == "levy_gromov") {
    const auto& reg = p.at("region");
    const std::string kind = reg.at("kind");
    Region region;
    if (kind == "ball")
      region = Region::ball(coords_of(reg.at("center")), reg.at("radius"));
    else if (kind == "pole_sublevel")
      region = Region::pole_sublevel(model, reg.at("t0"));
    else
      throw ArgumentError("unknown region kind " + kind);
    r = levy_gromov_check(model, region, p.at("n"), scaled(p, "samples", 400000, scale, 50000), seed);
  } else if (check.kind == "bochner") {
    r = bochner_all(model, p, seed, scale);
  } else if (check.kind == "mcp") {
    r = mcp_density_check(model, coords_of(p.at("x0")), p.at("t_grid").get<std::vector<double>>(),
                          scaled(p, "samples", 200000, scale, 20000), seed, p.value("band", 0.25));
  } else if (check.kind == "ae_convexity") {
    r = ae_convexity_estimate(model, scaled(p, "pairs", 100000, scale, 10000),
                              p.at("eps_ladder").get<std::vector<double>>(), seed);
  } else {
    throw ArgumentError("unknown check kind " + check.kind);
  }
  r.notes["kind"] = check.kind;
  r.notes["expected"] = check.expect_pass ? "pass" : "fail";
  if (check.designated) r.notes["designated"] = "yes";
  return r;
}

CheckReport cross_consistency(const CatalogEntry& entry, const std::vector<CheckReport>& reports) {
  if (reports.size() != entry.checks.size()) throw ArgumentError("cross_consistency: one report per check expected");
  if (entry.queries.empty()) throw ArgumentError("cross_consistency: entry has no queries");
  CheckReport r;
  r.name = "cross_consistency";
  r.model_id = entry.model.id();
  r.model_hash = entry.model.hash();
  r.samples = reports.size();
  std::vector<std::string> problems;

  for (const auto& q : entry.queries) {
    const auto v = classify(entry.model, q.K, q.N);
    if (v.is_rcd != q.expect_rcd || v.indeterminate != q.expect_indeterminate)
      problems.push_back("classify(" + num(q.K) + ", " + num(q.N) + ") disagrees with the catalog");
  }
  const auto av = alexandrov_classify(entry.model, entry.alexandrov_k);
  if (av.is_rcd != entry.expect_alexandrov || av.indeterminate != entry.expect_alexandrov_indeterminate)
    problems.push_back("alexandrov_classify disagrees with the catalog");

  for (std::size_t i = 0; i < reports.size(); ++i)
    if (reports[i].pass != entry.checks[i].expect_pass)
      problems.push_back(entry.checks[i].kind + (reports[i].pass ? " passed" : " failed") + " unexpectedly");

  const auto primary = classify(entry.model, entry.queries.front().K, entry.queries.front().N);
  const bool angle_reason = std::any_of(primary.angle_report.begin(), primary.angle_report.end(),
                                        [](const AngleEntry& a) { return !a.within_2pi; });
  if (primary.is_rcd) {
    for (std::size_t i = 0; i < reports.size(); ++i)
      if (!reports[i].pass) problems.push_back("verdict true but " + entry.checks[i].kind + " failed");
  } else if (!primary.indeterminate && angle_reason) {
    bool detected = false;
    for (std::size_t i = 0; i < reports.size(); ++i)
      if (entry.checks[i].designated && !reports[i].pass) detected = true;
    if (!detected) problems.push_back("angle above 2π not detected by any designated check");
  }

  r.margin = problems.empty() ? 0.0 : -static_cast<double>(problems.size());
  r.tolerance = 0.0;
  r.diagnostics["problems"] = static_cast<double>(problems.size());
  r.diagnostics["checks"] = static_cast<double>(reports.size());
  for (std::size_t i = 0; i < problems.size(); ++i) r.notes["problem_" + std::to_string(i)] = problems[i];
  r.notes["entry"] = entry.name;
  return r.decide();
}

}  // namespace stratlab
