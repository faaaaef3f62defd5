#include "stratlab/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <queue>
#include <random>
#include <sstream>

#include "stratlab/cli_report.hpp"
#include "stratlab/comparison_suite.hpp"
#include "stratlab/cone_geometry.hpp"
#include "stratlab/measure_mc.hpp"
#include "stratlab/rcd_classifier.hpp"
#include "stratlab/spectral.hpp"

namespace stratlab {

namespace {

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}
std::string g4(double x) { return fmt("%.4g", x); }

CriterionResult start(int id, std::string title) {
  CriterionResult c;
  c.id = id;
  c.title = std::move(title);
  return c;
}

Coords base_point(const StratifiedModel& m) {
  std::vector<double> x(m.coord_count(), 0.0);
  switch (m.family()) {
    case Family::RoundSphere:
    case Family::FermiSphere: x[0] = 1.0; break;
    case Family::EuclideanCone: x.assign(1, 0.0); break;
    case Family::Suspension: break;
  }
  return Coords(std::span<const double>(x));
}

bool angles_at_most_2pi(const StratifiedModel& m) {
  for (const auto& s : m.strata())
    if (s.codim == 2 && s.angle > kTwoPi + 1e-12) return false;
  return true;
}

// Catalog models with every angle ≤ 2π and an analytic K_reg.
std::vector<CatalogEntry> regular_catalog() {
  std::vector<CatalogEntry> out;
  for (auto& e : catalog())
    if (e.model.family() != Family::FermiSphere && angles_at_most_2pi(e.model) && e.model.k_reg()) out.push_back(e);
  return out;
}

DiscreteApproximation graph_of(const StratifiedModel& m, std::size_t nodes, std::uint64_t seed, double eps = 0.0) {
  return build_graph(m, qmc_cloud(m, nodes, seed), eps > 0 ? eps : default_bandwidth(m, nodes));
}

// 1. Shortest paths on a radius graph whose edges carry exact cone distances.
CriterionResult cone_metric(std::uint64_t seed) {
  auto c = start(1, "cone metric exactness");
  const auto m = StratifiedModel::euclidean_cone(LinkSpace::circle(0.5), 1.0);
  const double radius = 0.08;
  const auto g = graph_of(m, 10000, seed, radius / 4.0);
  const std::size_t sources = 1000, targets = 10;
  std::mt19937_64 rng(derive_seed(seed, 1));
  std::uniform_int_distribution<std::size_t> pick(0, g.size() - 1);
  double worst = 0.0, sum = 0.0;
  std::size_t pairs = 0;
  std::vector<double> dist(g.size());
  using Item = std::pair<double, std::size_t>;
  for (std::size_t s = 0; s < sources; ++s) {
    const std::size_t src = pick(rng);
    std::fill(dist.begin(), dist.end(), kInf);
    dist[src] = 0.0;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> q;
    q.push({0.0, src});
    while (!q.empty()) {
      const auto [d, i] = q.top();
      q.pop();
      if (d > dist[i]) continue;
      for (std::size_t e = g.offsets[i]; e < g.offsets[i + 1]; ++e) {
        const double nd = d + g.dist[e];
        if (nd < dist[g.cols[e]]) {
          dist[g.cols[e]] = nd;
          q.push({nd, g.cols[e]});
        }
      }
    }
    for (std::size_t t = 0; t < targets; ++t) {
      std::size_t dst = pick(rng);
      while (dst == src) dst = pick(rng);
      const double exact = model_distance(m, g.nodes[src], g.nodes[dst]);
      const double rel = std::abs(dist[dst] - exact) / exact;
      worst = std::max(worst, rel);
      sum += rel;
      ++pairs;
    }
  }
  c.values = {{"max_relative_error", worst},
              {"mean_relative_error", sum / static_cast<double>(pairs)},
              {"pairs", pairs},
              {"edge_radius", radius},
              {"mean_degree", static_cast<double>(g.edge_count()) / static_cast<double>(g.size())}};
  c.pass = worst <= 0.02;
  c.detail = "max relative error " + g4(worst) + " over " + std::to_string(pairs) + " pairs";
  return c;
}

// 2. Ball volumes against closed forms at 10⁶ samples.
CriterionResult volumes(std::uint64_t seed) {
  auto c = start(2, "ball volumes");
  struct Case {
    std::string name;
    StratifiedModel model;
    Coords center;
    double r, exact;
  };
  const double a = 0.5;
  const std::vector<Case> cases = {
      {"apex", StratifiedModel::euclidean_cone(LinkSpace::circle(a), 1.0), {0.0}, 0.5, 0.5 * kTwoPi * a * 0.25},
      {"polar_cap", StratifiedModel::s_alpha(2, a), {0.0, 0.0}, 1.0, kTwoPi * a * (1.0 - std::cos(1.0))},
      {"s3", StratifiedModel::round_sphere(3), {1.0, 0.0, 0.0, 0.0}, kPi, model_ball_volume(3, 1.0, kPi)},
      {"s3_r2", StratifiedModel::round_sphere(3), {1.0, 0.0, 0.0, 0.0}, 2.0, model_ball_volume(3, 1.0, 2.0)},
  };
  c.pass = true;
  std::ostringstream d;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto& k = cases[i];
    const auto t0 = std::chrono::steady_clock::now();
    const auto v = ball_volume_mc(k.model, k.center, k.r, 1000000, derive_seed(seed, i));
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    // The radius-π ball is all of S³: every sample lands inside and stderr is 0.
    const double diff = std::abs(v.estimate - k.exact);
    const double z = diff <= 1e-12 * k.exact ? 0.0 : diff / v.stderr_;
    const bool ok = z <= 3.0 && secs < 30.0;
    c.pass = c.pass && ok;
    c.values[k.name] = {{"estimate", v.estimate}, {"exact", k.exact}, {"stderr", v.stderr_}, {"z", z},
                        {"seconds", secs}};
    d << (i ? "; " : "") << k.name << " z=" << fmt("%.2f", z);
  }
  c.detail = d.str();
  return c;
}

// 3. Ahlfors constants over the catalog and apex doubling on 2D cones.
CriterionResult ahlfors(std::uint64_t seed) {
  auto c = start(3, "Ahlfors regularity and doubling");
  c.pass = true;
  double worst_c = 0.0, worst_z = 0.0;
  std::size_t idx = 0;
  std::string failed;
  for (const auto& e : catalog()) {
    const auto& m = e.model;
    const double diam = m.family() == Family::EuclideanCone ? m.truncation_radius() : m.diameter();
    const std::vector<double> radii = {0.05 * diam, 0.1 * diam, 0.2 * diam, 0.3 * diam};
    // Fermi balls are bracketed by round balls of radius r/L, which need more samples.
    const std::size_t n = m.family() == Family::FermiSphere ? 400000 : 100000;
    const auto rep = ahlfors_check(m, base_point(m), radii, n, derive_seed(seed, idx++));
    const double C = rep.diagnostics.count("C") ? rep.diagnostics.at("C") : rep.margin;
    c.values["ahlfors"][e.name] = rep.to_json();
    if (!rep.pass || !std::isfinite(C)) failed += " " + e.name + " (C=" + g4(C) + ")";
    c.pass = c.pass && rep.pass && std::isfinite(C);
    if (std::isfinite(C)) worst_c = std::max(worst_c, C);
    if (m.family() == Family::EuclideanCone && m.dim() == 2) {
      const auto dr = doubling_ratio(m, {0.0}, 0.4 * m.truncation_radius(), 200000, derive_seed(seed, 100 + idx));
      const double z = std::abs(dr.ratio - 4.0) / dr.stderr_;
      c.values["doubling"][e.name] = {{"ratio", dr.ratio}, {"stderr", dr.stderr_}, {"z", z}};
      c.pass = c.pass && z <= 3.0;
      worst_z = std::max(worst_z, z);
    }
  }
  c.detail = "largest fitted C " + g4(worst_c) + "; apex doubling worst |z| " + fmt("%.2f", worst_z);
  if (!failed.empty()) c.detail += "; failed:" + failed;
  return c;
}

// 4. Bishop-Gromov over the α ≤ 2π catalog, and the 3π violation.
CriterionResult bishop_gromov(std::uint64_t seed) {
  auto c = start(4, "Bishop-Gromov monotonicity");
  // 200 checks of 10 pairwise comparisons each: the per-comparison threshold
  // is raised to keep the family-wise false alarm rate below 1%.
  const double z_tol = 4.5;
  c.pass = true;
  std::size_t checks = 0, idx = 0;
  double worst = kInf;
  std::string worst_at;
  for (const auto& e : regular_catalog()) {
    const auto& m = e.model;
    const double diam = m.family() == Family::EuclideanCone ? 2.0 * m.truncation_radius() : m.diameter();
    const std::vector<double> radii = {0.05 * diam, 0.1 * diam, 0.2 * diam, 0.3 * diam, 0.4 * diam};
    auto centers = sample_points(m, 19, derive_seed(seed, 7000 + idx)).points;
    centers.insert(centers.begin(), base_point(m));
    for (const auto& x : centers) {
      const auto r = bishop_gromov_check(m, x, radii, *m.k_reg(), m.dim(), 50000, derive_seed(seed, idx++), z_tol);
      ++checks;
      c.pass = c.pass && r.pass;
      if (r.margin < worst) {
        worst = r.margin;
        worst_at = e.name + " at " + to_string(x);
      }
    }
  }
  c.values["checks"] = checks;
  c.values["worst_margin"] = worst;
  c.values["worst_at"] = worst_at;
  c.values["z_tol"] = z_tol;

  const auto cone = StratifiedModel::euclidean_cone(LinkSpace::circle(1.5), 6.0);
  const std::vector<double> radii = {0.25, 0.5, 1.0, 2.0, 4.0};
  const auto v = bishop_gromov_check(cone, {1.0, 0.0}, radii, 0.0, 2, 200000, derive_seed(seed, 9999));
  const double z = v.diagnostics.at("z_first_last");
  c.values["violation"] = v.to_json();
  c.pass = c.pass && !v.pass && z > 10.0;
  c.detail = std::to_string(checks) + " checks, worst margin " + g4(worst) + " at " + worst_at + " (tol " + g4(z_tol) +
             "); 3π cone z(r=4 vs 0.25) = " + fmt("%.1f", z);
  return c;
}

// 5. λ₁ of S²_α.
CriterionResult lichnerowicz(std::uint64_t seed) {
  auto c = start(5, "Lichnerowicz on S2_alpha");
  c.pass = true;
  std::ostringstream d;
  for (double a : {0.25, 0.5, 1.0}) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto m = StratifiedModel::s_alpha(2, a);
    const auto sp = eigen(graph_of(m, 4000, seed), 4);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const double l1 = sp.eigenvalues.at(1);
    const double rel = std::abs(l1 / 2.0 - 1.0);
    c.pass = c.pass && rel <= 0.07 && secs < 180.0;
    c.values[fmt("a=%g", a)] = {{"lambda1", l1}, {"relative_error", rel}, {"seconds", secs}};
    d << (a == 0.25 ? "" : "; ") << "a=" << a << " λ1=" << fmt("%.4f", l1);
  }
  c.detail = d.str();
  return c;
}

// 6. Weyl ratios, analytic on S² and discrete on S²_{1/4}.
CriterionResult weyl(std::uint64_t seed) {
  auto c = start(6, "Weyl law");
  std::vector<double> values;
  for (int l = 0; l <= 60; ++l)
    for (int k = 0; k <= 2 * l; ++k) values.push_back(l * (l + 1.0));
  const auto s2 = SpectralData::from_eigenvalues(values, 2, 2.0 * kTwoPi);
  const auto an = weyl_ratio(s2, 2.0 * kTwoPi, 2, 49.0 * 50.0);
  const double an_rel = std::abs(an.ratio / an.target - 1.0);
  c.values["analytic"] = {{"ratio", an.ratio}, {"target", an.target}, {"relative_error", an_rel}};

  // S²_{1/4} has eigenvalues 0, 2, 6, 12, then 20, 30, 42 with multiplicity 3.
  // The cut-offs 0.1/ε² = 14 and 25 sit mid-gap, with exact counts 4 and 7.
  const double a = 0.25;
  const auto m = StratifiedModel::s_alpha(2, a);
  std::vector<double> rel;
  for (auto [n, eps] : {std::pair<std::size_t, double>{4000, std::sqrt(0.1 / 14.0)}, {8000, std::sqrt(0.1 / 25.0)}}) {
    const auto g = graph_of(m, n, seed, eps);
    const auto sp = eigen(g, 12);
    const auto w = weyl_ratio(sp, m.volume(), 2, sp.cutoff);
    rel.push_back(std::abs(w.ratio / a - 1.0));
    c.values["discrete"].push_back({{"nodes", n},
                                    {"eps", eps},
                                    {"lambda", w.lambda},
                                    {"count", w.count},
                                    {"ratio", w.ratio},
                                    {"relative_error", rel.back()},
                                    {"eigenvalues", sp.eigenvalues}});
  }
  c.pass = an_rel <= 0.10 && rel[0] <= 0.20 && rel[1] <= 0.20 && rel[1] < rel[0];
  c.detail = "S2 l=49 error " + g4(an_rel) + "; S2_1/4 errors " + g4(rel[0]) + " -> " + g4(rel[1]);
  return c;
}

// 7. Bochner with ψ ≡ 1 on every α ≤ 2π catalog model, plus refinement.
CriterionResult bochner(std::uint64_t seed) {
  auto c = start(7, "Bochner inequality");
  c.pass = true;
  double worst = kInf;
  std::string worst_at;
  std::size_t functions = 0;
  for (const auto& e : regular_catalog()) {
    const auto& m = e.model;
    const auto g = graph_of(m, 4000, seed);
    const auto wide = rescale_graph(m, g, 2.0);
    const auto sp = eigen(g, 8);
    const std::vector<double> one(g.size(), 1.0);
    for (std::size_t k = 0; k < sp.count(); ++k) {
      const auto r = bochner_check(g, wide, sp, sp.eigenvectors[k], one, *m.k_reg(), m.dim());
      ++functions;
      c.pass = c.pass && r.pass;
      const double slack = (r.margin + r.tolerance) / r.tolerance;
      if (slack < worst) {
        worst = slack;
        worst_at = e.name + " f" + std::to_string(k);
      }
    }
  }
  c.values["functions"] = functions;
  c.values["worst_slack"] = worst;
  c.values["worst_at"] = worst_at;

  const auto m = StratifiedModel::s_alpha(2, 0.5);
  std::vector<double> margins;
  for (std::size_t n : {4000u, 8000u}) {
    const auto g = graph_of(m, n, seed);
    const auto sp = eigen(g, 4);
    const std::vector<double> one(g.size(), 1.0);
    margins.push_back(std::abs(bochner_check(g, rescale_graph(m, g, 2.0), sp, sp.eigenvectors[1], one, 1.0, 2.0).margin));
  }
  const double shrink = 1.0 - margins[1] / margins[0];
  c.values["equality_margins"] = margins;
  c.values["shrink"] = shrink;
  c.pass = c.pass && shrink >= 0.30;
  c.detail = std::to_string(functions) + " eigenfunctions, worst slack " + g4(worst) + " (" + worst_at +
             "); equality |margin| shrink " + fmt("%.0f%%", 100.0 * shrink);
  return c;
}

// 8. Cut-off energies on flat cones.
CriterionResult cutoff(std::uint64_t seed) {
  auto c = start(8, "cut-off norms");
  c.pass = true;
  double worst = 0.0;
  for (double a : {0.5, 1.0}) {
    const auto m = StratifiedModel::euclidean_cone(LinkSpace::circle(a), 2.0);
    double prev = kInf;
    for (double eps : {0.4, 0.2, 0.1, 0.05}) {
      const auto g = cutoff_approximation(m, eps, seed);
      const auto r = cutoff_family(m, eps, g);
      const double exact = kTwoPi * a / std::log(1.0 / eps);
      const double rel = std::abs(r.grad_l2_sq / exact - 1.0);
      worst = std::max(worst, rel);
      c.pass = c.pass && rel <= 0.10 && r.grad_l2_sq < prev;
      prev = r.grad_l2_sq;
      c.values[fmt("a=%g", a)].push_back(
          {{"eps", eps}, {"grad_l2_sq", r.grad_l2_sq}, {"exact", exact}, {"nodes", g.size()}, {"lap_l1", r.lap_l1}});
    }
  }
  c.detail = "worst relative error " + g4(worst);
  return c;
}

// 9. Laplacian comparison.
CriterionResult laplacian(std::uint64_t seed) {
  auto c = start(9, "Laplacian comparison");
  struct Case {
    std::string name;
    StratifiedModel model;
    Coords x;
    double k;
    bool equality;
  };
  const std::vector<Case> cases = {
      {"sphere_pole", StratifiedModel::round_sphere(2), {0.0, 0.0, 1.0}, 1.0, true},
      {"cone_apex", StratifiedModel::euclidean_cone(LinkSpace::circle(0.5), 1.0), {0.0}, 0.0, true},
      {"suspension_pole", StratifiedModel::s_alpha(2, 0.5), {0.0, 0.0}, 1.0, false},
  };
  c.pass = true;
  std::ostringstream d;
  for (const auto& k : cases) {
    const auto r = laplacian_comparison_check(k.model, k.x, k.k, 2, graph_of(k.model, 4000, seed));
    const double dev = r.diagnostics.at("max_abs_deviation");
    const bool ok = r.pass && (!k.equality || dev <= r.tolerance);
    c.pass = c.pass && ok;
    c.values[k.name] = r.to_json();
    d << (k.name == cases.front().name ? "" : "; ") << k.name << (ok ? " ok" : " off") << " (margin "
      << g4(r.margin) << ", tol " << g4(r.tolerance) << ")";
  }
  c.detail = d.str();
  return c;
}

// 10. Lévy-Gromov equality cases.
CriterionResult levy_gromov(std::uint64_t seed) {
  auto c = start(10, "Levy-Gromov equality cases");
  const auto s2 = StratifiedModel::round_sphere(2);
  const auto sa = StratifiedModel::s_alpha(2, 0.5);
  const auto hemi = levy_gromov_check(s2, Region::ball({0.0, 0.0, 1.0}, kPi / 2.0), 2, 400000, seed);
  const auto half = levy_gromov_check(sa, Region::pole_sublevel(sa, kPi / 2.0), 2, 400000, derive_seed(seed, 1));
  const double d1 = hemi.diagnostics.at("relative_deviation"), d2 = half.diagnostics.at("relative_deviation");
  c.values = {{"hemisphere", hemi.to_json()}, {"suspension_half", half.to_json()}};
  c.pass = hemi.pass && half.pass && std::abs(d1) <= 0.02 && std::abs(d2) <= 0.02;
  c.detail = "relative deviations " + g4(d1) + ", " + g4(d2);
  return c;
}

// 11. MCP density, apex-hit fractions and the Fermi slice slope.
CriterionResult mcp(std::uint64_t seed) {
  auto c = start(11, "MCP and a.e. convexity");
  bool mcp_ok = true;
  std::ostringstream d;
  for (double a : {0.5, 1.0 / 3.0}) {
    const auto m = StratifiedModel::euclidean_cone(LinkSpace::circle(a), 1.0);
    const auto r = mcp_density_check(m, {0.0}, {0.25, 0.5, 0.75, 1.0}, 200000, seed);
    c.values["mcp"][m.id()] = r.to_json();
    mcp_ok = mcp_ok && r.pass;
  }
  const std::vector<double> ladder = {0.08, 0.04, 0.02, 0.01};
  const auto acute = ae_convexity_estimate(StratifiedModel::euclidean_cone(LinkSpace::circle(0.5), 1.0), 100000,
                                           ladder, derive_seed(seed, 1));
  const auto obtuse = ae_convexity_estimate(StratifiedModel::euclidean_cone(LinkSpace::circle(1.5), 6.0), 100000,
                                            ladder, derive_seed(seed, 2));
  const auto fermi = ae_convexity_estimate(StratifiedModel::fermi_sphere(kPi / 4.0, kPi, 0.3), 100000,
                                           {0.04, 0.02, 0.01}, derive_seed(seed, 3));
  const double h0 = acute.diagnostics.at("apex_hit_fraction");
  const double h1 = obtuse.diagnostics.at("apex_hit_fraction");
  const double slope = fermi.diagnostics.count("slice_slope") ? fermi.diagnostics.at("slice_slope") : 0.0;
  const double want = 1.0 - kTwoPi / (3.0 * kPi);
  c.values["acute"] = acute.to_json();
  c.values["obtuse"] = obtuse.to_json();
  c.values["fermi"] = fermi.to_json();
  c.pass = mcp_ok && h0 == 0.0 && std::abs(h1 / want - 1.0) <= 0.02 && slope >= 1.8;
  c.detail = "MCP " + std::string(mcp_ok ? "within band" : "outside band") + "; hits " + g4(h0) + ", " + g4(h1) +
             " (want " + g4(want) + "); Fermi slope " + fmt("%.3f", slope);
  return c;
}

// 12. Full catalog run; the runtime clause is settled by run_acceptance.
CriterionResult classifier(std::uint64_t seed) {
  auto c = start(12, "classifier end-to-end");
  const auto r = run(catalog_config(seed, 1.0));
  std::size_t off = 0, consistency = 0;
  for (const auto& row : r.rows) {
    if (!row.as_expected()) {
      ++off;
      c.values["unexpected"].push_back(row.kind + " " + row.model_id);
    }
    if (row.kind == "cross_consistency") ++consistency;
  }
  c.values["rows"] = r.rows.size();
  c.values["cross_consistency_rows"] = consistency;
  c.values["exit_code"] = r.exit_code;
  c.pass = r.exit_code == 0 && off == 0 && consistency == catalog().size();
  c.detail = std::to_string(r.rows.size()) + " rows, " + std::to_string(off) + " off expectation, exit " +
             std::to_string(r.exit_code) + (r.message.empty() ? "" : ": " + r.message);
  return c;
}

// 13. Fermi metric expansion.
CriterionResult fermi(std::uint64_t) {
  auto c = start(13, "Fermi metric expansion");
  std::vector<double> grid;
  for (int k = 0; k < 8; ++k) grid.push_back(0.05 * std::pow(0.5, k));
  const auto round = fermi_asymptotic_check(kPi / 2.0, grid);
  const auto tilted = fermi_asymptotic_check(kPi / 4.0, grid);
  const double coef = std::sin(2.0 * kPi / 4.0);
  c.values = {{"gamma_half_pi", round.gamma},
              {"gamma_quarter_pi", tilted.gamma},
              {"lambda_quarter_pi", tilted.lambda},
              {"expected_lambda", coef}};
  c.pass = std::abs(round.gamma - 2.0) <= 0.1 && std::abs(tilted.gamma - 1.0) <= 0.1 &&
           std::abs(tilted.lambda / coef - 1.0) <= 0.05;
  c.detail = "γ(π/2) = " + fmt("%.4f", round.gamma) + ", γ(π/4) = " + fmt("%.4f", tilted.gamma) +
             ", Λ(π/4) = " + fmt("%.4f", tilted.lambda);
  return c;
}

}  // namespace

std::vector<CriterionResult> run_acceptance(std::uint64_t seed, const std::vector<int>& only) {
  const std::vector<std::function<CriterionResult(std::uint64_t)>> all = {
      cone_metric, volumes, ahlfors, bishop_gromov, lichnerowicz, weyl,   bochner,
      cutoff,      laplacian, levy_gromov, mcp,     classifier,  fermi};
  static const char* titles[] = {"cone metric exactness",  "ball volumes",          "Ahlfors regularity and doubling",
                                 "Bishop-Gromov monotonicity", "Lichnerowicz on S2_alpha", "Weyl law",
                                 "Bochner inequality",     "cut-off norms",         "Laplacian comparison",
                                 "Levy-Gromov equality cases", "MCP and a.e. convexity", "classifier end-to-end",
                                 "Fermi metric expansion"};
  std::vector<CriterionResult> out;
  double total = 0.0;
  for (int id = 1; id <= static_cast<int>(all.size()); ++id) {
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    CriterionResult c;
    try {
      c = all[id - 1](derive_seed(seed, static_cast<std::uint64_t>(id)));
    } catch (const std::exception& e) {
      c = start(id, titles[id - 1]);
      c.detail = std::string("error: ") + e.what();
    }
    c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    total += c.seconds;
    if (id == 1 && c.seconds >= 60.0) {
      c.pass = false;
      c.detail += "; runtime over 60 s";
    }
    out.push_back(std::move(c));
  }
  for (auto& c : out)
    if (c.id == 12) {
      c.values["suite_seconds"] = total;
      if (total >= 1200.0) {
        c.pass = false;
        c.detail += "; suite runtime " + fmt("%.0f", total) + " s over 20 min";
      } else {
        c.detail += "; suite runtime " + fmt("%.0f", total) + " s";
      }
    }
  return out;
}

std::string acceptance_line(const CriterionResult& c) {
  char head[32];
  std::snprintf(head, sizeof head, "%s [%2d] ", c.pass ? "PASS" : "FAIL", c.id);
  return head + c.title + ": " + c.detail + " (" + fmt("%.1f", c.seconds) + " s)";
}

std::string acceptance_csv(const std::vector<CriterionResult>& results) {
  auto quote = [](const std::string& s) {
    std::string out = "\"";
    for (char ch : s) {
      if (ch == '"') out += '"';
      out += ch;
    }
    return out + "\"";
  };
  std::ostringstream os;
  os << "id,title,pass,seconds,detail\n";
  for (const auto& c : results)
    os << c.id << ',' << quote(c.title) << ',' << (c.pass ? "pass" : "fail") << ',' << fmt("%.2f", c.seconds) << ','
       << quote(c.detail) << '\n';
  return os.str();
}

}  // namespace stratlab
