#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "stratlab/rcd_classifier.hpp"

using namespace stratlab;

namespace {

bool mentions(const CurvatureVerdict& v, const std::string& text) {
  return std::any_of(v.reasons.begin(), v.reasons.end(),
                     [&](const std::string& r) { return r.find(text) != std::string::npos; });
}

std::vector<StratifiedModel> sample_models() {
  return {StratifiedModel::round_sphere(2),
          StratifiedModel::round_sphere(4),
          StratifiedModel::s_alpha(2, 0.5),
          StratifiedModel::s_alpha(3, 1.0),
          StratifiedModel::s_alpha(2, 1.3),
          StratifiedModel::euclidean_cone(LinkSpace::circle(0.5), 1.0),
          StratifiedModel::euclidean_cone(LinkSpace::circle(1.5), 1.0),
          StratifiedModel::euclidean_cone(LinkSpace::suspension(LinkSpace::circle(0.75)), 1.0),
          StratifiedModel::euclidean_cone(LinkSpace::round_sphere(2), 1.0)};
}

}  // namespace

TEST_SUITE("rcd_classifier") {

TEST_CASE("classify: suspensions with angle at most 2pi") {
  for (double a : {0.1, 0.5, 0.9, 1.0})
    for (int n : {2, 3, 4}) {
      const auto v = classify(StratifiedModel::s_alpha(n, a), n - 1, n);
      CHECK(v.is_rcd);
      CHECK_FALSE(v.indeterminate);
      CHECK(v.reasons.empty());
      REQUIRE(v.angle_report.size() == 1);
      CHECK(v.angle_report[0].within_2pi);
    }
}

TEST_CASE("classify: cone of angle 3pi fails on the angle") {
  const auto v = classify(StratifiedModel::euclidean_cone(LinkSpace::circle(1.5), 1.0), 0, 2);
  CHECK_FALSE(v.is_rcd);
  CHECK_FALSE(v.indeterminate);
  CHECK(mentions(v, "angle 3π > 2π"));
  CHECK(v.dimension_check);
}

TEST_CASE("classify: dimension clause") {
  const auto v = classify(StratifiedModel::round_sphere(2), 1, 1);
  CHECK_FALSE(v.is_rcd);
  CHECK_FALSE(v.dimension_check);
  CHECK(mentions(v, "dimension 2 > N"));
  CHECK(classify(StratifiedModel::round_sphere(2), 1, 2).is_rcd);
  CHECK(classify(StratifiedModel::round_sphere(2), 1, 2.5).is_rcd);
}

TEST_CASE("classify: curvature clause") {
  const auto v = classify(StratifiedModel::round_sphere(3), 2.5, 3);
  CHECK_FALSE(v.is_rcd);
  CHECK(mentions(v, "K_reg = 2 < K = 2.5"));
  CHECK(classify(StratifiedModel::euclidean_cone(LinkSpace::circle(0.5), 1.0), -3, 2).is_rcd);
  CHECK_FALSE(classify(StratifiedModel::euclidean_cone(LinkSpace::circle(0.5), 1.0), 0.01, 2).is_rcd);
}

TEST_CASE("classify: angle exactly 2pi passes") {
  CHECK(classify(StratifiedModel::euclidean_cone(LinkSpace::circle(1.0), 1.0), 0, 2).is_rcd);
  CHECK(classify(StratifiedModel::s_alpha(2, 1.0), 1, 2).is_rcd);
  CHECK_FALSE(classify(StratifiedModel::s_alpha(2, 1.0 + 1e-9), 1, 2).is_rcd);
}

TEST_CASE("classify: strata of codimension above two carry no angle condition") {
  // The apex of a 3D cone over S²_α is a codimension-3 stratum.
  const auto m = StratifiedModel::euclidean_cone(LinkSpace::suspension(LinkSpace::circle(0.75)), 1.0);
  const auto v = classify(m, 0, 3);
  CHECK(v.is_rcd);
  CHECK(v.angle_report.size() == 1);
  // Over a wide S²_α the codimension-2 edge fails, not the apex.
  const auto w = StratifiedModel::euclidean_cone(LinkSpace::suspension(LinkSpace::circle(1.25)), 1.0);
  const auto vw = classify(w, 0, 3);
  CHECK_FALSE(vw.is_rcd);
  CHECK(vw.angle_report.size() == 1);
  CHECK(mentions(vw, "angle 2.5π > 2π"));
}

TEST_CASE("classify: fermi sphere is indeterminate unless a clause fails") {
  const auto small = classify(StratifiedModel::fermi_sphere(kPi / 4, kPi, 0.3), 2, 3);
  CHECK_FALSE(small.is_rcd);
  CHECK(small.indeterminate);
  REQUIRE(small.ricci_estimate.has_value());
  CHECK(std::isfinite(*small.ricci_estimate));
  CHECK(mentions(small, "Ricci"));

  const auto large = classify(StratifiedModel::fermi_sphere(kPi / 4, 3 * kPi, 0.3), 2, 3);
  CHECK_FALSE(large.is_rcd);
  CHECK_FALSE(large.indeterminate);
  CHECK(mentions(large, "angle 3π > 2π"));

  const auto low_n = classify(StratifiedModel::fermi_sphere(kPi / 4, kPi, 0.3), 2, 2);
  CHECK_FALSE(low_n.indeterminate);
  CHECK_FALSE(low_n.dimension_check);
}

TEST_CASE("classify: verdict invariant and reasons") {
  for (const auto& m : sample_models())
    for (double K : {-1.0, 0.0, 0.5, 1.0, 2.0, 3.0})
      for (double N : {1.0, 2.0, 2.5, 3.0, 4.0, 10.0}) {
        const auto v = classify(m, K, N);
        bool angles = true;
        for (const auto& s : m.strata())
          if (s.codim == 2 && s.angle > kTwoPi * (1 + 1e-12)) angles = false;
        const bool expected = m.dim() <= N && *m.k_reg() >= K && angles;
        CHECK(v.is_rcd == expected);
        if (!v.is_rcd) CHECK_FALSE(v.reasons.empty());
      }
}

TEST_CASE("classify: monotone in K and N") {
  const std::vector<double> Ks{-2, -1, 0, 0.5, 1, 1.5, 2, 3};
  const std::vector<double> Ns{1, 2, 2.5, 3, 4, 6};
  for (const auto& m : sample_models())
    for (std::size_t i = 0; i < Ks.size(); ++i)
      for (std::size_t j = 0; j < Ns.size(); ++j) {
        if (!classify(m, Ks[i], Ns[j]).is_rcd) continue;
        for (std::size_t ii = 0; ii <= i; ++ii)
          for (std::size_t jj = j; jj < Ns.size(); ++jj) CHECK(classify(m, Ks[ii], Ns[jj]).is_rcd);
      }
}

TEST_CASE("classify: arguments") {
  CHECK_THROWS_AS(classify(StratifiedModel::round_sphere(2), std::nan(""), 2), ArgumentError);
  CHECK_THROWS_AS(alexandrov_classify(StratifiedModel::round_sphere(2), kInf), ArgumentError);
}

TEST_CASE("alexandrov") {
  CHECK(alexandrov_classify(StratifiedModel::euclidean_cone(LinkSpace::circle(0.7), 1.0), 0).is_rcd);
  CHECK(alexandrov_classify(StratifiedModel::euclidean_cone(LinkSpace::circle(1.0), 1.0), 0).is_rcd);
  const auto big = alexandrov_classify(StratifiedModel::euclidean_cone(LinkSpace::circle(1.5), 1.0), 0);
  CHECK_FALSE(big.is_rcd);
  CHECK(mentions(big, "angle 3π"));
  CHECK(alexandrov_classify(StratifiedModel::suspension(LinkSpace::circle(0.5)), 1).is_rcd);
  CHECK_FALSE(alexandrov_classify(StratifiedModel::suspension(LinkSpace::circle(0.5)), 1.1).is_rcd);
  CHECK_FALSE(alexandrov_classify(StratifiedModel::euclidean_cone(LinkSpace::circle(0.5), 1.0), 0.1).is_rcd);
  const auto f = alexandrov_classify(StratifiedModel::fermi_sphere(kPi / 4, kPi, 0.3), 1);
  CHECK(f.indeterminate);
  CHECK_FALSE(alexandrov_classify(StratifiedModel::fermi_sphere(kPi / 4, 3 * kPi, 0.3), 1).indeterminate);
}

TEST_CASE("verdict json") {
  const auto j = classify(StratifiedModel::euclidean_cone(LinkSpace::circle(1.5), 1.0), 0, 2).to_json();
  CHECK(j.at("schema") == 1);
  CHECK(j.at("is_rcd") == false);
  CHECK(j.at("angle_report").size() == 1);
  CHECK(j.at("angle_report")[0].at("within_2pi") == false);
  CHECK(j.at("reasons").size() >= 1);
  CHECK_FALSE(j.contains("ricci_estimate"));
  CHECK(classify(StratifiedModel::fermi_sphere(kPi / 4, kPi, 0.3), 2, 3).to_json().contains("ricci_estimate"));
}

TEST_CASE("catalog: expected verdicts match the classifier") {
  const auto cat = catalog();
  CHECK(cat.size() >= 12);
  bool suspension = false, orbifold = false, fermi_large = false;
  for (const auto& e : cat) {
    REQUIRE_FALSE(e.queries.empty());
    for (const auto& q : e.queries) {
      const auto v = classify(e.model, q.K, q.N);
      INFO(e.name, " K=", q.K, " N=", q.N);
      CHECK(v.is_rcd == q.expect_rcd);
      CHECK(v.indeterminate == q.expect_indeterminate);
    }
    const auto a = alexandrov_classify(e.model, e.alexandrov_k);
    CHECK(a.is_rcd == e.expect_alexandrov);
    CHECK(a.indeterminate == e.expect_alexandrov_indeterminate);
    // Every model with an angle above 2π carries a designated check expected to fail.
    const auto v = classify(e.model, e.queries[0].K, e.queries[0].N);
    const bool big_angle = std::any_of(v.angle_report.begin(), v.angle_report.end(),
                                       [](const AngleEntry& x) { return !x.within_2pi; });
    const bool designated = std::any_of(e.checks.begin(), e.checks.end(),
                                        [](const CatalogCheck& c) { return c.designated && !c.expect_pass; });
    CHECK(big_angle == designated);
    if (e.name.rfind("spherical suspension S2_alpha", 0) == 0) suspension = suspension || v.is_rcd;
    if (e.name.rfind("orbifold cone", 0) == 0) orbifold = orbifold || v.is_rcd;
    if (e.model.family() == Family::FermiSphere && e.model.fermi_alpha() > kTwoPi) fermi_large = !v.is_rcd;
  }
  CHECK(suspension);
  CHECK(orbifold);
  CHECK(fermi_large);
}

TEST_CASE("catalog markdown") {
  const auto cat = catalog();
  const auto md = catalog_markdown(cat);
  CHECK(static_cast<std::size_t>(std::count(md.begin(), md.end(), '\n')) == cat.size() + 2);
  CHECK(md.find("flat cone angle 3pi") != std::string::npos);
  CHECK(md.find("bishop_gromov fail*") != std::string::npos);
}

TEST_CASE("cross consistency over the catalog, reduced samples") {
  for (const auto& e : catalog()) {
    std::vector<CheckReport> reports;
    for (const auto& c : e.checks) reports.push_back(run_catalog_check(e.model, c, 1, 0.25));
    const auto r = cross_consistency(e, reports);
    INFO(e.name);
    CHECK(r.pass);
  }
}

TEST_CASE("cross consistency flags contradictions") {
  auto cat = catalog();
  const auto it = std::find_if(cat.begin(), cat.end(), [](const CatalogEntry& e) { return e.name == "flat cone angle 3pi"; });
  REQUIRE(it != cat.end());
  std::vector<CheckReport> reports;
  for (const auto& c : it->checks) reports.push_back(run_catalog_check(it->model, c, 1, 0.25));
  CHECK(cross_consistency(*it, reports).pass);

  // Designated failures that pass instead leave the angle undetected.
  auto forged = reports;
  for (auto& r : forged) r.pass = true;
  const auto bad = cross_consistency(*it, forged);
  CHECK_FALSE(bad.pass);
  bool undetected = false;
  for (const auto& [k, v] : bad.notes)
    if (v.find("not detected") != std::string::npos) undetected = true;
  CHECK(undetected);

  // A true verdict with a failing check.
  auto sphere = cat.front();
  std::vector<CheckReport> fake(sphere.checks.size());
  for (auto& r : fake) r.pass = true;
  CHECK(cross_consistency(sphere, fake).pass);
  fake[0].pass = false;
  CHECK_FALSE(cross_consistency(sphere, fake).pass);

  CHECK_THROWS_AS(cross_consistency(sphere, {}), ArgumentError);
  CHECK_THROWS_AS(run_catalog_check(sphere.model, {"nonsense", json::object(), true, false}, 1), ArgumentError);
}

TEST_CASE("catalog checks are deterministic") {
  const auto cat = catalog();
  const auto& e = cat.front();
  const auto a = run_catalog_check(e.model, e.checks[0], 3, 0.1);
  const auto b = run_catalog_check(e.model, e.checks[0], 3, 0.1);
  CHECK(a.to_json() == b.to_json());
}

}  // TEST_SUITE
