#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "stratlab/comparison_suite.hpp"

using namespace stratlab;

namespace {

DiscreteApproximation qmc_graph(const StratifiedModel& m, std::size_t n) {
  return build_graph(m, qmc_cloud(m, n, 1), default_bandwidth(m, n));
}

}  // namespace

TEST_SUITE("comparison_suite") {

TEST_CASE("bishop-gromov: flat cone of angle 3pi grows against the euclidean ratio") {
  const auto c = StratifiedModel::euclidean_cone(LinkSpace::circle(1.5), 6.0);
  const auto r = bishop_gromov_check(c, {1.0, 0.0}, {0.25, 0.5, 1.0, 2.0, 4.0}, 0.0, 2, 200000, 1);
  CHECK_FALSE(r.pass);
  CHECK(r.diagnostics.at("z_first_last") > 10.0);
  // Exact areas from the angular integral.
  const double q0 = oracle::flat_cone_ball_area(3 * kPi, 1.0, 0.25, 6.0) / (kPi * 0.25 * 0.25);
  const double q4 = oracle::flat_cone_ball_area(3 * kPi, 1.0, 4.0, 6.0) / (kPi * 16.0);
  CHECK(q0 == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(q4 > 1.2);
  CHECK(std::abs(r.diagnostics.at("ratio_0") - q0) < 4 * r.diagnostics.at("stderr_0"));
  CHECK(std::abs(r.diagnostics.at("ratio_4") - q4) < 4 * r.diagnostics.at("stderr_4"));
}

TEST_CASE("bishop-gromov: equality and spherical cases pass") {
  const auto apex = StratifiedModel::euclidean_cone(LinkSpace::circle(0.5), 6.0);
  const auto ra = bishop_gromov_check(apex, {0.0}, {0.25, 0.5, 1.0, 2.0, 4.0}, 0.0, 2, 200000, 1);
  CHECK(ra.pass);
  CHECK(ra.diagnostics.at("ratio_2") == doctest::Approx(0.5).epsilon(0.02));

  const auto s2 = StratifiedModel::round_sphere(2);
  const auto rs = bishop_gromov_check(s2, {0, 0, 1}, {0.25, 0.5, 1.0, 2.0, 3.0}, 1.0, 2, 200000, 1);
  CHECK(rs.pass);
  for (int i = 0; i < 5; ++i) CHECK(rs.diagnostics.at("ratio_" + std::to_string(i)) == doctest::Approx(1.0).epsilon(0.02));

  const auto sa = StratifiedModel::s_alpha(2, 0.5);
  CHECK(bishop_gromov_check(sa, {0.3, 1.0}, {0.1, 0.2, 0.4, 0.8, 1.6}, 1.0, 2, 200000, 1).pass);
}

TEST_CASE("bishop-gromov: deterministic in the seed") {
  const auto s2 = StratifiedModel::round_sphere(2);
  const auto a = bishop_gromov_check(s2, {0, 0, 1}, {0.5, 1.0}, 1.0, 2, 20000, 7);
  const auto b = bishop_gromov_check(s2, {0, 0, 1}, {0.5, 1.0}, 1.0, 2, 20000, 7);
  CHECK(a.margin == b.margin);
  CHECK(a.diagnostics == b.diagnostics);
}

TEST_CASE("laplacian comparison: equality cases sit within tolerance of the bound") {
  const auto s2 = StratifiedModel::round_sphere(2);
  const auto g = qmc_graph(s2, 4000);
  const auto r = laplacian_comparison_check(s2, {0, 0, 1}, 1.0, 2, g);
  CHECK(r.pass);
  CHECK(r.diagnostics.at("max_abs_deviation") <= r.tolerance);
  CHECK(r.diagnostics.at("unmasked_nodes") > 1000);

  const auto c = StratifiedModel::euclidean_cone(LinkSpace::circle(0.5), 1.0);
  const auto rc = laplacian_comparison_check(c, {0.0}, 0.0, 2, qmc_graph(c, 4000));
  CHECK(rc.pass);
  CHECK(rc.diagnostics.at("max_abs_deviation") <= rc.tolerance);

  const auto sa = StratifiedModel::s_alpha(2, 0.5);
  const auto rs = laplacian_comparison_check(sa, {0.0, 0.0}, 1.0, 2, qmc_graph(sa, 4000));
  CHECK(rs.pass);
  CHECK(rs.diagnostics.at("max_abs_deviation") <= rs.tolerance);

  // Too much curvature: the bound cot is violated.
  CHECK_FALSE(laplacian_comparison_check(s2, {0, 0, 1}, 4.0, 2, g).pass);
}

TEST_CASE("isoperimetric profile of the round sphere") {
  for (double b : {0.1, 0.25, 0.5, 0.8}) CHECK(sphere_isoperimetric_profile(2, b) == doctest::Approx(std::sqrt(b * (1 - b))).epsilon(1e-8));
  // S³: cap volume fraction (r − sin r cos r)/π, boundary 2 sin²r / π.
  const double r = 1.1;
  const double beta = (r - std::sin(r) * std::cos(r)) / kPi;
  CHECK(sphere_isoperimetric_profile(3, beta) == doctest::Approx(2 * std::sin(r) * std::sin(r) / kPi).epsilon(1e-6));
  CHECK(sphere_isoperimetric_profile(2, 0.3) == doctest::Approx(sphere_isoperimetric_profile(2, 0.7)));
}

TEST_CASE("levy-gromov: caps and the suspension hemisphere") {
  const auto s2 = StratifiedModel::round_sphere(2);
  const auto h = levy_gromov_check(s2, Region::ball({0, 0, 1}, kPi / 2), 2, 400000, 1);
  CHECK(h.pass);
  CHECK(h.diagnostics.at("content") == doctest::Approx(0.5).epsilon(0.02));
  const auto cap = levy_gromov_check(s2, Region::ball({0, 0, 1}, kPi / 3), 2, 400000, 1);
  CHECK(cap.pass);
  CHECK(cap.diagnostics.at("content") == doctest::Approx(std::sqrt(0.25 * 0.75)).epsilon(0.02));

  const auto s = StratifiedModel::suspension(LinkSpace::circle(0.5));
  const auto rs = levy_gromov_check(s, Region::pole_sublevel(s, kPi / 2), 2, 400000, 1);
  CHECK(rs.pass);
  CHECK(rs.diagnostics.at("content") == doctest::Approx(0.5).epsilon(0.02));

  const auto flat = StratifiedModel::euclidean_cone(LinkSpace::circle(1.0), 1.0);
  CHECK_THROWS_AS(levy_gromov_check(flat, Region::ball({0.0}, 0.5), 2, 1000, 1), PreconditionError);
  CHECK_THROWS_AS(levy_gromov_check(s2, Region::empty(), 2, 1000, 1), ArgumentError);
}

TEST_CASE("cut-off: gradient energy approaches 2 pi a / log(1/eps)") {
  const double a = 1.0;
  const auto c = StratifiedModel::euclidean_cone(LinkSpace::circle(a), 2.0);
  double prev_grad = 1e300, prev_lap = 1e300;
  for (double e : {0.4, 0.2, 0.1}) {
    const auto g = cutoff_approximation(c, e, 1);
    const auto r = cutoff_family(c, e, g);
    const double exact = kTwoPi * a / std::log(1 / e);
    CHECK(r.grad_l2_sq == doctest::Approx(exact).epsilon(0.10));
    CHECK(r.grad_l2_sq < prev_grad);
    CHECK(r.lap_l1 < prev_lap);
    prev_grad = r.grad_l2_sq;
    prev_lap = r.lap_l1;
  }
}

TEST_CASE("cut-off: values and arguments") {
  const auto c = StratifiedModel::euclidean_cone(LinkSpace::circle(0.5), 2.0);
  const auto g = cutoff_approximation(c, 0.3, 1);
  const auto r = cutoff_family(c, 0.3, g);
  REQUIRE(r.values.size() == g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double d = g.nodes[i][0];
    const double want = std::clamp(std::log(d / 0.09) / std::log(1 / 0.3), 0.0, 1.0);
    CHECK(r.values[i] == doctest::Approx(want).epsilon(1e-9));
  }
  CHECK_THROWS_AS(cutoff_family(c, 1.5, g), ArgumentError);
  CHECK_THROWS_AS(cutoff_family(c, 0.0, g), ArgumentError);
  CHECK_THROWS_AS(cutoff_family(c, 0.3, g, 0.2), ArgumentError);

  // No singular set: ρ ≡ 1 and both norms vanish.
  const auto s2 = StratifiedModel::round_sphere(2);
  const auto rs = cutoff_family(s2, 0.2, qmc_graph(s2, 1000));
  CHECK(rs.grad_l2_sq == 0.0);
  CHECK(rs.lap_l1 == 0.0);
  for (double v : rs.values) CHECK(v == 1.0);
}

TEST_CASE("bochner: constants, eigenfunctions and refinement") {
  const auto m = StratifiedModel::s_alpha(2, 0.5);
  double coarse = 0.0;
  for (std::size_t n : {4000u, 8000u}) {
    const auto g = qmc_graph(m, n);
    const auto wide = rescale_graph(m, g, 2.0);
    const auto sp = eigen(g, 8);
    const std::vector<double> one(g.size(), 1.0);
    const auto r = bochner_check(g, wide, sp, sp.eigenvectors[1], one, 1.0, 2.0);
    CHECK(r.pass);
    for (std::size_t k = 0; k < 8; ++k) CHECK(bochner_check(g, wide, sp, sp.eigenvectors[k], one, 1.0, 2.0).pass);
    CHECK(bochner_check(g, wide, sp, sp.eigenvectors[1], bochner_test_function(sp, 2), 1.0, 2.0).pass);
    if (n == 4000) {
      coarse = r.margin;
      const std::vector<double> c(g.size(), 3.0);
      const auto rc = bochner_check(g, wide, sp, c, one, 1.0, 2.0);
      CHECK(rc.margin == doctest::Approx(0.0).epsilon(1e-9));
      CHECK(rc.pass);
      auto neg = one;
      neg[0] = -1.0;
      CHECK_THROWS_AS(bochner_check(g, wide, sp, sp.eigenvectors[1], neg, 1.0, 2.0), PreconditionError);
      std::vector<double> spike(g.size(), 0.0);
      spike[0] = 1.0;
      CHECK_THROWS_AS(bochner_check(g, wide, sp, spike, one, 1.0, 2.0), PreconditionError);
    } else {
      // First eigenfunctions are equality cases; the defect shrinks with N.
      CHECK(std::abs(r.margin) <= 0.7 * std::abs(coarse));
    }
  }
}

TEST_CASE("bochner: thin spindle bias is caught by the bandwidth comparison") {
  const auto m = StratifiedModel::s_alpha(2, 0.25);
  const auto g = qmc_graph(m, 4000);
  const auto wide = rescale_graph(m, g, 2.0);
  const auto sp = eigen(g, 4);
  const std::vector<double> one(g.size(), 1.0);
  const auto r = bochner_check(g, wide, sp, sp.eigenvectors[1], one, 1.0, 2.0);
  CHECK(r.pass);
  // The exact margin is 0, so |margin| is the true error here; the heat term
  // alone explains about a tenth of it.
  CHECK(r.diagnostics.at("heat_estimate") < 0.2 * std::abs(r.margin));
  CHECK(r.diagnostics.at("richardson_estimate") > 0.4 * std::abs(r.margin));
  CHECK_THROWS_AS(bochner_check(g, g, sp, sp.eigenvectors[1], one, 1.0, 2.0), ArgumentError);
}

TEST_CASE("bochner test function") {
  const auto m = StratifiedModel::round_sphere(2);
  const auto g = qmc_graph(m, 1000);
  const auto sp = eigen(g, 4);
  const auto psi = bochner_test_function(sp, 1, 0.5);
  double lo = 1e300, hi = -1e300;
  for (double v : psi) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(lo == doctest::Approx(1.0));
  CHECK(hi <= 1.5 + 1e-12);
}

TEST_CASE("mcp: apex contraction passes, obtuse cone fails") {
  const auto c = StratifiedModel::euclidean_cone(LinkSpace::circle(0.75), 1.0);
  const auto r = mcp_density_check(c, {0.0}, {0.25, 0.5, 0.75, 1.0}, 50000, 1);
  CHECK(r.pass);
  CHECK(r.diagnostics.at("C") == doctest::Approx(1.0).epsilon(0.15));

  const auto c3 = StratifiedModel::euclidean_cone(LinkSpace::circle(1.5), 1.0);
  const auto r3 = mcp_density_check(c3, {0.5, 0.0}, {0.25, 0.5, 0.75, 1.0}, 50000, 1);
  CHECK_FALSE(r3.pass);

  CHECK_THROWS_AS(mcp_density_check(c, {0.0}, {0.0, 1.0}, 1000, 1), ArgumentError);
  CHECK_THROWS_AS(mcp_density_check(StratifiedModel::round_sphere(2), {0, 0, 1}, {0.5}, 1000, 1), UnsupportedModelError);
}

TEST_CASE("a.e. convexity: apex hits on flat cones") {
  const std::vector<double> ladder{0.2, 0.1, 0.05, 0.025};
  const auto acute = ae_convexity_estimate(StratifiedModel::euclidean_cone(LinkSpace::circle(0.75), 1.0), 50000, ladder, 1);
  CHECK(acute.pass);
  CHECK(acute.diagnostics.at("apex_hit_fraction") == 0.0);
  CHECK(acute.diagnostics.at("slice_slope") > 1.8);

  // Two uniform link angles on a circle of length 3π are within π of each
  // other, measured the short way, with probability 2/3.
  const auto obtuse = ae_convexity_estimate(StratifiedModel::euclidean_cone(LinkSpace::circle(1.5), 1.0), 50000, ladder, 1);
  CHECK_FALSE(obtuse.pass);
  CHECK(obtuse.diagnostics.at("apex_hit_fraction") == doctest::Approx(1.0 / 3.0).epsilon(0.06));

  const auto sa = ae_convexity_estimate(StratifiedModel::s_alpha(2, 0.5), 50000, ladder, 1);
  CHECK(sa.pass);
  CHECK(sa.diagnostics.at("apex_hit_fraction") == 0.0);
}

TEST_CASE("a.e. convexity: fermi sphere slice fraction scales like eps^2") {
  const std::vector<double> ladder{0.2, 0.1, 0.05, 0.025};
  const auto r = ae_convexity_estimate(StratifiedModel::fermi_sphere(kPi / 4, kPi, 0.3), 100000, ladder, 1);
  CHECK(r.pass);
  CHECK(r.diagnostics.at("slice_slope") == doctest::Approx(2.0).epsilon(0.1));
  CHECK_THROWS_AS(ae_convexity_estimate(StratifiedModel::s_alpha(3, 0.5), 10, ladder, 1), UnsupportedModelError);
  const auto smooth = ae_convexity_estimate(StratifiedModel::round_sphere(3), 10, ladder, 1);
  CHECK(smooth.pass);
  CHECK(smooth.diagnostics.at("slice_fraction_3") == 0.0);
}

TEST_CASE("suspension geodesics") {
  const auto s = StratifiedModel::suspension(LinkSpace::circle(0.5));
  const Coords p{1.0, 0.2}, q{2.0, 2.5};
  const auto a = suspension_circle_geodesic_at(s, p, q, 0.0);
  const auto b = suspension_circle_geodesic_at(s, p, q, 1.0);
  CHECK(model_distance(s, a, p) < 1e-12);
  CHECK(model_distance(s, b, q) < 1e-12);
  const double d = model_distance(s, p, q);
  double len = 0.0;
  Coords prev = a;
  for (int i = 1; i <= 200; ++i) {
    const auto x = suspension_circle_geodesic_at(s, p, q, i / 200.0);
    len += model_distance(s, prev, x);
    prev = x;
  }
  CHECK(len == doctest::Approx(d).epsilon(1e-6));
  const auto mid = suspension_circle_geodesic_at(s, p, q, 0.5);
  CHECK(model_distance(s, p, mid) == doctest::Approx(d / 2).epsilon(1e-9));

  // Link separation beyond π: the geodesic runs through a pole.
  const auto wide = StratifiedModel::suspension(LinkSpace::circle(1.5));
  const Coords u{1.0, 0.0}, v{1.2, 3.5};
  CHECK(model_distance(wide, u, v) == doctest::Approx(2.2));
  const auto pole = suspension_circle_geodesic_at(wide, u, v, 1.0 / 2.2);
  CHECK(pole[0] == doctest::Approx(0.0).epsilon(1e-9));
}

}  // TEST_SUITE
