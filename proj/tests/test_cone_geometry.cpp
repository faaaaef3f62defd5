#include "doctest.h"
#include "oracles.hpp"
#include "stratlab/cone_geometry.hpp"

using namespace stratlab;

TEST_SUITE("cone_geometry") {

TEST_CASE("cone_distance examples") {
  const auto c = LinkSpace::circle(0.5);
  CHECK(cone_distance({1.0, {0.0}}, {1.0, {0.5 * kPi}}, c) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
  CHECK(cone_distance({0.0, {}}, {2.5, {0.3}}, c) == doctest::Approx(2.5));
  const auto wide = LinkSpace::circle(1.5);
  // Separation ≥ π: through the apex.
  CHECK(cone_distance({1.0, {0.0}}, {2.0, {1.2 * kPi}}, wide) == doctest::Approx(3.0));
  CHECK_THROWS_AS(cone_distance({-1.0, {0.0}}, {1.0, {0.0}}, c), DomainError);
}

TEST_CASE("suspension_distance examples") {
  const auto c = LinkSpace::circle(0.5);
  CHECK(suspension_distance({0.0, {0.0}}, {kPi, {0.1}}, c) == doctest::Approx(kPi));
  CHECK(suspension_distance({0.5 * kPi, {0.0}}, {0.5 * kPi, {0.5 * kPi}}, c) == doctest::Approx(0.5 * kPi));
  // Round case agrees with the spherical law of cosines.
  const auto c1 = LinkSpace::circle(1.0);
  Rng rng(9, 0);
  for (int i = 0; i < 500; ++i) {
    const double t1 = rng.uniform(0, kPi), t2 = rng.uniform(0, kPi);
    const double s1 = rng.uniform(0, kTwoPi), s2 = rng.uniform(0, kTwoPi);
    const std::array<double, 3> a = {std::sin(t1) * std::cos(s1), std::sin(t1) * std::sin(s1), std::cos(t1)};
    const std::array<double, 3> b = {std::sin(t2) * std::cos(s2), std::sin(t2) * std::sin(s2), std::cos(t2)};
    CHECK(suspension_distance({t1, {s1}}, {t2, {s2}}, c1) == doctest::Approx(oracle::sphere_distance(a, b)).epsilon(1e-9));
  }
  CHECK_THROWS_AS(suspension_distance({4.0, {0.0}}, {0.0, {0.0}}, c), DomainError);
}

TEST_CASE("flat cone distance matches a grid shortest path") {
  for (double a : {0.5, 1.5}) {
    CAPTURE(a);
    const double alpha = kTwoPi * a;
    const auto link = LinkSpace::circle(a);
    auto w = [](double r) { return r; };
    // Grid coordinates (r, planar angle) with angle period alpha.
    const int ns = static_cast<int>(std::lround(200 * a));
    const double d1 = oracle::grid_geodesic(w, 0.0, 2.0, alpha, 200, 2 * ns, {1.0, 0.0}, {1.5, 0.4 * alpha});
    CHECK(d1 == doctest::Approx(cone_distance({1.0, {0.0}}, {1.5, {0.4 * alpha}}, link)).epsilon(0.015));
    const double d2 = oracle::grid_geodesic(w, 0.0, 2.0, alpha, 200, 2 * ns, {1.0, 0.0}, {0.8, 0.15 * alpha});
    CHECK(d2 == doctest::Approx(cone_distance({1.0, {0.0}}, {0.8, {0.15 * alpha}}, link)).epsilon(0.015));
  }
}

TEST_CASE("model_distance dispatch") {
  const auto f = StratifiedModel::fermi_sphere(0.5 * kPi, kPi, 0.4);
  CHECK_THROWS_AS(model_distance(f, {1, 0, 0, 0}, {0, 1, 0, 0}), UnsupportedModelError);
  const auto s2 = StratifiedModel::round_sphere(2);
  CHECK(model_distance(s2, {1, 0, 0}, {0, 1, 0}) == doctest::Approx(0.5 * kPi));
  CHECK(model_distance(s2, {1, 0, 0}, {-1, 0, 0}) == doctest::Approx(kPi));
}

TEST_CASE("fermi core distance") {
  const double beta = 0.25 * kPi, alpha = 3 * kPi, eb = 0.3;
  const auto f = StratifiedModel::fermi_sphere(beta, alpha, eb);
  const double c = alpha / kTwoPi;
  auto pt = [&](double r, double t, double p) {
    const auto x = fermi_embed(beta, r, t, p);
    return Coords(std::span<const double>(x));
  };

  // Fixed θ: a flat cone of angle α.
  const auto d = fermi_core_distance(f, pt(0.05, 1.0, 0.2), pt(0.04, 1.0, 2.9));
  REQUIRE(d.has_value());
  CHECK(*d == doctest::Approx(cone_distance({0.05, {c * 0.2}}, {0.04, {c * 2.9}}, LinkSpace::circle(c))));
  CHECK(model_distance(f, pt(0.05, 1.0, 0.2), pt(0.04, 1.0, 2.9)) == doctest::Approx(*d));
  CHECK(*fermi_core_distance(f, pt(0.04, 1.0, 2.9), pt(0.05, 1.0, 0.2)) == doctest::Approx(*d));

  // Short steps match the blended metric tensor.
  const double r = 0.06, t = 0.7, ph = 1.3;
  const std::array<double, 3> step{1e-4, -2e-4, 3e-4};
  const auto g = fermi_blend_metric(f, r + step[0] / 2, t + step[1] / 2, ph + step[2] / 2);
  double q = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) q += g.at(i, j) * step[static_cast<std::size_t>(i)] * step[static_cast<std::size_t>(j)];
  const auto ds = fermi_core_distance(f, pt(r, t, ph), pt(r + step[0], t + step[1], ph + step[2]));
  REQUIRE(ds.has_value());
  CHECK(*ds == doctest::Approx(std::sqrt(q)).epsilon(1e-3));

  // Outside the blend core, or too far apart to stay in it.
  CHECK_FALSE(fermi_core_distance(f, pt(0.2, 1.0, 0.0), pt(0.05, 1.0, 0.0)).has_value());
  CHECK_FALSE(fermi_core_distance(f, pt(0.1, 0.0, 0.0), pt(0.1, 2.0, 0.0)).has_value());
}

TEST_CASE("geodesic_hits_apex") {
  const auto c = LinkSpace::circle(1.5);
  CHECK(geodesic_hits_apex(c, {0.0}, {kPi}));
  CHECK(geodesic_hits_apex(c, {0.0}, {1.3 * kPi}));
  CHECK_FALSE(geodesic_hits_apex(c, {0.0}, {0.9 * kPi}));
  CHECK_FALSE(geodesic_hits_apex(LinkSpace::circle(0.4), {0.0}, {0.4 * kPi}));
}

TEST_CASE("unfolding agrees with the cone metric") {
  Rng rng(21, 0);
  for (double a : {0.25, 0.5, 1.0, 1.5}) {
    const double alpha = kTwoPi * a;
    const auto link = LinkSpace::circle(a);
    int checked = 0;
    for (int i = 0; i < 2000; ++i) {
      const ConePoint p{rng.uniform(0.01, 3.0), {rng.uniform(0, alpha)}};
      const ConePoint q{rng.uniform(0.01, 3.0), {rng.uniform(0, alpha)}};
      const double off = circle_offset(alpha, p.y[0], q.y[0]);
      if (std::abs(off) >= kPi) {
        CHECK_THROWS_AS(unfold_flat_cone(alpha, p, q), PreconditionError);
        CHECK(flat_cone_geodesic_apex_distance(alpha, p, q) == 0.0);
        continue;
      }
      ++checked;
      const auto g = unfold_flat_cone(alpha, p, q);
      // Planar law of cosines with the unfolded angle.
      const double law = std::sqrt(p.r * p.r + q.r * q.r - 2 * p.r * q.r * std::cos(off));
      CHECK(g.length == doctest::Approx(law).epsilon(1e-12));
      CHECK(g.length == doctest::Approx(cone_distance(p, q, link)).epsilon(1e-12));
      // Endpoints and constant speed.
      const auto e0 = g.at(0.0), e1 = g.at(1.0);
      CHECK(cone_distance(e0, p, link) < 1e-9);
      CHECK(cone_distance(e1, q, link) < 1e-9);
      const auto mid = g.at(0.5);
      CHECK(cone_distance(p, mid, link) == doctest::Approx(0.5 * g.length).epsilon(1e-9));
      // Distance to the apex stays above the half-plane bound.
      CHECK(g.min_radius() >= std::min(p.r, q.r) * std::cos(0.5 * std::abs(off)) - 1e-12);
    }
    CHECK(checked > 100);
  }
}

TEST_CASE("apex geodesics are two radial segments") {
  const double alpha = 3 * kPi;
  const ConePoint p{1.0, {0.0}}, q{2.0, {1.5 * kPi}};
  CHECK(flat_cone_geodesic_at(alpha, p, q, 1.0 / 3.0).r == doctest::Approx(0.0).epsilon(1e-12));
  const auto late = flat_cone_geodesic_at(alpha, p, q, 2.0 / 3.0);
  CHECK(late.r == doctest::Approx(1.0));
  CHECK(late.y[0] == doctest::Approx(1.5 * kPi));
  const auto csv = unfold_flat_cone(kPi, {1.0, {0.0}}, {1.0, {0.5}}).to_csv(4);
  CHECK(csv.rfind("t,r,s\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);
}

TEST_CASE("perturbing a curve off the apex") {
  const auto cone = StratifiedModel::euclidean_cone(LinkSpace::circle(1.5), 4.0);
  const Coords A{1.0, 0.0}, O{0.0}, B{2.0, 1.2 * kPi};
  const auto curve = PolygonalCurve::through(cone, {A, O, B});
  CHECK(curve.length() == doctest::Approx(3.0));
  for (double eps : {0.1, 0.01, 0.001}) {
    const auto pert = perturb_curve_off_singular(cone, curve, eps);
    CHECK(pert.curve.length() <= curve.length() + eps + 1e-12);
    for (const auto& x : pert.curve.points) CHECK(cone.distance_to_singular(x) > 0.0);
    REQUIRE(pert.detour_radii.size() == 1);
    CHECK(pert.detour_radii[0] == doctest::Approx(eps / (1.2 * kPi)));
  }
  // Halving ε halves the detour radius.
  const double r1 = perturb_curve_off_singular(cone, curve, 0.02).detour_radii[0];
  const double r2 = perturb_curve_off_singular(cone, curve, 0.01).detour_radii[0];
  CHECK(r2 == doctest::Approx(0.5 * r1).epsilon(1e-12));
  // Suspensions: detour near a pole.
  const auto sus = StratifiedModel::s_alpha(2, 0.5);
  const auto c2 = PolygonalCurve::through(sus, {Coords{1.0, 0.0}, Coords{0.0, 0.0}, Coords{1.0, 0.4 * kPi}});
  const auto p2 = perturb_curve_off_singular(sus, c2, 0.01);
  CHECK(p2.curve.length() <= c2.length() + 0.01 + 1e-12);
  for (const auto& x : p2.curve.points) CHECK(sus.distance_to_singular(x) > 0.0);

  CHECK_THROWS_AS(perturb_curve_off_singular(cone, curve, 0.0), ArgumentError);
  CHECK_THROWS_AS(perturb_curve_off_singular(cone, PolygonalCurve::through(cone, {O, B}), 0.1), PreconditionError);
  const auto c3 = StratifiedModel::euclidean_cone(LinkSpace::suspension(LinkSpace::circle(0.5)), 1.0);
  CHECK_THROWS_AS(perturb_curve_off_singular(c3, PolygonalCurve{}, 0.1), UnsupportedModelError);
}

TEST_CASE("comparison_angle examples") {
  CHECK(comparison_angle(0.0, 3.0, 4.0, 5.0) == doctest::Approx(0.5 * kPi));
  CHECK(comparison_angle(1.0, 0.5 * kPi, 0.5 * kPi, 0.5 * kPi) == doctest::Approx(0.5 * kPi));
  CHECK(comparison_angle(0.0, 1.0, 1.0, 2.0) == doctest::Approx(kPi));
  CHECK(comparison_angle(-1.0, 1.0, 1.0, 1.0) < kPi / 3.0);
  CHECK(comparison_angle(1.0, 1.0, 1.0, 1.0) > kPi / 3.0);
  CHECK_THROWS_AS(comparison_angle(0.0, 0.0, 1.0, 1.0), PreconditionError);
}

TEST_CASE("quadruple comparison") {
  // Three points a third of the way around the α = 3π cone, seen from the apex.
  const auto wide = StratifiedModel::euclidean_cone(LinkSpace::circle(1.5), 2.0);
  const auto r = quadruple_comparison(wide, {0.0}, {1.0, 0.0}, {1.0, kPi}, {1.0, 2.0 * kPi}, 0.0);
  CHECK_FALSE(r.pass);
  CHECK(r.margin == doctest::Approx(-kPi));
  // Smooth sphere, random quadruples.
  const auto s2 = StratifiedModel::round_sphere(2);
  Rng rng(4, 0);
  auto pt = [&] {
    const double z = rng.uniform(-1, 1), ph = rng.uniform(0, kTwoPi), s = std::sqrt(1 - z * z);
    return Coords{s * std::cos(ph), s * std::sin(ph), z};
  };
  int fails = 0;
  for (int i = 0; i < 2000; ++i) {
    const Coords p = pt(), a = pt(), b = pt(), c = pt();
    try {
      if (!quadruple_comparison(s2, p, a, b, c, 1.0).pass) ++fails;
    } catch (const PreconditionError&) {
    }
  }
  CHECK(fails == 0);
  // Angle-π cone is Alexandrov with curvature ≥ 0.
  const auto narrow = StratifiedModel::euclidean_cone(LinkSpace::circle(0.5), 2.0);
  fails = 0;
  for (int i = 0; i < 2000; ++i) {
    auto cp = [&] { return Coords{rng.uniform(0.05, 2.0), rng.uniform(0, kPi)}; };
    if (!quadruple_comparison(narrow, cp(), cp(), cp(), cp(), 0.0).pass) ++fails;
  }
  CHECK(fails == 0);
}

}  // TEST_SUITE
