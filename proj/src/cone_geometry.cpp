#include "stratlab/cone_geometry.hpp"

#include <algorithm>
#include <sstream>

namespace stratlab {

namespace {

double hav(double x) {
  const double s = std::sin(0.5 * x);
  return s * s;
}

ConePoint as_cone_point(const Coords& c) { return {c[0], c[0] > 0.0 ? c.tail(1) : Coords{}}; }

bool is_flat_cone(const StratifiedModel& m) {
  return m.family() == Family::EuclideanCone && m.link().kind() == LinkSpace::Kind::Circle;
}

bool is_suspended_circle(const StratifiedModel& m) {
  return m.family() == Family::Suspension && m.link().kind() == LinkSpace::Kind::Circle;
}

}  // namespace

double cone_distance(const ConePoint& p, const ConePoint& q, const LinkSpace& link) {
  if (!(p.r >= 0.0 && q.r >= 0.0)) throw DomainError("cone radius must be nonnegative");
  if (p.r == 0.0 || q.r == 0.0) return std::abs(p.r - q.r);
  const double dl = std::min(link_distance(link, p.y, q.y), kPi);
  const double dr = p.r - q.r;
  return std::sqrt(dr * dr + 4.0 * p.r * q.r * hav(dl));
}

double suspension_distance(const SuspensionPoint& p, const SuspensionPoint& q, const LinkSpace& link) {
  if (!(p.t >= 0.0 && p.t <= kPi && q.t >= 0.0 && q.t <= kPi))
    throw DomainError("suspension coordinate outside [0, π]");
  const double dl = std::min(link_distance(link, p.y, q.y), kPi);
  const double h = hav(p.t - q.t) + std::sin(p.t) * std::sin(q.t) * hav(dl);
  return 2.0 * std::asin(std::sqrt(std::clamp(h, 0.0, 1.0)));
}

double model_distance(const StratifiedModel& model, const Coords& p, const Coords& q) {
  switch (model.family()) {
    case Family::RoundSphere: {
      model.validate_point(p);
      model.validate_point(q);
      double dm = 0.0, dp = 0.0;
      for (std::size_t i = 0; i < p.size(); ++i) {
        dm += (p[i] - q[i]) * (p[i] - q[i]);
        dp += (p[i] + q[i]) * (p[i] + q[i]);
      }
      return 2.0 * std::atan2(std::sqrt(dm), std::sqrt(dp));
    }
    case Family::EuclideanCone:
      if (p.empty() || q.empty()) throw DomainError("empty cone point");
      return cone_distance(as_cone_point(p), as_cone_point(q), model.link());
    case Family::Suspension:
      if (p.empty() || q.empty()) throw DomainError("empty suspension point");
      return suspension_distance({p[0], p.tail(1)}, {q[0], q.tail(1)}, model.link());
    case Family::FermiSphere: {
      const auto d = fermi_core_distance(model, p, q);
      if (!d) throw UnsupportedModelError("exact distances on the blended Fermi sphere exist only inside the core");
      return *d;
    }
  }
  return 0.0;
}

std::optional<double> fermi_core_distance(const StratifiedModel& model, const Coords& p, const Coords& q) {
  if (model.family() != Family::FermiSphere) throw ArgumentError("fermi_core_distance needs a FermiSphere");
  model.validate_point(p);
  model.validate_point(q);
  const double beta = model.beta();
  const auto a = fermi_coords(beta, p.view()), b = fermi_coords(beta, q.view());
  const double core = 0.5 * model.blend_radius();
  if (a[0] >= core || b[0] >= core) return std::nullopt;
  const double c = model.fermi_alpha() / kTwoPi;
  const double dc = cone_distance({a[0], {c * a[2]}}, {b[0], {c * b[2]}}, LinkSpace::circle(c));
  double dt = std::abs(a[1] - b[1]);
  dt = std::sin(beta) * std::min(dt, kTwoPi - dt);
  const double d = std::hypot(dc, dt);
  // Curves leaving the core have length at least (core − r_p) + (core − r_q).
  if (d > 2.0 * core - a[0] - b[0]) return std::nullopt;
  return d;
}

bool geodesic_hits_apex(const LinkSpace& link, const Coords& y, const Coords& z) {
  return link_distance(link, y, z) >= kPi - 1e-12;
}

double circle_offset(double alpha, double s, double s_prime) {
  double d = std::fmod(s_prime - s, alpha);
  if (d <= -0.5 * alpha) d += alpha;
  if (d > 0.5 * alpha) d -= alpha;
  return d;
}

// ---------------------------------------------------------------------------

std::array<double, 2> FlatConeGeodesic::planar_at(double t) const {
  return {(1.0 - t) * P[0] + t * Q[0], (1.0 - t) * P[1] + t * Q[1]};
}

ConePoint FlatConeGeodesic::at(double t) const {
  const auto X = planar_at(t);
  const double r = std::hypot(X[0], X[1]);
  double s = p.r > 0.0 ? p.y[0] : (q.r > 0.0 ? q.y[0] : 0.0);
  if (r > 0.0) {
    const double base = p.r > 0.0 ? p.y[0] : q.y[0] - (q.r > 0.0 ? offset : 0.0);
    s = std::fmod(base + std::atan2(X[1], X[0]), alpha);
    if (s < 0.0) s += alpha;
    if (s >= alpha) s = 0.0;
  }
  return {r, Coords{s}};
}

double FlatConeGeodesic::min_radius() const {
  const double dx = Q[0] - P[0], dy = Q[1] - P[1];
  const double len2 = dx * dx + dy * dy;
  if (len2 == 0.0) return std::hypot(P[0], P[1]);
  const double u = std::clamp(-(P[0] * dx + P[1] * dy) / len2, 0.0, 1.0);
  return std::hypot(P[0] + u * dx, P[1] + u * dy);
}

std::string FlatConeGeodesic::to_csv(int samples) const {
  std::ostringstream out;
  out.precision(12);
  out << "t,r,s\n";
  for (int i = 0; i <= samples; ++i) {
    const double t = static_cast<double>(i) / samples;
    const ConePoint c = at(t);
    out << t << ',' << c.r << ',' << c.y[0] << '\n';
  }
  return out.str();
}

FlatConeGeodesic unfold_flat_cone(double alpha, const ConePoint& p, const ConePoint& q) {
  if (!(alpha > 0.0)) throw ArgumentError("cone angle must be positive");
  const LinkSpace link = LinkSpace::circle(alpha / kTwoPi);
  FlatConeGeodesic g;
  g.alpha = alpha;
  g.p = p;
  g.q = q;
  if (p.r > 0.0) link.validate(p.y);
  if (q.r > 0.0) link.validate(q.y);
  if (p.r > 0.0 && q.r > 0.0) {
    g.offset = circle_offset(alpha, p.y[0], q.y[0]);
    if (std::abs(g.offset) >= kPi)
      throw PreconditionError(
          "angular separation >= π: the minimizer runs through the apex; use the two-segment apex geodesic");
  }
  g.P = {p.r, 0.0};
  g.Q = {q.r * std::cos(g.offset), q.r * std::sin(g.offset)};
  g.length = std::hypot(g.Q[0] - g.P[0], g.Q[1] - g.P[1]);
  return g;
}

ConePoint flat_cone_geodesic_at(double alpha, const ConePoint& p, const ConePoint& q, double t) {
  if (p.r > 0.0 && q.r > 0.0 && std::abs(circle_offset(alpha, p.y[0], q.y[0])) >= kPi) {
    const double pos = t * (p.r + q.r);
    if (pos <= p.r) return {p.r - pos, p.y};
    return {pos - p.r, q.y};
  }
  return unfold_flat_cone(alpha, p, q).at(t);
}

double flat_cone_geodesic_apex_distance(double alpha, const ConePoint& p, const ConePoint& q) {
  if (p.r > 0.0 && q.r > 0.0 && std::abs(circle_offset(alpha, p.y[0], q.y[0])) >= kPi) return 0.0;
  return unfold_flat_cone(alpha, p, q).min_radius();
}

// ---------------------------------------------------------------------------

PolygonalCurve PolygonalCurve::through(const StratifiedModel& model, std::vector<Coords> points) {
  PolygonalCurve c;
  c.points = std::move(points);
  for (std::size_t i = 1; i < c.points.size(); ++i)
    c.segment_lengths.push_back(model_distance(model, c.points[i - 1], c.points[i]));
  return c;
}

double PolygonalCurve::length() const {
  KahanSum s;
  for (double l : segment_lengths) s.add(l);
  return s.value();
}

CurvePerturbation perturb_curve_off_singular(const StratifiedModel& model, const PolygonalCurve& curve,
                                             double eps) {
  if (!(eps > 0.0)) throw ArgumentError("perturb_curve_off_singular: ε must be positive");
  CurvePerturbation out;
  if (!model.has_singular_set()) {
    out.curve = curve;
    return out;
  }
  const bool cone = is_flat_cone(model);
  if (!cone && !is_suspended_circle(model))
    throw UnsupportedModelError("curve perturbation is implemented for flat cones and 2D suspensions");

  const double period = kTwoPi * model.link().radius();
  auto singular = [&](const Coords& x) { return model.distance_to_singular(x) == 0.0; };
  const auto& pts = curve.points;
  if (!pts.empty() && (singular(pts.front()) || singular(pts.back())))
    throw PreconditionError("curve endpoints must be regular");

  std::vector<Coords> result;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    if (k == 0 || k + 1 == pts.size() || !singular(pts[k])) {
      result.push_back(pts[k]);
      continue;
    }
    const Coords& A = pts[k - 1];
    const Coords& B = pts[k + 1];
    // Directions of the incoming and outgoing radial segments.
    const double sa = A[1], sb = B[1];
    const double offset = circle_offset(period, sa, sb);
    const double gap = std::abs(offset);
    const double r_min = std::min(model_distance(model, pts[k], A), model_distance(model, pts[k], B));
    const double delta = gap > 0.0 ? std::min(eps / gap, 0.5 * r_min) : 0.5 * r_min;
    out.detour_radii.push_back(delta);
    // Radial coordinate of the detour circle: cone radius, or the latitude
    // around whichever pole the vertex sits on.
    const double rho = cone ? delta : (pts[k][0] < 0.5 * kPi ? delta : kPi - delta);
    const int chords = std::max(1, static_cast<int>(std::ceil(gap / (kPi / 8.0))));
    for (int j = 0; j <= chords; ++j) {
      double s = std::fmod(sa + offset * j / chords, period);
      if (s < 0.0) s += period;
      if (s >= period) s = 0.0;
      result.push_back(Coords{rho, s});
    }
  }
  out.curve = PolygonalCurve::through(model, std::move(result));
  return out;
}

// ---------------------------------------------------------------------------

double comparison_angle(double k, double a, double b, double c) {
  if (!(a > 0.0 && b > 0.0)) throw PreconditionError("comparison angle needs nondegenerate sides");
  double cosv;
  if (k == 0.0) {
    cosv = (a * a + b * b - c * c) / (2.0 * a * b);
  } else if (k > 0.0) {
    const double s = std::sqrt(k);
    const double den = std::sin(s * a) * std::sin(s * b);
    cosv = den == 0.0 ? 1.0 : (std::cos(s * c) - std::cos(s * a) * std::cos(s * b)) / den;
  } else {
    const double s = std::sqrt(-k);
    cosv = (std::cosh(s * a) * std::cosh(s * b) - std::cosh(s * c)) / (std::sinh(s * a) * std::sinh(s * b));
  }
  return std::acos(std::clamp(cosv, -1.0, 1.0));
}

CheckReport quadruple_comparison(const StratifiedModel& model, const Coords& p, const Coords& a,
                                 const Coords& b, const Coords& c, double k, double tol) {
  const std::array<Coords, 3> others = {a, b, c};
  std::array<double, 3> dp{};
  for (int i = 0; i < 3; ++i) dp[i] = model_distance(model, p, others[i]);
  double sum = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j) {
      const double dij = model_distance(model, others[i], others[j]);
      const double scale = std::max({dp[i], dp[j], dij, 1.0});
      if (dij > dp[i] + dp[j] + 1e-9 * scale || dp[i] > dp[j] + dij + 1e-9 * scale ||
          dp[j] > dp[i] + dij + 1e-9 * scale)
        throw InconsistentMetricError("distance triple violates the triangle inequality");
      sum += comparison_angle(k, dp[i], dp[j], dij);
    }
  CheckReport r;
  r.name = "quadruple_comparison";
  r.model_id = model.id();
  r.model_hash = model.hash();
  r.margin = kTwoPi - sum;
  r.tolerance = tol;
  r.samples = 4;
  r.diagnostics["angle_sum"] = sum;
  r.diagnostics["k"] = k;
  return r.decide();
}

}  // namespace stratlab
