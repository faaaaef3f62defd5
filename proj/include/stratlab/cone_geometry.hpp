#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "stratlab/check_report.hpp"
#include "stratlab/model_spaces.hpp"

namespace stratlab {

/// Point of a cone C(L): radius r and a link point y (ignored when r = 0).
struct ConePoint {
  double r = 0.0;
  Coords y;
};

/// Point of a spherical suspension: t ∈ [0, π] and a link point y.
struct SuspensionPoint {
  double t = 0.0;
  Coords y;
};

double cone_distance(const ConePoint& p, const ConePoint& q, const LinkSpace& link);
double suspension_distance(const SuspensionPoint& p, const SuspensionPoint& q, const LinkSpace& link);

/// Intrinsic distance on a model. On the FermiSphere only pairs certified by
/// fermi_core_distance are supported; others throw UnsupportedModelError.
double model_distance(const StratifiedModel& model, const Coords& p, const Coords& q);

/// Distance between two points of the blend core r < ε_b/2 of a FermiSphere,
/// where the metric is the product of the flat cone of angle α with the circle
/// of length 2π sin β. Empty unless the product geodesic provably cannot be
/// beaten by a curve that leaves the core.
std::optional<double> fermi_core_distance(const StratifiedModel& model, const Coords& p, const Coords& q);

/// True iff some minimizing geodesic between (t, y) and (s, z) passes through
/// the apex, i.e. d_L(y, z) >= π (ties count as true).
bool geodesic_hits_apex(const LinkSpace& link, const Coords& y, const Coords& z);

/// Signed angular offset from s to s' on a circle of length alpha, in (-α/2, α/2].
double circle_offset(double alpha, double s, double s_prime);

/// Minimizing geodesic of the flat cone of angle alpha, developed onto a plane
/// with p on the positive x axis.
struct FlatConeGeodesic {
  double alpha = kTwoPi;
  ConePoint p, q;
  double offset = 0.0;  // signed link offset from p to q
  std::array<double, 2> P{}, Q{};
  double length = 0.0;

  std::array<double, 2> planar_at(double t) const;
  /// Point at parameter t ∈ [0, 1] (constant speed), in cone coordinates.
  ConePoint at(double t) const;
  /// Distance from the apex to the geodesic.
  double min_radius() const;
  /// Polyline "t,r,s" with `samples` + 1 rows after a header.
  std::string to_csv(int samples) const;
};

/// Needs angular separation < π; otherwise the minimizer runs through the apex
/// and a PreconditionError is thrown.
FlatConeGeodesic unfold_flat_cone(double alpha, const ConePoint& p, const ConePoint& q);

/// Point at time t on a minimizing flat-cone geodesic, taking the two-segment
/// apex path when the separation is >= π.
ConePoint flat_cone_geodesic_at(double alpha, const ConePoint& p, const ConePoint& q, double t);
/// Distance from the apex to that geodesic.
double flat_cone_geodesic_apex_distance(double alpha, const ConePoint& p, const ConePoint& q);

/// Piecewise-geodesic curve through model points.
struct PolygonalCurve {
  std::vector<Coords> points;
  std::vector<double> segment_lengths;

  static PolygonalCurve through(const StratifiedModel& model, std::vector<Coords> points);
  double length() const;
};

struct CurvePerturbation {
  PolygonalCurve curve;
  /// One entry per singular vertex that was bypassed.
  std::vector<double> detour_radii;
};

/// Replaces every interior vertex on the singular set by a short detour along
/// a circle of radius δ = min(ε / gap, r_min / 2). Flat cones and 2D
/// suspensions only.
CurvePerturbation perturb_curve_off_singular(const StratifiedModel& model, const PolygonalCurve& curve,
                                             double eps);

/// Angle at the vertex between sides a and b opposite side c, in the model
/// plane of curvature k. Cosines are clamped to [-1, 1].
double comparison_angle(double k, double a, double b, double c);

/// Sum of the three k-comparison angles at p; margin 2π − sum.
CheckReport quadruple_comparison(const StratifiedModel& model, const Coords& p, const Coords& a,
                                 const Coords& b, const Coords& c, double k, double tol = 1e-9);

}  // namespace stratlab
