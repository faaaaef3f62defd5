#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "stratlab/common.hpp"

namespace stratlab {

using nlohmann::json;

/// Compact link: Circle(a), RoundSphere(m) or Suspension(base).
///
/// Point coordinates:
///   Circle(a)        one number, arc length s in [0, 2πa)
///   RoundSphere(m)   unit vector in R^{m+1}
///   Suspension(B)    (t, point of B) with t in [0, π]
///
/// Every link built from these constructors is an iterated suspension of a
/// circle or of a round sphere, which is what the singular-set bookkeeping
/// below relies on.
class LinkSpace {
 public:
  enum class Kind { Circle, RoundSphere, Suspension };

  static LinkSpace circle(double a);
  static LinkSpace round_sphere(int m);
  static LinkSpace suspension(const LinkSpace& base);

  Kind kind() const { return kind_; }
  /// Circle radius a (Circle only).
  double radius() const;
  /// m for RoundSphere(m).
  int sphere_dim() const;
  /// Base of a Suspension.
  const LinkSpace& base() const;

  int dim() const;
  /// Number of chart coordinates of a point.
  std::size_t coord_count() const;
  /// Throws DomainError when p is not a valid point.
  void validate(const Coords& p) const;

  double diameter() const;
  double volume() const;

  /// Locally isometric to the unit round sphere everywhere (no singular set).
  bool is_round() const;
  /// Radius of the innermost circle when the link is Susp^k(Circle(a)).
  std::optional<double> core_circle() const;
  /// Distance from p to the singular set of the link; kInf when it is empty.
  double singular_distance(const Coords& p) const;
  /// Number of suspensions wrapped around the core.
  int suspension_depth() const;

  /// Maps dim() numbers in (0,1) to a point, pushing Lebesgue measure on the
  /// cube forward to the normalized link volume.
  Coords from_unit_cube(std::span<const double> u) const;

  std::string describe() const;
  json to_json() const;
  static LinkSpace from_json(const json& j);

  friend bool operator==(const LinkSpace& a, const LinkSpace& b);

 private:
  LinkSpace() = default;
  Kind kind_ = Kind::Circle;
  double a_ = 1.0;
  int m_ = 1;
  std::shared_ptr<const LinkSpace> base_;
};

double link_distance(const LinkSpace& link, const Coords& p, const Coords& q);
double link_diameter(const LinkSpace& link);

/// Inverse CDF of the density ∝ sin^m(t) on [lo, hi] ⊂ [0, π].
double sin_power_quantile(int m, double u, double lo = 0.0, double hi = kPi);

struct Stratum {
  int codim = 2;
  /// Cone angle for codimension-2 strata, NaN otherwise.
  double angle = std::numeric_limits<double>::quiet_NaN();
  std::string label;
};

struct MetricSample {
  std::string chart;
  Coords coords;
  std::vector<double> g;  // row-major n×n
  double density = 0.0;
  int dim() const { return static_cast<int>(std::lround(std::sqrt(g.size()))); }
  double at(int i, int j) const { return g[static_cast<std::size_t>(i * dim() + j)]; }
};

enum class Family { RoundSphere, EuclideanCone, Suspension, FermiSphere };

std::string family_name(Family f);

/// Concrete compact model space.
///
/// Points:
///   RoundSphere(n)    unit vector in R^{n+1}
///   EuclideanCone(L)  (r, link point), 0 ≤ r ≤ R
///   Suspension(L)     (t, link point), 0 ≤ t ≤ π
///   FermiSphere       unit vector (x1, x2, Re z, Im z) in R^4; the singular
///                     circle is {(cos β, 0, sin β e^{iθ})}
class StratifiedModel {
 public:
  static StratifiedModel round_sphere(int n);
  static StratifiedModel euclidean_cone(const LinkSpace& link, double truncation_radius);
  static StratifiedModel suspension(const LinkSpace& link);
  /// Susp^{n-2}(Circle(a)), the sphere with a codimension-2 great-sphere of angle 2πa.
  static StratifiedModel s_alpha(int n, double a);
  static StratifiedModel fermi_sphere(double beta, double alpha, double blend_radius);

  Family family() const { return family_; }
  int dim() const { return n_; }
  const std::vector<Stratum>& strata() const { return strata_; }
  bool has_singular_set() const { return !strata_.empty(); }

  const LinkSpace& link() const;
  double truncation_radius() const { return R_; }
  double beta() const { return beta_; }
  double fermi_alpha() const { return alpha_; }
  double blend_radius() const { return blend_; }

  /// Analytic Ricci lower bound on the regular set, when known.
  std::optional<double> k_reg() const;
  /// Analytic sectional-curvature lower bound on the regular set, when known.
  std::optional<double> sectional_lower() const;

  std::size_t coord_count() const;
  void validate_point(const Coords& p) const;
  double distance_to_singular(const Coords& p) const;
  /// Distance to the boundary (truncated cones), kInf otherwise.
  double distance_to_boundary(const Coords& p) const;
  /// 1-Lipschitz coordinate used for neighbour pruning and shell sampling.
  double radial_key(const Coords& p) const;

  double diameter() const;
  double volume() const;

  /// Short identifier such as "suspension[Circle(0.5)]".
  std::string id() const;
  json to_json() const;
  static StratifiedModel from_json(const json& j);
  /// FNV-1a of the canonical JSON.
  std::string hash() const;

 private:
  StratifiedModel() = default;
  void derive_strata();

  Family family_ = Family::RoundSphere;
  int n_ = 2;
  std::shared_ptr<const LinkSpace> link_;
  double R_ = 0.0;
  double beta_ = 0.0;
  double alpha_ = 0.0;
  double blend_ = 0.0;
  double fermi_volume_ = 0.0;
  std::vector<Stratum> strata_;
};

LinkSpace tangent_sphere(const StratifiedModel& model, const Coords& x);

// ---------------------------------------------------------------------------
// Fermi chart around the circle {(cos β, 0, sin β e^{iθ})} ⊂ S³.
// ---------------------------------------------------------------------------

/// Upper end of the chart validity range in r.
double fermi_max_radius(double beta);

/// Round metric in Fermi coordinates, diagonal (rr, θθ, φφ).
MetricSample fermi_metric(double beta, double r, double theta, double phi);

/// Embedding F(r, θ, φ) ∈ S³ ⊂ R⁴.
std::array<double, 4> fermi_embed(double beta, double r, double theta, double phi);
/// Inverse of fermi_embed; r may exceed the chart range.
std::array<double, 3> fermi_coords(double beta, std::span<const double> x);

/// Smooth bump: 1 on [0, eb/2], 0 on [eb, ∞).
double blend_bump(double r, double eb);

/// Blended metric of the model at chart point (r, θ, φ).
MetricSample fermi_blend_metric(const StratifiedModel& model, double r, double theta, double phi);

struct AsymptoticFit {
  double gamma = 0.0;
  double lambda = 0.0;
  double r2 = 0.0;
  std::vector<double> sup_difference;
};

/// Fits log sup|g₀ − (dr² + r²dφ² + sin²β dθ²)| = log Λ + γ log r.
AsymptoticFit fermi_asymptotic_check(double beta, const std::vector<double>& r_grid);

/// Minimum Ricci eigenvalue of the blended metric over a (r, φ) grid in the
/// tube, by finite differences.
double fermi_ricci_estimate(const StratifiedModel& model, int r_steps = 24, int phi_steps = 24);
/// Minimum Ricci eigenvalue of the blended metric at chart point (r, 0, φ).
double fermi_ricci_at(const StratifiedModel& model, double r, double phi);

std::optional<double> regular_ricci_bound(const StratifiedModel& model);

}  // namespace stratlab
