#include "stratlab/model_spaces.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cstdio>
#include <sstream>

namespace stratlab {

namespace {

constexpr double kUnitTol = 1e-9;

double hav(double x) {
  const double s = std::sin(0.5 * x);
  return s * s;
}

double hav_inverse(double h) { return 2.0 * std::asin(std::sqrt(std::clamp(h, 0.0, 1.0))); }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

bool near(double a, double b, double tol = 1e-12) { return std::abs(a - b) <= tol; }

double fermi_volume(double beta, double alpha, double eb);

}  // namespace

// ---------------------------------------------------------------------------
// LinkSpace
// ---------------------------------------------------------------------------

LinkSpace LinkSpace::circle(double a) {
  if (!(a > 0.0) || !std::isfinite(a)) throw ConstructionError("Circle: radius must be positive");
  LinkSpace l;
  l.kind_ = Kind::Circle;
  l.a_ = a;
  return l;
}

LinkSpace LinkSpace::round_sphere(int m) {
  if (m < 1) throw ConstructionError("RoundSphere: dimension must be >= 1");
  if (m + 1 > static_cast<int>(Coords::kCapacity) - 1)
    throw ConstructionError("RoundSphere: dimension too large for the coordinate tuple");
  LinkSpace l;
  l.kind_ = Kind::RoundSphere;
  l.m_ = m;
  return l;
}

LinkSpace LinkSpace::suspension(const LinkSpace& base) {
  if (base.coord_count() + 2 > Coords::kCapacity)
    throw ConstructionError("Suspension: link nesting too deep");
  LinkSpace l;
  l.kind_ = Kind::Suspension;
  l.base_ = std::make_shared<const LinkSpace>(base);
  return l;
}

double LinkSpace::radius() const {
  if (kind_ != Kind::Circle) throw ArgumentError("LinkSpace::radius on a non-circle");
  return a_;
}

int LinkSpace::sphere_dim() const {
  if (kind_ != Kind::RoundSphere) throw ArgumentError("LinkSpace::sphere_dim on a non-sphere");
  return m_;
}

const LinkSpace& LinkSpace::base() const {
  if (kind_ != Kind::Suspension) throw ArgumentError("LinkSpace::base on a non-suspension");
  return *base_;
}

int LinkSpace::dim() const {
  switch (kind_) {
    case Kind::Circle: return 1;
    case Kind::RoundSphere: return m_;
    case Kind::Suspension: return base_->dim() + 1;
  }
  return 0;
}

std::size_t LinkSpace::coord_count() const {
  switch (kind_) {
    case Kind::Circle: return 1;
    case Kind::RoundSphere: return static_cast<std::size_t>(m_ + 1);
    case Kind::Suspension: return base_->coord_count() + 1;
  }
  return 0;
}

void LinkSpace::validate(const Coords& p) const {
  if (p.size() != coord_count())
    throw DomainError("link point " + to_string(p) + " has wrong arity for " + describe());
  switch (kind_) {
    case Kind::Circle:
      if (!(p[0] >= 0.0 && p[0] <= kTwoPi * a_))
        throw DomainError("circle coordinate " + fmt(p[0]) + " outside [0, 2πa)");
      return;
    case Kind::RoundSphere: {
      double s = 0.0;
      for (double v : p) s += v * v;
      if (!(std::abs(std::sqrt(s) - 1.0) <= kUnitTol)) throw DomainError("sphere point is not a unit vector");
      return;
    }
    case Kind::Suspension:
      if (!(p[0] >= 0.0 && p[0] <= kPi)) throw DomainError("suspension coordinate t outside [0, π]");
      base_->validate(p.tail(1));
      return;
  }
}

double LinkSpace::diameter() const {
  switch (kind_) {
    case Kind::Circle: return kPi * a_;
    case Kind::RoundSphere:
    case Kind::Suspension: return kPi;
  }
  return 0.0;
}

double LinkSpace::volume() const {
  switch (kind_) {
    case Kind::Circle: return kTwoPi * a_;
    case Kind::RoundSphere: return sphere_volume(m_);
    case Kind::Suspension: return base_->volume() * sin_power_integral(base_->dim(), kPi);
  }
  return 0.0;
}

bool LinkSpace::is_round() const {
  switch (kind_) {
    case Kind::Circle: return near(a_, 1.0);
    case Kind::RoundSphere: return true;
    case Kind::Suspension: return base_->is_round();
  }
  return false;
}

std::optional<double> LinkSpace::core_circle() const {
  switch (kind_) {
    case Kind::Circle: return a_;
    case Kind::RoundSphere: return std::nullopt;
    case Kind::Suspension: return base_->core_circle();
  }
  return std::nullopt;
}

int LinkSpace::suspension_depth() const {
  return kind_ == Kind::Suspension ? 1 + base_->suspension_depth() : 0;
}

double LinkSpace::singular_distance(const Coords& p) const {
  if (kind_ != Kind::Suspension || !core_circle()) return kInf;
  const double t = p[0];
  if (base_->kind() == Kind::Circle) return std::min(t, kPi - t);
  const double delta = base_->singular_distance(p.tail(1));
  return std::asin(std::clamp(std::sin(t) * std::sin(std::min(delta, 0.5 * kPi)), 0.0, 1.0));
}

namespace {
// Unit vector on S^m from m numbers in (0,1), as an iterated suspension of S¹.
void sphere_from_cube(int m, std::span<const double> u, Coords& out) {
  if (m == 1) {
    out.push_back(std::cos(kTwoPi * u[0]));
    out.push_back(std::sin(kTwoPi * u[0]));
    return;
  }
  const double t = sin_power_quantile(m - 1, u[0]);
  Coords inner;
  sphere_from_cube(m - 1, u.subspan(1), inner);
  out.push_back(std::cos(t));
  for (double v : inner) out.push_back(std::sin(t) * v);
}
}  // namespace

Coords LinkSpace::from_unit_cube(std::span<const double> u) const {
  if (u.size() < static_cast<std::size_t>(dim())) throw ArgumentError("from_unit_cube: too few numbers");
  Coords out;
  switch (kind_) {
    case Kind::Circle:
      out.push_back(std::min(kTwoPi * a_ * u[0], std::nextafter(kTwoPi * a_, 0.0)));
      break;
    case Kind::RoundSphere:
      sphere_from_cube(m_, u, out);
      break;
    case Kind::Suspension:
      out.push_back(sin_power_quantile(base_->dim(), u[0]));
      out.append(base_->from_unit_cube(u.subspan(1)));
      break;
  }
  return out;
}

std::string LinkSpace::describe() const {
  switch (kind_) {
    case Kind::Circle: return "Circle(" + fmt(a_) + ")";
    case Kind::RoundSphere: return "S^" + std::to_string(m_);
    case Kind::Suspension: return "Susp(" + base_->describe() + ")";
  }
  return {};
}

json LinkSpace::to_json() const {
  switch (kind_) {
    case Kind::Circle: return {{"type", "circle"}, {"a", a_}};
    case Kind::RoundSphere: return {{"type", "round_sphere"}, {"m", m_}};
    case Kind::Suspension: return {{"type", "suspension"}, {"base", base_->to_json()}};
  }
  return {};
}

LinkSpace LinkSpace::from_json(const json& j) {
  try {
    const std::string type = j.at("type").get<std::string>();
    if (type == "circle") return circle(j.at("a").get<double>());
    if (type == "round_sphere") return round_sphere(j.at("m").get<int>());
    if (type == "suspension") return suspension(from_json(j.at("base")));
    throw ConstructionError("unknown link type '" + type + "'");
  } catch (const json::exception& e) {
    throw ConstructionError(std::string("malformed link JSON: ") + e.what());
  }
}

bool operator==(const LinkSpace& a, const LinkSpace& b) {
  if (a.kind_ != b.kind_) return false;
  switch (a.kind_) {
    case LinkSpace::Kind::Circle: return a.a_ == b.a_;
    case LinkSpace::Kind::RoundSphere: return a.m_ == b.m_;
    case LinkSpace::Kind::Suspension: return *a.base_ == *b.base_;
  }
  return false;
}

double link_distance(const LinkSpace& link, const Coords& p, const Coords& q) {
  link.validate(p);
  link.validate(q);
  switch (link.kind()) {
    case LinkSpace::Kind::Circle: {
      const double period = kTwoPi * link.radius();
      const double gap = std::fmod(std::abs(p[0] - q[0]), period);
      return std::min(gap, period - gap);
    }
    case LinkSpace::Kind::RoundSphere: {
      double dm = 0.0, dp = 0.0;
      for (std::size_t i = 0; i < p.size(); ++i) {
        dm += (p[i] - q[i]) * (p[i] - q[i]);
        dp += (p[i] + q[i]) * (p[i] + q[i]);
      }
      return 2.0 * std::atan2(std::sqrt(dm), std::sqrt(dp));
    }
    case LinkSpace::Kind::Suspension: {
      const double db = link_distance(link.base(), p.tail(1), q.tail(1));
      const double h = hav(p[0] - q[0]) + std::sin(p[0]) * std::sin(q[0]) * hav(std::min(db, kPi));
      return hav_inverse(h);
    }
  }
  return 0.0;
}

double link_diameter(const LinkSpace& link) { return link.diameter(); }

double sin_power_quantile(int m, double u, double lo, double hi) {
  u = std::clamp(u, 0.0, 1.0);
  if (m == 0) return lo + u * (hi - lo);
  if (m == 1) {
    const double clo = std::cos(lo);
    return std::acos(std::clamp(clo - u * (clo - std::cos(hi)), -1.0, 1.0));
  }
  const double base = sin_power_integral(m, lo);
  const double target = u * (sin_power_integral(m, hi) - base);
  if (u <= 0.0) return lo;
  if (u >= 1.0) return hi;
  return solve_monotone([&](double t) { return sin_power_integral(m, t) - base - target; }, lo, hi,
                        1e-14);
}

// ---------------------------------------------------------------------------
// StratifiedModel
// ---------------------------------------------------------------------------

std::string family_name(Family f) {
  switch (f) {
    case Family::RoundSphere: return "round_sphere";
    case Family::EuclideanCone: return "euclidean_cone";
    case Family::Suspension: return "suspension";
    case Family::FermiSphere: return "fermi_sphere";
  }
  return {};
}

StratifiedModel StratifiedModel::round_sphere(int n) {
  if (n < 1 || n + 1 > static_cast<int>(Coords::kCapacity))
    throw ConstructionError("RoundSphereSpace: unsupported dimension");
  StratifiedModel m;
  m.family_ = Family::RoundSphere;
  m.n_ = n;
  return m;
}

StratifiedModel StratifiedModel::euclidean_cone(const LinkSpace& link, double truncation_radius) {
  if (!(truncation_radius > 0.0) || !std::isfinite(truncation_radius))
    throw ConstructionError("EuclideanCone: truncation radius must be positive");
  if (link.coord_count() + 1 > Coords::kCapacity) throw ConstructionError("EuclideanCone: link too large");
  StratifiedModel m;
  m.family_ = Family::EuclideanCone;
  m.n_ = link.dim() + 1;
  m.link_ = std::make_shared<const LinkSpace>(link);
  m.R_ = truncation_radius;
  m.derive_strata();
  return m;
}

StratifiedModel StratifiedModel::suspension(const LinkSpace& link) {
  if (link.coord_count() + 1 > Coords::kCapacity) throw ConstructionError("SuspensionSpace: link too large");
  StratifiedModel m;
  m.family_ = Family::Suspension;
  m.n_ = link.dim() + 1;
  m.link_ = std::make_shared<const LinkSpace>(link);
  m.derive_strata();
  return m;
}

StratifiedModel StratifiedModel::s_alpha(int n, double a) {
  if (n < 2) throw ConstructionError("S^n_α needs n >= 2");
  LinkSpace link = LinkSpace::circle(a);
  for (int k = 0; k < n - 2; ++k) link = LinkSpace::suspension(link);
  return suspension(link);
}

StratifiedModel StratifiedModel::fermi_sphere(double beta, double alpha, double blend_radius) {
  if (!(beta > 0.0 && beta <= 0.5 * kPi + 1e-15)) throw ConstructionError("FermiSphere: β must lie in (0, π/2]");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ConstructionError("FermiSphere: cone angle must be positive");
  if (!(blend_radius > 0.0 && blend_radius < fermi_max_radius(beta)))
    throw ConstructionError("FermiSphere: blend radius must lie in (0, β)");
  StratifiedModel m;
  m.family_ = Family::FermiSphere;
  m.n_ = 3;
  m.beta_ = beta;
  m.alpha_ = alpha;
  m.blend_ = blend_radius;
  m.fermi_volume_ = fermi_volume(beta, alpha, blend_radius);
  m.derive_strata();
  return m;
}

void StratifiedModel::derive_strata() {
  strata_.clear();
  if (family_ == Family::FermiSphere) {
    strata_.push_back({2, alpha_, "singular circle"});
    return;
  }
  if (!link_) return;
  const auto a = link_->core_circle();
  if (!a) return;
  std::string label;
  if (family_ == Family::EuclideanCone)
    label = link_->kind() == LinkSpace::Kind::Circle ? "apex" : "cone over the link's singular sphere";
  else
    label = link_->kind() == LinkSpace::Kind::Circle ? "poles" : "suspended singular sphere";
  strata_.push_back({2, kTwoPi * *a, label});
}

const LinkSpace& StratifiedModel::link() const {
  if (!link_) throw ArgumentError("model " + id() + " has no link");
  return *link_;
}

std::optional<double> StratifiedModel::k_reg() const {
  switch (family_) {
    case Family::RoundSphere:
    case Family::Suspension: return static_cast<double>(n_ - 1);
    case Family::EuclideanCone: return 0.0;
    case Family::FermiSphere: return std::nullopt;
  }
  return std::nullopt;
}

std::optional<double> StratifiedModel::sectional_lower() const {
  switch (family_) {
    case Family::RoundSphere:
    case Family::Suspension: return 1.0;
    case Family::EuclideanCone: return 0.0;
    case Family::FermiSphere: return std::nullopt;
  }
  return std::nullopt;
}

std::size_t StratifiedModel::coord_count() const {
  switch (family_) {
    case Family::RoundSphere: return static_cast<std::size_t>(n_ + 1);
    case Family::EuclideanCone:
    case Family::Suspension: return link_->coord_count() + 1;
    case Family::FermiSphere: return 4;
  }
  return 0;
}

void StratifiedModel::validate_point(const Coords& p) const {
  const bool bare_apex = family_ == Family::EuclideanCone && p.size() == 1 && p[0] == 0.0;
  if (p.size() != coord_count() && !bare_apex)
    throw DomainError("point " + to_string(p) + " has wrong arity for " + id());
  switch (family_) {
    case Family::RoundSphere:
    case Family::FermiSphere: {
      double s = 0.0;
      for (double v : p) s += v * v;
      if (!(std::abs(std::sqrt(s) - 1.0) <= kUnitTol)) throw DomainError("point is not a unit vector");
      return;
    }
    case Family::EuclideanCone:
      if (!(p[0] >= 0.0 && p[0] <= R_ * (1.0 + 1e-12))) throw DomainError("cone radius outside [0, R]");
      if (p[0] > 0.0) link_->validate(p.tail(1));
      return;
    case Family::Suspension:
      if (!(p[0] >= 0.0 && p[0] <= kPi)) throw DomainError("suspension coordinate outside [0, π]");
      link_->validate(p.tail(1));
      return;
  }
}

double StratifiedModel::distance_to_singular(const Coords& p) const {
  switch (family_) {
    case Family::RoundSphere: return kInf;
    case Family::EuclideanCone: {
      if (strata_.empty()) return kInf;
      if (link_->kind() == LinkSpace::Kind::Circle || p[0] == 0.0) return p[0];
      const double delta = link_->singular_distance(p.tail(1));
      return p[0] * std::sin(std::min(delta, 0.5 * kPi));
    }
    case Family::Suspension: {
      if (strata_.empty()) return kInf;
      const double t = p[0];
      if (link_->kind() == LinkSpace::Kind::Circle) return std::min(t, kPi - t);
      const double delta = link_->singular_distance(p.tail(1));
      return std::asin(std::clamp(std::sin(t) * std::sin(std::min(delta, 0.5 * kPi)), 0.0, 1.0));
    }
    case Family::FermiSphere: return fermi_coords(beta_, p.view())[0];
  }
  return kInf;
}

double StratifiedModel::distance_to_boundary(const Coords& p) const {
  return family_ == Family::EuclideanCone ? R_ - p[0] : kInf;
}

double StratifiedModel::radial_key(const Coords& p) const {
  switch (family_) {
    case Family::RoundSphere: return p[static_cast<std::size_t>(n_)];
    case Family::EuclideanCone:
    case Family::Suspension: return p[0];
    case Family::FermiSphere: return p[3];
  }
  return 0.0;
}

double StratifiedModel::diameter() const {
  switch (family_) {
    case Family::RoundSphere:
    case Family::Suspension:
    case Family::FermiSphere: return kPi;
    case Family::EuclideanCone: {
      const double d = std::min(link_->diameter(), kPi);
      return std::max(R_, 2.0 * R_ * std::sin(0.5 * d));
    }
  }
  return 0.0;
}

namespace {
double fermi_volume(double beta, double alpha, double eb) {
  // Metric changes only inside r < eb; correct the round volume there.
  auto inner = [&](double r) {
    const double chi = blend_bump(r, eb);
    const double c = alpha / kTwoPi;
    return integrate(
               [&](double phi) {
                 const double sb = std::sin(beta), cb = std::cos(beta);
                 const double w = std::cos(r) * sb + std::sin(r) * cb * std::sin(phi);
                 const double tt = chi * sb * sb + (1.0 - chi) * w * w;
                 const double pp = chi * c * c * r * r + (1.0 - chi) * std::sin(r) * std::sin(r);
                 return std::sqrt(tt * pp) - std::sin(r) * std::abs(w);
               },
               0.0, kTwoPi, 1e-11, 1e-15)
        .value;
  };
  const double corr = integrate(inner, 0.0, 0.5 * eb, 1e-11, 1e-15).value +
                      integrate(inner, 0.5 * eb, eb, 1e-11, 1e-15).value;
  return 2.0 * kPi * kPi + kTwoPi * corr;
}
}  // namespace

double StratifiedModel::volume() const {
  switch (family_) {
    case Family::RoundSphere: return sphere_volume(n_);
    case Family::EuclideanCone: return std::pow(R_, n_) / n_ * link_->volume();
    case Family::Suspension: return link_->volume() * sin_power_integral(link_->dim(), kPi);
    case Family::FermiSphere: return fermi_volume_;
  }
  return 0.0;
}

std::string StratifiedModel::id() const {
  switch (family_) {
    case Family::RoundSphere: return "round_sphere(" + std::to_string(n_) + ")";
    case Family::EuclideanCone: return "cone[" + link_->describe() + ",R=" + fmt(R_) + "]";
    case Family::Suspension: return "suspension[" + link_->describe() + "]";
    case Family::FermiSphere:
      return "fermi(beta=" + fmt(beta_) + ",alpha=" + format_angle(alpha_) + ",eb=" + fmt(blend_) + ")";
  }
  return {};
}

json StratifiedModel::to_json() const {
  json params;
  switch (family_) {
    case Family::RoundSphere: params = {{"n", n_}}; break;
    case Family::EuclideanCone: params = {{"link", link_->to_json()}, {"R", R_}}; break;
    case Family::Suspension: params = {{"link", link_->to_json()}}; break;
    case Family::FermiSphere: params = {{"beta", beta_}, {"alpha", alpha_}, {"blend", blend_}}; break;
  }
  json strata = json::array();
  for (const auto& s : strata_) {
    json e = {{"codim", s.codim}, {"label", s.label}};
    e["angle"] = std::isnan(s.angle) ? json(nullptr) : json(s.angle);
    strata.push_back(e);
  }
  return {{"schema", 1}, {"family", family_name(family_)}, {"params", params}, {"strata", strata}};
}

StratifiedModel StratifiedModel::from_json(const json& j) {
  StratifiedModel m;
  try {
    if (j.contains("schema") && j.at("schema").get<int>() != 1)
      throw ConstructionError("unsupported model schema version");
    const std::string family = j.at("family").get<std::string>();
    const json& p = j.contains("params") ? j.at("params") : json::object();
    if (family == "round_sphere") {
      m = round_sphere(p.at("n").get<int>());
    } else if (family == "euclidean_cone") {
      m = euclidean_cone(LinkSpace::from_json(p.at("link")), p.value("R", 1.0));
    } else if (family == "suspension") {
      if (p.contains("link"))
        m = suspension(LinkSpace::from_json(p.at("link")));
      else
        m = s_alpha(p.at("n").get<int>(), p.at("a").get<double>());
    } else if (family == "fermi_sphere") {
      m = fermi_sphere(p.at("beta").get<double>(), p.at("alpha").get<double>(), p.value("blend", 0.4));
    } else {
      throw ConstructionError("unsupported model family '" + family + "'");
    }
    if (j.contains("strata")) {
      const json& s = j.at("strata");
      if (s.size() != m.strata_.size()) throw ConstructionError("declared strata disagree with the model");
      for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i].at("codim").get<int>() != m.strata_[i].codim)
          throw ConstructionError("declared stratum codimension disagrees with the model");
        const json& ang = s[i].contains("angle") ? s[i].at("angle") : json(nullptr);
        if (!ang.is_null() && std::abs(ang.get<double>() - m.strata_[i].angle) > 1e-9)
          throw ConstructionError("declared stratum angle disagrees with the model");
      }
    }
  } catch (const json::exception& e) {
    throw ConstructionError(std::string("malformed model JSON: ") + e.what());
  }
  return m;
}

std::string StratifiedModel::hash() const { return fnv1a_hex(to_json().dump()); }

// ---------------------------------------------------------------------------
// Tangent spheres
// ---------------------------------------------------------------------------

namespace {

// Tangent sphere of a link; `round` with dimension k stands for S^k, k may be 0.
struct TangentLink {
  bool round = true;
  int dim = 0;
  std::optional<LinkSpace> link;
};

TangentLink as_tangent(const LinkSpace& l) {
  if (l.is_round()) return {true, l.dim(), std::nullopt};
  return {false, l.dim(), l};
}

TangentLink suspend(const TangentLink& t) {
  if (t.round) return {true, t.dim + 1, std::nullopt};
  return {false, t.dim + 1, LinkSpace::suspension(*t.link)};
}

TangentLink link_tangent(const LinkSpace& l, const Coords& y) {
  switch (l.kind()) {
    case LinkSpace::Kind::Circle: return {true, 0, std::nullopt};
    case LinkSpace::Kind::RoundSphere: return {true, l.sphere_dim() - 1, std::nullopt};
    case LinkSpace::Kind::Suspension: {
      const double t = y[0];
      if (t < 1e-12 || kPi - t < 1e-12) return as_tangent(l.base());
      return suspend(link_tangent(l.base(), y.tail(1)));
    }
  }
  return {};
}

LinkSpace materialize(const TangentLink& t) {
  if (t.round) return LinkSpace::round_sphere(t.dim);
  return *t.link;
}

}  // namespace

LinkSpace tangent_sphere(const StratifiedModel& model, const Coords& x) {
  model.validate_point(x);
  switch (model.family()) {
    case Family::RoundSphere: return LinkSpace::round_sphere(model.dim() - 1);
    case Family::EuclideanCone:
      if (x[0] == 0.0) return materialize(as_tangent(model.link()));
      return materialize(suspend(link_tangent(model.link(), x.tail(1))));
    case Family::Suspension: {
      const double t = x[0];
      if (t < 1e-12 || kPi - t < 1e-12) return materialize(as_tangent(model.link()));
      return materialize(suspend(link_tangent(model.link(), x.tail(1))));
    }
    case Family::FermiSphere: {
      if (model.distance_to_singular(x) < 1e-9)
        return materialize(as_tangent(LinkSpace::suspension(LinkSpace::circle(model.fermi_alpha() / kTwoPi))));
      return LinkSpace::round_sphere(2);
    }
  }
  return LinkSpace::round_sphere(model.dim() - 1);
}

// ---------------------------------------------------------------------------
// Fermi chart
// ---------------------------------------------------------------------------

double fermi_max_radius(double beta) { return beta; }

namespace {
void check_fermi_domain(double beta, double r) {
  if (!(beta > 0.0 && beta <= 0.5 * kPi + 1e-15)) throw DomainError("Fermi chart: β outside (0, π/2]");
  if (!(r > 0.0 && r < fermi_max_radius(beta)))
    throw DomainError("Fermi chart: r = " + fmt(r) + " outside the tubular range (0, " +
                      fmt(fermi_max_radius(beta)) + ")");
}

MetricSample diagonal_sample(const std::string& chart, double r, double theta, double phi, double grr,
                             double gtt, double gpp) {
  MetricSample s;
  s.chart = chart;
  s.coords = {r, theta, phi};
  s.g = {grr, 0.0, 0.0, 0.0, gtt, 0.0, 0.0, 0.0, gpp};
  s.density = std::sqrt(grr * gtt * gpp);
  return s;
}
}  // namespace

MetricSample fermi_metric(double beta, double r, double theta, double phi) {
  check_fermi_domain(beta, r);
  const double cr = std::cos(r), sr = std::sin(r), sb = std::sin(beta), cb = std::cos(beta);
  const double sp = std::sin(phi);
  const double gtt = cr * cr * sb * sb + sr * sr * cb * cb * sp * sp + cr * sr * std::sin(2.0 * beta) * sp;
  return diagonal_sample("fermi", r, theta, phi, 1.0, gtt, sr * sr);
}

std::array<double, 4> fermi_embed(double beta, double r, double theta, double phi) {
  const double cr = std::cos(r), sr = std::sin(r), sb = std::sin(beta), cb = std::cos(beta);
  const double zmod = cr * sb + sr * cb * std::sin(phi);
  return {cr * cb - sr * sb * std::sin(phi), sr * std::cos(phi), zmod * std::cos(theta),
          zmod * std::sin(theta)};
}

std::array<double, 3> fermi_coords(double beta, std::span<const double> x) {
  const double sb = std::sin(beta), cb = std::cos(beta);
  const double zmod = std::hypot(x[2], x[3]);
  const double w = -sb * x[0] + cb * zmod;
  const double r = std::atan2(std::hypot(x[1], w), x[0] * cb + zmod * sb);
  double theta = std::atan2(x[3], x[2]);
  if (theta < 0.0) theta += kTwoPi;
  double phi = std::atan2(w, x[1]);
  if (phi < 0.0) phi += kTwoPi;
  return {r, theta, phi};
}

double blend_bump(double r, double eb) {
  if (r <= 0.5 * eb) return 1.0;
  if (r >= eb) return 0.0;
  const double s = (r - 0.5 * eb) / (0.5 * eb);
  auto f = [](double x) { return x > 0.0 ? std::exp(-1.0 / x) : 0.0; };
  return f(1.0 - s) / (f(1.0 - s) + f(s));
}

MetricSample fermi_blend_metric(const StratifiedModel& model, double r, double theta, double phi) {
  if (model.family() != Family::FermiSphere) throw ArgumentError("fermi_blend_metric needs a FermiSphere");
  const double beta = model.beta();
  MetricSample g0 = fermi_metric(beta, r, theta, phi);
  const double chi = blend_bump(r, model.blend_radius());
  if (chi == 0.0) {
    g0.chart = "fermi_blend";
    return g0;
  }
  const double c = model.fermi_alpha() / kTwoPi;
  const double sb = std::sin(beta);
  const double gtt = chi * sb * sb + (1.0 - chi) * g0.at(1, 1);
  const double gpp = chi * c * c * r * r + (1.0 - chi) * g0.at(2, 2);
  return diagonal_sample("fermi_blend", r, theta, phi, 1.0, gtt, gpp);
}

AsymptoticFit fermi_asymptotic_check(double beta, const std::vector<double>& r_grid) {
  if (r_grid.size() < 3) throw ArgumentError("fermi_asymptotic_check needs at least 3 radii");
  for (std::size_t i = 1; i < r_grid.size(); ++i)
    if (!(r_grid[i] < r_grid[i - 1])) throw ArgumentError("radius grid must be strictly decreasing");
  const double sb2 = std::sin(beta) * std::sin(beta);
  constexpr int kPhiSteps = 1440;
  AsymptoticFit fit;
  std::vector<double> lx, ly;
  for (double r : r_grid) {
    double sup = 0.0;
    for (int k = 0; k < kPhiSteps; ++k) {
      const double phi = kTwoPi * k / kPhiSteps;
      const MetricSample g = fermi_metric(beta, r, 0.0, phi);
      sup = std::max({sup, std::abs(g.at(1, 1) - sb2), std::abs(g.at(2, 2) - r * r)});
    }
    fit.sup_difference.push_back(sup);
    if (sup <= 0.0) throw NumericalError("fermi_asymptotic_check: difference vanished identically");
    lx.push_back(std::log(r));
    ly.push_back(std::log(sup));
  }
  const LineFit lf = fit_line(lx, ly);
  fit.gamma = lf.slope;
  fit.lambda = std::exp(lf.intercept);
  fit.r2 = lf.r2;
  return fit;
}

namespace {

using Mat3 = Eigen::Matrix3d;
using Christoffel = std::array<Mat3, 3>;  // [k](i, j)

Christoffel christoffel(const std::function<Mat3(const Eigen::Vector3d&)>& metric, const Eigen::Vector3d& x,
                        double h) {
  std::array<Mat3, 3> dg;  // dg[l] = ∂_l g
  for (int l = 0; l < 3; ++l) {
    Eigen::Vector3d e = Eigen::Vector3d::Zero();
    e[l] = h;
    dg[l] = (metric(x + e) - metric(x - e)) / (2.0 * h);
  }
  const Mat3 ginv = metric(x).inverse();
  Christoffel G;
  for (int k = 0; k < 3; ++k) {
    G[k].setZero();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int l = 0; l < 3; ++l)
          G[k](i, j) += 0.5 * ginv(k, l) * (dg[i](j, l) + dg[j](i, l) - dg[l](i, j));
  }
  return G;
}

double min_ricci(const std::function<Mat3(const Eigen::Vector3d&)>& metric, const Eigen::Vector3d& x) {
  const double h1 = 1e-4, h2 = 1e-3;
  const Christoffel G = christoffel(metric, x, h1);
  std::array<Christoffel, 3> dG;  // dG[m][k](i,j) = ∂_m Γ^k_ij
  for (int m = 0; m < 3; ++m) {
    Eigen::Vector3d e = Eigen::Vector3d::Zero();
    e[m] = h2;
    const Christoffel plus = christoffel(metric, x + e, h1);
    const Christoffel minus = christoffel(metric, x - e, h1);
    for (int k = 0; k < 3; ++k) dG[m][k] = (plus[k] - minus[k]) / (2.0 * h2);
  }
  Mat3 ric = Mat3::Zero();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double v = 0.0;
      for (int k = 0; k < 3; ++k) {
        v += dG[k][k](i, j) - dG[j][k](i, k);
        for (int l = 0; l < 3; ++l) v += G[k](k, l) * G[l](i, j) - G[k](j, l) * G[l](i, k);
      }
      ric(i, j) = v;
    }
  ric = 0.5 * (ric + ric.transpose()).eval();
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat3> es(ric, metric(x));
  return es.eigenvalues().minCoeff();
}

}  // namespace

double fermi_ricci_at(const StratifiedModel& model, double r, double phi) {
  auto metric = [&](const Eigen::Vector3d& x) {
    const MetricSample s = fermi_blend_metric(model, x[0], x[1], x[2]);
    Mat3 g;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) g(i, j) = s.at(i, j);
    return g;
  };
  return min_ricci(metric, Eigen::Vector3d(r, 0.0, phi));
}

double fermi_ricci_estimate(const StratifiedModel& model, int r_steps, int phi_steps) {
  if (model.family() != Family::FermiSphere) throw ArgumentError("fermi_ricci_estimate needs a FermiSphere");
  const double eb = model.blend_radius();
  const double r_hi = std::min(1.25 * eb, 0.98 * fermi_max_radius(model.beta()));
  const double r_lo = 0.05 * eb;
  double worst = kInf;
  for (int i = 0; i <= r_steps; ++i) {
    const double r = r_lo + (r_hi - r_lo) * i / r_steps;
    for (int k = 0; k < phi_steps; ++k)
      worst = std::min(worst, fermi_ricci_at(model, r, kTwoPi * (k + 0.5) / phi_steps));
  }
  return worst;
}

std::optional<double> regular_ricci_bound(const StratifiedModel& model) { return model.k_reg(); }

}  // namespace stratlab
