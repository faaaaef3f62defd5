#include "stratlab/measure_mc.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "stratlab/cone_geometry.hpp"

namespace stratlab {

namespace {

constexpr std::size_t kBlock = 4096;

struct Draw {
  Coords x;
  double w = 0.0;
};

/// Maps a point of the unit cube to a weighted model point. The weight is the
/// Radon-Nikodym factor times the total proposal mass, so E[w f] = ∫ f dv_g.
struct CubeMap {
  std::size_t dim = 0;
  std::function<Draw(std::span<const double>)> map;
};

double round_distance(std::span<const double> p, std::span<const double> q) {
  double dm = 0.0, dp = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    dm += (p[i] - q[i]) * (p[i] - q[i]);
    dp += (p[i] + q[i]) * (p[i] + q[i]);
  }
  return 2.0 * std::atan2(std::sqrt(dm), std::sqrt(dp));
}

double fermi_density_ratio(const StratifiedModel& m, const Coords& x) {
  const auto c = fermi_coords(m.beta(), x.view());
  if (c[0] >= m.blend_radius() || c[0] <= 0.0) return 1.0;
  return fermi_blend_metric(m, c[0], c[1], c[2]).density / fermi_metric(m.beta(), c[0], c[1], c[2]).density;
}

CubeMap full_map(const StratifiedModel& m) {
  const int n = m.dim();
  switch (m.family()) {
    case Family::RoundSphere: {
      const auto s = LinkSpace::round_sphere(n);
      const double w = sphere_volume(n);
      return {static_cast<std::size_t>(n), [s, w](std::span<const double> u) { return Draw{s.from_unit_cube(u), w}; }};
    }
    case Family::EuclideanCone: {
      const LinkSpace link = m.link();
      const double R = m.truncation_radius(), w = m.volume();
      return {static_cast<std::size_t>(n), [link, R, n, w](std::span<const double> u) {
                Coords x{R * std::pow(u[0], 1.0 / n)};
                x.append(link.from_unit_cube(u.subspan(1)));
                return Draw{x, w};
              }};
    }
    case Family::Suspension: {
      const auto s = LinkSpace::suspension(m.link());
      const double w = m.volume();
      return {static_cast<std::size_t>(n), [s, w](std::span<const double> u) { return Draw{s.from_unit_cube(u), w}; }};
    }
    case Family::FermiSphere: {
      const auto s = LinkSpace::round_sphere(3);
      const double w = sphere_volume(3);
      return {3, [s, w, m](std::span<const double> u) {
                Draw d{s.from_unit_cube(u), w};
                d.w *= fermi_density_ratio(m, d.x);
                return d;
              }};
    }
  }
  throw ConstructionError("unsupported model family");
}

/// Orthonormal frame (c, e_1, …, e_n) of R^{n+1} from a Householder reflection.
std::vector<std::vector<double>> frame_at(const Coords& c) {
  const std::size_t d = c.size();
  std::vector<double> w(d);
  for (std::size_t i = 0; i < d; ++i) w[i] = (i == 0 ? 1.0 : 0.0) - c[i];
  double ww = 0.0;
  for (double v : w) ww += v * v;
  std::vector<std::vector<double>> cols(d, std::vector<double>(d, 0.0));
  for (std::size_t j = 0; j < d; ++j)
    for (std::size_t i = 0; i < d; ++i)
      cols[j][i] = (i == j ? 1.0 : 0.0) - (ww > 1e-30 ? 2.0 * w[i] * w[j] / ww : 0.0);
  return cols;
}

/// Samples the set of points whose distance to `center` could lie in
/// [lo, hi]. Exact polar coordinates when the center is an apex, pole or
/// sphere point; otherwise a band of the radial key.
CubeMap band_map(const StratifiedModel& m, const Coords& center, double lo, double hi) {
  const int n = m.dim();
  lo = std::max(lo, 0.0);
  switch (m.family()) {
    case Family::RoundSphere: {
      const double a = std::min(lo, kPi), b = std::min(hi, kPi);
      const double w = (n == 1 ? 2.0 : sphere_volume(n - 1)) * (sin_power_integral(n - 1, b) - sin_power_integral(n - 1, a));
      const auto cols = frame_at(center);
      const std::optional<LinkSpace> dirs = n > 1 ? std::optional(LinkSpace::round_sphere(n - 1)) : std::nullopt;
      return {static_cast<std::size_t>(n), [=](std::span<const double> u) {
                const double t = sin_power_quantile(n - 1, u[0], a, b);
                Coords v;
                if (dirs)
                  v = dirs->from_unit_cube(u.subspan(1));
                else
                  v = Coords{u[0] < 0.5 ? -1.0 : 1.0};
                Coords x;
                for (std::size_t i = 0; i < cols.size(); ++i) {
                  double s = std::cos(t) * cols[0][i];
                  for (std::size_t j = 0; j < v.size(); ++j) s += std::sin(t) * v[j] * cols[j + 1][i];
                  x.push_back(s);
                }
                double norm = 0.0;
                for (double c : x) norm += c * c;
                for (auto& c : x) c /= std::sqrt(norm);
                return Draw{x, w};
              }};
    }
    case Family::EuclideanCone: {
      const double R = m.truncation_radius(), rc = center[0];
      double a = rc == 0.0 ? lo : rc - hi, b = rc == 0.0 ? hi : rc + hi;
      a = std::clamp(a, 0.0, R);
      b = std::clamp(b, 0.0, R);
      const LinkSpace link = m.link();
      const double an = std::pow(a, n), bn = std::pow(b, n);
      const double w = link.volume() * (bn - an) / n;
      return {static_cast<std::size_t>(n), [=](std::span<const double> u) {
                Coords x{std::pow(an + u[0] * (bn - an), 1.0 / n)};
                x.append(link.from_unit_cube(u.subspan(1)));
                return Draw{x, w};
              }};
    }
    case Family::Suspension: {
      const double tc = center[0];
      double a, b;
      if (tc == 0.0) {
        a = lo;
        b = hi;
      } else if (tc == kPi) {
        a = kPi - hi;
        b = kPi - lo;
      } else {
        a = tc - hi;
        b = tc + hi;
      }
      a = std::clamp(a, 0.0, kPi);
      b = std::clamp(b, 0.0, kPi);
      const LinkSpace link = m.link();
      const double w = link.volume() * (sin_power_integral(n - 1, b) - sin_power_integral(n - 1, a));
      return {static_cast<std::size_t>(n), [=](std::span<const double> u) {
                Coords x{sin_power_quantile(n - 1, u[0], a, b)};
                x.append(link.from_unit_cube(u.subspan(1)));
                return Draw{x, w};
              }};
    }
    case Family::FermiSphere: break;
  }
  throw UnsupportedModelError("band sampling is not available for " + m.id());
}

/// Draws a regular point: the singular set has measure zero but rounding can
/// still land on it.
Draw draw_regular(const StratifiedModel* m, const CubeMap& cm, Rng& rng, std::vector<double>& u) {
  for (int attempt = 0; attempt < 64; ++attempt) {
    for (auto& v : u) v = rng.uniform();
    Draw d = cm.map(u);
    if (!m || d.w == 0.0 || m->distance_to_singular(d.x) > 0.0) return d;
  }
  throw NumericalError("sampler keeps landing on the singular set");
}

struct Moments {
  std::vector<double> mean;
  std::vector<double> cov;  // covariance of the means
};

/// Means of Y_j = w f_j(x) over n iid draws, with the covariance of the means.
/// Draws on the singular set of `m` are redrawn (no check when m is null).
Moments mc_moments(const StratifiedModel* m, const CubeMap& cm, std::size_t n, std::uint64_t seed, std::size_t k,
                   const std::function<void(const Coords&, double*)>& f) {
  if (n == 0) throw ArgumentError("sample count must be positive");
  const std::size_t blocks = (n + kBlock - 1) / kBlock;
  struct Partial {
    std::vector<KahanSum> s, ss;
  };
  std::vector<Partial> parts(blocks);
  parallel_for(blocks, [&](std::size_t b) {
    Rng rng(seed, 1 + b);
    std::vector<double> u(cm.dim), y(k);
    Partial p{std::vector<KahanSum>(k), std::vector<KahanSum>(k * k)};
    const std::size_t end = std::min(n, (b + 1) * kBlock);
    for (std::size_t i = b * kBlock; i < end; ++i) {
      const Draw d = draw_regular(m, cm, rng, u);
      std::fill(y.begin(), y.end(), 0.0);
      if (d.w != 0.0) f(d.x, y.data());
      for (std::size_t j = 0; j < k; ++j) {
        y[j] *= d.w;
        p.s[j].add(y[j]);
      }
      for (std::size_t j = 0; j < k; ++j)
        for (std::size_t l = j; l < k; ++l) p.ss[j * k + l].add(y[j] * y[l]);
    }
    parts[b] = std::move(p);
  });
  std::vector<KahanSum> s(k), ss(k * k);
  for (const auto& p : parts) {
    for (std::size_t j = 0; j < k; ++j) s[j].add(p.s[j].value());
    for (std::size_t j = 0; j < k * k; ++j) ss[j].add(p.ss[j].value());
  }
  Moments out;
  const double N = static_cast<double>(n);
  out.mean.resize(k);
  out.cov.assign(k * k, 0.0);
  for (std::size_t j = 0; j < k; ++j) out.mean[j] = s[j].value() / N;
  if (n > 1)
    for (std::size_t j = 0; j < k; ++j)
      for (std::size_t l = j; l < k; ++l) {
        const double c = (ss[j * k + l].value() / N - out.mean[j] * out.mean[l]) * N / (N - 1.0) / N;
        out.cov[j * k + l] = out.cov[l * k + j] = std::max(c, j == l ? 0.0 : -kInf);
      }
  return out;
}

std::filesystem::path cache_file(const StratifiedModel& m, std::size_t n, std::uint64_t seed) {
  const char* dir = std::getenv("STRATLAB_CACHE_DIR");
  if (!dir || !*dir) return {};
  return std::filesystem::path(dir) / (m.hash() + "_" + std::to_string(seed) + "_" + std::to_string(n) + ".cloud");
}

SampleCloud make_cloud(const StratifiedModel& m, std::size_t n, std::uint64_t seed, bool qmc) {
  if (n == 0) throw ArgumentError("sample count must be positive");
  const CubeMap cm = full_map(m);
  SampleCloud c;
  c.model_id = m.id();
  c.model_hash = m.hash();
  c.seed = seed;
  c.quasi_random = qmc;
  c.points.resize(n);
  c.weights.resize(n);
  if (qmc) {
    const HaltonSequence h(cm.dim, seed);
    std::uint64_t next = n;
    for (std::size_t i = 0; i < n; ++i) {
      Draw d = cm.map(h.point(i));
      while (m.distance_to_singular(d.x) == 0.0) d = cm.map(h.point(next++));
      c.points[i] = d.x;
      c.weights[i] = d.w / static_cast<double>(n);
    }
  } else {
    const std::size_t blocks = (n + kBlock - 1) / kBlock;
    parallel_for(blocks, [&](std::size_t b) {
      Rng rng(seed, 1 + b);
      std::vector<double> u(cm.dim);
      const std::size_t end = std::min(n, (b + 1) * kBlock);
      for (std::size_t i = b * kBlock; i < end; ++i) {
        const Draw d = draw_regular(&m, cm, rng, u);
        c.points[i] = d.x;
        c.weights[i] = d.w / static_cast<double>(n);
      }
    });
  }
  KahanSum t;
  for (double w : c.weights) t.add(w);
  c.total_weight = t.value();
  return c;
}

template <class T>
void put(std::ostream& o, const T& v) {
  o.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <class T>
T get(std::istream& i) {
  T v{};
  i.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!i) throw ArgumentError("truncated sample cache");
  return v;
}
constexpr std::uint64_t kMagic = 0x31444c43424c5453ULL;  // "STLBCLD1"

void write_string(std::ostream& o, const std::string& s) {
  put<std::uint64_t>(o, s.size());
  o.write(s.data(), static_cast<std::streamsize>(s.size()));
}
std::string read_string(std::istream& i) {
  const auto len = get<std::uint64_t>(i);
  if (len > (1u << 20)) throw ArgumentError("corrupt sample cache");
  std::string s(len, '\0');
  i.read(s.data(), static_cast<std::streamsize>(len));
  return s;
}

void check_radius(double r) {
  if (!(r >= 0.0)) throw ArgumentError("radius must be nonnegative");
}

}  // namespace

// ---------------------------------------------------------------------------

void SampleCloud::save(const std::filesystem::path& file) const {
  const auto tmp = file.string() + ".tmp";
  {
    std::ofstream o(tmp, std::ios::binary);
    if (!o) throw ArgumentError("cannot write " + tmp);
    put(o, kMagic);
    write_string(o, model_id);
    write_string(o, model_hash);
    put(o, seed);
    put<std::uint8_t>(o, quasi_random ? 1 : 0);
    put<std::uint64_t>(o, points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
      put<std::uint8_t>(o, static_cast<std::uint8_t>(points[i].size()));
      for (double v : points[i]) put(o, v);
      put(o, weights[i]);
    }
  }
  std::filesystem::rename(tmp, file);
}

SampleCloud SampleCloud::load(const std::filesystem::path& file) {
  std::ifstream i(file, std::ios::binary);
  if (!i) throw ArgumentError("cannot read " + file.string());
  if (get<std::uint64_t>(i) != kMagic) throw ArgumentError("not a sample cache: " + file.string());
  SampleCloud c;
  c.model_id = read_string(i);
  c.model_hash = read_string(i);
  c.seed = get<std::uint64_t>(i);
  c.quasi_random = get<std::uint8_t>(i) != 0;
  const auto n = get<std::uint64_t>(i);
  c.points.resize(n);
  c.weights.resize(n);
  KahanSum t;
  for (std::size_t k = 0; k < n; ++k) {
    const auto len = get<std::uint8_t>(i);
    if (len > Coords::kCapacity) throw ArgumentError("corrupt sample cache");
    for (int j = 0; j < len; ++j) c.points[k].push_back(get<double>(i));
    c.weights[k] = get<double>(i);
    t.add(c.weights[k]);
  }
  c.total_weight = t.value();
  return c;
}

std::size_t sample_dimension(const StratifiedModel& model) { return full_map(model).dim; }

SampleCloud sample_points(const StratifiedModel& model, std::size_t n, std::uint64_t seed) {
  const auto file = cache_file(model, n, seed);
  if (!file.empty() && std::filesystem::exists(file)) {
    try {
      SampleCloud c = SampleCloud::load(file);
      if (c.model_hash == model.hash() && c.seed == seed && c.size() == n && !c.quasi_random) return c;
    } catch (const ArgumentError&) {
      // fall through and regenerate
    }
  }
  SampleCloud c = make_cloud(model, n, seed, false);
  if (!file.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(file.parent_path(), ec);
    try {
      c.save(file);
    } catch (const std::exception& e) {
      std::clog << "warning: sample cache not written: " << e.what() << '\n';
    }
  }
  return c;
}

SampleCloud qmc_cloud(const StratifiedModel& model, std::size_t n, std::uint64_t seed) {
  return make_cloud(model, n, seed, true);
}

// ---------------------------------------------------------------------------

BallVolumeSeries ball_volumes_mc(const StratifiedModel& model, const Coords& center, const std::vector<double>& radii,
                                 std::size_t n, std::uint64_t seed, SamplingScheme scheme) {
  if (model.family() == Family::FermiSphere)
    throw UnsupportedModelError("exact balls are not available on the Fermi sphere; use fermi_round_ball_volumes");
  model.validate_point(center);
  if (radii.empty()) throw ArgumentError("no radii given");
  for (double r : radii) check_radius(r);
  const double rmax = *std::max_element(radii.begin(), radii.end());
  const CubeMap cm = scheme == SamplingScheme::Band ? band_map(model, center, 0.0, rmax) : full_map(model);
  const std::size_t k = radii.size();
  const Moments mo = mc_moments(&model, cm, n, seed, k, [&](const Coords& x, double* y) {
    const double d = model_distance(model, center, x);
    for (std::size_t j = 0; j < k; ++j) y[j] = d < radii[j] ? 1.0 : 0.0;
  });
  BallVolumeSeries s;
  s.radii = radii;
  s.estimates = mo.mean;
  s.covariance = mo.cov;
  for (std::size_t j = 0; j < k; ++j) s.stderrs.push_back(std::sqrt(mo.cov[j * k + j]));
  s.samples = n;
  s.seed = seed;
  return s;
}

VolumeEstimate ball_volume_mc(const StratifiedModel& model, const Coords& center, double r, std::size_t n,
                              std::uint64_t seed, SamplingScheme scheme) {
  const auto s = ball_volumes_mc(model, center, {r}, n, seed, scheme);
  return {s.estimates[0], s.stderrs[0], r, n, seed};
}

double fermi_lipschitz_constant(const StratifiedModel& model) {
  if (model.family() != Family::FermiSphere) return 1.0;
  const double eb = model.blend_radius();
  double hi = 1.0, lo = 1.0;
  for (int i = 1; i <= 400; ++i) {
    const double r = eb * i / 400.0;
    for (int j = 0; j < 64; ++j) {
      const double phi = kTwoPi * j / 64.0;
      const auto g = fermi_blend_metric(model, r, 0.0, phi);
      const auto g0 = fermi_metric(model.beta(), r, 0.0, phi);
      for (int d = 1; d < 3; ++d) {
        const double q = g.at(d, d) / g0.at(d, d);
        hi = std::max(hi, q);
        lo = std::min(lo, q);
      }
    }
  }
  return std::sqrt(std::max(hi, 1.0 / lo));
}

BallVolumeSeries fermi_round_ball_volumes(const StratifiedModel& model, const Coords& center,
                                          const std::vector<double>& radii, std::size_t n, std::uint64_t seed) {
  if (model.family() != Family::FermiSphere) throw ArgumentError("fermi_round_ball_volumes needs a FermiSphere");
  model.validate_point(center);
  const CubeMap cm = full_map(model);
  const std::size_t k = radii.size();
  const Moments mo = mc_moments(&model, cm, n, seed, k, [&](const Coords& x, double* y) {
    const double d = round_distance(center.view(), x.view());
    for (std::size_t j = 0; j < k; ++j) y[j] = d < radii[j] ? 1.0 : 0.0;
  });
  BallVolumeSeries s;
  s.radii = radii;
  s.estimates = mo.mean;
  s.covariance = mo.cov;
  for (std::size_t j = 0; j < k; ++j) s.stderrs.push_back(std::sqrt(mo.cov[j * k + j]));
  s.samples = n;
  s.seed = seed;
  return s;
}

CheckReport ahlfors_check(const StratifiedModel& model, const Coords& x, const std::vector<double>& radii,
                          std::size_t n, std::uint64_t seed) {
  if (radii.empty()) throw ArgumentError("no radii given");
  const int dim = model.dim();
  const double omega = unit_ball_volume(dim);
  CheckReport rep;
  rep.name = "ahlfors";
  rep.model_id = model.id();
  rep.model_hash = model.hash();
  rep.samples = n;
  rep.seed = seed;
  double C = 1.0;
  if (model.family() == Family::FermiSphere) {
    const double L = fermi_lipschitz_constant(model);
    std::vector<double> rr;
    for (double r : radii) {
      rr.push_back(r / L);
      rr.push_back(r * L);
    }
    const auto s = fermi_round_ball_volumes(model, x, rr, n, seed);
    for (std::size_t i = 0; i < radii.size(); ++i) {
      const double e = omega * std::pow(radii[i], dim);
      const double lower = s.estimates[2 * i] / e, upper = s.estimates[2 * i + 1] / e;
      C = std::max({C, upper, lower > 0.0 ? 1.0 / lower : kInf});
      rep.diagnostics["q_lower(r=" + std::to_string(radii[i]) + ")"] = lower;
      rep.diagnostics["q_upper(r=" + std::to_string(radii[i]) + ")"] = upper;
    }
    rep.diagnostics["lipschitz"] = L;
    rep.notes["balls"] = "bracketed by round balls of radii r/L and rL";
  } else {
    // One band per radius: C is a max over ratios, so small balls must not
    // ride on samples drawn for large ones.
    for (std::size_t i = 0; i < radii.size(); ++i) {
      const auto v = ball_volume_mc(model, x, radii[i], n, derive_seed(seed, i), SamplingScheme::Band);
      const double q = v.estimate / (omega * std::pow(radii[i], dim));
      C = std::max({C, q, q > 0.0 ? 1.0 / q : kInf});
      rep.diagnostics["q(r=" + std::to_string(radii[i]) + ")"] = q;
    }
  }
  rep.diagnostics["C"] = C;
  rep.margin = std::isfinite(C) ? 1.0 / C : -1.0;
  rep.tolerance = 0.0;
  return rep.decide();
}

DoublingEstimate doubling_ratio(const StratifiedModel& model, const Coords& x, double r, std::size_t n,
                                std::uint64_t seed) {
  check_radius(r);
  DoublingEstimate out;
  BallVolumeSeries s;
  if (model.family() == Family::FermiSphere) {
    const double L = fermi_lipschitz_constant(model);
    s = fermi_round_ball_volumes(model, x, {r / L, 2.0 * r * L}, n, seed);
    out.bound_only = true;
  } else {
    s = ball_volumes_mc(model, x, {r, 2.0 * r}, n, seed, SamplingScheme::Band);
  }
  const double e1 = s.estimates[0], e2 = s.estimates[1];
  if (e1 <= 0.0) {
    out.ratio = kInf;
    out.stderr_ = kInf;
    return out;
  }
  out.ratio = e2 / e1;
  const double rel = s.cov(0, 0) / (e1 * e1) + (e2 > 0.0 ? s.cov(1, 1) / (e2 * e2) - 2.0 * s.cov(0, 1) / (e1 * e2) : 0.0);
  out.stderr_ = out.ratio * std::sqrt(std::max(rel, 0.0));
  return out;
}

// ---------------------------------------------------------------------------

VolumeEstimate tubular_volume(const StratifiedModel& model, double eps, std::size_t n, std::uint64_t seed) {
  if (!(eps > 0.0)) throw ArgumentError("tubular_volume: ε must be positive");
  VolumeEstimate out{0.0, 0.0, eps, n, seed};
  if (!model.has_singular_set()) return out;
  const bool circle_link = model.family() != Family::FermiSphere && model.link().kind() == LinkSpace::Kind::Circle;
  auto one = [](const Coords&, double* y) { y[0] = 1.0; };
  Moments mo;
  if (model.family() == Family::FermiSphere) {
    if (eps >= fermi_max_radius(model.beta())) throw ArgumentError("ε exceeds the Fermi chart range");
    // (r, θ, φ) with r ∝ r dr on [0, ε]; the weight is √det g over that density.
    const CubeMap cm{3, [&](std::span<const double> u) {
                       const double r = eps * std::sqrt(u[0]), th = kTwoPi * u[1], ph = kTwoPi * u[2];
                       const double q = 2.0 * r / (eps * eps) / (4.0 * kPi * kPi);
                       return Draw{Coords{r, th, ph}, fermi_blend_metric(model, r, th, ph).density / q};
                     }};
    // Chart points have r > 0, so they are never on Σ.
    mo = mc_moments(nullptr, cm, n, seed, 1, one);
  } else if (model.family() == Family::EuclideanCone && circle_link) {
    Coords apex{0.0};
    mo = mc_moments(&model, band_map(model, apex, 0.0, eps), n, seed, 1, one);
  } else if (model.family() == Family::Suspension && circle_link) {
    Coords pole{0.0, 0.0};
    mo = mc_moments(&model, band_map(model, pole, 0.0, std::min(eps, 0.5 * kPi)), n, seed, 1, one);
    mo.mean[0] *= 2.0;
    mo.cov[0] *= 4.0;
  } else {
    mo = mc_moments(&model, full_map(model), n, seed, 1,
                    [&](const Coords& x, double* y) { y[0] = model.distance_to_singular(x) < eps ? 1.0 : 0.0; });
  }
  out.estimate = mo.mean[0];
  out.stderr_ = std::sqrt(mo.cov[0]);
  return out;
}

Region Region::pole_sublevel(const StratifiedModel& model, double t0) {
  if (model.family() != Family::Suspension) throw ArgumentError("pole sublevels need a suspension model");
  std::vector<double> half(static_cast<std::size_t>(model.link().dim()), 0.5);
  Coords pole{0.0};
  pole.append(model.link().from_unit_cube(half));
  return ball(pole, t0);
}

MinkowskiEstimate minkowski_content(const StratifiedModel& model, const Region& region,
                                    const std::vector<double>& eps_ladder, std::size_t n, std::uint64_t seed) {
  if (eps_ladder.empty()) throw ArgumentError("empty ε ladder");
  for (std::size_t i = 0; i < eps_ladder.size(); ++i)
    if (!(eps_ladder[i] > 0.0) || (i > 0 && !(eps_ladder[i] < eps_ladder[i - 1])))
      throw ArgumentError("ε ladder must be positive and strictly decreasing");
  MinkowskiEstimate out;
  out.eps = eps_ladder;
  const std::size_t k = eps_ladder.size();
  if (region.kind == Region::Kind::Empty) {
    out.quotients.assign(k, 0.0);
    out.stderrs.assign(k, 0.0);
    return out;
  }
  if (model.family() == Family::FermiSphere) throw UnsupportedModelError("no exact balls on the Fermi sphere");
  model.validate_point(region.center);
  const double rho = region.radius;
  const CubeMap cm = band_map(model, region.center, rho, rho + eps_ladder[0]);
  const Moments mo = mc_moments(&model, cm, n, seed, k, [&](const Coords& x, double* y) {
    const double d = model_distance(model, region.center, x);
    for (std::size_t j = 0; j < k; ++j) y[j] = (d >= rho && d < rho + eps_ladder[j]) ? 1.0 : 0.0;
  });
  const double vol = model.volume();
  for (std::size_t j = 0; j < k; ++j) {
    out.quotients.push_back(mo.mean[j] / (vol * eps_ladder[j]));
    out.stderrs.push_back(std::sqrt(mo.cov[j * k + j]) / (vol * eps_ladder[j]));
  }
  // Linear extrapolation to ε = 0 from consecutive ladder pairs.
  std::vector<double> ext;
  for (std::size_t j = 0; j + 1 < k; ++j) {
    const double e0 = eps_ladder[j], e1 = eps_ladder[j + 1];
    const double q0 = out.quotients[j], q1 = out.quotients[j + 1];
    ext.push_back(q1 - e1 * (q0 - q1) / (e0 - e1));
  }
  out.estimate = ext.empty() ? out.quotients[0] : ext.back();
  if (k == 1) {
    out.stderr_ = out.stderrs[0];
  } else {
    // ext = (1 + c) q1 − c q0 with c = e1 / (e0 − e1); variance from the joint covariance.
    const std::size_t i0 = k - 2, i1 = k - 1;
    const double c = eps_ladder[i1] / (eps_ladder[i0] - eps_ladder[i1]);
    const double s = 1.0 / (vol * vol);
    const double a0 = -c / eps_ladder[i0], a1 = (1.0 + c) / eps_ladder[i1];
    const double var = s * (a0 * a0 * mo.cov[i0 * k + i0] + a1 * a1 * mo.cov[i1 * k + i1] +
                            2.0 * a0 * a1 * mo.cov[i0 * k + i1]);
    out.stderr_ = std::sqrt(std::max(var, 0.0));
  }
  if (ext.size() >= 2) out.ladder_change = std::abs(ext.back() - ext[ext.size() - 2]);
  return out;
}

// ---------------------------------------------------------------------------

double sin_k(double k, double t) {
  if (k > 0.0) return std::sin(std::sqrt(k) * t) / std::sqrt(k);
  if (k < 0.0) return std::sinh(std::sqrt(-k) * t) / std::sqrt(-k);
  return t;
}

double model_ball_volume(int n, double k, double r) {
  if (n < 1) throw ArgumentError("dimension must be positive");
  check_radius(r);
  if (k > 0.0 && r > kPi / std::sqrt(k)) {
    std::clog << "warning: radius " << r << " exceeds the model sphere; clamped to π/√k\n";
    r = kPi / std::sqrt(k);
  }
  const auto q = integrate([&](double t) { return std::pow(sin_k(k, t), n - 1); }, 0.0, r, 1e-10, 1e-14);
  return n * unit_ball_volume(n) * q.value;
}

std::string volume_csv_header() { return "model,center,r,estimate,stderr,n,seed"; }

std::string volume_csv_row(const StratifiedModel& model, const Coords& center, const VolumeEstimate& v) {
  std::ostringstream o;
  o.precision(12);
  o << '"' << model.id() << "\",\"" << to_string(center) << "\"," << v.radius << ',' << v.estimate << ','
    << v.stderr_ << ',' << v.samples << ',' << v.seed;
  return o.str();
}

}  // namespace stratlab
