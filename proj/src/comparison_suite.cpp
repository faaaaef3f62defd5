#include "stratlab/comparison_suite.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace stratlab {

namespace {

CheckReport start_report(const std::string& name, const StratifiedModel& model, std::uint64_t samples,
                         std::uint64_t seed) {
  CheckReport r;
  r.name = name;
  r.model_id = model.id();
  r.model_hash = model.hash();
  r.samples = samples;
  r.seed = seed;
  return r;
}

std::string idx(const std::string& stem, std::size_t i) { return stem + "_" + std::to_string(i); }

bool flat_cone(const StratifiedModel& m) {
  return m.family() == Family::EuclideanCone && m.link().kind() == LinkSpace::Kind::Circle;
}

bool suspended_circle(const StratifiedModel& m) {
  return m.family() == Family::Suspension && m.link().kind() == LinkSpace::Kind::Circle;
}

ConePoint cone_point(const Coords& c) { return {c[0], c[0] > 0.0 ? c.tail(1) : Coords{0.0}}; }

double cot_k(double k, double d) {
  if (k > 0.0) return std::sqrt(k) / std::tan(std::sqrt(k) * d);
  if (k < 0.0) return std::sqrt(-k) / std::tanh(std::sqrt(-k) * d);
  return 1.0 / d;
}

double integral(const std::vector<double>& mu, const std::vector<double>& f) {
  KahanSum s;
  for (std::size_t i = 0; i < f.size(); ++i) s.add(mu[i] * f[i]);
  return s.value();
}

std::array<double, 3> suspension_embed(double t, double theta) {
  return {std::sin(t) * std::cos(theta), std::sin(t) * std::sin(theta), std::cos(t)};
}

double dot3(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

double angle3(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  const std::array<double, 3> c{a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
  return std::atan2(std::sqrt(dot3(c, c)), dot3(a, b));
}

// Distance from the poles to the minimizing geodesic of Susp(Circle(a)).
double suspension_circle_pole_distance(const StratifiedModel& m, const Coords& p, const Coords& q) {
  const double alpha = kTwoPi * m.link().radius();
  const double delta = std::abs(circle_offset(alpha, p[1], q[1]));
  const double t1 = p[0], t2 = q[0];
  const double ends = std::min({t1, kPi - t1, t2, kPi - t2});
  if (delta >= kPi) return 0.0;
  const auto P = suspension_embed(t1, 0.0), Q = suspension_embed(t2, delta);
  std::array<double, 3> n{P[1] * Q[2] - P[2] * Q[1], P[2] * Q[0] - P[0] * Q[2], P[0] * Q[1] - P[1] * Q[0]};
  const double nn = std::sqrt(dot3(n, n));
  if (nn < 1e-15) return ends;
  for (auto& v : n) v /= nn;
  // Closest point of the great circle to the north pole, and its antipode for the south pole.
  std::array<double, 3> c{-n[2] * n[0], -n[2] * n[1], 1.0 - n[2] * n[2]};
  const double cn = std::sqrt(dot3(c, c));
  if (cn < 1e-15) return ends;
  for (auto& v : c) v /= cn;
  const double pq = angle3(P, Q);
  double best = ends;
  for (int s : {1, -1}) {
    const std::array<double, 3> cs{s * c[0], s * c[1], s * c[2]};
    if (std::abs(angle3(P, cs) + angle3(cs, Q) - pq) < 1e-9) best = std::min(best, std::asin(std::min(1.0, std::abs(n[2]))));
  }
  return best;
}

std::array<double, 4> slerp4(std::span<const double> a, std::span<const double> b, double t) {
  double d = 0.0;
  for (int i = 0; i < 4; ++i) d += a[i] * b[i];
  const double w = std::acos(std::clamp(d, -1.0, 1.0));
  std::array<double, 4> out{};
  if (w < 1e-12) {
    for (int i = 0; i < 4; ++i) out[i] = a[i];
    return out;
  }
  const double sa = std::sin((1.0 - t) * w) / std::sin(w), sb = std::sin(t * w) / std::sin(w);
  double nrm = 0.0;
  for (int i = 0; i < 4; ++i) {
    out[i] = sa * a[i] + sb * b[i];
    nrm += out[i] * out[i];
  }
  nrm = std::sqrt(nrm);
  for (auto& v : out) v /= nrm;
  return out;
}

double slope_of(const std::vector<double>& eps, const std::vector<double>& frac) {
  std::vector<double> x, y;
  for (std::size_t i = 0; i < eps.size(); ++i)
    if (frac[i] > 0.0) {
      x.push_back(std::log(eps[i]));
      y.push_back(std::log(frac[i]));
    }
  if (x.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  return fit_line(x, y).slope;
}

}  // namespace

// ---------------------------------------------------------------------------

CheckReport bishop_gromov_check(const StratifiedModel& model, const Coords& x, const std::vector<double>& radii,
                                double K, int n, std::size_t samples, std::uint64_t seed, double z_tol) {
  if (radii.size() < 2) throw ArgumentError("bishop_gromov_check needs at least two radii");
  for (std::size_t i = 1; i < radii.size(); ++i)
    if (!(radii[i] > radii[i - 1])) throw ArgumentError("radii must be strictly increasing");
  if (n < 2) throw ArgumentError("bishop_gromov_check needs n ≥ 2");
  const double k = K / (n - 1);
  auto rep = start_report("bishop_gromov", model, samples, seed);
  std::vector<double> q(radii.size()), s(radii.size());
  for (std::size_t i = 0; i < radii.size(); ++i) {
    const auto v = ball_volume_mc(model, x, radii[i], samples, derive_seed(seed, i), SamplingScheme::Band);
    const double ref = model_ball_volume(n, k, radii[i]);
    q[i] = v.estimate / ref;
    s[i] = v.stderr_ / ref;
    rep.diagnostics[idx("ratio", i)] = q[i];
    rep.diagnostics[idx("stderr", i)] = s[i];
  }
  auto z = [&](std::size_t i, std::size_t j) {
    const double sd = std::max(std::hypot(s[i], s[j]), 1e-12 * std::max(std::abs(q[i]), std::abs(q[j])));
    return (q[i] - q[j]) / sd;
  };
  double worst = kInf;
  for (std::size_t i = 0; i < radii.size(); ++i)
    for (std::size_t j = i + 1; j < radii.size(); ++j) worst = std::min(worst, z(i, j));
  rep.diagnostics["z_first_last"] = -z(0, radii.size() - 1);
  rep.margin = worst;
  rep.tolerance = z_tol;
  rep.notes["units"] = "margin in combined standard errors";
  return rep.decide();
}

// ---------------------------------------------------------------------------

CheckReport laplacian_comparison_check(const StratifiedModel& model, const Coords& x, double k, int n,
                                       const DiscreteApproximation& approx, double tol_factor) {
  if (approx.model_hash != model.hash()) throw ArgumentError("approximation was built on a different model");
  if (n < 2) throw ArgumentError("laplacian_comparison_check needs n ≥ 2");
  const std::size_t N = approx.size();
  const double eps = approx.eps;
  std::vector<double> d(N);
  for (std::size_t i = 0; i < N; ++i) d[i] = model_distance(model, x, approx.nodes[i]);

  const auto coarse = rescale_graph(model, approx, 2.0);
  const auto l1 = approx.laplacian(d);
  const auto l2 = coarse.laplacian(d);
  const auto grad = carre_du_champ(approx, d);
  const double diam = model.diameter();

  std::vector<char> masked(N, 0);
  std::size_t kept = 0;
  for (std::size_t i = 0; i < N; ++i) {
    const Coords& p = approx.nodes[i];
    const bool m = d[i] < 4.0 * eps || model.distance_to_singular(p) < 2.0 * eps ||
                   model.distance_to_boundary(p) < 4.0 * eps || d[i] >= diam - 5.0 * eps ||
                   std::sqrt(grad[i]) < 1.0 - 10.0 * eps;
    masked[i] = m ? 1 : 0;
    if (!m) ++kept;
  }
  if (kept == 0) throw ResolutionError("every node is masked; refine the approximation");

  KahanSum err2;
  double worst = -kInf, worst_abs = 0.0, mask_worst = -kInf;
  for (std::size_t i = 0; i < N; ++i) {
    const double lap = -l1[i];
    const double bound = (n - 1) * cot_k(k, d[i]);
    const double v = lap - bound;
    if (masked[i]) {
      if (std::isfinite(v)) mask_worst = std::max(mask_worst, v);
      continue;
    }
    err2.add((l1[i] - l2[i]) * (l1[i] - l2[i]));
    worst = std::max(worst, v);
    worst_abs = std::max(worst_abs, std::abs(v));
  }
  const double err = std::sqrt(err2.value() / static_cast<double>(kept));

  auto rep = start_report("laplacian_comparison", model, N, approx.seed);
  rep.margin = -worst;
  rep.tolerance = tol_factor * err;
  rep.diagnostics["max_violation"] = worst;
  rep.diagnostics["max_abs_deviation"] = worst_abs;
  rep.diagnostics["error_estimate"] = err;
  rep.diagnostics["unmasked_nodes"] = static_cast<double>(kept);
  rep.diagnostics["masked_fraction"] = 1.0 - static_cast<double>(kept) / static_cast<double>(N);
  rep.diagnostics["mask_max_violation"] = mask_worst;
  rep.notes["mask"] = "reported only";
  return rep.decide();
}

// ---------------------------------------------------------------------------

double sphere_isoperimetric_profile(int n, double beta) {
  if (n < 1) throw ArgumentError("dimension must be positive");
  if (!(beta >= 0.0 && beta <= 1.0)) throw ArgumentError("β must lie in [0, 1]");
  if (beta == 0.0 || beta == 1.0) return 0.0;
  const double total = sin_power_integral(n - 1, kPi);
  const double r = solve_monotone([&](double t) { return sin_power_integral(n - 1, t) / total - beta; }, 0.0, kPi);
  return std::pow(std::sin(r), n - 1) / total;
}

CheckReport levy_gromov_check(const StratifiedModel& model, const Region& region, int n, std::size_t samples,
                              std::uint64_t seed, std::vector<double> eps_ladder) {
  if (region.kind != Region::Kind::Ball) throw ArgumentError("levy_gromov_check supports ball regions only");
  const auto kr = model.k_reg();
  if (!kr || std::abs(*kr - (n - 1)) > 1e-9)
    throw PreconditionError("levy_gromov_check needs K_reg normalized to n − 1");
  const auto vol = ball_volume_mc(model, region.center, region.radius, samples, derive_seed(seed, 1),
                                  SamplingScheme::Band);
  const double total = model.volume();
  const double beta = std::clamp(vol.estimate / total, 0.0, 1.0);
  const double sb = vol.stderr_ / total;
  const double bound = sphere_isoperimetric_profile(n, beta);
  // Bound uncertainty from β by a central difference of the profile.
  double slope = 0.0;
  if (sb > 0.0) {
    const double h = std::min({sb, beta / 2.0, (1.0 - beta) / 2.0});
    if (h > 0.0)
      slope = (sphere_isoperimetric_profile(n, beta + h) - sphere_isoperimetric_profile(n, beta - h)) / (2.0 * h);
  }
  const auto mk = minkowski_content(model, region, eps_ladder, samples, derive_seed(seed, 2));
  const double sd = std::hypot(mk.stderr_, slope * sb);

  auto rep = start_report("levy_gromov", model, samples, seed);
  rep.margin = mk.estimate - bound;
  rep.tolerance = 3.0 * sd;
  rep.diagnostics["beta"] = beta;
  rep.diagnostics["content"] = mk.estimate;
  rep.diagnostics["content_stderr"] = mk.stderr_;
  rep.diagnostics["bound"] = bound;
  rep.diagnostics["relative_deviation"] = bound > 0.0 ? (mk.estimate - bound) / bound : 0.0;
  rep.diagnostics["ladder_change"] = mk.ladder_change;
  return rep.decide();
}

// ---------------------------------------------------------------------------

CutoffResult cutoff_family(const StratifiedModel& model, double eps, const DiscreteApproximation& approx,
                           double injectivity_scale) {
  if (injectivity_scale <= 0.0) {
    switch (model.family()) {
      case Family::EuclideanCone: injectivity_scale = model.truncation_radius(); break;
      case Family::Suspension: injectivity_scale = 0.5 * kPi; break;
      case Family::FermiSphere: injectivity_scale = 0.5 * model.blend_radius(); break;
      case Family::RoundSphere: injectivity_scale = kInf; break;
    }
  }
  if (!(eps > 0.0 && eps < 1.0)) throw ArgumentError("cut-off ε must lie in (0, 1)");
  if (eps >= injectivity_scale) throw ArgumentError("cut-off ε reaches the injectivity scale");
  CutoffResult out;
  out.eps = eps;
  out.values.assign(approx.size(), 1.0);
  if (!model.has_singular_set()) return out;
  const double lo = eps * eps, span = std::log(1.0 / eps);
  for (std::size_t i = 0; i < approx.size(); ++i) {
    const double d = model.distance_to_singular(approx.nodes[i]);
    out.values[i] = d <= lo ? 0.0 : (d >= eps ? 1.0 : std::log(d / lo) / span);
  }
  const auto mu = approx.stationary_measure();
  out.grad_l2_sq_raw = integral(mu, carre_du_champ(approx, out.values));
  // The kernel form loses energy linearly in the bandwidth at the two kinks of ρ_ε.
  // The graph may live on a truncated copy of the model, so rebuild directly.
  SampleCloud cloud;
  cloud.points = approx.nodes;
  cloud.weights = approx.mass;
  cloud.total_weight = std::accumulate(approx.mass.begin(), approx.mass.end(), 0.0);
  auto wide = build_graph(model, cloud, 2.0 * approx.eps);
  wide.volume = approx.volume;
  const double coarse = integral(wide.stationary_measure(), carre_du_champ(wide, out.values));
  out.grad_l2_sq = 2.0 * out.grad_l2_sq_raw - coarse;
  auto lap = approx.laplacian(out.values);
  for (auto& v : lap) v = std::abs(v);
  out.lap_l1 = integral(mu, lap);
  return out;
}

DiscreteApproximation cutoff_approximation(const StratifiedModel& model, double eps, std::uint64_t seed,
                                           double scale, double neighbours, std::size_t max_nodes) {
  if (!flat_cone(model)) throw ArgumentError("cutoff_approximation needs a flat cone");
  if (!(eps > 0.0 && eps < 1.0)) throw ArgumentError("cut-off ε must lie in (0, 1)");
  const double h = scale * eps * eps;
  const double R = eps + 8.0 * h;
  if (R > model.truncation_radius()) throw ArgumentError("cut-off region exceeds the truncated cone");
  const auto part = StratifiedModel::euclidean_cone(model.link(), R);
  const double nodes = neighbours * part.volume() / (unit_ball_volume(2) * 16.0 * h * h);
  if (nodes > static_cast<double>(max_nodes))
    throw ResolutionError("cut-off graph would need " + std::to_string(static_cast<std::size_t>(nodes)) + " nodes");
  const auto cloud = qmc_cloud(part, static_cast<std::size_t>(std::ceil(nodes)), seed);
  auto g = build_graph(part, cloud, h);
  return g;
}

// ---------------------------------------------------------------------------

std::vector<double> bochner_test_function(const SpectralData& spectral, std::size_t k, double weight) {
  if (k >= spectral.count()) throw ArgumentError("eigenfunction index out of range");
  if (!(weight >= 0.0)) throw ArgumentError("weight must be nonnegative");
  const auto& f = spectral.eigenvectors[k];
  double top = 0.0;
  for (double v : f) top = std::max(top, std::abs(v));
  std::vector<double> psi(f.size(), 1.0);
  if (top > 0.0)
    for (std::size_t i = 0; i < f.size(); ++i) psi[i] += weight * std::max(f[i], 0.0) / top;
  return psi;
}

namespace {

struct BochnerTerms {
  double lhs = 0.0, rhs = 0.0;
};

template <class Op>
BochnerTerms bochner_terms(const Op& op, const std::vector<double>& mu, const std::vector<double>& u,
                           const std::vector<double>& psi, double K, double N) {
  const std::size_t n = u.size();
  const auto lu = op(u);
  const auto lpsi = op(psi);
  std::vector<double> uu(n), ulu(n);
  for (std::size_t i = 0; i < n; ++i) {
    uu[i] = u[i] * u[i];
    ulu[i] = u[i] * lu[i];
  }
  const auto l_uu = op(uu);
  const auto llu = op(lu);
  const auto l_ulu = op(ulu);
  KahanSum a, b, c, d;
  for (std::size_t i = 0; i < n; ++i) {
    // Γ(f, g) = ½(f Lg + g Lf − L(fg)) for the positive operator L.
    const double gu = u[i] * lu[i] - 0.5 * l_uu[i];
    const double gulu = 0.5 * (u[i] * llu[i] + lu[i] * lu[i] - l_ulu[i]);
    a.add(mu[i] * (-0.5 * lpsi[i] * gu));
    b.add(mu[i] * psi[i] * gulu);
    c.add(mu[i] * psi[i] * gu);
    d.add(mu[i] * psi[i] * lu[i] * lu[i]);
  }
  return {a.value() + b.value(), K * c.value() + d.value() / N};
}

}  // namespace

CheckReport bochner_check(const DiscreteApproximation& approx, const DiscreteApproximation& wide,
                          const SpectralData& spectral, const std::vector<double>& u, const std::vector<double>& psi,
                          double K, double N, double tol_factor) {
  const std::size_t n = approx.size();
  if (u.size() != n || psi.size() != n || spectral.measure.size() != n)
    throw ArgumentError("bochner_check: size mismatch");
  if (wide.size() != n || wide.model_hash != approx.model_hash || !(wide.eps > approx.eps))
    throw ArgumentError("bochner_check: wide graph must share the nodes at a larger bandwidth");
  if (!(N > 0.0)) throw ArgumentError("N must be positive");
  for (double p : psi)
    if (!(p >= 0.0)) throw PreconditionError("ψ must be nonnegative at every node");
  const auto& mu = spectral.measure;
  {
    std::vector<double> r = u;
    for (const auto& f : spectral.eigenvectors) {
      KahanSum s;
      for (std::size_t i = 0; i < n; ++i) s.add(mu[i] * u[i] * f[i]);
      for (std::size_t i = 0; i < n; ++i) r[i] -= s.value() * f[i];
    }
    const double nr = std::sqrt(std::abs(integral(mu, [&] {
      std::vector<double> sq(n);
      for (std::size_t i = 0; i < n; ++i) sq[i] = r[i] * r[i];
      return sq;
    }())));
    double nu = 0.0;
    for (std::size_t i = 0; i < n; ++i) nu += mu[i] * u[i] * u[i];
    if (nr > 1e-6 * std::sqrt(nu) + 1e-12) throw PreconditionError("u is not in the span of the computed eigenvectors");
  }
  auto L = [&](const std::vector<double>& f) { return approx.laplacian(f); };
  const double t = 1.0 / approx.kappa;
  auto Lc = [&](const std::vector<double>& f) {
    auto a = approx.laplacian(f);
    const auto b = approx.laplacian(a);
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += 0.5 * t * b[i];
    return a;
  };
  auto Lw = [&](const std::vector<double>& f) { return wide.laplacian(f); };
  const auto base = bochner_terms(L, mu, u, psi, K, N);
  const auto corr = bochner_terms(Lc, mu, u, psi, K, N);
  const auto coarse = bochner_terms(Lw, wide.stationary_measure(), u, psi, K, N);
  const double margin = base.lhs - base.rhs;
  const double heat = std::abs((corr.lhs - corr.rhs) - margin);
  // Bias of order ε²: the margin moves by (r² − 1) times it between ε and rε.
  const double ratio = wide.eps / approx.eps;
  const double richardson = std::abs((coarse.lhs - coarse.rhs) - margin) / (ratio * ratio - 1.0);
  const double err = std::max(heat, richardson);

  CheckReport rep;
  rep.name = "bochner";
  rep.model_id = approx.model_id;
  rep.model_hash = approx.model_hash;
  rep.samples = n;
  rep.seed = approx.seed;
  rep.margin = margin;
  rep.tolerance = tol_factor * err + 1e-9 * (std::abs(base.lhs) + std::abs(base.rhs)) + 1e-12;
  rep.diagnostics["lhs"] = base.lhs;
  rep.diagnostics["rhs"] = base.rhs;
  rep.diagnostics["error_estimate"] = err;
  rep.diagnostics["heat_estimate"] = heat;
  rep.diagnostics["richardson_estimate"] = richardson;
  rep.diagnostics["K"] = K;
  rep.diagnostics["N"] = N;
  return rep.decide();
}

// ---------------------------------------------------------------------------

CheckReport mcp_density_check(const StratifiedModel& model, const Coords& x0, const std::vector<double>& t_grid,
                              std::size_t samples, std::uint64_t seed, double band, double kernel_count) {
  if (!flat_cone(model)) throw UnsupportedModelError("mcp_density_check needs a flat cone");
  model.validate_point(x0);
  if (t_grid.empty()) throw ArgumentError("empty time grid");
  for (double t : t_grid)
    if (!(t > 0.0 && t <= 1.0)) throw ArgumentError("times must lie in (0, 1]; t = 0 is the Dirac limit");
  if (samples < 100) throw ArgumentError("too few samples");

  const double alpha = kTwoPi * model.link().radius();
  const double R = model.truncation_radius();
  const double A = model.volume();
  const double h1 = std::sqrt(kernel_count * A / (kPi * static_cast<double>(samples)));
  const auto cloud = sample_points(model, samples, seed);
  const ConePoint from = cone_point(x0);
  const double flat_factor = std::sin(std::min(0.5 * alpha, 0.5 * kPi));
  const std::size_t eval_count = 300;

  auto sup_density = [&](double t) {
    std::vector<ConePoint> z(samples);
    parallel_for(samples, [&](std::size_t i) { z[i] = flat_cone_geodesic_at(alpha, from, cone_point(cloud.points[i]), t); });
    const double h = t * h1;
    std::vector<std::size_t> eval;
    for (std::size_t i = 0; i < samples && eval.size() < eval_count; ++i)
      if (h < z[i].r * flat_factor && z[i].r + h <= R) eval.push_back(i);
    std::vector<std::size_t> order(samples);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return z[a].r < z[b].r; });
    std::vector<double> rs(samples);
    for (std::size_t i = 0; i < samples; ++i) rs[i] = z[order[i]].r;
    const LinkSpace& link = model.link();
    std::vector<double> dens(eval.size(), 0.0);
    parallel_for(eval.size(), [&](std::size_t e) {
      const ConePoint& c = z[eval[e]];
      const auto lo = std::lower_bound(rs.begin(), rs.end(), c.r - h) - rs.begin();
      const auto hi = std::upper_bound(rs.begin(), rs.end(), c.r + h) - rs.begin();
      std::size_t count = 0;
      for (auto k = lo; k < hi; ++k)
        if (cone_distance(c, z[order[static_cast<std::size_t>(k)]], link) <= h) ++count;
      dens[e] = static_cast<double>(count) / static_cast<double>(samples) / (kPi * h * h) * A;
    });
    return dens.empty() ? 0.0 : *std::max_element(dens.begin(), dens.end());
  };

  auto rep = start_report("mcp_density", model, samples, seed);
  const double C = sup_density(1.0);
  if (!(C > 0.0)) throw ResolutionError("no evaluation points for the density estimate");
  rep.diagnostics["C"] = C;
  double worst = kInf;
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    const double t = t_grid[i];
    const double s = (t == 1.0 ? C : sup_density(t)) * t * t / C;
    rep.diagnostics[idx("sup", i)] = s;
    worst = std::min(worst, 1.0 + band - s);
  }
  rep.margin = worst;
  rep.tolerance = 0.0;
  rep.notes["C"] = "fitted at t = 1";
  return rep.decide();
}

// ---------------------------------------------------------------------------

Coords suspension_circle_geodesic_at(const StratifiedModel& model, const Coords& p, const Coords& q, double t) {
  if (!suspended_circle(model)) throw ArgumentError("needs Susp(Circle(a))");
  model.validate_point(p);
  model.validate_point(q);
  const double alpha = kTwoPi * model.link().radius();
  const double delta = circle_offset(alpha, p[1], q[1]);
  const double t1 = p[0], t2 = q[0];
  auto wrap = [&](double s) {
    s = std::fmod(s, alpha);
    return s < 0.0 ? s + alpha : s;
  };
  if (std::abs(delta) >= kPi) {
    const bool north = t1 + t2 <= kTwoPi - t1 - t2;
    const double a1 = north ? t1 : kPi - t1, a2 = north ? t2 : kPi - t2;
    const double walk = t * (a1 + a2);
    if (walk <= a1) return {north ? a1 - walk : kPi - (a1 - walk), p[1]};
    return {north ? walk - a1 : kPi - (walk - a1), q[1]};
  }
  const auto P = suspension_embed(t1, 0.0), Q = suspension_embed(t2, std::abs(delta));
  const double w = angle3(P, Q);
  std::array<double, 3> X = P;
  if (w > 1e-15) {
    const double a = std::sin((1.0 - t) * w) / std::sin(w), b = std::sin(t * w) / std::sin(w);
    for (int i = 0; i < 3; ++i) X[i] = a * P[i] + b * Q[i];
    const double nx = std::sqrt(dot3(X, X));
    for (auto& v : X) v /= nx;
  }
  const double tt = std::acos(std::clamp(X[2], -1.0, 1.0));
  const double rho = std::hypot(X[0], X[1]);
  const double theta = rho < 1e-14 ? 0.0 : std::clamp(std::atan2(X[1], X[0]), 0.0, std::abs(delta));
  return {tt, wrap(p[1] + (delta < 0.0 ? -theta : theta))};
}

CheckReport ae_convexity_estimate(const StratifiedModel& model, std::size_t pairs, const std::vector<double>& eps_ladder,
                                  std::uint64_t seed, std::size_t times_per_pair) {
  if (pairs == 0 || times_per_pair == 0) throw ArgumentError("need at least one pair and one time");
  if (eps_ladder.empty()) throw ArgumentError("empty ε ladder");
  for (double e : eps_ladder)
    if (!(e > 0.0)) throw ArgumentError("ε must be positive");
  auto rep = start_report("ae_convexity", model, pairs, seed);
  const std::size_t k = eps_ladder.size();
  if (!model.has_singular_set()) {
    rep.margin = 0.0;
    rep.notes["singular_set"] = "empty";
    for (std::size_t j = 0; j < k; ++j) {
      rep.diagnostics[idx("slice_fraction", j)] = 0.0;
      rep.diagnostics[idx("path_fraction", j)] = 0.0;
    }
    rep.diagnostics["apex_hit_fraction"] = 0.0;
    return rep.decide();
  }
  const bool cone = flat_cone(model), susp = suspended_circle(model);
  const bool fermi = model.family() == Family::FermiSphere;
  if (!cone && !susp && !fermi)
    throw UnsupportedModelError("geodesics are only available on flat cones, Susp(Circle) and the Fermi sphere");

  const auto cloud = sample_points(model, 2 * pairs, seed);
  const double alpha = cone ? kTwoPi * model.link().radius() : 0.0;
  const std::uint64_t tseed = derive_seed(seed, 0x7a11);

  // Per pair: exact hit flag, path distance to Σ, and the distance to Σ at each time draw.
  std::vector<char> hit(pairs, 0);
  std::vector<double> path(pairs), weight(pairs);
  std::vector<double> slice(pairs * times_per_pair);
  parallel_for(pairs, [&](std::size_t i) {
    const Coords& p = cloud.points[2 * i];
    const Coords& q = cloud.points[2 * i + 1];
    weight[i] = cloud.weights[2 * i] * cloud.weights[2 * i + 1];
    Rng rng(tseed, i);
    if (cone) {
      const ConePoint a = cone_point(p), b = cone_point(q);
      hit[i] = geodesic_hits_apex(model.link(), a.y, b.y) ? 1 : 0;
      path[i] = hit[i] ? 0.0 : flat_cone_geodesic_apex_distance(alpha, a, b);
    } else if (susp) {
      path[i] = suspension_circle_pole_distance(model, p, q);
      hit[i] = path[i] == 0.0 ? 1 : 0;
    } else {
      path[i] = kInf;
    }
    for (std::size_t s = 0; s < times_per_pair; ++s) {
      const double tau = (static_cast<double>(s) + rng.uniform()) / static_cast<double>(times_per_pair);
      double d;
      if (cone) {
        d = flat_cone_geodesic_at(alpha, cone_point(p), cone_point(q), tau).r;
      } else if (susp) {
        const Coords g = suspension_circle_geodesic_at(model, p, q, tau);
        d = std::min(g[0], kPi - g[0]);
      } else {
        const auto g = slerp4(p.view(), q.view(), tau);
        d = model.distance_to_singular(Coords(std::span<const double>(g.data(), 4)));
        path[i] = std::min(path[i], d);
      }
      slice[i * times_per_pair + s] = d;
    }
  });

  const double wsum = std::accumulate(weight.begin(), weight.end(), 0.0);
  double hits = 0.0;
  for (std::size_t i = 0; i < pairs; ++i) hits += hit[i] ? weight[i] : 0.0;
  std::vector<double> sf(k, 0.0), pf(k, 0.0);
  for (std::size_t j = 0; j < k; ++j) {
    KahanSum a, b;
    for (std::size_t i = 0; i < pairs; ++i) {
      if (path[i] <= eps_ladder[j]) b.add(weight[i]);
      for (std::size_t s = 0; s < times_per_pair; ++s)
        if (slice[i * times_per_pair + s] <= eps_ladder[j]) a.add(weight[i]);
    }
    sf[j] = a.value() / (wsum * static_cast<double>(times_per_pair));
    pf[j] = b.value() / wsum;
    rep.diagnostics[idx("slice_fraction", j)] = sf[j];
    rep.diagnostics[idx("path_fraction", j)] = pf[j];
  }
  const double slope = slope_of(eps_ladder, sf);
  rep.diagnostics["slice_slope"] = slope;
  rep.diagnostics["path_slope"] = slope_of(eps_ladder, pf);
  const double hit_fraction = hits / wsum;
  if (!fermi) rep.diagnostics["apex_hit_fraction"] = hit_fraction;
  else rep.notes["geodesics"] = "round great-circle arcs";

  double margin = fermi ? kInf : -hit_fraction;
  if (std::isfinite(slope)) margin = std::min(margin, slope - 1.8);
  else rep.notes["slice_slope"] = "fewer than two nonzero fractions";
  if (!std::isfinite(margin)) margin = 0.0;
  rep.margin = margin;
  rep.tolerance = 0.0;
  return rep.decide();
}

}  // namespace stratlab
