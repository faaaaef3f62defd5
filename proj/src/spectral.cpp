#include "stratlab/spectral.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <numeric>
#include <queue>
#include <sstream>

#include "stratlab/cone_geometry.hpp"

namespace stratlab {

namespace {

constexpr double kCutoffSigmas = 4.0;
constexpr std::size_t kDenseLimit = 2000;

double lower_gamma(double a, double x) {
  // s = u² keeps the integrand bounded for a = 1/2.
  return integrate([&](double u) { return 2.0 * std::pow(u, 2.0 * a - 1.0) * std::exp(-u * u); }, 0.0,
                   std::sqrt(x), 1e-13, 1e-15)
      .value;
}

/// y = S x with S = D^{-1/2} M^{1/2} W̃ M^{1/2} D^{-1/2}.
void apply_symmetric(const DiscreteApproximation& g, const std::vector<double>& s, const double* x, double* y) {
  const std::size_t n = g.size();
  parallel_for((n + 511) / 512, [&](std::size_t b) {
    const std::size_t end = std::min(n, (b + 1) * 512);
    for (std::size_t i = b * 512; i < end; ++i) {
      double acc = 0.0;
      for (std::size_t e = g.offsets[i]; e < g.offsets[i + 1]; ++e) acc += g.weight[e] * s[g.cols[e]] * x[g.cols[e]];
      y[i] = s[i] * acc;
    }
  });
}

double dot(const double* a, const double* b, std::size_t n) {
  KahanSum s;
  for (std::size_t i = 0; i < n; ++i) s.add(a[i] * b[i]);
  return s.value();
}

}  // namespace

double kernel_constant(int n) {
  if (n < 1) throw ArgumentError("kernel_constant: dimension must be positive");
  const double x = kCutoffSigmas * kCutoffSigmas / 4.0;
  return (2.0 / n) * lower_gamma(0.5 * n + 1.0, x) / lower_gamma(0.5 * n, x);
}

double default_bandwidth(const StratifiedModel& model, std::size_t n, double neighbours) {
  if (n == 0) throw ArgumentError("node count must be positive");
  const int d = model.dim();
  const double ball = unit_ball_volume(d) * std::pow(kCutoffSigmas, d);
  return std::pow(neighbours * model.volume() / (static_cast<double>(n) * ball), 1.0 / d);
}

namespace {

// w̃_ij = w_ij / (q_i q_j) and D_i from the raw kernel.
void normalize(DiscreteApproximation& g) {
  const std::size_t n = g.size();
  std::vector<double> q(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    KahanSum s;
    for (std::size_t e = g.offsets[i]; e < g.offsets[i + 1]; ++e) s.add(g.kernel[e] * g.mass[g.cols[e]]);
    q[i] = s.value();
  }
  g.weight.resize(g.kernel.size());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t e = g.offsets[i]; e < g.offsets[i + 1]; ++e) g.weight[e] = g.kernel[e] / (q[i] * q[g.cols[e]]);
  g.degree.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    KahanSum s;
    for (std::size_t e = g.offsets[i]; e < g.offsets[i + 1]; ++e) s.add(g.weight[e] * g.mass[g.cols[e]]);
    g.degree[i] = s.value();
  }
}

}  // namespace

DiscreteApproximation build_graph(const StratifiedModel& model, const SampleCloud& cloud, double eps) {
  if (cloud.size() == 0) throw ArgumentError("build_graph: empty cloud");
  if (!(eps > 0.0)) throw ArgumentError("build_graph: ε must be positive");
  if (model.family() == Family::FermiSphere)
    throw UnsupportedModelError("graph construction needs exact distances, unavailable on the Fermi sphere");
  const std::size_t n = cloud.size();
  const double cut = kCutoffSigmas * eps;

  // Window scan on the sorted 1-Lipschitz key.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> key(n);
  for (std::size_t i = 0; i < n; ++i) key[i] = model.radial_key(cloud.points[i]);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key[a] < key[b]; });
  std::vector<double> sorted_key(n);
  for (std::size_t k = 0; k < n; ++k) sorted_key[k] = key[order[k]];

  struct Nb {
    std::uint32_t j;
    double d;
  };
  std::vector<std::vector<Nb>> nbrs(n);
  parallel_for((n + 63) / 64, [&](std::size_t b) {
    const std::size_t end = std::min(n, (b + 1) * 64);
    for (std::size_t k = b * 64; k < end; ++k) {
      const std::size_t i = order[k];
      auto& out = nbrs[i];
      const auto hi = std::upper_bound(sorted_key.begin(), sorted_key.end(), key[i] + cut) - sorted_key.begin();
      const auto lo = std::lower_bound(sorted_key.begin(), sorted_key.end(), key[i] - cut) - sorted_key.begin();
      for (auto kk = lo; kk < hi; ++kk) {
        const std::size_t j = order[static_cast<std::size_t>(kk)];
        const double d = j == i ? 0.0 : model_distance(model, cloud.points[i], cloud.points[j]);
        if (d <= cut) out.push_back({static_cast<std::uint32_t>(j), d});
      }
      std::sort(out.begin(), out.end(), [](const Nb& a, const Nb& c) { return a.j < c.j; });
    }
  });

  DiscreteApproximation g;
  g.model_id = model.id();
  g.model_hash = model.hash();
  g.seed = cloud.seed;
  g.dim = model.dim();
  g.eps = eps;
  g.kappa = 1.0 / (eps * eps * kernel_constant(g.dim));
  g.volume = model.volume();
  g.nodes = cloud.points;
  g.mass = cloud.weights;
  g.offsets.assign(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) g.offsets[i + 1] = g.offsets[i] + nbrs[i].size();
  g.cols.resize(g.offsets[n]);
  g.dist.resize(g.offsets[n]);
  g.weight.resize(g.offsets[n]);
  g.kernel.resize(g.offsets[n]);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t e = g.offsets[i];
    for (const Nb& nb : nbrs[i]) {
      g.cols[e] = nb.j;
      g.dist[e] = nb.d;
      g.kernel[e] = g.weight[e] = std::exp(-nb.d * nb.d / (4.0 * eps * eps));
      ++e;
    }
  }

  // Connectivity.
  std::vector<char> seen(n, 0);
  std::queue<std::size_t> bfs;
  bfs.push(0);
  seen[0] = 1;
  std::size_t reached = 1;
  while (!bfs.empty()) {
    const std::size_t i = bfs.front();
    bfs.pop();
    for (std::size_t e = g.offsets[i]; e < g.offsets[i + 1]; ++e)
      if (!seen[g.cols[e]]) {
        seen[g.cols[e]] = 1;
        ++reached;
        bfs.push(g.cols[e]);
      }
  }
  if (reached != n)
    throw ResolutionError("kernel graph is disconnected (" + std::to_string(reached) + " of " + std::to_string(n) +
                          " nodes reachable); increase ε or the sample count");

  normalize(g);
  return g;
}

DiscreteApproximation rescale_graph(const StratifiedModel& model, const DiscreteApproximation& g, double factor) {
  if (!(factor > 0.0)) throw ArgumentError("rescale_graph: factor must be positive");
  if (g.model_hash != model.hash()) throw ArgumentError("rescale_graph: graph was built on a different model");
  SampleCloud cloud;
  cloud.model_id = g.model_id;
  cloud.model_hash = g.model_hash;
  cloud.seed = g.seed;
  cloud.points = g.nodes;
  cloud.weights = g.mass;
  for (double m : g.mass) cloud.total_weight += m;
  auto h = build_graph(model, cloud, factor * g.eps);
  h.volume = g.volume;
  return h;
}

std::vector<double> DiscreteApproximation::markov(const std::vector<double>& f) const {
  if (f.size() != size()) throw ArgumentError("markov: size mismatch");
  std::vector<double> out(size());
  parallel_for(size(), [&](std::size_t i) {
    double acc = 0.0;
    for (std::size_t e = offsets[i]; e < offsets[i + 1]; ++e) acc += weight[e] * mass[cols[e]] * f[cols[e]];
    out[i] = acc / degree[i];
  });
  return out;
}

std::vector<double> DiscreteApproximation::laplacian(const std::vector<double>& f) const {
  auto pf = markov(f);
  for (std::size_t i = 0; i < size(); ++i) pf[i] = kappa * (f[i] - pf[i]);
  return pf;
}

std::vector<double> DiscreteApproximation::stationary_measure() const {
  std::vector<double> pi(size());
  KahanSum t;
  for (std::size_t i = 0; i < size(); ++i) {
    pi[i] = degree[i] * mass[i];
    t.add(pi[i]);
  }
  const double scale = volume / t.value();
  for (auto& p : pi) p *= scale;
  return pi;
}

std::string DiscreteApproximation::hash() const {
  std::ostringstream o;
  o.precision(17);
  o << model_hash << '|' << seed << '|' << size() << '|' << eps << '|' << edge_count();
  return fnv1a_hex(o.str());
}

// ---------------------------------------------------------------------------

std::string SpectralData::to_csv() const {
  std::ostringstream o;
  o.precision(12);
  o << "index,eigenvalue,residual\n";
  for (std::size_t k = 0; k < count(); ++k)
    o << k << ',' << eigenvalues[k] << ',' << (k < residuals.size() ? residuals[k] : 0.0) << '\n';
  return o.str();
}

SpectralData SpectralData::from_eigenvalues(std::vector<double> values, int dim, double volume) {
  std::sort(values.begin(), values.end());
  SpectralData s;
  s.eigenvalues = std::move(values);
  s.residuals.assign(s.eigenvalues.size(), 0.0);
  s.dim = dim;
  s.volume = volume;
  s.cutoff = s.eigenvalues.empty() ? 0.0 : s.eigenvalues.back();
  s.analytic = true;
  return s;
}

SpectralData eigen(const DiscreteApproximation& g, std::size_t count, EigenMethod method) {
  const std::size_t n = g.size();
  if (count == 0 || count >= n) throw ArgumentError("eigen: need 0 < count < node count");
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i) s[i] = std::sqrt(g.mass[i] / g.degree[i]);
  // Constant mode of P in symmetric coordinates.
  std::vector<double> v0(n);
  for (std::size_t i = 0; i < n; ++i) v0[i] = std::sqrt(g.degree[i] * g.mass[i]);
  {
    const double nv = std::sqrt(dot(v0.data(), v0.data(), n));
    for (auto& v : v0) v /= nv;
  }

  std::vector<double> mu;                 // eigenvalues of S, descending
  std::vector<std::vector<double>> vecs;  // unit eigenvectors of S

  const bool dense = method == EigenMethod::Dense || (method == EigenMethod::Auto && n < kDenseLimit);
  if (dense) {
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t e = g.offsets[i]; e < g.offsets[i + 1]; ++e)
        S(static_cast<Eigen::Index>(i), g.cols[e]) = s[i] * g.weight[e] * s[g.cols[e]];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
    if (es.info() != Eigen::Success) throw NumericalError("dense eigensolver failed");
    for (std::size_t k = 0; k < count; ++k) {
      const auto idx = static_cast<Eigen::Index>(n - 1 - k);
      mu.push_back(es.eigenvalues()(idx));
      std::vector<double> v(n);
      for (std::size_t i = 0; i < n; ++i) v[i] = es.eigenvectors()(static_cast<Eigen::Index>(i), idx);
      vecs.push_back(std::move(v));
    }
  } else {
    // Lanczos on the complement of the constant mode, full reorthogonalization.
    const std::size_t want = count - 1;
    const std::size_t max_dim = std::min<std::size_t>(n - 1, std::max<std::size_t>(400, 60 * count));
    std::vector<std::vector<double>> Q;
    std::vector<double> alpha, beta;
    auto orthogonalize = [&](std::vector<double>& w) {
      for (int pass = 0; pass < 2; ++pass) {
        const double c0 = dot(v0.data(), w.data(), n);
        for (std::size_t i = 0; i < n; ++i) w[i] -= c0 * v0[i];
        for (const auto& q : Q) {
          const double c = dot(q.data(), w.data(), n);
          for (std::size_t i = 0; i < n; ++i) w[i] -= c * q[i];
        }
      }
    };
    std::vector<double> w(n);
    Rng rng(0x5eed, 0);
    for (auto& v : w) v = rng.normal();
    orthogonalize(w);
    double nw = std::sqrt(dot(w.data(), w.data(), n));
    for (auto& v : w) v /= nw;
    Q.push_back(w);
    Eigen::VectorXd ritz_vals;
    Eigen::MatrixXd ritz_vecs;
    bool converged = false;
    std::vector<double> y(n);
    while (!converged) {
      const auto& q = Q.back();
      apply_symmetric(g, s, q.data(), y.data());
      if (Q.size() > 1)
        for (std::size_t i = 0; i < n; ++i) y[i] -= beta.back() * Q[Q.size() - 2][i];
      const double a = dot(q.data(), y.data(), n);
      alpha.push_back(a);
      for (std::size_t i = 0; i < n; ++i) y[i] -= a * q[i];
      orthogonalize(y);
      const double b = std::sqrt(dot(y.data(), y.data(), n));
      const std::size_t m = alpha.size();
      const bool exhausted = b < 1e-13 || m >= max_dim;
      if (m >= want + 5 && (m % 10 == 0 || exhausted)) {
        Eigen::MatrixXd T = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
        for (std::size_t k = 0; k < m; ++k) {
          T(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) = alpha[k];
          if (k + 1 < m)
            T(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k + 1)) =
                T(static_cast<Eigen::Index>(k + 1), static_cast<Eigen::Index>(k)) = beta[k];
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
        ritz_vals = es.eigenvalues();
        ritz_vecs = es.eigenvectors();
        converged = true;
        for (std::size_t k = 0; k < want; ++k) {
          const auto idx = static_cast<Eigen::Index>(m - 1 - k);
          if (b * std::abs(ritz_vecs(static_cast<Eigen::Index>(m - 1), idx)) > 1e-11) converged = false;
        }
        if (exhausted && !converged)
          throw NumericalError("Lanczos did not converge in " + std::to_string(m) + " steps");
      }
      if (converged) break;
      if (exhausted) throw NumericalError("Lanczos broke down before convergence");
      beta.push_back(b);
      for (auto& v : y) v /= b;
      Q.push_back(y);
    }
    mu.push_back(1.0);
    vecs.push_back(v0);
    const std::size_t m = alpha.size();
    for (std::size_t k = 0; k < want; ++k) {
      const auto idx = static_cast<Eigen::Index>(m - 1 - k);
      std::vector<double> v(n, 0.0);
      for (std::size_t j = 0; j < m; ++j) {
        const double c = ritz_vecs(static_cast<Eigen::Index>(j), idx);
        for (std::size_t i = 0; i < n; ++i) v[i] += c * Q[j][i];
      }
      const double nv = std::sqrt(dot(v.data(), v.data(), n));
      for (auto& x : v) x /= nv;
      mu.push_back(ritz_vals(idx));
      vecs.push_back(std::move(v));
    }
  }

  SpectralData out;
  out.dim = g.dim;
  out.volume = g.volume;
  out.eps = g.eps;
  out.cutoff = 0.1 / (g.eps * g.eps);
  out.measure = g.stationary_measure();
  const double pi_scale = g.volume / [&] {
    KahanSum t;
    for (std::size_t i = 0; i < n; ++i) t.add(g.degree[i] * g.mass[i]);
    return t.value();
  }();
  std::vector<double> sv(n);
  for (std::size_t k = 0; k < count; ++k) {
    apply_symmetric(g, s, vecs[k].data(), sv.data());
    double r = 0.0;
    for (std::size_t i = 0; i < n; ++i) r += (sv[i] - mu[k] * vecs[k][i]) * (sv[i] - mu[k] * vecs[k][i]);
    r = std::sqrt(r);
    if (r > 1e-8)
      throw NumericalError("eigenpair " + std::to_string(k) + " has residual " + std::to_string(r));
    out.eigenvalues.push_back(std::max(0.0, g.kappa * (1.0 - mu[k])));
    out.residuals.push_back(r);
    // f = (D M)^{-1/2} v, orthonormal for the stationary measure.
    std::vector<double> f(n);
    for (std::size_t i = 0; i < n; ++i) f[i] = vecs[k][i] / std::sqrt(g.degree[i] * g.mass[i] * pi_scale);
    out.eigenvectors.push_back(std::move(f));
  }
  return out;
}

CheckReport lichnerowicz_check(const SpectralData& spectral, int n, double k_reg, double tol) {
  if (!(k_reg > 0.0)) throw ArgumentError("lichnerowicz_check needs a positive Ricci bound");
  if (spectral.count() < 2) throw ArgumentError("lichnerowicz_check needs λ₁");
  const double lambda1 = spectral.eigenvalues[1] * (n - 1) / k_reg;
  CheckReport r;
  r.name = "lichnerowicz";
  r.margin = lambda1 - n;
  r.tolerance = tol * n;
  r.samples = spectral.measure.size();
  r.diagnostics["lambda1"] = spectral.eigenvalues[1];
  r.diagnostics["lambda1_rescaled"] = lambda1;
  r.diagnostics["k_reg"] = k_reg;
  r.diagnostics["eps"] = spectral.eps;
  return r.decide();
}

WeylResult weyl_ratio(const SpectralData& spectral, double volume, int n, double lambda) {
  if (!(lambda > 0.0)) throw ArgumentError("weyl_ratio: λ must be positive");
  if (spectral.count() == 0) throw ArgumentError("weyl_ratio: empty spectrum");
  if (lambda > spectral.cutoff)
    throw RangeError("λ = " + std::to_string(lambda) + " lies above the fidelity cutoff " +
                     std::to_string(spectral.cutoff));
  if (!spectral.analytic && lambda >= spectral.eigenvalues.back())
    throw RangeError("λ lies beyond the computed eigenvalues; request more eigenpairs");
  WeylResult w;
  w.lambda = lambda;
  w.count = static_cast<double>(
      std::upper_bound(spectral.eigenvalues.begin(), spectral.eigenvalues.end(), lambda) - spectral.eigenvalues.begin());
  w.ratio = w.count / std::pow(lambda, 0.5 * n);
  w.target = unit_ball_volume(n) / std::pow(kTwoPi, n) * volume;
  return w;
}

std::vector<double> carre_du_champ(const DiscreteApproximation& g, const std::vector<double>& f) {
  std::vector<double> out(g.size());
  parallel_for(g.size(), [&](std::size_t i) {
    double acc = 0.0;
    for (std::size_t e = g.offsets[i]; e < g.offsets[i + 1]; ++e) {
      const auto j = g.cols[e];
      const double df = f[j] - f[i];
      acc += g.weight[e] * g.mass[j] * df * df;
    }
    out[i] = 0.5 * g.kappa * acc / g.degree[i];
  });
  return out;
}

std::vector<double> gradient_near_singular(const StratifiedModel& model, const DiscreteApproximation& approx,
                                           const SpectralData& spectral, double radius) {
  if (approx.model_hash != model.hash()) throw ArgumentError("graph was built on another model");
  if (spectral.count() > 0 && spectral.eigenvectors.front().size() != approx.size())
    throw ArgumentError("spectral data does not match the graph");
  if (!(radius > 0.0)) throw DomainError("radius must be positive");
  if (!model.has_singular_set()) return std::vector<double>(spectral.count(), 0.0);
  std::vector<std::size_t> near;
  for (std::size_t i = 0; i < approx.size(); ++i)
    if (model.distance_to_singular(approx.nodes[i]) < radius) near.push_back(i);
  std::vector<double> out;
  for (const auto& f : spectral.eigenvectors) {
    const auto gamma = carre_du_champ(approx, f);
    double worst = 0.0;
    for (std::size_t i : near) worst = std::max(worst, std::sqrt(gamma[i]));
    out.push_back(worst);
  }
  return out;
}

}  // namespace stratlab
