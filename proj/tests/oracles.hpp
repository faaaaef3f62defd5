#pragma once
// Independent reference computations. Nothing here calls into the library
// except for plain value types, so a bug in the implementation cannot leak
// into the expected values.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <queue>
#include <vector>

namespace oracle {

inline constexpr double pi = 3.14159265358979323846;

/// Composite Simpson on [a, b] with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 20000) {
  if (n % 2) ++n;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

/// Shortest path on a (t, s) grid with metric dt² + w(t)² ds², s periodic with
/// period `period`. Uses a 16-neighbour stencil with midpoint edge lengths.
inline double grid_geodesic(const std::function<double(double)>& w, double t0, double t1, double period,
                            int nt, int ns, std::array<double, 2> from, std::array<double, 2> to) {
  const double dt = (t1 - t0) / nt;
  const double ds = period / ns;
  auto idx = [&](int i, int j) { return i * ns + ((j % ns) + ns) % ns; };
  const int total = (nt + 1) * ns;
  std::vector<double> dist(static_cast<std::size_t>(total), 1e300);
  auto node_of = [&](std::array<double, 2> p) {
    const int i = static_cast<int>(std::lround((p[0] - t0) / dt));
    const int j = static_cast<int>(std::lround(p[1] / ds));
    return idx(std::clamp(i, 0, nt), j);
  };
  const int src = node_of(from), dst = node_of(to);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  dist[static_cast<std::size_t>(src)] = 0.0;
  pq.push({0.0, src});
  static const int moves[16][2] = {{1, 0}, {-1, 0}, {0, 1},  {0, -1}, {1, 1},  {1, -1}, {-1, 1}, {-1, -1},
                                   {1, 2}, {2, 1},  {-1, 2}, {-2, 1}, {1, -2}, {2, -1}, {-1, -2}, {-2, -1}};
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (d > dist[static_cast<std::size_t>(u)]) continue;
    if (u == dst) return d;
    const int i = u / ns, j = u % ns;
    for (const auto& m : moves) {
      const int ii = i + m[0];
      if (ii < 0 || ii > nt) continue;
      const double tm = t0 + (i + 0.5 * m[0]) * dt;
      const double len = std::sqrt(std::pow(m[0] * dt, 2) + std::pow(w(tm) * m[1] * ds, 2));
      const int v = idx(ii, j + m[1]);
      if (d + len < dist[static_cast<std::size_t>(v)]) {
        dist[static_cast<std::size_t>(v)] = d + len;
        pq.push({d + len, v});
      }
    }
  }
  return dist[static_cast<std::size_t>(dst)];
}

/// Area of the ball of radius rho about the point at radius r0 on the flat cone
/// of angle alpha, truncated at radius R. Integrates the exact angular
/// measure of the ball at each radius.
inline double flat_cone_ball_area(double alpha, double r0, double rho, double R) {
  auto angular = [&](double r) {
    const double half = 0.5 * alpha;
    if (r0 == 0.0) return r < rho ? alpha : 0.0;
    if (r == 0.0) return 0.0;
    const double c = (r * r + r0 * r0 - rho * rho) / (2.0 * r * r0);
    const double gmax = c >= 1.0 ? 0.0 : (c <= -1.0 ? pi : std::acos(c));
    double m = std::min(gmax, std::min(pi, half));
    if (half > pi && r0 + r < rho) m += half - pi;
    return 2.0 * m;
  };
  return simpson([&](double r) { return r * angular(r); }, 0.0, R, 200000);
}

/// Spherical law of cosines.
inline double sphere_distance(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  const double c = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
  return std::acos(std::clamp(c, -1.0, 1.0));
}

/// Eigenvalues (with multiplicity) of the unit-sphere suspension of Circle(a),
/// from separation of variables: λ = (ν + j)(ν + j + 1), ν = |m| / a.
inline std::vector<double> s_alpha_spectrum(double a, double lambda_max) {
  std::vector<double> out;
  for (int m = 0;; ++m) {
    const double nu = m / a;
    if (nu * (nu + 1.0) > lambda_max) break;
    for (int j = 0;; ++j) {
      const double lam = (nu + j) * (nu + j + 1.0);
      if (lam > lambda_max) break;
      out.push_back(lam);
      if (m > 0) out.push_back(lam);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Pull-back metric of an embedding R³ → R⁴ by central differences.
inline std::array<double, 6> pullback_metric(const std::function<std::array<double, 4>(double, double, double)>& F,
                                             double u, double v, double w, double h = 1e-6) {
  std::array<std::array<double, 4>, 3> d{};
  const std::array<double, 3> x = {u, v, w};
  for (int k = 0; k < 3; ++k) {
    auto xp = x, xm = x;
    xp[k] += h;
    xm[k] -= h;
    const auto fp = F(xp[0], xp[1], xp[2]);
    const auto fm = F(xm[0], xm[1], xm[2]);
    for (int c = 0; c < 4; ++c) d[k][c] = (fp[c] - fm[c]) / (2.0 * h);
  }
  auto dot = [&](int i, int j) {
    double s = 0;
    for (int c = 0; c < 4; ++c) s += d[i][c] * d[j][c];
    return s;
  };
  return {dot(0, 0), dot(1, 1), dot(2, 2), dot(0, 1), dot(0, 2), dot(1, 2)};
}

/// Fermi parametrization of S³ around the circle (cos β, 0, sin β e^{iθ}),
/// written out from the normal frame directly.
inline std::array<double, 4> fermi_map(double beta, double r, double theta, double phi) {
  const double c[4] = {std::cos(beta), 0.0, std::sin(beta) * std::cos(theta), std::sin(beta) * std::sin(theta)};
  const double n[4] = {-std::sin(beta) * std::sin(phi), std::cos(phi), std::cos(beta) * std::sin(phi) * std::cos(theta),
                       std::cos(beta) * std::sin(phi) * std::sin(theta)};
  std::array<double, 4> out{};
  for (int i = 0; i < 4; ++i) out[i] = std::cos(r) * c[i] + std::sin(r) * n[i];
  return out;
}

}  // namespace oracle
