#include "stratlab/common.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <sstream>
#include <thread>

namespace stratlab {

std::string to_string(const Coords& c) {
  std::ostringstream out;
  out.precision(17);
  out << '[';
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (i) out << ", ";
    out << c[i];
  }
  out << ']';
  return out.str();
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t state = seed ^ (0xd1b54a32d192ed03ULL * (stream + 1));
  splitmix64(state);
  return splitmix64(state);
}

namespace {
inline std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t state = derive_seed(seed, stream);
  for (auto& word : s_) word = splitmix64(state);
}

std::uint64_t Rng::next_u64() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() {
  // 53 random bits, shifted half a step so 0 is never returned.
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  spare_ = radius * std::sin(kTwoPi * u2);
  has_spare_ = true;
  return radius * std::cos(kTwoPi * u2);
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw ArgumentError("Rng::below: empty range");
  return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
}

namespace {
constexpr std::array<unsigned, 8> kPrimes = {2, 3, 5, 7, 11, 13, 17, 19};

double radical_inverse(std::uint64_t i, unsigned base) {
  double f = 1.0;
  double r = 0.0;
  while (i > 0) {
    f /= base;
    r += f * static_cast<double>(i % base);
    i /= base;
  }
  return r;
}
}  // namespace

HaltonSequence::HaltonSequence(std::size_t dim, std::uint64_t seed) {
  if (dim == 0 || dim > kPrimes.size()) throw ArgumentError("HaltonSequence: unsupported dimension");
  Rng rng(seed, 0x4a11);
  shifts_.resize(dim);
  for (auto& s : shifts_) s = rng.uniform();
}

std::vector<double> HaltonSequence::point(std::uint64_t i) const {
  std::vector<double> out(shifts_.size());
  for (std::size_t k = 0; k < shifts_.size(); ++k) {
    double v = radical_inverse(i + 1, kPrimes[k]) + shifts_[k];
    v -= std::floor(v);
    // Keep strictly inside (0, 1) so chart maps never land on a pole.
    out[k] = std::clamp(v, 0x1.0p-40, 1.0 - 0x1.0p-40);
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double value;
  double error;
};

Segment gauss_kronrod(const std::function<double(double)>& f, double a, double b) {
  const double centre = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double kronrod = 0.0;
  double gauss = 0.0;
  for (int i = 0; i < 7; ++i) {
    const double dx = half * kKronrodNodes[i];
    const double fsum = f(centre - dx) + f(centre + dx);
    kronrod += kKronrodWeights[i] * fsum;
    if (i % 2 == 1) gauss += kGaussWeights[i / 2] * fsum;
  }
  const double fc = f(centre);
  kronrod += kKronrodWeights[7] * fc;
  gauss += kGaussWeights[3] * fc;
  return {kronrod * half, std::abs((kronrod - gauss) * half)};
}

void adapt(const std::function<double(double)>& f, double a, double b, double tol, int depth,
           Segment whole, KahanSum& value, KahanSum& error, int& evaluations) {
  if (whole.error <= tol || depth == 0 || b - a < 1e-15 * (1.0 + std::abs(a))) {
    value.add(whole.value);
    error.add(whole.error);
    return;
  }
  const double mid = 0.5 * (a + b);
  const Segment left = gauss_kronrod(f, a, mid);
  const Segment right = gauss_kronrod(f, mid, b);
  evaluations += 30;
  adapt(f, a, mid, 0.5 * tol, depth - 1, left, value, error, evaluations);
  adapt(f, mid, b, 0.5 * tol, depth - 1, right, value, error, evaluations);
}

}  // namespace

QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                           double rel_tol, double abs_tol, int max_depth) {
  if (a == b) return {};
  if (b < a) {
    QuadratureResult r = integrate(f, b, a, rel_tol, abs_tol, max_depth);
    r.value = -r.value;
    return r;
  }
  const Segment whole = gauss_kronrod(f, a, b);
  const double tol = std::max(abs_tol, rel_tol * std::abs(whole.value));
  KahanSum value;
  KahanSum error;
  int evaluations = 15;
  adapt(f, a, b, tol, max_depth, whole, value, error, evaluations);
  return {value.value(), error.value(), evaluations};
}

double solve_monotone(const std::function<double(double)>& f, double lo, double hi, double tol,
                      int max_iter) {
  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0) == (fhi > 0)) throw NumericalError("solve_monotone: root not bracketed");
  for (int it = 0; it < max_iter && hi - lo > tol; ++it) {
    // Secant step, falling back to bisection when it leaves the middle 80%.
    double x = lo - flo * (hi - lo) / (fhi - flo);
    const double margin = 0.1 * (hi - lo);
    if (!(x > lo + margin && x < hi - margin)) x = 0.5 * (lo + hi);
    const double fx = f(x);
    if (fx == 0.0) return x;
    if ((fx > 0) == (flo > 0)) {
      lo = x;
      flo = fx;
    } else {
      hi = x;
      fhi = fx;
    }
  }
  return 0.5 * (lo + hi);
}

double unit_ball_volume(int n) {
  return std::pow(kPi, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
}

double sphere_volume(int m) { return (m + 1) * unit_ball_volume(m + 1); }

double sin_power_integral(int m, double t) {
  if (m < 0) throw ArgumentError("sin_power_integral: negative power");
  if (m == 0) return t;
  if (m == 1) return 1.0 - std::cos(t);
  const double s = std::sin(t);
  return -std::pow(s, m - 1) * std::cos(t) / m +
         (static_cast<double>(m - 1) / m) * sin_power_integral(m - 2, t);
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body, unsigned workers) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw ArgumentError("fit_line: need >= 2 paired values");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw ArgumentError("fit_line: degenerate abscissae");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy > 0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

std::string format_angle(double radians) {
  const double q = radians / kPi;
  char buf[64];
  for (int denom : {1, 2, 3, 4, 6}) {
    const double num = std::round(q * denom);
    if (std::abs(q * denom - num) < 1e-9 * denom) {
      const double value = num / denom;
      if (value == 0.0) return "0";
      if (value == 1.0) return "π";
      std::snprintf(buf, sizeof buf, "%gπ", value);
      return buf;
    }
  }
  std::snprintf(buf, sizeof buf, "%.6g", radians);
  return buf;
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace stratlab
