#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace stratlab {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Error hierarchy. Every failure mode named by an operation contract maps to
// one of these so callers (and the CLI exit-code logic) can branch on type.
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DomainError : Error {
  using Error::Error;
};
struct ArgumentError : Error {
  using Error::Error;
};
struct PreconditionError : Error {
  using Error::Error;
};
struct InconsistentMetricError : Error {
  using Error::Error;
};
struct ResolutionError : Error {
  using Error::Error;
};
struct NumericalError : Error {
  using Error::Error;
};
struct UnsupportedModelError : Error {
  using Error::Error;
};
struct RangeError : Error {
  using Error::Error;
};
struct ConstructionError : Error {
  using Error::Error;
};

/// Fixed-capacity coordinate tuple. Value type, no heap traffic; every chart
/// in the toolkit needs at most kCapacity numbers.
class Coords {
 public:
  static constexpr std::size_t kCapacity = 8;

  Coords() = default;
  Coords(std::initializer_list<double> values) {
    if (values.size() > kCapacity) throw ArgumentError("Coords: too many components");
    for (double v : values) data_[size_++] = v;
  }
  explicit Coords(std::span<const double> values) {
    if (values.size() > kCapacity) throw ArgumentError("Coords: too many components");
    for (double v : values) data_[size_++] = v;
  }

  void push_back(double v) {
    if (size_ == kCapacity) throw ArgumentError("Coords: capacity exceeded");
    data_[size_++] = v;
  }
  /// Appends all of `tail`.
  void append(const Coords& tail) {
    for (double v : tail) push_back(v);
  }
  /// Sub-tuple [offset, size()).
  Coords tail(std::size_t offset) const {
    Coords out;
    for (std::size_t i = offset; i < size_; ++i) out.push_back(data_[i]);
    return out;
  }

  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }
  const double* begin() const { return data_.data(); }
  const double* end() const { return data_.data() + size_; }
  double* begin() { return data_.data(); }
  double* end() { return data_.data() + size_; }
  std::span<const double> view() const { return {data_.data(), size_}; }

  friend bool operator==(const Coords& a, const Coords& b) {
    if (a.size_ != b.size_) return false;
    for (std::size_t i = 0; i < a.size_; ++i)
      if (a.data_[i] != b.data_[i]) return false;
    return true;
  }

 private:
  std::array<double, kCapacity> data_{};
  std::size_t size_ = 0;
};

std::string to_string(const Coords& c);

// ---------------------------------------------------------------------------
// Random numbers. Streams are derived from (seed, stream index) with
// splitmix64 so that results never depend on how work is split.
// ---------------------------------------------------------------------------

std::uint64_t splitmix64(std::uint64_t& state);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// xoshiro256** generator with portable double conversion.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);
  std::uint64_t next_u64();
  /// Uniform in the open interval (0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  std::uint64_t below(std::uint64_t n);

 private:
  std::array<std::uint64_t, 4> s_{};
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Randomized Halton sequence (Cranley-Patterson rotation drawn from `seed`).
class HaltonSequence {
 public:
  HaltonSequence(std::size_t dim, std::uint64_t seed);
  /// Point with index i (0-based), each component in (0, 1).
  std::vector<double> point(std::uint64_t i) const;
  std::size_t dim() const { return shifts_.size(); }

 private:
  std::vector<double> shifts_;
};

// ---------------------------------------------------------------------------
// Numerics.
// ---------------------------------------------------------------------------

/// Neumaier compensated accumulator; order-insensitive to rounding level.
class KahanSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  int evaluations = 0;
};

/// Adaptive Gauss-Kronrod (7/15) on [a, b].
QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                           double rel_tol = 1e-10, double abs_tol = 1e-14, int max_depth = 50);

/// Root of a monotone function on a bracket by safeguarded bisection/secant.
double solve_monotone(const std::function<double(double)>& f, double lo, double hi,
                      double tol = 1e-14, int max_iter = 200);

/// Volume of the unit ball in R^n.
double unit_ball_volume(int n);
/// Volume of the unit round sphere S^m.
double sphere_volume(int m);
/// ∫_0^t sin^m(s) ds, closed form by recurrence.
double sin_power_integral(int m, double t);

/// Runs body(i) for i in [0, n). Uses up to `workers` threads (0 = hardware);
/// body must only write to per-index state.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body,
                  unsigned workers = 0);

/// Ordinary least-squares line y = intercept + slope * x.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};
LineFit fit_line(std::span<const double> x, std::span<const double> y);

/// Formats an angle as a multiple of π when it is a simple fraction ("3π",
/// "1.5π"), else as a decimal.
std::string format_angle(double radians);

/// 64-bit FNV-1a of a byte string, rendered as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace stratlab
