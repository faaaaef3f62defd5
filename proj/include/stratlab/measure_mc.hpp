#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "stratlab/check_report.hpp"
#include "stratlab/model_spaces.hpp"

namespace stratlab {

/// Weighted points representing the volume measure of a model.
struct SampleCloud {
  std::string model_id;
  std::string model_hash;
  std::uint64_t seed = 0;
  bool quasi_random = false;
  std::vector<Coords> points;
  std::vector<double> weights;
  double total_weight = 0.0;

  std::size_t size() const { return points.size(); }
  void save(const std::filesystem::path& file) const;
  static SampleCloud load(const std::filesystem::path& file);
};

/// iid samples of v_g. Uniform weights vol/n except on the Fermi sphere, where
/// round-sphere samples carry the density ratio of the blended metric.
/// Cached under $STRATLAB_CACHE_DIR when that variable is set.
SampleCloud sample_points(const StratifiedModel& model, std::size_t n, std::uint64_t seed);

/// Same maps driven by a randomized Halton sequence. Used for graph
/// Laplacians, where even coverage matters more than independence.
SampleCloud qmc_cloud(const StratifiedModel& model, std::size_t n, std::uint64_t seed);

/// Number of unit-cube coordinates consumed per sample.
std::size_t sample_dimension(const StratifiedModel& model);

struct VolumeEstimate {
  double estimate = 0.0;
  double stderr_ = 0.0;
  double radius = 0.0;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
};

enum class SamplingScheme {
  Full,  // samples the whole model
  Band,  // samples only a radial band known to contain the ball; weight = band volume
};

/// Monte Carlo estimate of vol(B(center, r)). FermiSphere throws UnsupportedModelError.
VolumeEstimate ball_volume_mc(const StratifiedModel& model, const Coords& center, double r, std::size_t n,
                              std::uint64_t seed, SamplingScheme scheme = SamplingScheme::Full);

/// Ball volumes for several radii from one set of samples.
struct BallVolumeSeries {
  std::vector<double> radii;
  std::vector<double> estimates;
  std::vector<double> stderrs;
  /// Covariance of the estimates (row-major, radii.size()²).
  std::vector<double> covariance;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  double cov(std::size_t i, std::size_t j) const { return covariance[i * radii.size() + j]; }
};
BallVolumeSeries ball_volumes_mc(const StratifiedModel& model, const Coords& center, const std::vector<double>& radii,
                                 std::size_t n, std::uint64_t seed, SamplingScheme scheme = SamplingScheme::Band);

/// Largest ratio between the generalized eigenvalues of the blended Fermi
/// metric and the round one, square-rooted: d₀/L ≤ d ≤ L·d₀.
double fermi_lipschitz_constant(const StratifiedModel& model);

/// vol_g of a round-distance ball on the Fermi sphere.
BallVolumeSeries fermi_round_ball_volumes(const StratifiedModel& model, const Coords& center,
                                          const std::vector<double>& radii, std::size_t n, std::uint64_t seed);

/// Fitted Ahlfors constant C = max over radii of max(q, 1/q), q = vol/(ω_n rⁿ).
/// Pass iff C is finite. On the Fermi sphere balls are bracketed by round
/// balls of radii r/L and L·r.
CheckReport ahlfors_check(const StratifiedModel& model, const Coords& x, const std::vector<double>& radii,
                          std::size_t n, std::uint64_t seed);

struct DoublingEstimate {
  double ratio = 0.0;
  double stderr_ = 0.0;
  /// True when the ratio is an upper bound from surrogate balls.
  bool bound_only = false;
};
DoublingEstimate doubling_ratio(const StratifiedModel& model, const Coords& x, double r, std::size_t n,
                                std::uint64_t seed);

/// vol(Σ^ε). Zero for models without singular set.
VolumeEstimate tubular_volume(const StratifiedModel& model, double eps, std::size_t n, std::uint64_t seed);

struct Region {
  enum class Kind { Empty, Ball };
  Kind kind = Kind::Empty;
  Coords center;
  double radius = 0.0;

  static Region empty() { return {}; }
  static Region ball(Coords c, double r) { return {Kind::Ball, std::move(c), r}; }
  /// {t < t0} on a suspension, i.e. the ball of radius t0 about the north pole.
  static Region pole_sublevel(const StratifiedModel& model, double t0);
};

struct MinkowskiEstimate {
  double estimate = 0.0;
  std::vector<double> eps;
  /// (m(E^ε) − m(E)) / ε along the ladder.
  std::vector<double> quotients;
  std::vector<double> stderrs;
  /// Standard error of `estimate`.
  double stderr_ = 0.0;
  /// Change of the extrapolated value between the last two ladder pairs.
  double ladder_change = 0.0;
};

/// Outer Minkowski content for the normalized measure, extrapolated to ε → 0
/// along a strictly decreasing ladder.
MinkowskiEstimate minkowski_content(const StratifiedModel& model, const Region& region,
                                    const std::vector<double>& eps_ladder, std::size_t n, std::uint64_t seed);

/// Volume of the ball of radius r in the n-dimensional space form of curvature k.
double model_ball_volume(int n, double k, double r);
/// sin_k(t).
double sin_k(double k, double t);

/// CSV header and row for volume reports.
std::string volume_csv_header();
std::string volume_csv_row(const StratifiedModel& model, const Coords& center, const VolumeEstimate& v);

}  // namespace stratlab
