#pragma once

#include <cstdint>
#include <vector>

#include "stratlab/check_report.hpp"
#include "stratlab/cone_geometry.hpp"
#include "stratlab/measure_mc.hpp"
#include "stratlab/spectral.hpp"

namespace stratlab {

/// r ↦ vol B(x,r) / v_{K/(n−1)}(r) must be non-increasing.
///
/// Each radius gets its own band sample, so the estimates are independent.
/// The margin is the smallest standardized drop (q_i − q_j)/sd over pairs
/// i < j; tolerance `z_tol` (3 combined stderr by default).
/// Diagnostics: ratio_<i>, stderr_<i>, z_first_last (growth of the last ratio
/// over the first, in stderr units; positive means a violation).
CheckReport bishop_gromov_check(const StratifiedModel& model, const Coords& x, const std::vector<double>& radii,
                                double K, int n, std::size_t samples = 200000, std::uint64_t seed = 0,
                                double z_tol = 3.0);

/// Δd_x ≤ (n−1) sin_k'(d_x)/sin_k(d_x) at the graph nodes.
///
/// Δ is the negative of the graph Laplacian. Masked nodes: within 4ε of x or
/// of the truncation boundary, within 2ε of Σ, d_x ≥ diam − 5ε, or discrete
/// |∇d_x| < 1 − 10ε. The discretization error estimate is the RMS difference
/// between the Laplacians at bandwidths ε and 2ε over the unmasked nodes;
/// tolerance is `tol_factor` times that.
/// Diagnostics include max_abs_deviation from the bound, which is the
/// quantity to watch in equality cases.
CheckReport laplacian_comparison_check(const StratifiedModel& model, const Coords& x, double k, int n,
                                       const DiscreteApproximation& approx, double tol_factor = 5.0);

/// Isoperimetric profile of the round Sⁿ: vol(∂B_r)/vol(Sⁿ) at vol(B_r)/vol(Sⁿ) = β.
double sphere_isoperimetric_profile(int n, double beta);

/// Outer Minkowski content of E for the normalized measure against the round
/// profile at β = m(E). Needs K_reg = n − 1. Pass iff content ≥ bound − 3 stderr.
CheckReport levy_gromov_check(const StratifiedModel& model, const Region& region, int n,
                              std::size_t samples = 400000, std::uint64_t seed = 0,
                              std::vector<double> eps_ladder = {0.04, 0.02, 0.01});

struct CutoffResult {
  double eps = 0.0;
  /// ρ_ε at the nodes.
  std::vector<double> values;
  /// Σ μ_i Γ(ρ)_i, with Γ the graph carré du champ, at the graph bandwidth h.
  double grad_l2_sq_raw = 0.0;
  /// Richardson value 2E(h) − E(2h) on the same nodes.
  double grad_l2_sq = 0.0;
  /// Σ μ_i |(Lρ)_i|.
  double lap_l1 = 0.0;
};

/// Logarithmic cut-off ρ_ε(d) = clamp(log(d/ε²)/log(1/ε), 0, 1) in the distance
/// to Σ. `injectivity_scale` ≤ 0 selects the model default: the truncation
/// radius for cones and π/2 for suspensions. ε must be below it and below 1.
CutoffResult cutoff_family(const StratifiedModel& model, double eps, const DiscreteApproximation& approx,
                           double injectivity_scale = 0.0);

/// Graph resolving the cut-off of a flat cone: the cone truncated at
/// ε + 8h with bandwidth h = `scale`·ε². The norms of ρ_ε at bandwidths h and
/// 2h only see this region. Throws ResolutionError above `max_nodes`.
DiscreteApproximation cutoff_approximation(const StratifiedModel& model, double eps, std::uint64_t seed,
                                           double scale = 0.5, double neighbours = 100.0,
                                           std::size_t max_nodes = 150000);

/// ψ = 1 + weight · max(f_k, 0) / max|f_k| for the k-th computed eigenfunction.
std::vector<double> bochner_test_function(const SpectralData& spectral, std::size_t k, double weight = 0.5);

/// Integrated BE(K,N) inequality for the graph operator:
///   ½∫(−Lψ)Γ(u) + ∫ψΓ(u, Lu) ≥ K∫ψΓ(u) + (1/N)∫ψ(Lu)²
/// with integrals against the stationary measure. `wide` holds the same
/// nodes at a larger bandwidth rε (rescale_graph, r = 2 usually).
///
/// Discretization error: the larger of
///   the margin change under L → L + (t/2)L², t = 1/κ (heat-kernel bias), and
///   |margin(wide) − margin| / (r² − 1) (all O(ε²) terms, curvature and cone
///   tips included).
/// Tolerance = tol_factor × that. ψ < 0 at a node or u outside the span of
/// the eigenvectors throws PreconditionError.
CheckReport bochner_check(const DiscreteApproximation& approx, const DiscreteApproximation& wide,
                          const SpectralData& spectral, const std::vector<double>& u, const std::vector<double>& psi,
                          double K, double N, double tol_factor = 5.0);

/// Measure contraction on a truncated flat cone: uniform samples are moved to
/// time t along geodesics from x0, and a uniform-kernel density estimate of
/// the result (relative to v_g/vol) is compared with (C/t²)(1 + band), C
/// fitted at t = 1. The kernel radius is t·h with h sized so that a kernel
/// holds `kernel_count` samples at t = 1.
/// Diagnostics: C, sup_<i> (density times t²/C at t_grid[i]).
CheckReport mcp_density_check(const StratifiedModel& model, const Coords& x0, const std::vector<double>& t_grid,
                              std::size_t samples = 200000, std::uint64_t seed = 0, double band = 0.25,
                              double kernel_count = 1000.0);

/// A.e. convexity of the regular set, probed with sampled pairs.
///
/// apex_hit_fraction: share of pairs whose minimizing geodesic meets Σ
/// (exact, for flat cones and 2D suspensions). slice_fraction_<i>: share of
/// (pair, time) draws with γ(τ) ∈ Σ^ε, τ uniform; slice_slope: log-log slope
/// of that against ε. path_fraction_<i>/path_slope: same for whole geodesics.
/// Pass iff no exact hits and slice_slope ≥ 1.8. On the Fermi sphere the
/// geodesics are round great-circle arcs (the blended metric is
/// bi-Lipschitz to the round one) and hits are not exact.
CheckReport ae_convexity_estimate(const StratifiedModel& model, std::size_t pairs, const std::vector<double>& eps_ladder,
                                  std::uint64_t seed, std::size_t times_per_pair = 8);

/// Point at parameter t of a minimizing geodesic of Susp(Circle(a)), through
/// the nearer pole when the link separation reaches π.
Coords suspension_circle_geodesic_at(const StratifiedModel& model, const Coords& p, const Coords& q, double t);

}  // namespace stratlab
