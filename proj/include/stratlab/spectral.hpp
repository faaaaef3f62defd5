#pragma once

#include <string>
#include <vector>

#include "stratlab/check_report.hpp"
#include "stratlab/measure_mc.hpp"

namespace stratlab {

/// Kernel graph on a sample cloud.
///
/// Weights w_ij = exp(−d²/4ε²) for d ≤ 4ε, density-normalized as
/// w̃_ij = w_ij / (q_i q_j) with q_i = Σ_j w_ij m_j. The Markov operator is
/// P_ij = w̃_ij m_j / D_i, D_i = Σ_j w̃_ij m_j, and L = κ (I − P) approximates
/// the positive Laplacian with κ = 1 / (ε² c_n).
struct DiscreteApproximation {
  std::string model_id;
  std::string model_hash;
  std::uint64_t seed = 0;
  int dim = 0;
  double eps = 0.0;
  double kappa = 0.0;
  double volume = 0.0;

  std::vector<Coords> nodes;
  std::vector<double> mass;  // m_i

  // CSR adjacency including the self loop.
  std::vector<std::size_t> offsets;
  std::vector<std::uint32_t> cols;
  std::vector<double> dist;
  std::vector<double> kernel;  // raw w_ij
  std::vector<double> weight;  // normalized w̃_ij

  std::vector<double> degree;  // D_i

  std::size_t size() const { return nodes.size(); }
  std::size_t edge_count() const { return cols.size(); }
  /// (P f)_i.
  std::vector<double> markov(const std::vector<double>& f) const;
  /// (L f)_i = κ (f_i − (P f)_i).
  std::vector<double> laplacian(const std::vector<double>& f) const;
  /// Stationary measure D_i m_i, scaled to total mass `volume`.
  std::vector<double> stationary_measure() const;
  std::string hash() const;
};

/// Kernel consistency constant c_n = (2/n) γ(n/2+1, 4) / γ(n/2, 4) of the
/// Gaussian truncated at 4ε.
double kernel_constant(int n);

/// Bandwidth at which the 4ε-ball holds about `neighbours` nodes on average.
/// The default 160 gives ε = 0.1 on a 4000-node round S².
double default_bandwidth(const StratifiedModel& model, std::size_t n, double neighbours = 160.0);

DiscreteApproximation build_graph(const StratifiedModel& model, const SampleCloud& cloud, double eps);

/// Same nodes and masses at bandwidth factor·ε; the volume is kept.
DiscreteApproximation rescale_graph(const StratifiedModel& model, const DiscreteApproximation& g, double factor);

struct SpectralData {
  std::vector<double> eigenvalues;
  std::vector<double> residuals;
  /// Eigenfunctions at the nodes, orthonormal for the stationary measure.
  std::vector<std::vector<double>> eigenvectors;
  std::vector<double> measure;
  int dim = 0;
  double volume = 0.0;
  double eps = 0.0;
  /// Eigenvalues above this are not trusted (0.1 / ε² for graphs).
  double cutoff = 0.0;
  bool analytic = false;

  std::size_t count() const { return eigenvalues.size(); }
  /// CSV with columns index,eigenvalue,residual.
  std::string to_csv() const;

  /// Wraps a known spectrum (with multiplicity).
  static SpectralData from_eigenvalues(std::vector<double> values, int dim, double volume);
};

enum class EigenMethod { Auto, Dense, Lanczos };

/// Lowest `count` eigenpairs of L. Auto picks dense below 2000 nodes.
SpectralData eigen(const DiscreteApproximation& approx, std::size_t count, EigenMethod method = EigenMethod::Auto);

/// λ₁ ≥ n after rescaling Ric ≥ K_reg to Ric ≥ n − 1.
CheckReport lichnerowicz_check(const SpectralData& spectral, int n, double k_reg, double tol = 0.07);

struct WeylResult {
  double lambda = 0.0;
  double count = 0.0;   // N(λ)
  double ratio = 0.0;   // N(λ) / λ^{n/2}
  double target = 0.0;  // ω_n vol / (2π)^n
};

/// N(λ)/λ^{n/2} against the Weyl constant. Throws RangeError when λ lies above
/// the fidelity cutoff or the computed part of the spectrum.
WeylResult weyl_ratio(const SpectralData& spectral, double volume, int n, double lambda);

/// Γ(f)_i = ½κ Σ_j P_ij (f_j − f_i)², the graph carré du champ.
std::vector<double> carre_du_champ(const DiscreteApproximation& g, const std::vector<double>& f);

/// Largest √Γ(φ_k) over the nodes within `radius` of Σ, one entry per computed
/// eigenfunction. Zero without a singular set. Reported only: the growth
/// near Σ is logarithmic and its constant is not known.
std::vector<double> gradient_near_singular(const StratifiedModel& model, const DiscreteApproximation& approx,
                                           const SpectralData& spectral, double radius);

}  // namespace stratlab
