#pragma once

// Deterministic 1D references: eigenvalue sums for exact partition
// functions, grid transfer-matrix traces for the discretized ones, and
// log-log order fits.

#include <span>
#include <vector>

#include "isopimc/model.hpp"
#include "isopimc/potential.hpp"

namespace isopimc {

/// The grid cannot represent the requested quantity accurately.
class GridError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Uniform grid on [lower, upper]. An open grid includes both bounds and
/// uses the sinc DVR; a box grid places points strictly inside the walls
/// (hard-wall sine DVR).
struct GridSpec {
  double lower = -8.0;
  double upper = 8.0;
  int points = 321;
  bool box = false;

  void validate() const;
  double spacing() const;
  std::vector<double> nodes() const;
  /// Same interval, spacing halved.
  GridSpec refined() const;
};

struct ExactPartition {
  double q = 0.0;
  double log_q = 0.0;
  double free_energy = 0.0;  // -ln(Q) / beta
  std::vector<double> levels;
};

/// Q = sum_n exp(-beta E_n) over the DVR spectrum. On open grids the thermal
/// density at the bounds must stay below 1e-10 of its peak.
ExactPartition exact_partition_1d(const PotentialSurface& surface,
                                  double mass, double beta,
                                  const GridSpec& grid);

/// Tr[(e^{-tau T} e^{-tau V_eff})^P] on the grid, tau = beta / P, from the
/// eigenvalues of the symmetric one-slice transfer matrix. When
/// `check_refinement` is set the grid is also evaluated at half spacing and
/// a relative change above 1e-8 raises GridError.
double discretized_trace(const PotentialSurface& surface, double mass,
                         double beta, int trotter, Scheme scheme,
                         const GridSpec& grid, bool check_refinement = true);

struct OrderFit {
  std::vector<int> trotter;
  std::vector<double> error;
  double slope = 0.0;
  double intercept = 0.0;
  /// Root-mean-square residual of the log-log fit.
  double residual = 0.0;
};

/// Least-squares slope of log(error) against log(P). Needs >= 4 points over
/// at least a factor 8 in P, strictly decreasing errors, and every error
/// above 10 x `floor`.
OrderFit fit_convergence_order(std::span<const int> trotter,
                               std::span<const double> error,
                               double floor = 0.0);

/// dF/dlambda of a one-atom 1D species from exact free energies at
/// m(lambda +- delta_lambda); second-order one-sided at the ends of [0, 1].
double oracle_dfdl(const SpeciesSpec& species, double lambda, double beta,
                   double delta_lambda, const GridSpec& grid);

}  // namespace isopimc
