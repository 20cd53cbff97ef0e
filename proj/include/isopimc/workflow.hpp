#pragma once

// Thermodynamic integration over lambda, isotope-effect assembly and the
// harmonic (Teller-Redlich) baseline.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "isopimc/estimators.hpp"
#include "isopimc/model.hpp"
#include "isopimc/sampler.hpp"

namespace isopimc {

/// Simpson nodes: odd count >= 3, ascending, first 0 and last 1.
struct LambdaGrid {
  std::vector<double> nodes;

  static LambdaGrid uniform(int count);
  void validate() const;
  /// Composite Simpson weights; non-uniform pairs use the general
  /// three-point rule, which stays exact for quadratics.
  std::vector<double> simpson_weights() const;
};

/// Mean and standard error of -beta dF/dlambda at one node.
struct NodeEstimate {
  double lambda = 0.0;
  double mean = 0.0;
  double sigma = 0.0;
  std::size_t samples = 0;
};

struct FreeEnergyDifference {
  double delta_f = 0.0;  // hartree
  double sigma = 0.0;
};

/// Delta F = int_0^1 dF/dlambda, from node means of -beta dF/dlambda.
FreeEnergyDifference thermodynamic_integral(const LambdaGrid& grid,
                                            std::span<const NodeEstimate> nodes,
                                            double beta);

struct Ratio {
  double value = 0.0;
  double sigma = 0.0;
};

/// Q(1)/Q(0) = (s_0 / s_1) exp(-beta Delta F).
Ratio partition_ratio(const FreeEnergyDifference& df, int symmetry_light,
                      int symmetry_heavy, double beta);

struct TiSettings {
  LambdaGrid grid = LambdaGrid::uniform(5);
  Scheme scheme = Scheme::TakahashiImada;
  McConfig mc;
  double delta_lambda = kDefaultDeltaLambda;
  bool record_te = true;
  bool record_cve = true;
};

/// One independently simulated piece of a term: a whole species, or one
/// fragment of a fragment-sum species.
struct Piece {
  std::string name;
  SpeciesSpec species;
};

/// Fragments carrying at least one substituted atom. Species without a
/// fragment-sum surface come back as a single piece.
std::vector<Piece> split_fragments(const SpeciesSpec& species);

/// Calls task(0 .. count-1) on up to `jobs` threads. The first exception
/// thrown by any task is rethrown after all workers finish.
void parallel_for(std::size_t count, int jobs,
                  const std::function<void(std::size_t)>& task);

/// All chains of one reaction term.
struct TermRun {
  std::string species;
  int exponent = 1;
  int symmetry_light = 1;
  int symmetry_heavy = 1;
  ThermoPoint thermo;
  Scheme scheme = Scheme::TakahashiImada;
  std::vector<double> lambdas;
  std::vector<std::string> pieces;
  /// chains[node][piece]
  std::vector<std::vector<ChainResult>> chains;
  double wall_seconds = 0.0;
};

/// Runs every (node, piece) chain, up to `jobs` at a time. Chain seeds are
/// derived from `master_seed` and the chain's identity, so the result does
/// not depend on `jobs`.
TermRun run_term(const SpeciesSpec& species, int exponent,
                 const ThermoPoint& thermo, const TiSettings& settings,
                 std::uint64_t master_seed, int jobs = 1);

struct TermEstimate {
  std::string species;
  int exponent = 1;
  int symmetry_light = 1;
  int symmetry_heavy = 1;
  double temperature = 0.0;
  double beta = 0.0;
  int trotter = 0;
  Scheme scheme = Scheme::TakahashiImada;
  EstimatorKind estimator = EstimatorKind::CentroidVirial;
  std::vector<NodeEstimate> nodes;
  FreeEnergyDifference free_energy;
  Ratio ratio;  // Q(1)/Q(0)
  double wall_seconds = 0.0;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> warnings;
};

/// Block-averaged node estimates, summed over pieces, integrated over lambda.
TermEstimate estimate_term(const TermRun& run, EstimatorKind kind,
                           const LambdaGrid& grid);

struct HarmonicIe {
  double value = 0.0;
  double high_t = 0.0;
  double low_t = 0.0;
};

/// Teller-Redlich isotope effect Q(0)/Q(1) of one species in the harmonic
/// approximation, with its classical and zero-point limits.
HarmonicIe harmonic_ie(const SpeciesSpec& species, double temperature);

/// Same from given frequencies (angular, hartree), for direct checks.
HarmonicIe harmonic_ie(std::span<const double> omega_light,
                       std::span<const double> omega_heavy,
                       std::span<const double> m_light,
                       std::span<const double> m_heavy, int dim,
                       int symmetry_light, int symmetry_heavy, double beta);

struct EieReport {
  std::string reaction;
  ReactionMode mode = ReactionMode::Direct;
  double temperature = 0.0;
  int trotter = 0;
  Scheme scheme = Scheme::TakahashiImada;
  EstimatorKind estimator = EstimatorKind::CentroidVirial;
  double eie = 0.0;
  double sigma = 0.0;
  /// Purely statistical value prod (s_0 / s_1)^e.
  double symmetry_factor = 1.0;
  std::vector<TermEstimate> terms;
  std::optional<HarmonicIe> harmonic;
  std::optional<double> speedup;
  double wall_seconds = 0.0;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> warnings;
};

/// EIE = prod_k ratio_k^{e_k}; relative errors add in quadrature. Every term
/// must come from the same temperature.
EieReport assemble_eie(const ReactionSpec& reaction,
                       std::vector<TermEstimate> terms);

/// Product of per-term harmonic isotope effects, as Q(1)/Q(0) ratios.
HarmonicIe harmonic_eie(const ReactionSpec& reaction, double temperature);

/// f = (sigma_ref / sigma)^2 (t_ref / t).
double speedup(double sigma_ref, double time_ref, double sigma, double time);
double speedup(const EieReport& reference, const EieReport& method);

}  // namespace isopimc
