#pragma once

// Metropolis sampling of ring-polymer configurations.
//
// A step is one move. Most steps are staging moves: a random cyclic segment
// of L consecutive beads is redrawn exactly from the free-particle bridge
// between its two fixed neighbours, so only the potential part of the
// action enters the acceptance test. The remaining steps translate one
// atom's whole ring rigidly, which the bridge cannot do on its own when
// P = 1.

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "isopimc/estimators.hpp"
#include "isopimc/factorization.hpp"
#include "isopimc/model.hpp"
#include "isopimc/path_state.hpp"

namespace isopimc {

using Rng = std::mt19937_64;

/// splitmix64 of master ^ fnv1a(key): independent, reproducible streams.
std::uint64_t derive_seed(std::uint64_t master, std::string_view key);

struct McConfig {
  long long total_steps = 10'000'000;
  double warmup_fraction = 0.25;
  int estimator_stride = 10;
  /// Staging segment length; 0 selects P/2.
  int staging_segment = 0;
  /// Probability that a step is a rigid ring translation instead of staging.
  double centroid_move_fraction = 0.1;
  std::uint64_t seed = 1;

  void validate() const;
  /// Effective L for P beads: 1 <= L <= P - 1, or 0 when P = 1.
  int segment_length(int beads) const;
  long long warmup_steps() const;
};

struct MoveStats {
  long long staging_attempts = 0;
  long long staging_accepts = 0;
  long long centroid_attempts = 0;
  long long centroid_accepts = 0;

  double staging_ratio() const;
  double centroid_ratio() const;
  /// Accepted over attempted, all move types.
  double overall_ratio() const;
};

/// Bridge resample of beads start .. start+count-1 (cyclic), conditioned on
/// beads start-1 and start+count. Returns count x atoms x dim coordinates.
std::vector<double> staging_proposal(const PathState& state,
                                     const DiscretizedAction& action,
                                     int start, int count, Rng& rng);

/// Log density of staging_proposal producing `coords` from `state`.
double staging_log_density(const PathState& state,
                           const DiscretizedAction& action, int start,
                           std::span<const double> coords);

/// One staging move with a uniformly chosen start bead. Returns acceptance.
bool staging_move(PathState& state, const DiscretizedAction& action,
                  int count, Rng& rng);

/// Rigid translation of one random atom's ring by a uniform shift in
/// [-step, step]^dim. Returns acceptance.
bool centroid_move(PathState& state, const DiscretizedAction& action,
                   double step, Rng& rng);

/// Moves the mass-weighted center of all beads to the origin. Only valid
/// for translation-invariant surfaces; the caches stay consistent.
void recenter(PathState& state, const DiscretizedAction& action);

/// Replaces beads of `proposal` in `state`, caches included.
void apply(PathState& state, const Proposal& proposal);

struct ChainSpec {
  SpeciesSpec species;
  double lambda = 0.0;
  ThermoPoint thermo;
  Scheme scheme = Scheme::TakahashiImada;
  McConfig mc;
  double delta_lambda = kDefaultDeltaLambda;
  bool record_te = true;
  bool record_cve = true;
};

struct ChainResult {
  EstimatorSeries te;
  EstimatorSeries cve;
  MoveStats moves;
  std::vector<std::string> warnings;
  /// Non-empty when the chain produced no usable samples.
  std::string error;
  double wall_seconds = 0.0;

  bool ok() const { return error.empty(); }
};

/// Runs one chain from all beads at the reference geometry. Warm-up steps
/// are discarded; afterwards every estimator_stride-th step is sampled.
ChainResult run_chain(const ChainSpec& spec);

struct BlockAverage {
  double mean = 0.0;
  double rmse = 0.0;
  std::size_t samples = 0;
  /// Naive RMSE per doubling level, level 0 first.
  std::vector<double> level_rmse;
  /// Level where the plateau starts, -1 when none was found.
  int plateau_level = -1;
};

inline constexpr std::size_t kMinBlocks = 16;

/// Flyvbjerg-Petersen doubling. A plateau is two consecutive doublings whose
/// RMSE changes by at most 10%; the largest estimate on it is reported, or
/// the largest over all levels when no plateau exists.
BlockAverage block_average(std::span<const double> series,
                           std::size_t min_blocks = kMinBlocks);

}  // namespace isopimc
