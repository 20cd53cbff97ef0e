#pragma once

// Estimators of -beta dF/dlambda for the linear mass interpolation.
//
// Both act on one ring-polymer configuration and return one sample; chain
// averages give the free-energy derivative at lambda.

#include <cstdint>
#include <string>
#include <vector>

#include "isopimc/factorization.hpp"
#include "isopimc/model.hpp"
#include "isopimc/path_state.hpp"

namespace isopimc {

inline constexpr double kDefaultDeltaLambda = 1e-3;

enum class EstimatorKind { Thermodynamic, CentroidVirial };

std::string to_string(EstimatorKind kind);
EstimatorKind estimator_from_string(const std::string& text);

struct SeriesMetadata {
  EstimatorKind kind = EstimatorKind::CentroidVirial;
  Scheme scheme = Scheme::TakahashiImada;
  double lambda = 0.0;
  double temperature = 0.0;
  double beta = 0.0;
  int trotter = 1;
  double delta_lambda = 0.0;  // CVE only
  std::uint64_t seed = 0;
};

/// Samples of -beta dF/dlambda in recording order.
struct EstimatorSeries {
  SeriesMetadata meta;
  std::vector<double> samples;

  bool empty() const { return samples.empty(); }
  double mean() const;
};

/// Thermodynamic estimator: direct mass derivative of the discretized
/// partition function, including the mass dependence of its prefactor.
double te_sample(const PathState& state, const DiscretizedAction& action,
                 const SpeciesSpec& species);

/// Per-atom radial scaling about each atom's centroid by
/// sqrt(m_from / m_to). Atoms with equal masses are copied unchanged.
std::vector<double> scaled_coordinates(const PathState& state,
                                       std::span<const double> m_from,
                                       std::span<const double> m_to);
/// Same, with masses taken from the species at lambda and lambda + dlambda.
std::vector<double> scaled_coordinates(const PathState& state,
                                       const SpeciesSpec& species,
                                       double lambda, double delta_lambda);

/// Centroid-virial estimator. The derivative of V_eff along the mass-scaled
/// path is taken by finite differences in lambda: central in the interior,
/// second-order one-sided where lambda -/+ delta_lambda leaves [0, 1].
double cve_sample(const PathState& state, const DiscretizedAction& action,
                  const SpeciesSpec& species, double lambda,
                  double delta_lambda = kDefaultDeltaLambda);

}  // namespace isopimc
