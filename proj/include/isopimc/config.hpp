#pragma once

// YAML study configuration. Masses are read in amu unless mass_unit is
// "au"; temperatures in kelvin; energies in hartree and lengths in bohr.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "isopimc/estimators.hpp"
#include "isopimc/model.hpp"
#include "isopimc/oracle.hpp"
#include "isopimc/potential.hpp"
#include "isopimc/sampler.hpp"
#include "isopimc/workflow.hpp"

namespace isopimc {

inline constexpr int kSchemaVersion = 1;

/// Invalid configuration, anchored at a 1-based line and column when known.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& message, int line = 0, int column = 0);
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_, column_;
};

/// Thermal point given either as a temperature or directly as beta.
struct ThermalInput {
  std::optional<double> temperature;  // kelvin
  std::optional<double> beta;         // 1/hartree
  double beta_value() const;
  ThermoPoint at(int trotter) const;
};

struct ConvergeConfig {
  std::string species;
  double lambda = 0.5;
  ThermalInput thermal;
  std::vector<int> trotter;
  std::optional<GridSpec> oracle_grid;
};

struct OracleConfig {
  std::string potential;
  double mass = 1.0;  // electron masses
  ThermalInput thermal;
  GridSpec grid;
  std::vector<int> trotter;
  std::vector<Scheme> schemes{Scheme::Primitive, Scheme::TakahashiImada};
  /// Optional dF/dlambda reference for a one-atom 1D species.
  std::optional<std::string> dfdl_species;
  double dfdl_lambda = 0.5;
  double dfdl_delta = kDefaultDeltaLambda;
};

struct SpeedupReference {
  Scheme scheme = Scheme::Primitive;
  EstimatorKind estimator = EstimatorKind::Thermodynamic;
};

struct StudyConfig {
  int schema_version = kSchemaVersion;
  std::uint64_t seed = 1;
  std::map<std::string, SurfacePtr> potentials;
  std::vector<SpeciesSpec> species;
  std::optional<ReactionSpec> reaction;
  std::vector<double> temperatures;
  std::map<Scheme, TrotterPlan> trotter;
  LambdaGrid grid = LambdaGrid::uniform(5);
  std::vector<Scheme> schemes{Scheme::TakahashiImada};
  std::vector<EstimatorKind> estimators{EstimatorKind::CentroidVirial};
  McConfig mc;
  double delta_lambda = kDefaultDeltaLambda;
  bool harmonic = true;
  std::optional<SpeedupReference> speedup_reference;
  std::optional<ConvergeConfig> converge;
  std::optional<OracleConfig> oracle;
  /// Verbatim file contents, kept for the run manifest.
  std::string text;

  const SpeciesSpec& find_species(const std::string& name) const;
  int trotter_at(Scheme scheme, double temperature) const;
};

StudyConfig parse_config(const std::string& text,
                         const std::filesystem::path& base_dir = ".");
StudyConfig load_config(const std::filesystem::path& path);

}  // namespace isopimc
