#pragma once

// Domain types for isotope-substitution path-integral studies.
//
// Everything in this header is in atomic units (hbar = m_e = E_h = a_0 = 1).
// Conversions from amu / kelvin / cm^-1 happen in the config reader and in
// report emission only.

#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace isopimc {

namespace units {
/// Unified atomic mass unit in electron masses (CODATA 2018).
inline constexpr double amu = 1822.888486209;
/// Boltzmann constant in hartree per kelvin.
inline constexpr double boltzmann = 3.166811563e-6;
/// One hartree in cm^-1.
inline constexpr double hartree_in_wavenumbers = 219474.6313632;
/// One bohr in angstrom.
inline constexpr double bohr_in_angstrom = 0.529177210903;
}  // namespace units

/// Input outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A computation that could not produce a trustworthy number.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PotentialSurface;

/// One atom of an isotopolog pair. Masses are in electron masses.
struct AtomSpec {
  std::string label;
  double m_light = 0.0;
  double m_heavy = 0.0;

  /// Exactly zero when the atom is not substituted.
  double dm_dlambda() const { return m_heavy - m_light; }
  bool substituted() const { return m_heavy != m_light; }
  double mass_at(double lambda) const;
};

/// A system whose atom masses are interpolated between two isotopologs.
///
/// "light" and "heavy" only name the lambda = 0 and lambda = 1 endpoints; a
/// transformation may just as well make an atom lighter.
struct SpeciesSpec {
  std::string name;
  std::vector<AtomSpec> atoms;
  int symmetry_light = 1;
  int symmetry_heavy = 1;
  std::shared_ptr<const PotentialSurface> potential;
  int dim = 3;
  /// Starting geometry, atoms x dim. Empty means the surface's own minimum.
  std::vector<double> geometry;

  int atom_count() const { return static_cast<int>(atoms.size()); }
  bool any_substituted() const;
  /// Throws DomainError when an invariant is violated.
  void validate() const;
  std::vector<double> reference_geometry() const;
};

/// Per-atom masses at lambda, (1 - lambda) m_light + lambda m_heavy.
std::vector<double> interpolate_masses(const SpeciesSpec& species,
                                       double lambda);
std::vector<double> mass_derivatives(const SpeciesSpec& species);

double beta_from_kelvin(double temperature);

struct ThermoPoint {
  double temperature = 0.0;  // kelvin, informational
  double beta = 0.0;         // 1/hartree
  int trotter = 1;

  static ThermoPoint from_kelvin(double temperature, int trotter);
  static ThermoPoint from_beta(double beta, int trotter);
};

enum class Scheme { Primitive, TakahashiImada };

std::string to_string(Scheme scheme);
Scheme scheme_from_string(const std::string& text);

struct TrotterReference {
  double temperature = 1000.0;
  int trotter = 30;
};

/// P = ceil(P_ref T_ref / T), bumped to the next even integer.
int trotter_schedule(double temperature, const TrotterReference& reference);

/// Proportional schedule with optional exact per-temperature values.
struct TrotterPlan {
  TrotterReference reference;
  std::map<double, int> overrides;

  int at(double temperature) const;
};

TrotterPlan default_trotter_plan(Scheme scheme);

enum class ReactionMode { Direct, RatioOfRatios };

/// One partition-function ratio Q(lambda=1)/Q(lambda=0), raised to `exponent`.
struct ReactionTerm {
  SpeciesSpec species;
  int exponent = 1;
};

/// EIE = prod_k [Q_k(1)/Q_k(0)]^{e_k}. Direct mode holds a single term that
/// swaps isotopes between sites; ratio-of-ratios mode holds several.
struct ReactionSpec {
  std::string name;
  ReactionMode mode = ReactionMode::Direct;
  std::vector<ReactionTerm> terms;

  /// Checks term shapes and that the isotope inventory is conserved.
  void validate() const;
};

}  // namespace isopimc
