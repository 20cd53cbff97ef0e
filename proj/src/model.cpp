#include "isopimc/model.hpp"

#include <algorithm>
#include <cmath>

#include "isopimc/potential.hpp"

namespace isopimc {

double AtomSpec::mass_at(double lambda) const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw DomainError("lambda must lie in [0, 1], got " +
                      std::to_string(lambda));
  }
  if (lambda == 0.0 || !substituted()) return m_light;
  if (lambda == 1.0) return m_heavy;
  return (1.0 - lambda) * m_light + lambda * m_heavy;
}

bool SpeciesSpec::any_substituted() const {
  return std::any_of(atoms.begin(), atoms.end(),
                     [](const AtomSpec& a) { return a.substituted(); });
}

void SpeciesSpec::validate() const {
  const std::string where = "species '" + name + "': ";
  if (atoms.empty()) throw DomainError(where + "needs at least one atom");
  for (const auto& a : atoms) {
    if (!(a.m_light > 0.0) || !(a.m_heavy > 0.0)) {
      throw DomainError(where + "atom '" + a.label +
                        "' must have positive masses");
    }
  }
  if (symmetry_light < 1 || symmetry_heavy < 1) {
    throw DomainError(where + "symmetry numbers must be >= 1");
  }
  if (dim != 1 && dim != 3) throw DomainError(where + "dimension must be 1 or 3");
  if (!potential) throw DomainError(where + "has no potential surface");
  if (potential->atom_count() != atom_count()) {
    throw DomainError(where + "potential expects " +
                      std::to_string(potential->atom_count()) +
                      " atoms, species has " + std::to_string(atom_count()));
  }
  if (!geometry.empty() &&
      geometry.size() != static_cast<std::size_t>(atom_count() * dim)) {
    throw DomainError(where + "geometry must have atoms x dim entries");
  }
}

std::vector<double> SpeciesSpec::reference_geometry() const {
  if (!geometry.empty()) return geometry;
  return potential->equilibrium_geometry(dim);
}

std::vector<double> interpolate_masses(const SpeciesSpec& species,
                                       double lambda) {
  std::vector<double> masses;
  masses.reserve(species.atoms.size());
  for (const auto& a : species.atoms) masses.push_back(a.mass_at(lambda));
  return masses;
}

std::vector<double> mass_derivatives(const SpeciesSpec& species) {
  std::vector<double> dm;
  dm.reserve(species.atoms.size());
  for (const auto& a : species.atoms) dm.push_back(a.dm_dlambda());
  return dm;
}

double beta_from_kelvin(double temperature) {
  if (!(temperature > 0.0)) throw DomainError("temperature must be positive");
  return 1.0 / (units::boltzmann * temperature);
}

ThermoPoint ThermoPoint::from_kelvin(double temperature, int trotter) {
  if (trotter < 1) throw DomainError("Trotter number must be >= 1");
  return {temperature, beta_from_kelvin(temperature), trotter};
}

ThermoPoint ThermoPoint::from_beta(double beta, int trotter) {
  if (!(beta > 0.0)) throw DomainError("beta must be positive");
  if (trotter < 1) throw DomainError("Trotter number must be >= 1");
  return {1.0 / (units::boltzmann * beta), beta, trotter};
}

std::string to_string(Scheme scheme) {
  return scheme == Scheme::Primitive ? "PA" : "TI";
}

Scheme scheme_from_string(const std::string& text) {
  if (text == "PA" || text == "pa" || text == "primitive") {
    return Scheme::Primitive;
  }
  if (text == "TI" || text == "ti" || text == "takahashi-imada") {
    return Scheme::TakahashiImada;
  }
  throw DomainError("unknown factorization scheme '" + text + "'");
}

int trotter_schedule(double temperature, const TrotterReference& reference) {
  if (!(temperature > 0.0)) throw DomainError("temperature must be positive");
  if (reference.trotter < 1 || !(reference.temperature > 0.0)) {
    throw DomainError("invalid Trotter reference point");
  }
  const double exact =
      reference.trotter * reference.temperature / temperature;
  // Guard against 150.00000000001 rounding up to 151.
  auto p = static_cast<long>(std::ceil(exact * (1.0 - 1e-12)));
  p = std::max(p, 1L);
  if (p % 2 != 0) ++p;
  return static_cast<int>(p);
}

int TrotterPlan::at(double temperature) const {
  for (const auto& [t, p] : overrides) {
    if (std::abs(t - temperature) <= 1e-9 * std::max(1.0, temperature)) {
      return p;
    }
  }
  return trotter_schedule(temperature, reference);
}

TrotterPlan default_trotter_plan(Scheme scheme) {
  TrotterPlan plan;
  plan.reference = scheme == Scheme::Primitive ? TrotterReference{1000.0, 30}
                                               : TrotterReference{1000.0, 8};
  return plan;
}

void ReactionSpec::validate() const {
  const std::string where = "reaction '" + name + "': ";
  if (terms.empty()) throw DomainError(where + "has no terms");
  for (const auto& t : terms) {
    t.species.validate();
    if (t.exponent != 1 && t.exponent != -1) {
      throw DomainError(where + "term exponents must be +1 or -1");
    }
  }
  if (mode == ReactionMode::Direct) {
    if (terms.size() != 1 || terms.front().exponent != 1) {
      throw DomainError(where + "direct mode takes exactly one +1 term");
    }
    // Isotopomerization: both endpoints hold the same multiset of masses.
    std::vector<double> light, heavy;
    for (const auto& a : terms.front().species.atoms) {
      light.push_back(a.m_light);
      heavy.push_back(a.m_heavy);
    }
    std::sort(light.begin(), light.end());
    std::sort(heavy.begin(), heavy.end());
    for (std::size_t i = 0; i < light.size(); ++i) {
      if (std::abs(light[i] - heavy[i]) > 1e-9 * light[i]) {
        throw DomainError(where +
                          "direct mode requires the same isotopes on both "
                          "sides (isotopomerization)");
      }
    }
    return;
  }
  double net = 0.0, scale = 0.0;
  for (const auto& t : terms) {
    for (const auto& a : t.species.atoms) {
      net += t.exponent * a.dm_dlambda();
      scale += a.m_light;
    }
  }
  if (std::abs(net) > 1e-9 * scale) {
    throw DomainError(where + "isotope mass inventory is not conserved");
  }
}

}  // namespace isopimc
