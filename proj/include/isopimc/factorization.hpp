#pragma once

// Discretized ring-polymer action for the primitive (PA) and
// Takahashi-Imada (TI) factorizations.
//
//   Phi_eff = P/(2 beta^2) sum_i m_i sum_s |r_i^(s) - r_i^(s+1)|^2
//           + (1/P) sum_s V_eff(r^(s)),
//   V_eff   = V + (1/24) (beta/P)^2 sum_i |dV/dr_i|^2 / m_i    (TI)
//   V_eff   = V                                                (PA)
//
// Bead indices are cyclic. The normalization prefactor of the discretized
// partition function is never evaluated; its mass dependence enters the
// estimators analytically.

#include <span>
#include <vector>

#include "isopimc/model.hpp"
#include "isopimc/path_state.hpp"
#include "isopimc/potential.hpp"

namespace isopimc {

/// (1/24)(beta/P)^2 sum_i |grad_i|^2 / m_i, with hbar = 1.
double v_ti(std::span<const double> gradient, std::span<const double> masses,
            int dim, double beta, int trotter);

struct BeadEnergy {
  double potential = 0.0;
  double correction = 0.0;  // V_TI, zero for PA
  double effective() const { return potential + correction; }
};

struct DiscretizedAction {
  Scheme scheme = Scheme::TakahashiImada;
  ThermoPoint thermo;
  std::vector<double> masses;
  SurfacePtr surface;
  int dim = 3;

  static DiscretizedAction create(Scheme scheme, const ThermoPoint& thermo,
                                  const SpeciesSpec& species, double lambda);

  int beads() const { return thermo.trotter; }
  int atoms() const { return static_cast<int>(masses.size()); }
  double beta() const { return thermo.beta; }
  /// Imaginary-time slice beta/P.
  double tau() const { return thermo.beta / thermo.trotter; }

  /// V, dV/dr (into `gradient`) and V_TI at one bead configuration.
  BeadEnergy evaluate(std::span<const double> bead,
                      std::span<double> gradient) const;
  /// V_TI from a gradient already at hand.
  double correction(std::span<const double> gradient) const;
  /// Spring energy of one link, P/(2 beta^2) sum_i m_i |a_i - b_i|^2.
  double spring(std::span<const double> a, std::span<const double> b) const;
};

/// Full Phi_eff from the cached per-bead energies in `state`.
double phi_eff(const PathState& state, const DiscretizedAction& action);

/// New coordinates for `count` consecutive beads (cyclic) starting at
/// `start`, with their energies already evaluated.
struct Proposal {
  int start = 0;
  int count = 0;
  std::vector<double> coords;      // count x atoms x dim
  std::vector<double> potential;   // per proposed bead
  std::vector<double> correction;  // per proposed bead
  std::vector<double> gradient;    // count x atoms x dim
  bool in_domain = true;
};

Proposal make_proposal(const DiscretizedAction& action, int start,
                       std::vector<double> coords);

struct PhiDelta {
  double spring = 0.0;
  double potential = 0.0;  // (1/P) sum over moved beads of dV_eff
  double total() const { return spring + potential; }
};

/// phi_eff(proposed) - phi_eff(current), touching only the moved beads and
/// their links.
PhiDelta delta_phi(const PathState& state, const DiscretizedAction& action,
                   const Proposal& proposal);

}  // namespace isopimc
