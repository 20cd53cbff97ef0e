#include "isopimc/factorization.hpp"

#include <cmath>

namespace isopimc {

double v_ti(std::span<const double> gradient, std::span<const double> masses,
            int dim, double beta, int trotter) {
  const double tau = beta / trotter;
  double sum = 0.0;
  for (std::size_t i = 0; i < masses.size(); ++i) {
    double g2 = 0.0;
    for (int d = 0; d < dim; ++d) {
      const double g = gradient[i * dim + d];
      g2 += g * g;
    }
    sum += g2 / masses[i];
  }
  return tau * tau * sum / 24.0;
}

DiscretizedAction DiscretizedAction::create(Scheme scheme,
                                            const ThermoPoint& thermo,
                                            const SpeciesSpec& species,
                                            double lambda) {
  species.validate();
  DiscretizedAction action;
  action.scheme = scheme;
  action.thermo = thermo;
  action.masses = interpolate_masses(species, lambda);
  action.surface = species.potential;
  action.dim = species.dim;
  return action;
}

double DiscretizedAction::correction(std::span<const double> gradient) const {
  if (scheme == Scheme::Primitive) return 0.0;
  return v_ti(gradient, masses, dim, thermo.beta, thermo.trotter);
}

BeadEnergy DiscretizedAction::evaluate(std::span<const double> bead,
                                       std::span<double> gradient) const {
  // PA needs no forces, but the gradient cache is kept for both schemes so
  // the estimators share one code path.
  BeadEnergy e;
  e.potential = surface->energy_gradient(bead, dim, gradient);
  e.correction = correction(gradient);
  return e;
}

double DiscretizedAction::spring(std::span<const double> a,
                                 std::span<const double> b) const {
  double sum = 0.0;
  for (std::size_t i = 0; i < masses.size(); ++i) {
    double d2 = 0.0;
    for (int d = 0; d < dim; ++d) {
      const double diff = a[i * dim + d] - b[i * dim + d];
      d2 += diff * diff;
    }
    sum += masses[i] * d2;
  }
  const double beta = thermo.beta;
  return thermo.trotter / (2.0 * beta * beta) * sum;
}

double phi_eff(const PathState& state, const DiscretizedAction& action) {
  double springs = 0.0, potential = 0.0;
  for (int s = 0; s < state.beads; ++s) {
    springs += action.spring(state.bead(s), state.bead(state.wrap(s + 1)));
    potential += state.potential[s] + state.correction[s];
  }
  return springs + potential / state.beads;
}

Proposal make_proposal(const DiscretizedAction& action, int start,
                       std::vector<double> coords) {
  Proposal p;
  const std::size_t stride = static_cast<std::size_t>(action.atoms()) * action.dim;
  p.start = start;
  p.count = static_cast<int>(coords.size() / stride);
  p.coords = std::move(coords);
  p.potential.resize(p.count);
  p.correction.resize(p.count);
  p.gradient.resize(p.coords.size());
  for (int k = 0; k < p.count; ++k) {
    std::span<const double> bead(p.coords.data() + k * stride, stride);
    if (!action.surface->contains(bead, action.dim)) {
      p.in_domain = false;
      return p;
    }
    const auto e = action.evaluate(
        bead, std::span<double>(p.gradient.data() + k * stride, stride));
    p.potential[k] = e.potential;
    p.correction[k] = e.correction;
  }
  return p;
}

PhiDelta delta_phi(const PathState& state, const DiscretizedAction& action,
                   const Proposal& proposal) {
  PhiDelta delta;
  if (proposal.count == 0) return delta;
  const int P = state.beads;
  const std::size_t stride = state.stride();
  // Offset of bead s inside the proposal, or -1 when it is not moved.
  auto offset = [&](int s) {
    const int k = state.wrap(s - proposal.start);
    return k < proposal.count ? k : -1;
  };
  auto proposed = [&](int s) -> std::span<const double> {
    const int k = offset(s);
    if (k < 0) return state.bead(s);
    return {proposal.coords.data() + k * stride, stride};
  };
  const int links = proposal.count >= P ? P : proposal.count + 1;
  for (int l = 0; l < links; ++l) {
    const int s = state.wrap(proposal.start - 1 + l);
    const int t = state.wrap(s + 1);
    delta.spring += action.spring(proposed(s), proposed(t)) -
                    action.spring(state.bead(s), state.bead(t));
  }
  double dv = 0.0;
  for (int k = 0; k < proposal.count; ++k) {
    const int s = state.wrap(proposal.start + k);
    dv += (proposal.potential[k] + proposal.correction[k]) -
          (state.potential[s] + state.correction[s]);
  }
  delta.potential = dv / P;
  return delta;
}

// PathState -------------------------------------------------------------------

PathState PathState::uniform(const DiscretizedAction& action,
                             std::span<const double> geometry) {
  PathState state;
  state.beads = action.beads();
  state.atoms = action.atoms();
  state.dim = action.dim;
  if (geometry.size() != state.stride()) {
    throw DomainError("initial geometry does not match atoms x dim");
  }
  state.coords.resize(state.beads * state.stride());
  for (int s = 0; s < state.beads; ++s) {
    std::copy(geometry.begin(), geometry.end(), state.bead(s).begin());
  }
  state.refresh(action);
  return state;
}

std::vector<double> PathState::centroid() const {
  std::vector<double> c(stride(), 0.0);
  for (int s = 0; s < beads; ++s) {
    const auto b = bead(s);
    for (std::size_t k = 0; k < c.size(); ++k) c[k] += b[k];
  }
  for (auto& x : c) x /= beads;
  return c;
}

void PathState::refresh(const DiscretizedAction& action) {
  potential.assign(beads, 0.0);
  correction.assign(beads, 0.0);
  gradient.assign(coords.size(), 0.0);
  for (int s = 0; s < beads; ++s) {
    const auto e = action.evaluate(
        bead(s), std::span<double>(gradient.data() + s * stride(), stride()));
    potential[s] = e.potential;
    correction[s] = e.correction;
  }
}

double PathState::cache_error(const DiscretizedAction& action) const {
  PathState fresh = *this;
  fresh.refresh(action);
  double err = 0.0;
  for (int s = 0; s < beads; ++s) {
    err = std::max(err, std::abs(fresh.potential[s] - potential[s]));
    err = std::max(err, std::abs(fresh.correction[s] - correction[s]));
  }
  for (std::size_t k = 0; k < gradient.size(); ++k) {
    err = std::max(err, std::abs(fresh.gradient[k] - gradient[k]));
  }
  return err;
}

void PathState::translate(std::span<const double> shift) {
  for (int s = 0; s < beads; ++s) {
    for (int i = 0; i < atoms; ++i) {
      for (int d = 0; d < dim; ++d) at(s, i, d) += shift[d];
    }
  }
}

}  // namespace isopimc
