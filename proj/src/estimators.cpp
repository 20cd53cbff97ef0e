#include "isopimc/estimators.hpp"

#include <cmath>
#include <numeric>

namespace isopimc {

std::string to_string(EstimatorKind kind) {
  return kind == EstimatorKind::Thermodynamic ? "TE" : "CVE";
}

EstimatorKind estimator_from_string(const std::string& text) {
  if (text == "TE" || text == "te" || text == "thermodynamic") {
    return EstimatorKind::Thermodynamic;
  }
  if (text == "CVE" || text == "cve" || text == "centroid-virial") {
    return EstimatorKind::CentroidVirial;
  }
  throw DomainError("unknown estimator '" + text + "'");
}

double EstimatorSeries::mean() const {
  if (samples.empty()) throw NumericalError("mean of an empty series");
  return std::accumulate(samples.begin(), samples.end(), 0.0) /
         static_cast<double>(samples.size());
}

double te_sample(const PathState& state, const DiscretizedAction& action,
                 const SpeciesSpec& species) {
  const int P = state.beads;
  const int D = state.dim;
  const double beta = action.beta();
  const double tau = action.tau();
  const bool ti = action.scheme == Scheme::TakahashiImada;
  double total = 0.0;
  for (int i = 0; i < state.atoms; ++i) {
    const double dm = species.atoms[i].dm_dlambda();
    if (dm == 0.0) continue;
    const double m = action.masses[i];
    double springs = 0.0, forces = 0.0;
    for (int s = 0; s < P; ++s) {
      const int t = state.wrap(s + 1);
      for (int d = 0; d < D; ++d) {
        const double diff = state.at(s, i, d) - state.at(t, i, d);
        springs += diff * diff;
        if (ti) {
          const double g = state.gradient[(s * state.atoms + i) * D + d];
          forces += g * g;
        }
      }
    }
    double value = D * P / (2.0 * m) - P / (2.0 * beta) * springs;
    if (ti) value += tau * tau * tau / (24.0 * m * m) * forces;
    total += dm * value;
  }
  return total;
}

std::vector<double> scaled_coordinates(const PathState& state,
                                       std::span<const double> m_from,
                                       std::span<const double> m_to) {
  std::vector<double> out = state.coords;
  const auto centroid = state.centroid();
  for (int i = 0; i < state.atoms; ++i) {
    if (m_from[i] == m_to[i]) continue;
    const double f = std::sqrt(m_from[i] / m_to[i]);
    for (int s = 0; s < state.beads; ++s) {
      for (int d = 0; d < state.dim; ++d) {
        const std::size_t k = (s * state.atoms + i) * state.dim + d;
        const double c = centroid[i * state.dim + d];
        out[k] = c + f * (state.coords[k] - c);
      }
    }
  }
  return out;
}

std::vector<double> scaled_coordinates(const PathState& state,
                                       const SpeciesSpec& species,
                                       double lambda, double delta_lambda) {
  return scaled_coordinates(state, interpolate_masses(species, lambda),
                            interpolate_masses(species, lambda + delta_lambda));
}

namespace {

// Sum over beads of V_eff (masses fixed at m(lambda)) on the path scaled to
// the masses at lambda + delta.
double scaled_energy(const PathState& state, const DiscretizedAction& action,
                     const SpeciesSpec& species, double lambda, double delta) {
  const auto coords = scaled_coordinates(
      state, action.masses, interpolate_masses(species, lambda + delta));
  const std::size_t stride = state.stride();
  std::vector<double> grad(stride);
  double sum = 0.0;
  for (int s = 0; s < state.beads; ++s) {
    std::span<const double> bead(coords.data() + s * stride, stride);
    if (!action.surface->defined_outside_domain() &&
        !action.surface->contains(bead, state.dim)) {
      throw NumericalError(
          "mass-scaled path leaves the potential domain; reduce delta_lambda");
    }
    sum += action.evaluate(bead, grad).effective();
  }
  return sum;
}

}  // namespace

double cve_sample(const PathState& state, const DiscretizedAction& action,
                  const SpeciesSpec& species, double lambda,
                  double delta_lambda) {
  if (!(delta_lambda > 0.0) || delta_lambda > 0.25) {
    throw DomainError("delta_lambda must lie in (0, 0.25]");
  }
  const int P = state.beads;
  const int D = state.dim;
  const double beta = action.beta();
  const double tau = action.tau();
  const bool ti = action.scheme == Scheme::TakahashiImada;

  double constant = 0.0, explicit_ti = 0.0, smallest_change = 1.0;
  bool any = false;
  for (int i = 0; i < state.atoms; ++i) {
    const double dm = species.atoms[i].dm_dlambda();
    if (dm == 0.0) continue;
    any = true;
    const double m = action.masses[i];
    constant += 0.5 * D * dm / m;
    const double m_step = species.atoms[i].mass_at(
        lambda + delta_lambda <= 1.0 ? lambda + delta_lambda
                                     : lambda - delta_lambda);
    smallest_change =
        std::min(smallest_change, std::abs(1.0 - std::sqrt(m / m_step)));
    if (!ti) continue;
    double forces = 0.0;
    for (int s = 0; s < P; ++s) {
      for (int d = 0; d < D; ++d) {
        const double g = state.gradient[(s * state.atoms + i) * D + d];
        forces += g * g;
      }
    }
    explicit_ti += dm / (m * m) * forces;
  }
  if (!any) return 0.0;
  if (smallest_change < 1e-11) {
    throw NumericalError(
        "delta_lambda too small: the mass-scaled path is indistinguishable "
        "from the original; use a larger delta_lambda");
  }

  const double h = delta_lambda;
  double f0 = 0.0;
  for (int s = 0; s < P; ++s) f0 += state.potential[s] + state.correction[s];
  double derivative;
  if (lambda - h >= 0.0 && lambda + h <= 1.0) {
    derivative = (scaled_energy(state, action, species, lambda, h) -
                  scaled_energy(state, action, species, lambda, -h)) /
                 (2.0 * h);
  } else if (lambda + 2.0 * h <= 1.0) {
    derivative = (-3.0 * f0 +
                  4.0 * scaled_energy(state, action, species, lambda, h) -
                  scaled_energy(state, action, species, lambda, 2.0 * h)) /
                 (2.0 * h);
  } else {
    derivative = (3.0 * f0 -
                  4.0 * scaled_energy(state, action, species, lambda, -h) +
                  scaled_energy(state, action, species, lambda, -2.0 * h)) /
                 (2.0 * h);
  }
  const double explicit_term = ti ? tau * tau / 24.0 * explicit_ti : 0.0;
  return constant - (beta / P) * (derivative - explicit_term);
}

}  // namespace isopimc
