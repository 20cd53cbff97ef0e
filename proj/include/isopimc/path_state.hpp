#pragma once

#include <span>
#include <vector>

namespace isopimc {

struct DiscretizedAction;

/// Bead configuration of a discretized ring polymer with cached energies.
///
/// Layout is bead-major: coords[(s * atoms + i) * dim + d]. The caches
/// (potential, correction, gradient) always describe the current coordinates.
struct PathState {
  int beads = 0;
  int atoms = 0;
  int dim = 0;
  std::vector<double> coords;
  std::vector<double> potential;
  std::vector<double> correction;
  std::vector<double> gradient;

  /// Every bead placed at `geometry` (atoms x dim), caches filled.
  static PathState uniform(const DiscretizedAction& action,
                           std::span<const double> geometry);

  std::size_t stride() const { return static_cast<std::size_t>(atoms) * dim; }
  std::span<const double> bead(int s) const {
    return {coords.data() + s * stride(), stride()};
  }
  std::span<double> bead(int s) { return {coords.data() + s * stride(), stride()}; }
  std::span<const double> bead_gradient(int s) const {
    return {gradient.data() + s * stride(), stride()};
  }
  double& at(int s, int i, int d) { return coords[(s * atoms + i) * dim + d]; }
  double at(int s, int i, int d) const {
    return coords[(s * atoms + i) * dim + d];
  }
  int wrap(int s) const { return ((s % beads) + beads) % beads; }

  /// Bead-averaged position of every atom, atoms x dim.
  std::vector<double> centroid() const;
  /// Recomputes every cache from the coordinates.
  void refresh(const DiscretizedAction& action);
  /// Largest deviation between the caches and a full recomputation.
  double cache_error(const DiscretizedAction& action) const;
  /// Rigid shift of every bead of every atom by `shift` (dim entries).
  void translate(std::span<const double> shift);
};

}  // namespace isopimc
