#pragma once

// Potential-energy surfaces.
//
// Coordinates are passed flat, atom-major: r[i * dim + d]. Energies in
// hartree, lengths in bohr.

#include <filesystem>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace isopimc {

inline constexpr double kGradientStep = 1e-4;
inline constexpr double kHessianStep = 5e-3;

class PotentialSurface {
 public:
  virtual ~PotentialSurface() = default;

  virtual int atom_count() const = 0;
  virtual double energy(std::span<const double> r, int dim) const = 0;

  /// Energy plus gradient dV/dr written into `grad`. The default uses
  /// central differences with step kGradientStep.
  virtual double energy_gradient(std::span<const double> r, int dim,
                                 std::span<double> grad) const;

  virtual bool has_analytic_gradient() const { return false; }
  virtual bool translation_invariant() const { return false; }
  virtual bool rotation_invariant() const { return false; }

  /// Configurations outside the domain are never sampled.
  virtual bool contains(std::span<const double> /*r*/, int /*dim*/) const {
    return true;
  }
  /// True when energies stay well defined outside the sampled domain, so
  /// estimators may evaluate scaled configurations there.
  virtual bool defined_outside_domain() const { return true; }

  /// A stationary geometry (the minimum where one exists).
  virtual std::vector<double> equilibrium_geometry(int dim) const;

  /// Number of zero-frequency modes at `geometry`: translations and rotations
  /// that leave the energy unchanged.
  virtual int expected_zero_modes(std::span<const double> geometry,
                                  int dim) const;
};

using SurfacePtr = std::shared_ptr<const PotentialSurface>;

/// Central-difference gradient of `surface.energy`.
void finite_difference_gradient(const PotentialSurface& surface,
                                std::span<const double> r, int dim,
                                std::span<double> grad,
                                double step = kGradientStep);

/// Rotational zero modes of a point set: 0 for a point, 2 for a line
/// (in 3D), 3 otherwise; always 0 in 1D.
int rotational_modes(std::span<const double> geometry, int dim);

class FreeParticleSurface final : public PotentialSurface {
 public:
  explicit FreeParticleSurface(int atoms) : atoms_(atoms) {}
  int atom_count() const override { return atoms_; }
  double energy(std::span<const double> r, int dim) const override;
  double energy_gradient(std::span<const double> r, int dim,
                         std::span<double> grad) const override;
  bool has_analytic_gradient() const override { return true; }
  bool translation_invariant() const override { return true; }
  bool rotation_invariant() const override { return true; }
  int expected_zero_modes(std::span<const double> geometry,
                          int dim) const override;

 private:
  int atoms_;
};

/// Every atom tethered to `center` with force constant k.
class IsotropicHarmonicSurface final : public PotentialSurface {
 public:
  IsotropicHarmonicSurface(int atoms, double k, std::vector<double> center);
  int atom_count() const override { return atoms_; }
  double energy(std::span<const double> r, int dim) const override;
  double energy_gradient(std::span<const double> r, int dim,
                         std::span<double> grad) const override;
  bool has_analytic_gradient() const override { return true; }
  std::vector<double> equilibrium_geometry(int dim) const override;

  double force_constant() const { return k_; }

 private:
  double center(int d) const;
  int atoms_;
  double k_;
  std::vector<double> center_;
};

/// V = k/2 (|r_i - r_j| - r_e)^2. With r_e = 0 this is the isotropic spring
/// k/2 |r_i - r_j|^2, smooth everywhere.
class HarmonicPairSurface final : public PotentialSurface {
 public:
  HarmonicPairSurface(int atoms, int i, int j, double k, double r_e);
  int atom_count() const override { return atoms_; }
  double energy(std::span<const double> r, int dim) const override;
  double energy_gradient(std::span<const double> r, int dim,
                         std::span<double> grad) const override;
  bool has_analytic_gradient() const override { return true; }
  bool translation_invariant() const override { return true; }
  bool rotation_invariant() const override { return true; }
  std::vector<double> equilibrium_geometry(int dim) const override;

 private:
  int atoms_, i_, j_;
  double k_, r_e_;
};

/// V = D_e (1 - exp(-a (r - r_e)))^2.
///
/// With one atom the bond runs to the origin and, in 1D, r is the signed
/// coordinate (the Morse oscillator on a line). With two or more atoms r is
/// the distance between atoms i and j. An optional r_max bounds the bonded
/// region for sampling; the energy itself continues analytically beyond it.
class MorseDiatomicSurface final : public PotentialSurface {
 public:
  struct Parameters {
    double well_depth = 0.0;  // D_e
    double range = 0.0;       // a
    double r_e = 0.0;
    double r_max = std::numeric_limits<double>::infinity();
  };

  MorseDiatomicSurface(int atoms, int i, int j, Parameters params);
  int atom_count() const override { return atoms_; }
  double energy(std::span<const double> r, int dim) const override;
  double energy_gradient(std::span<const double> r, int dim,
                         std::span<double> grad) const override;
  bool has_analytic_gradient() const override { return true; }
  bool translation_invariant() const override { return atoms_ >= 2; }
  bool rotation_invariant() const override { return atoms_ >= 2; }
  bool contains(std::span<const double> r, int dim) const override;
  std::vector<double> equilibrium_geometry(int dim) const override;

  const Parameters& parameters() const { return params_; }
  /// d2V/dr2 at r_e, 2 D_e a^2.
  double curvature() const;
  double bond_coordinate(std::span<const double> r, int dim) const;

 private:
  int atoms_, i_, j_;
  Parameters params_;
};

/// Sum of independent surfaces over disjoint atom subsets.
class FragmentSumSurface final : public PotentialSurface {
 public:
  struct Fragment {
    std::vector<int> atoms;
    std::shared_ptr<const PotentialSurface> surface;
  };

  FragmentSumSurface(int atoms, std::vector<Fragment> fragments);
  int atom_count() const override { return atoms_; }
  double energy(std::span<const double> r, int dim) const override;
  double energy_gradient(std::span<const double> r, int dim,
                         std::span<double> grad) const override;
  bool has_analytic_gradient() const override;
  bool translation_invariant() const override;
  bool rotation_invariant() const override;
  bool contains(std::span<const double> r, int dim) const override;
  bool defined_outside_domain() const override;
  std::vector<double> equilibrium_geometry(int dim) const override;
  int expected_zero_modes(std::span<const double> geometry,
                          int dim) const override;

  const std::vector<Fragment>& fragments() const { return fragments_; }
  /// Coordinates of fragment f's atoms, in fragment order.
  std::vector<double> gather(std::size_t f, std::span<const double> r,
                             int dim) const;

 private:
  int atoms_;
  std::vector<Fragment> fragments_;
};

/// Values on a regular grid, interpolated multilinearly (order 1) or by a
/// natural tensor-product cubic B-spline (order 3).
///
/// variable = Cartesian: the grid axes are the flattened coordinates
/// (atoms * dim must equal the grid rank). variable = BondLength: a 1D grid
/// over |r_i - r_j| for a two-atom system.
class TabulatedSurface final : public PotentialSurface {
 public:
  enum class Variable { Cartesian, BondLength };

  struct Grid {
    std::vector<double> lower;
    std::vector<double> spacing;
    std::vector<int> points;
    std::vector<double> values;  // row-major, last axis fastest
  };

  TabulatedSurface(int atoms, Variable variable, Grid grid, int order);

  /// Reads the plain-text format documented in the README.
  static std::shared_ptr<TabulatedSurface> load(
      const std::filesystem::path& path, int atoms, int order);
  static std::shared_ptr<TabulatedSurface> parse(const std::string& text,
                                                 int atoms, int order);

  int atom_count() const override { return atoms_; }
  double energy(std::span<const double> r, int dim) const override;
  double energy_gradient(std::span<const double> r, int dim,
                         std::span<double> grad) const override;
  bool has_analytic_gradient() const override { return true; }
  bool translation_invariant() const override {
    return variable_ == Variable::BondLength;
  }
  bool rotation_invariant() const override {
    return variable_ == Variable::BondLength;
  }
  bool contains(std::span<const double> r, int dim) const override;
  bool defined_outside_domain() const override { return false; }

  int rank() const { return static_cast<int>(grid_.points.size()); }
  double upper(int axis) const;

 private:
  std::vector<double> grid_coordinates(std::span<const double> r,
                                       int dim) const;
  double evaluate(std::span<const double> x, std::span<double> dx) const;

  int atoms_;
  Variable variable_;
  Grid grid_;
  int order_;
  std::vector<double> coefficients_;  // B-spline coefficients, (n+2)^rank
};

/// Symmetric numeric Hessian (n x n, n = atoms * dim, row-major) from
/// central second differences of the energy.
std::vector<double> numeric_hessian(const PotentialSurface& surface,
                                    std::span<const double> geometry, int dim,
                                    double step = kHessianStep);

struct NormalModes {
  /// Vibrational angular frequencies, ascending.
  std::vector<double> frequencies;
  int zero_modes = 0;
};

/// Harmonic frequencies at a stationary geometry. Translational and
/// rotational modes (|omega^2| < 1e-6 of the largest eigenvalue) are dropped;
/// their count must equal surface.expected_zero_modes().
NormalModes normal_mode_frequencies(const PotentialSurface& surface,
                                    std::span<const double> masses,
                                    std::span<const double> geometry, int dim);

}  // namespace isopimc
