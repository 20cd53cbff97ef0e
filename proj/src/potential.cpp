#include "isopimc/potential.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "isopimc/model.hpp"

namespace isopimc {

namespace {

void check_shape(const PotentialSurface& s, std::span<const double> r,
                 int dim) {
  if (r.size() != static_cast<std::size_t>(s.atom_count() * dim)) {
    throw DomainError("coordinate array does not match atoms x dim");
  }
}

double distance(std::span<const double> r, int dim, int i, int j,
                double* delta) {
  double r2 = 0.0;
  for (int d = 0; d < dim; ++d) {
    delta[d] = r[i * dim + d] - r[j * dim + d];
    r2 += delta[d] * delta[d];
  }
  return std::sqrt(r2);
}

}  // namespace

double PotentialSurface::energy_gradient(std::span<const double> r, int dim,
                                         std::span<double> grad) const {
  finite_difference_gradient(*this, r, dim, grad);
  return energy(r, dim);
}

std::vector<double> PotentialSurface::equilibrium_geometry(int dim) const {
  return std::vector<double>(static_cast<std::size_t>(atom_count() * dim), 0.0);
}

int PotentialSurface::expected_zero_modes(std::span<const double> geometry,
                                          int dim) const {
  if (!translation_invariant()) return 0;
  return dim + (rotation_invariant() ? rotational_modes(geometry, dim) : 0);
}

void finite_difference_gradient(const PotentialSurface& surface,
                                std::span<const double> r, int dim,
                                std::span<double> grad, double step) {
  std::vector<double> x(r.begin(), r.end());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double x0 = x[k];
    x[k] = x0 + step;
    const double ep = surface.energy(x, dim);
    x[k] = x0 - step;
    const double em = surface.energy(x, dim);
    x[k] = x0;
    grad[k] = (ep - em) / (2.0 * step);
  }
}

int rotational_modes(std::span<const double> geometry, int dim) {
  if (dim == 1) return 0;
  const std::size_t n = geometry.size() / dim;
  if (n < 2) return 0;
  // Rank of the centered coordinate matrix tells point / line / plane.
  Eigen::MatrixXd centered(n, dim);
  Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(dim);
  for (std::size_t i = 0; i < n; ++i) {
    for (int d = 0; d < dim; ++d) centered(i, d) = geometry[i * dim + d];
    mean += centered.row(i);
  }
  mean /= static_cast<double>(n);
  centered.rowwise() -= mean;
  const double scale = std::max(1.0, centered.cwiseAbs().maxCoeff());
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered);
  int rank = 0;
  for (int k = 0; k < svd.singularValues().size(); ++k) {
    if (svd.singularValues()(k) > 1e-8 * scale) ++rank;
  }
  if (rank == 0) return 0;
  if (rank == 1) return dim == 3 ? 2 : 1;
  return dim == 3 ? 3 : 1;
}

// Free particle -------------------------------------------------------------

double FreeParticleSurface::energy(std::span<const double> r, int dim) const {
  check_shape(*this, r, dim);
  return 0.0;
}

double FreeParticleSurface::energy_gradient(std::span<const double> r, int dim,
                                            std::span<double> grad) const {
  check_shape(*this, r, dim);
  std::fill(grad.begin(), grad.end(), 0.0);
  return 0.0;
}

int FreeParticleSurface::expected_zero_modes(std::span<const double>,
                                             int dim) const {
  return atoms_ * dim;
}

// Isotropic harmonic tether -------------------------------------------------

IsotropicHarmonicSurface::IsotropicHarmonicSurface(int atoms, double k,
                                                   std::vector<double> center)
    : atoms_(atoms), k_(k), center_(std::move(center)) {
  if (!(k > 0.0)) throw DomainError("harmonic force constant must be positive");
}

double IsotropicHarmonicSurface::center(int d) const {
  return d < static_cast<int>(center_.size()) ? center_[d] : 0.0;
}

double IsotropicHarmonicSurface::energy(std::span<const double> r,
                                        int dim) const {
  check_shape(*this, r, dim);
  double v = 0.0;
  for (int i = 0; i < atoms_; ++i) {
    for (int d = 0; d < dim; ++d) {
      const double x = r[i * dim + d] - center(d);
      v += x * x;
    }
  }
  return 0.5 * k_ * v;
}

double IsotropicHarmonicSurface::energy_gradient(std::span<const double> r,
                                                 int dim,
                                                 std::span<double> grad) const {
  check_shape(*this, r, dim);
  double v = 0.0;
  for (int i = 0; i < atoms_; ++i) {
    for (int d = 0; d < dim; ++d) {
      const double x = r[i * dim + d] - center(d);
      v += x * x;
      grad[i * dim + d] = k_ * x;
    }
  }
  return 0.5 * k_ * v;
}

std::vector<double> IsotropicHarmonicSurface::equilibrium_geometry(
    int dim) const {
  std::vector<double> g(static_cast<std::size_t>(atoms_ * dim));
  for (int i = 0; i < atoms_; ++i) {
    for (int d = 0; d < dim; ++d) g[i * dim + d] = center(d);
  }
  return g;
}

// Harmonic pair ---------------------------------------------------------------

HarmonicPairSurface::HarmonicPairSurface(int atoms, int i, int j, double k,
                                         double r_e)
    : atoms_(atoms), i_(i), j_(j), k_(k), r_e_(r_e) {
  if (atoms < 2 || i < 0 || j < 0 || i >= atoms || j >= atoms || i == j) {
    throw DomainError("harmonic pair needs two distinct atoms");
  }
  if (!(k > 0.0) || r_e < 0.0) {
    throw DomainError("harmonic pair needs k > 0 and r_e >= 0");
  }
}

double HarmonicPairSurface::energy(std::span<const double> r, int dim) const {
  check_shape(*this, r, dim);
  double delta[3];
  const double dist = distance(r, dim, i_, j_, delta);
  if (r_e_ == 0.0) return 0.5 * k_ * dist * dist;
  return 0.5 * k_ * (dist - r_e_) * (dist - r_e_);
}

double HarmonicPairSurface::energy_gradient(std::span<const double> r, int dim,
                                            std::span<double> grad) const {
  check_shape(*this, r, dim);
  std::fill(grad.begin(), grad.end(), 0.0);
  double delta[3];
  const double dist = distance(r, dim, i_, j_, delta);
  double factor;  // dV/d(delta) = factor * delta
  double v;
  if (r_e_ == 0.0) {
    factor = k_;
    v = 0.5 * k_ * dist * dist;
  } else {
    v = 0.5 * k_ * (dist - r_e_) * (dist - r_e_);
    factor = dist > 0.0 ? k_ * (dist - r_e_) / dist : 0.0;
  }
  for (int d = 0; d < dim; ++d) {
    grad[i_ * dim + d] += factor * delta[d];
    grad[j_ * dim + d] -= factor * delta[d];
  }
  return v;
}

std::vector<double> HarmonicPairSurface::equilibrium_geometry(int dim) const {
  std::vector<double> g(static_cast<std::size_t>(atoms_ * dim), 0.0);
  g[j_ * dim] = r_e_;
  return g;
}

// Morse -------------------------------------------------------------------------

MorseDiatomicSurface::MorseDiatomicSurface(int atoms, int i, int j,
                                           Parameters params)
    : atoms_(atoms), i_(i), j_(j), params_(params) {
  if (!(params.well_depth > 0.0) || !(params.range > 0.0) ||
      !(params.r_e > 0.0)) {
    throw DomainError("Morse surface needs D_e > 0, a > 0, r_e > 0");
  }
  if (!(params.r_max > params.r_e)) {
    throw DomainError("Morse r_max must exceed r_e");
  }
  if (atoms < 1) throw DomainError("Morse surface needs at least one atom");
  if (atoms >= 2 && (i < 0 || j < 0 || i >= atoms || j >= atoms || i == j)) {
    throw DomainError("Morse bond needs two distinct atom indices");
  }
  if (atoms == 1) i_ = j_ = 0;
}

double MorseDiatomicSurface::curvature() const {
  return 2.0 * params_.well_depth * params_.range * params_.range;
}

double MorseDiatomicSurface::bond_coordinate(std::span<const double> r,
                                             int dim) const {
  double delta[3];
  if (atoms_ == 1) {
    if (dim == 1) return r[0];
    return std::sqrt(r[0] * r[0] + r[1] * r[1] + r[2] * r[2]);
  }
  return distance(r, dim, j_, i_, delta);
}

double MorseDiatomicSurface::energy(std::span<const double> r, int dim) const {
  check_shape(*this, r, dim);
  const double x = bond_coordinate(r, dim);
  const double e = 1.0 - std::exp(-params_.range * (x - params_.r_e));
  return params_.well_depth * e * e;
}

double MorseDiatomicSurface::energy_gradient(std::span<const double> r,
                                             int dim,
                                             std::span<double> grad) const {
  check_shape(*this, r, dim);
  std::fill(grad.begin(), grad.end(), 0.0);
  const double x = bond_coordinate(r, dim);
  const double ex = std::exp(-params_.range * (x - params_.r_e));
  const double v = params_.well_depth * (1.0 - ex) * (1.0 - ex);
  const double dvdx = 2.0 * params_.well_depth * params_.range * (1.0 - ex) * ex;
  if (atoms_ == 1) {
    if (dim == 1) {
      grad[0] = dvdx;
    } else if (x > 0.0) {
      for (int d = 0; d < dim; ++d) grad[d] = dvdx * r[d] / x;
    }
    return v;
  }
  if (x > 0.0) {
    for (int d = 0; d < dim; ++d) {
      const double u = (r[j_ * dim + d] - r[i_ * dim + d]) / x;
      grad[j_ * dim + d] += dvdx * u;
      grad[i_ * dim + d] -= dvdx * u;
    }
  }
  return v;
}

bool MorseDiatomicSurface::contains(std::span<const double> r, int dim) const {
  if (std::isinf(params_.r_max)) return true;
  return bond_coordinate(r, dim) <= params_.r_max;
}

std::vector<double> MorseDiatomicSurface::equilibrium_geometry(int dim) const {
  std::vector<double> g(static_cast<std::size_t>(atoms_ * dim), 0.0);
  g[j_ * dim] = params_.r_e;
  return g;
}

// Fragment sum ------------------------------------------------------------------

FragmentSumSurface::FragmentSumSurface(int atoms,
                                       std::vector<Fragment> fragments)
    : atoms_(atoms), fragments_(std::move(fragments)) {
  std::vector<int> owner(static_cast<std::size_t>(atoms), -1);
  for (std::size_t f = 0; f < fragments_.size(); ++f) {
    const auto& frag = fragments_[f];
    if (!frag.surface) throw DomainError("fragment without a surface");
    if (frag.surface->atom_count() != static_cast<int>(frag.atoms.size())) {
      throw DomainError("fragment surface atom count does not match its subset");
    }
    for (int a : frag.atoms) {
      if (a < 0 || a >= atoms) throw DomainError("fragment atom index out of range");
      if (owner[a] != -1) throw DomainError("fragments must be disjoint");
      owner[a] = static_cast<int>(f);
    }
  }
  if (std::any_of(owner.begin(), owner.end(), [](int o) { return o < 0; })) {
    throw DomainError("every atom must belong to exactly one fragment");
  }
}

std::vector<double> FragmentSumSurface::gather(std::size_t f,
                                               std::span<const double> r,
                                               int dim) const {
  const auto& atoms = fragments_[f].atoms;
  std::vector<double> sub(atoms.size() * dim);
  for (std::size_t k = 0; k < atoms.size(); ++k) {
    for (int d = 0; d < dim; ++d) sub[k * dim + d] = r[atoms[k] * dim + d];
  }
  return sub;
}

double FragmentSumSurface::energy(std::span<const double> r, int dim) const {
  check_shape(*this, r, dim);
  double v = 0.0;
  for (std::size_t f = 0; f < fragments_.size(); ++f) {
    v += fragments_[f].surface->energy(gather(f, r, dim), dim);
  }
  return v;
}

double FragmentSumSurface::energy_gradient(std::span<const double> r, int dim,
                                           std::span<double> grad) const {
  check_shape(*this, r, dim);
  std::fill(grad.begin(), grad.end(), 0.0);
  double v = 0.0;
  for (std::size_t f = 0; f < fragments_.size(); ++f) {
    const auto& atoms = fragments_[f].atoms;
    std::vector<double> sub_grad(atoms.size() * dim);
    v += fragments_[f].surface->energy_gradient(gather(f, r, dim), dim,
                                                sub_grad);
    for (std::size_t k = 0; k < atoms.size(); ++k) {
      for (int d = 0; d < dim; ++d) {
        grad[atoms[k] * dim + d] = sub_grad[k * dim + d];
      }
    }
  }
  return v;
}

bool FragmentSumSurface::has_analytic_gradient() const {
  return std::all_of(fragments_.begin(), fragments_.end(), [](const auto& f) {
    return f.surface->has_analytic_gradient();
  });
}

bool FragmentSumSurface::translation_invariant() const {
  return std::all_of(fragments_.begin(), fragments_.end(), [](const auto& f) {
    return f.surface->translation_invariant();
  });
}

bool FragmentSumSurface::rotation_invariant() const {
  return std::all_of(fragments_.begin(), fragments_.end(), [](const auto& f) {
    return f.surface->rotation_invariant();
  });
}

bool FragmentSumSurface::contains(std::span<const double> r, int dim) const {
  for (std::size_t f = 0; f < fragments_.size(); ++f) {
    if (!fragments_[f].surface->contains(gather(f, r, dim), dim)) return false;
  }
  return true;
}

bool FragmentSumSurface::defined_outside_domain() const {
  return std::all_of(fragments_.begin(), fragments_.end(), [](const auto& f) {
    return f.surface->defined_outside_domain();
  });
}

std::vector<double> FragmentSumSurface::equilibrium_geometry(int dim) const {
  std::vector<double> g(static_cast<std::size_t>(atoms_ * dim), 0.0);
  // Fragments are placed far apart along x; they do not interact anyway.
  double offset = 0.0;
  for (const auto& frag : fragments_) {
    const auto sub = frag.surface->equilibrium_geometry(dim);
    for (std::size_t k = 0; k < frag.atoms.size(); ++k) {
      for (int d = 0; d < dim; ++d) {
        g[frag.atoms[k] * dim + d] = sub[k * dim + d] + (d == 0 ? offset : 0.0);
      }
    }
    offset += 100.0;
  }
  return g;
}

int FragmentSumSurface::expected_zero_modes(std::span<const double> geometry,
                                            int dim) const {
  int total = 0;
  for (std::size_t f = 0; f < fragments_.size(); ++f) {
    total += fragments_[f].surface->expected_zero_modes(
        gather(f, geometry, dim), dim);
  }
  return total;
}

// Tabulated ---------------------------------------------------------------------

namespace {

// Natural cubic B-spline coefficients along one axis: n samples -> n + 2
// coefficients c_{-1..n}.
void spline_axis(const std::vector<double>& f, std::vector<double>& c) {
  const std::size_t n = f.size();
  c.assign(n + 2, 0.0);
  std::vector<double> inner(n);
  inner[0] = f[0];
  inner[n - 1] = f[n - 1];
  if (n > 2) {
    // c_{k-1} + 4 c_k + c_{k+1} = 6 f_k for k = 1..n-2 (Thomas algorithm).
    const std::size_t m = n - 2;
    std::vector<double> diag(m, 4.0), rhs(m);
    for (std::size_t k = 0; k < m; ++k) rhs[k] = 6.0 * f[k + 1];
    rhs[0] -= inner[0];
    rhs[m - 1] -= inner[n - 1];
    for (std::size_t k = 1; k < m; ++k) {
      const double w = 1.0 / diag[k - 1];
      diag[k] -= w;
      rhs[k] -= w * rhs[k - 1];
    }
    inner[m] = rhs[m - 1] / diag[m - 1];
    for (std::size_t k = m - 1; k-- > 0;) {
      inner[k + 1] = (rhs[k] - inner[k + 2]) / diag[k];
    }
  }
  for (std::size_t k = 0; k < n; ++k) c[k + 1] = inner[k];
  c[0] = 2.0 * inner[0] - (n > 1 ? inner[1] : inner[0]);
  c[n + 1] = 2.0 * inner[n - 1] - (n > 1 ? inner[n - 2] : inner[n - 1]);
}

void bspline_weights(double u, double w[4], double dw[4]) {
  const double u2 = u * u, u3 = u2 * u, v = 1.0 - u;
  w[0] = v * v * v / 6.0;
  w[1] = (3.0 * u3 - 6.0 * u2 + 4.0) / 6.0;
  w[2] = (-3.0 * u3 + 3.0 * u2 + 3.0 * u + 1.0) / 6.0;
  w[3] = u3 / 6.0;
  dw[0] = -0.5 * v * v;
  dw[1] = 1.5 * u2 - 2.0 * u;
  dw[2] = -1.5 * u2 + u + 0.5;
  dw[3] = 0.5 * u2;
}

}  // namespace

TabulatedSurface::TabulatedSurface(int atoms, Variable variable, Grid grid,
                                   int order)
    : atoms_(atoms), variable_(variable), grid_(std::move(grid)), order_(order) {
  const std::size_t rank = grid_.points.size();
  if (rank < 1 || rank > 3) throw DomainError("tabulated grid rank must be 1..3");
  if (grid_.lower.size() != rank || grid_.spacing.size() != rank) {
    throw DomainError("tabulated grid header is inconsistent");
  }
  std::size_t total = 1;
  for (std::size_t a = 0; a < rank; ++a) {
    if (grid_.points[a] < 2) throw DomainError("tabulated axes need >= 2 points");
    if (!(grid_.spacing[a] > 0.0)) throw DomainError("grid spacing must be positive");
    total *= static_cast<std::size_t>(grid_.points[a]);
  }
  if (grid_.values.size() != total) {
    throw DomainError("tabulated grid has " + std::to_string(grid_.values.size()) +
                      " values, header implies " + std::to_string(total));
  }
  if (order != 1 && order != 3) throw DomainError("interpolation order must be 1 or 3");
  if (variable == Variable::BondLength && (rank != 1 || atoms != 2)) {
    throw DomainError("bond-length tables are 1D over a two-atom system");
  }
  if (order_ == 3) {
    // Prefilter axis by axis; processed axes grow from n to n + 2.
    std::vector<int> shape(grid_.points.begin(), grid_.points.end());
    std::vector<double> data = grid_.values;
    for (std::size_t axis = 0; axis < rank; ++axis) {
      std::vector<int> out_shape = shape;
      out_shape[axis] += 2;
      std::size_t inner = 1, outer = 1;
      for (std::size_t a = axis + 1; a < rank; ++a) inner *= shape[a];
      for (std::size_t a = 0; a < axis; ++a) outer *= shape[a];
      const int n = shape[axis];
      std::vector<double> out(outer * (n + 2) * inner);
      std::vector<double> line(n), coef;
      for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t in = 0; in < inner; ++in) {
          for (int k = 0; k < n; ++k) line[k] = data[(o * n + k) * inner + in];
          spline_axis(line, coef);
          for (int k = 0; k < n + 2; ++k) {
            out[(o * (n + 2) + k) * inner + in] = coef[k];
          }
        }
      }
      data = std::move(out);
      shape = out_shape;
    }
    coefficients_ = std::move(data);
  }
}

double TabulatedSurface::upper(int axis) const {
  return grid_.lower[axis] + (grid_.points[axis] - 1) * grid_.spacing[axis];
}

std::vector<double> TabulatedSurface::grid_coordinates(
    std::span<const double> r, int dim) const {
  check_shape(*this, r, dim);
  if (variable_ == Variable::BondLength) {
    double delta[3];
    return {distance(r, dim, 1, 0, delta)};
  }
  if (static_cast<int>(r.size()) != rank()) {
    throw DomainError("Cartesian table rank does not match atoms x dim");
  }
  return {r.begin(), r.end()};
}

bool TabulatedSurface::contains(std::span<const double> r, int dim) const {
  const auto x = grid_coordinates(r, dim);
  for (int a = 0; a < rank(); ++a) {
    const double slack = 1e-12 * grid_.spacing[a];
    if (x[a] < grid_.lower[a] - slack || x[a] > upper(a) + slack) return false;
  }
  return true;
}

double TabulatedSurface::evaluate(std::span<const double> x,
                                  std::span<double> dx) const {
  const int rk = rank();
  int cell[3];
  double u[3];
  for (int a = 0; a < rk; ++a) {
    const double slack = 1e-12 * grid_.spacing[a];
    if (x[a] < grid_.lower[a] - slack || x[a] > upper(a) + slack) {
      throw DomainError("point lies outside the tabulated domain");
    }
    const double t = (x[a] - grid_.lower[a]) / grid_.spacing[a];
    cell[a] = std::clamp(static_cast<int>(std::floor(t)), 0,
                         grid_.points[a] - 2);
    u[a] = t - cell[a];
  }
  double value = 0.0;
  std::fill(dx.begin(), dx.end(), 0.0);
  if (order_ == 1) {
    const int corners = 1 << rk;
    for (int c = 0; c < corners; ++c) {
      std::size_t idx = 0;
      double w = 1.0;
      double dw[3];
      for (int a = 0; a < rk; ++a) {
        const int bit = (c >> a) & 1;
        idx = idx * grid_.points[a] + cell[a] + bit;
        const double wa = bit ? u[a] : 1.0 - u[a];
        dw[a] = (bit ? 1.0 : -1.0) / grid_.spacing[a];
        w *= wa;
      }
      const double f = grid_.values[idx];
      value += w * f;
      for (int a = 0; a < rk; ++a) {
        double wd = dw[a];
        for (int b = 0; b < rk; ++b) {
          if (b == a) continue;
          const int bit = (c >> b) & 1;
          wd *= bit ? u[b] : 1.0 - u[b];
        }
        dx[a] += wd * f;
      }
    }
    return value;
  }
  double w[3][4], dw[3][4];
  for (int a = 0; a < rk; ++a) bspline_weights(u[a], w[a], dw[a]);
  const int terms = rk == 1 ? 4 : rk == 2 ? 16 : 64;
  for (int t = 0; t < terms; ++t) {
    std::size_t idx = 0;
    int m[3];
    int rem = t;
    for (int a = rk - 1; a >= 0; --a) {
      m[a] = rem % 4;
      rem /= 4;
    }
    for (int a = 0; a < rk; ++a) idx = idx * (grid_.points[a] + 2) + cell[a] + m[a];
    const double c = coefficients_[idx];
    double prod = 1.0;
    for (int a = 0; a < rk; ++a) prod *= w[a][m[a]];
    value += prod * c;
    for (int a = 0; a < rk; ++a) {
      double pd = dw[a][m[a]] / grid_.spacing[a];
      for (int b = 0; b < rk; ++b) {
        if (b != a) pd *= w[b][m[b]];
      }
      dx[a] += pd * c;
    }
  }
  return value;
}

double TabulatedSurface::energy(std::span<const double> r, int dim) const {
  const auto x = grid_coordinates(r, dim);
  std::vector<double> dx(x.size());
  return evaluate(x, dx);
}

double TabulatedSurface::energy_gradient(std::span<const double> r, int dim,
                                         std::span<double> grad) const {
  const auto x = grid_coordinates(r, dim);
  std::vector<double> dx(x.size());
  const double v = evaluate(x, dx);
  if (variable_ == Variable::Cartesian) {
    std::copy(dx.begin(), dx.end(), grad.begin());
    return v;
  }
  std::fill(grad.begin(), grad.end(), 0.0);
  const double dist = x[0];
  if (dist > 0.0) {
    for (int d = 0; d < dim; ++d) {
      const double unit = (r[dim + d] - r[d]) / dist;
      grad[dim + d] = dx[0] * unit;
      grad[d] = -dx[0] * unit;
    }
  }
  return v;
}

std::shared_ptr<TabulatedSurface> TabulatedSurface::parse(
    const std::string& text, int atoms, int order) {
  std::istringstream in(text);
  std::string line;
  Grid grid;
  Variable variable = Variable::Cartesian;
  std::vector<double> upper;
  int rank = 0;
  bool in_values = false;
  int line_no = 0;
  auto fail = [&](const std::string& msg) {
    throw DomainError("tabulated surface line " + std::to_string(line_no) +
                      ": " + msg);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    std::istringstream ls(line);
    if (in_values) {
      double v;
      while (ls >> v) grid.values.push_back(v);
      if (!ls.eof()) fail("non-numeric value");
      continue;
    }
    std::string key;
    if (!(ls >> key)) continue;
    if (key == "dimensions") {
      if (!(ls >> rank) || rank < 1 || rank > 3) fail("dimensions must be 1..3");
    } else if (key == "variable") {
      std::string v;
      ls >> v;
      if (v == "cartesian") variable = Variable::Cartesian;
      else if (v == "bond_length") variable = Variable::BondLength;
      else fail("variable must be cartesian or bond_length");
    } else if (key == "lower" || key == "spacing" || key == "upper") {
      std::vector<double> vals(rank);
      for (auto& v : vals) {
        if (!(ls >> v)) fail(key + " needs " + std::to_string(rank) + " numbers");
      }
      (key == "lower" ? grid.lower : key == "spacing" ? grid.spacing : upper) =
          vals;
    } else if (key == "points") {
      grid.points.resize(rank);
      for (auto& p : grid.points) {
        if (!(ls >> p)) fail("points needs " + std::to_string(rank) + " integers");
      }
    } else if (key == "values") {
      if (rank == 0) fail("'dimensions' must precede 'values'");
      in_values = true;
    } else {
      fail("unknown header key '" + key + "'");
    }
  }
  if (grid.spacing.empty() && !upper.empty() && !grid.points.empty()) {
    grid.spacing.resize(rank);
    for (int a = 0; a < rank; ++a) {
      grid.spacing[a] = (upper[a] - grid.lower.at(a)) / (grid.points[a] - 1);
    }
  }
  if (rank == 0 || grid.lower.empty() || grid.points.empty() ||
      grid.spacing.empty()) {
    throw DomainError("tabulated surface header is incomplete");
  }
  return std::make_shared<TabulatedSurface>(atoms, variable, std::move(grid),
                                            order);
}

std::shared_ptr<TabulatedSurface> TabulatedSurface::load(
    const std::filesystem::path& path, int atoms, int order) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open tabulated surface " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str(), atoms, order);
}

// Normal modes --------------------------------------------------------------------

std::vector<double> numeric_hessian(const PotentialSurface& surface,
                                    std::span<const double> geometry, int dim,
                                    double step) {
  const std::size_t n = geometry.size();
  std::vector<double> x(geometry.begin(), geometry.end());
  std::vector<double> h(n * n);
  const double e0 = surface.energy(x, dim);
  auto eval = [&](std::size_t i, double si, std::size_t j, double sj) {
    const double xi = x[i], xj = x[j];
    x[i] += si;
    x[j] += sj;
    const double e = surface.energy(x, dim);
    x[i] = xi;
    x[j] = xj;
    return e;
  };
  for (std::size_t i = 0; i < n; ++i) {
    const double ep = eval(i, step, i, 0.0);
    const double em = eval(i, -step, i, 0.0);
    h[i * n + i] = (ep - 2.0 * e0 + em) / (step * step);
    for (std::size_t j = i + 1; j < n; ++j) {
      const double pp = eval(i, step, j, step);
      const double pm = eval(i, step, j, -step);
      const double mp = eval(i, -step, j, step);
      const double mm = eval(i, -step, j, -step);
      const double v = (pp - pm - mp + mm) / (4.0 * step * step);
      h[i * n + j] = v;
      h[j * n + i] = v;
    }
  }
  return h;
}

NormalModes normal_mode_frequencies(const PotentialSurface& surface,
                                    std::span<const double> masses,
                                    std::span<const double> geometry,
                                    int dim) {
  const std::size_t atoms = masses.size();
  const std::size_t n = atoms * dim;
  if (geometry.size() != n) throw DomainError("geometry does not match masses");

  std::vector<double> grad(n);
  surface.energy_gradient(geometry, dim, grad);
  double gmax = 0.0;
  for (double g : grad) gmax = std::max(gmax, std::abs(g));
  if (gmax > 1e-6) {
    throw NumericalError("normal modes requested at a non-stationary point "
                         "(max |dV/dr| = " + std::to_string(gmax) + ")");
  }

  const auto hess = numeric_hessian(surface, geometry, dim);
  Eigen::MatrixXd mw(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      mw(i, j) = hess[i * n + j] /
                 std::sqrt(masses[i / dim] * masses[j / dim]);
    }
  }

  // Project rigid translations and rotations out of the mass-weighted
  // Hessian so finite-difference noise cannot leak into them.
  std::vector<Eigen::VectorXd> rigid;
  if (surface.translation_invariant()) {
    double total = 0.0;
    std::vector<double> com(dim, 0.0);
    for (std::size_t i = 0; i < atoms; ++i) {
      total += masses[i];
      for (int d = 0; d < dim; ++d) com[d] += masses[i] * geometry[i * dim + d];
    }
    for (auto& c : com) c /= total;
    for (int d = 0; d < dim; ++d) {
      Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
      for (std::size_t i = 0; i < atoms; ++i) v(i * dim + d) = std::sqrt(masses[i]);
      rigid.push_back(v);
    }
    if (surface.rotation_invariant() && dim == 3) {
      for (int axis = 0; axis < 3; ++axis) {
        Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
        for (std::size_t i = 0; i < atoms; ++i) {
          Eigen::Vector3d r(geometry[i * 3] - com[0], geometry[i * 3 + 1] - com[1],
                            geometry[i * 3 + 2] - com[2]);
          const Eigen::Vector3d t = Eigen::Vector3d::Unit(axis).cross(r);
          for (int d = 0; d < 3; ++d) v(i * 3 + d) = std::sqrt(masses[i]) * t(d);
        }
        rigid.push_back(v);
      }
    }
  }
  std::vector<Eigen::VectorXd> basis;
  for (auto v : rigid) {
    for (const auto& b : basis) v -= b.dot(v) * b;
    if (v.norm() > 1e-8) basis.push_back(v.normalized());
  }
  if (!basis.empty()) {
    Eigen::MatrixXd proj = Eigen::MatrixXd::Identity(n, n);
    for (const auto& b : basis) proj -= b * b.transpose();
    mw = proj * mw * proj;
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(mw);
  const Eigen::VectorXd eig = solver.eigenvalues();
  const double largest = eig.cwiseAbs().maxCoeff();
  NormalModes modes;
  for (Eigen::Index k = 0; k < eig.size(); ++k) {
    const double w2 = eig(k);
    if (largest == 0.0 || std::abs(w2) < 1e-6 * largest) {
      ++modes.zero_modes;
      continue;
    }
    if (w2 < 0.0) {
      throw NumericalError("negative curvature: geometry is not a minimum");
    }
    modes.frequencies.push_back(std::sqrt(w2));
  }
  const int expected = surface.expected_zero_modes(geometry, dim);
  if (modes.zero_modes != expected) {
    throw NumericalError("found " + std::to_string(modes.zero_modes) +
                         " zero-frequency modes, expected " +
                         std::to_string(expected));
  }
  std::sort(modes.frequencies.begin(), modes.frequencies.end());
  return modes;
}

}  // namespace isopimc
