#include "isopimc/oracle.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace isopimc {

void GridSpec::validate() const {
  if (!(upper > lower)) {
    throw GridError("grid bounds must satisfy lower < upper");
  }
  if (points < 16) throw GridError("grid needs at least 16 points");
}

double GridSpec::spacing() const {
  return box ? (upper - lower) / (points + 1) : (upper - lower) / (points - 1);
}

std::vector<double> GridSpec::nodes() const {
  validate();
  std::vector<double> x(points);
  const double h = spacing();
  for (int k = 0; k < points; ++k) {
    x[k] = box ? lower + (k + 1) * h : lower + k * h;
  }
  if (!box) x.back() = upper;
  return x;
}

GridSpec GridSpec::refined() const {
  GridSpec g = *this;
  g.points = box ? 2 * points + 1 : 2 * points - 1;
  return g;
}

namespace {

Eigen::MatrixXd kinetic_matrix(const GridSpec& grid, double mass) {
  const int n = grid.points;
  Eigen::MatrixXd t(n, n);
  if (!grid.box) {
    const double h = grid.spacing();
    const double pre = 1.0 / (2.0 * mass * h * h);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const int d = i - j;
        const double sign = d % 2 == 0 ? 1.0 : -1.0;
        t(i, j) = pre * sign * (d == 0 ? M_PI * M_PI / 3.0 : 2.0 / (d * d));
      }
    }
    return t;
  }
  const int N = n + 1;
  const double len = grid.upper - grid.lower;
  const double pre = M_PI * M_PI / (4.0 * mass * len * len);
  auto inv_sin2 = [](double x) {
    const double s = std::sin(x);
    return 1.0 / (s * s);
  };
  for (int a = 1; a <= n; ++a) {
    for (int b = 1; b <= n; ++b) {
      double v;
      if (a == b) {
        v = (2.0 * N * N + 1.0) / 3.0 - inv_sin2(M_PI * a / N);
      } else {
        const double sign = (a - b) % 2 == 0 ? 1.0 : -1.0;
        v = sign * (inv_sin2(M_PI * (a - b) / (2.0 * N)) -
                    inv_sin2(M_PI * (a + b) / (2.0 * N)));
      }
      t(a - 1, b - 1) = pre * v;
    }
  }
  return t;
}

void check_one_dimensional(const PotentialSurface& surface) {
  if (surface.atom_count() != 1) {
    throw DomainError("1D oracle needs a one-atom surface");
  }
}

}  // namespace

ExactPartition exact_partition_1d(const PotentialSurface& surface, double mass,
                                  double beta, const GridSpec& grid) {
  check_one_dimensional(surface);
  if (!(mass > 0.0) || !(beta > 0.0)) {
    throw DomainError("mass and beta must be positive");
  }
  const auto x = grid.nodes();
  const int n = grid.points;
  Eigen::MatrixXd h = kinetic_matrix(grid, mass);
  for (int k = 0; k < n; ++k) {
    const double xk[1] = {x[k]};
    if (!surface.contains(xk, 1)) {
      throw GridError("grid point " + std::to_string(x[k]) +
                      " lies outside the potential domain");
    }
    h(k, k) += surface.energy(xk, 1);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h);
  const Eigen::VectorXd e = solver.eigenvalues();
  const Eigen::MatrixXd& v = solver.eigenvectors();

  ExactPartition out;
  out.levels.assign(e.data(), e.data() + n);
  double sum = 0.0;
  int used = 0;
  for (int k = 0; k < n; ++k) {
    const double w = std::exp(-beta * (e(k) - e(0)));
    if (w < 1e-16 * sum) break;
    sum += w;
    ++used;
  }
  out.log_q = -beta * e(0) + std::log(sum);
  out.q = std::exp(out.log_q);
  out.free_energy = -out.log_q / beta;

  if (!grid.box) {
    Eigen::VectorXd density = Eigen::VectorXd::Zero(n);
    for (int k = 0; k < used; ++k) {
      density += std::exp(-beta * (e(k) - e(0))) * v.col(k).cwiseAbs2();
    }
    const double peak = density.maxCoeff();
    const double edge = std::max(density(0), density(n - 1));
    if (edge >= 1e-10 * peak) {
      throw GridError("thermal density at the grid bounds is " +
                      std::to_string(edge / peak) +
                      " of its peak; widen [lower, upper]");
    }
  }
  return out;
}

namespace {

double trace_once(const PotentialSurface& surface, double mass, double beta,
                  int trotter, Scheme scheme, const GridSpec& grid) {
  const auto x = grid.nodes();
  const int n = grid.points;
  const double h = grid.spacing();
  const double tau = beta / trotter;
  Eigen::VectorXd half(n);
  for (int k = 0; k < n; ++k) {
    const double xk[1] = {x[k]};
    if (!surface.contains(xk, 1)) {
      throw GridError("grid point " + std::to_string(x[k]) +
                      " lies outside the potential domain");
    }
    double g[1] = {0.0};
    double v = surface.energy_gradient(xk, 1, g);
    if (scheme == Scheme::TakahashiImada) {
      v += tau * tau * g[0] * g[0] / (24.0 * mass);
    }
    half(k) = std::exp(-0.5 * tau * v);
  }
  const double norm = h * std::sqrt(mass / (2.0 * M_PI * tau));
  Eigen::MatrixXd t(n, n);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      const double d = x[a] - x[b];
      t(a, b) = half(a) * norm * std::exp(-mass * d * d / (2.0 * tau)) * half(b);
    }
  }
  const Eigen::VectorXd lambda =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(t, Eigen::EigenvaluesOnly)
          .eigenvalues();
  double q = 0.0;
  for (int k = 0; k < n; ++k) q += std::pow(lambda(k), trotter);
  return q;
}

}  // namespace

double discretized_trace(const PotentialSurface& surface, double mass,
                         double beta, int trotter, Scheme scheme,
                         const GridSpec& grid, bool check_refinement) {
  check_one_dimensional(surface);
  grid.validate();
  if (grid.box) throw DomainError("discretized trace needs an open grid");
  if (!(mass > 0.0) || !(beta > 0.0)) {
    throw DomainError("mass and beta must be positive");
  }
  if (trotter < 1) throw DomainError("Trotter number must be >= 1");
  const double q = trace_once(surface, mass, beta, trotter, scheme, grid);
  if (check_refinement) {
    const double fine =
        trace_once(surface, mass, beta, trotter, scheme, grid.refined());
    const double change = std::abs(fine - q) / std::abs(fine);
    if (change > 1e-8) {
      throw GridError("discretized trace changes by " + std::to_string(change) +
                      " when the spacing is halved; refine the grid");
    }
  }
  return q;
}

OrderFit fit_convergence_order(std::span<const int> trotter,
                               std::span<const double> error, double floor) {
  if (trotter.size() != error.size()) {
    throw DomainError("order fit needs one error per Trotter number");
  }
  if (trotter.size() < 4) throw DomainError("order fit needs at least 4 points");
  const auto [pmin, pmax] = std::minmax_element(trotter.begin(), trotter.end());
  if (*pmin < 1 || *pmax < 8 * *pmin) {
    throw DomainError("order fit needs P spanning at least a factor 8");
  }
  for (std::size_t k = 0; k < error.size(); ++k) {
    if (!(error[k] > 10.0 * floor) || !(error[k] > 0.0)) {
      throw DomainError("error at P = " + std::to_string(trotter[k]) +
                        " is not above 10x the grid-error floor");
    }
    if (k > 0 && (trotter[k] <= trotter[k - 1] || error[k] >= error[k - 1])) {
      throw DomainError("errors must decrease strictly with increasing P");
    }
  }
  OrderFit fit;
  fit.trotter.assign(trotter.begin(), trotter.end());
  fit.error.assign(error.begin(), error.end());
  const double n = static_cast<double>(trotter.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < trotter.size(); ++k) {
    const double lx = std::log(static_cast<double>(trotter[k]));
    const double ly = std::log(error[k]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  fit.intercept = (sy - fit.slope * sx) / n;
  double rss = 0.0;
  for (std::size_t k = 0; k < trotter.size(); ++k) {
    const double r = std::log(error[k]) -
                     (fit.intercept +
                      fit.slope * std::log(static_cast<double>(trotter[k])));
    rss += r * r;
  }
  fit.residual = std::sqrt(rss / n);
  return fit;
}

double oracle_dfdl(const SpeciesSpec& species, double lambda, double beta,
                   double delta_lambda, const GridSpec& grid) {
  species.validate();
  if (species.dim != 1 || species.atom_count() != 1) {
    throw DomainError("oracle_dfdl needs a one-atom 1D species");
  }
  if (!(delta_lambda > 0.0) || delta_lambda > 0.25) {
    throw DomainError("delta_lambda must lie in (0, 0.25]");
  }
  const auto& atom = species.atoms.front();
  auto free_energy = [&](double l) {
    return exact_partition_1d(*species.potential, atom.mass_at(l), beta, grid)
        .free_energy;
  };
  const double h = delta_lambda;
  if (lambda - h >= 0.0 && lambda + h <= 1.0) {
    return (free_energy(lambda + h) - free_energy(lambda - h)) / (2.0 * h);
  }
  const double f0 = free_energy(lambda);
  if (lambda + 2.0 * h <= 1.0) {
    return (-3.0 * f0 + 4.0 * free_energy(lambda + h) -
            free_energy(lambda + 2.0 * h)) /
           (2.0 * h);
  }
  return (3.0 * f0 - 4.0 * free_energy(lambda - h) +
          free_energy(lambda - 2.0 * h)) /
         (2.0 * h);
}

}  // namespace isopimc
