#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <sstream>
#include <vector>

#include "isopimc/model.hpp"
#include "isopimc/potential.hpp"

using namespace isopimc;

namespace {

const MorseDiatomicSurface::Parameters kMorse{0.1744, 1.02764, 1.40201};

// Max |analytic - FD| relative to max(1, |grad|) over random points drawn
// around `centre` with spread `width`.
double worst_gradient_mismatch(const PotentialSurface& s, int dim,
                               std::vector<double> centre, double width,
                               unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-width, width);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> r = centre;
    for (auto& x : r) x += u(rng);
    if (!s.contains(r, dim)) continue;
    std::vector<double> g(r.size()), fd(r.size());
    s.energy_gradient(r, dim, g);
    finite_difference_gradient(s, r, dim, fd);
    double norm = 0.0;
    for (double x : g) norm += x * x;
    const double scale = std::max(1.0, std::sqrt(norm));
    for (std::size_t i = 0; i < r.size(); ++i) {
      worst = std::max(worst, std::abs(g[i] - fd[i]) / scale);
    }
  }
  return worst;
}

std::string tabulated_text() {
  // V = 0.5 x^2 + 0.1 y^2 on a 2D grid
  std::ostringstream out;
  out << "# test surface\n"
      << "dimensions 2\nvariable cartesian\n"
      << "lower -2 -2\nupper 2 2\npoints 41 41\nvalues\n";
  for (int i = 0; i < 41; ++i) {
    for (int j = 0; j < 41; ++j) {
      const double x = -2 + 0.1 * i, y = -2 + 0.1 * j;
      out << 0.5 * x * x + 0.1 * y * y << (j == 40 ? "\n" : " ");
    }
  }
  return out.str();
}

}  // namespace

TEST_CASE("energies at trivial points") {
  FreeParticleSurface free(2);
  CHECK(free.energy(std::vector<double>{0.3, -1, 2, 4, 5, 6}, 3) == 0.0);

  IsotropicHarmonicSurface harm(1, 0.7, {1.0, -2.0, 0.5});
  CHECK(harm.energy(std::vector<double>{1.0, -2.0, 0.5}, 3) == 0.0);

  MorseDiatomicSurface morse(2, 0, 1, kMorse);
  CHECK(morse.energy(std::vector<double>{0, 0, 0, 0, 0, kMorse.r_e}, 3) ==
        doctest::Approx(0.0).epsilon(1e-15));
  CHECK(morse.energy(std::vector<double>{0, 0, 0, 0, 0, 60.0}, 3) ==
        doctest::Approx(kMorse.well_depth).epsilon(1e-12));
}

TEST_CASE("gradients at trivial points") {
  FreeParticleSurface free(1);
  std::vector<double> g(3, 1.0);
  free.energy_gradient(std::vector<double>{1, 2, 3}, 3, g);
  CHECK(g == std::vector<double>{0, 0, 0});

  IsotropicHarmonicSurface harm(1, 0.7, {1.0, -2.0, 0.5});
  harm.energy_gradient(std::vector<double>{1.5, -2.0, -0.5}, 3, g);
  CHECK(g[0] == doctest::Approx(0.35));
  CHECK(g[1] == doctest::Approx(0.0));
  CHECK(g[2] == doctest::Approx(-0.7));

  MorseDiatomicSurface morse(2, 0, 1, kMorse);
  std::vector<double> g2(6);
  morse.energy_gradient(std::vector<double>{0, 0, 0, 0, 0, kMorse.r_e}, 3, g2);
  for (double x : g2) CHECK(std::abs(x) < 1e-14);
}

TEST_CASE("analytic gradients agree with central differences") {
  const std::vector<double> pair_geom{0, 0, 0, 0.3, -0.2, 1.4};

  IsotropicHarmonicSurface harm(2, 0.7, {0.5, 0.0, -0.5});
  CHECK(worst_gradient_mismatch(harm, 3, {0, 0, 0, 1, 1, 1}, 2.0, 1) < 1e-6);

  HarmonicPairSurface pair(2, 0, 1, 0.37, 1.4);
  CHECK(worst_gradient_mismatch(pair, 3, pair_geom, 0.5, 2) < 1e-6);

  HarmonicPairSurface spring(3, 0, 2, 0.23, 0.0);
  CHECK(worst_gradient_mismatch(spring, 3, {0, 0, 0, 1, 0, 0, 0, 0, 1}, 1.0, 3) <
        1e-6);

  MorseDiatomicSurface morse(2, 0, 1, kMorse);
  CHECK(worst_gradient_mismatch(morse, 3, pair_geom, 0.5, 4) < 1e-6);

  MorseDiatomicSurface line(1, 0, 0, kMorse);
  CHECK(worst_gradient_mismatch(line, 1, {kMorse.r_e}, 0.8, 5) < 1e-6);

  auto frag = FragmentSumSurface(
      3, {{{0, 2}, std::make_shared<MorseDiatomicSurface>(2, 0, 1, kMorse)},
          {{1}, std::make_shared<IsotropicHarmonicSurface>(
                    1, 0.4, std::vector<double>{0, 0, 0})}});
  CHECK(worst_gradient_mismatch(frag, 3, {0, 0, 0, 0.5, 0.5, 0.5, 0, 0, 1.4},
                                0.4, 6) < 1e-6);

  auto table = TabulatedSurface::parse(tabulated_text(), 2, 3);
  CHECK(worst_gradient_mismatch(*table, 1, {0.0, 0.0}, 1.5, 7) < 1e-6);
}

TEST_CASE("fragment sums do not couple fragments") {
  auto morse = std::make_shared<MorseDiatomicSurface>(2, 0, 1, kMorse);
  auto harm = std::make_shared<IsotropicHarmonicSurface>(
      1, 0.4, std::vector<double>{0, 0, 0});
  FragmentSumSurface frag(3, {{{0, 2}, morse}, {{1}, harm}});

  std::vector<double> r{0.1, 0, 0, 0.5, 0.5, 0.5, 0, 0.2, 1.4};
  std::vector<double> g0(9), g1(9);
  frag.energy_gradient(r, 3, g0);
  // Move only the tethered atom: the Morse atoms' gradient is untouched.
  r[3] += 0.3;
  r[5] -= 0.7;
  frag.energy_gradient(r, 3, g1);
  for (int k : {0, 1, 2, 6, 7, 8}) CHECK(g0[k] == g1[k]);
  CHECK(g0[3] != g1[3]);

  const double e = frag.energy(r, 3);
  CHECK(e == doctest::Approx(morse->energy(frag.gather(0, r, 3), 3) +
                             harm->energy(frag.gather(1, r, 3), 3))
                 .epsilon(1e-15));

  CHECK_THROWS_AS(FragmentSumSurface(3, {{{0, 1}, morse}, {{1}, harm}}),
                  DomainError);
}

TEST_CASE("numeric Hessian is symmetric") {
  MorseDiatomicSurface morse(2, 0, 1, kMorse);
  const std::vector<double> geom{0.05, -0.1, 0.02, 0.3, 0.2, 1.3};
  const auto h = numeric_hessian(morse, geom, 3);
  double largest = 0.0;
  for (double x : h) largest = std::max(largest, std::abs(x));
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) {
      CHECK(std::abs(h[i * 6 + j] - h[j * 6 + i]) <= 1e-8 * largest);
    }
  }
}

TEST_CASE("normal mode frequencies") {
  SUBCASE("tethered atom gives three equal modes") {
    const double k = 0.5, m = 1837.0;
    IsotropicHarmonicSurface harm(1, k, {0, 0, 0});
    const std::vector<double> masses{m};
    const auto modes =
        normal_mode_frequencies(harm, masses, harm.equilibrium_geometry(3), 3);
    REQUIRE(modes.frequencies.size() == 3);
    for (double w : modes.frequencies) {
      CHECK(w == doctest::Approx(std::sqrt(k / m)).epsilon(1e-6));
    }
    CHECK(modes.zero_modes == 0);
  }
  SUBCASE("Morse diatomic matches the analytic curvature") {
    MorseDiatomicSurface morse(2, 0, 1, kMorse);
    const double m1 = 1.00782503207 * units::amu, m2 = 2.0141017778 * units::amu;
    const std::vector<double> masses{m1, m2};
    const auto modes =
        normal_mode_frequencies(morse, masses, morse.equilibrium_geometry(3), 3);
    REQUIRE(modes.frequencies.size() == 1);
    const double mu = m1 * m2 / (m1 + m2);
    const double curvature = 2.0 * kMorse.well_depth * kMorse.range * kMorse.range;
    CHECK(morse.curvature() == doctest::Approx(curvature));
    CHECK(modes.frequencies[0] ==
          doctest::Approx(std::sqrt(curvature / mu)).epsilon(1e-6));
    CHECK(modes.zero_modes == 5);
  }
  SUBCASE("free particles have no vibrations") {
    FreeParticleSurface free(2);
    const std::vector<double> masses{1.0, 2.0};
    const auto modes = normal_mode_frequencies(
        free, masses, std::vector<double>{0, 0, 0, 1, 0, 0}, 3);
    CHECK(modes.frequencies.empty());
  }
  SUBCASE("non-stationary geometry is rejected") {
    MorseDiatomicSurface morse(2, 0, 1, kMorse);
    const std::vector<double> masses{1000.0, 1000.0};
    CHECK_THROWS_AS(normal_mode_frequencies(
                        morse, masses, std::vector<double>{0, 0, 0, 0, 0, 2.0}, 3),
                    NumericalError);
  }
}

TEST_CASE("Morse domain bound") {
  auto p = kMorse;
  p.r_max = 4.0;
  MorseDiatomicSurface morse(2, 0, 1, p);
  CHECK(morse.contains(std::vector<double>{0, 0, 0, 0, 0, 3.9}, 3));
  CHECK_FALSE(morse.contains(std::vector<double>{0, 0, 0, 0, 0, 4.1}, 3));
  CHECK_THROWS_AS(MorseDiatomicSurface(2, 0, 1, {-1.0, 1.0, 1.4}), DomainError);
}

TEST_CASE("tabulated surface reproduces its data") {
  auto linear = TabulatedSurface::parse(tabulated_text(), 2, 1);
  auto cubic = TabulatedSurface::parse(tabulated_text(), 2, 3);
  CHECK(linear->energy(std::vector<double>{0.3, -0.7}, 1) ==
        doctest::Approx(0.5 * 0.09 + 0.1 * 0.49).epsilon(1e-12));
  // Between nodes the cubic spline tracks the quadratic closely.
  CHECK(cubic->energy(std::vector<double>{0.33, -0.71}, 1) ==
        doctest::Approx(0.5 * 0.33 * 0.33 + 0.1 * 0.71 * 0.71).epsilon(1e-3));
  CHECK_FALSE(cubic->contains(std::vector<double>{2.5, 0.0}, 1));
  CHECK_THROWS_AS(cubic->energy(std::vector<double>{2.5, 0.0}, 1), DomainError);
  CHECK_THROWS_AS(TabulatedSurface::parse("dimensions 1\nlower 0\nvalues\n1 2\n", 1, 1),
                  DomainError);
  CHECK_THROWS_AS(TabulatedSurface::parse("dimensions 1\nbogus 3\n", 1, 1),
                  DomainError);
}

TEST_CASE("rotational mode counting") {
  CHECK(rotational_modes(std::vector<double>{0, 0, 0}, 3) == 0);
  CHECK(rotational_modes(std::vector<double>{0, 0, 0, 0, 0, 1}, 3) == 2);
  CHECK(rotational_modes(std::vector<double>{0, 0, 0, 0, 0, 1, 0, 1, 0}, 3) == 3);
  CHECK(rotational_modes(std::vector<double>{0, 1}, 1) == 0);
}
