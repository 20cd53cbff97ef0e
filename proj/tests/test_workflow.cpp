#include <doctest.h>

#include <atomic>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <vector>

#include "isopimc/oracle.hpp"
#include "isopimc/workflow.hpp"

using namespace isopimc;

namespace {

const double kH = 1.00782503207 * units::amu;
const double kD = 2.0141017778 * units::amu;

SurfacePtr spring_plus_atom() {
  return std::make_shared<FragmentSumSurface>(
      3, std::vector<FragmentSumSurface::Fragment>{
             {{0, 1}, std::make_shared<HarmonicPairSurface>(2, 0, 1, 0.2303, 0.0)},
             {{2}, std::make_shared<FreeParticleSurface>(1)}});
}

// H2 + D -> HD + H as one three-atom species.
SpeciesSpec exchange(SurfacePtr surface) {
  SpeciesSpec s;
  s.name = "H2+D";
  s.dim = 3;
  s.symmetry_light = 2;
  s.symmetry_heavy = 1;
  s.atoms = {{"H", kH, kH}, {"H", kH, kD}, {"D", kD, kH}};
  s.potential = std::move(surface);
  return s;
}

SpeciesSpec swapped(SpeciesSpec s) {
  for (auto& a : s.atoms) std::swap(a.m_light, a.m_heavy);
  std::swap(s.symmetry_light, s.symmetry_heavy);
  s.name += "~";
  return s;
}

TermEstimate term(const SpeciesSpec& s, int exponent, const ThermoPoint& thermo,
                  long long steps, std::uint64_t seed, int jobs = 1) {
  TiSettings settings;
  settings.mc.total_steps = steps;
  const auto run = run_term(s, exponent, thermo, settings, seed, jobs);
  return estimate_term(run, EstimatorKind::CentroidVirial, settings.grid);
}

TermEstimate flat_term(double temperature, int sl, int sh, int exponent) {
  TermEstimate t;
  t.temperature = temperature;
  t.beta = beta_from_kelvin(temperature);
  t.exponent = exponent;
  t.symmetry_light = sl;
  t.symmetry_heavy = sh;
  t.ratio = partition_ratio({0.0, 0.0}, sl, sh, t.beta);
  return t;
}

}  // namespace

TEST_CASE("lambda grids") {
  CHECK(LambdaGrid::uniform(5).nodes == std::vector<double>{0, 0.25, 0.5, 0.75, 1});
  CHECK_THROWS_AS(LambdaGrid::uniform(4), DomainError);
  CHECK_THROWS_AS(LambdaGrid({{0.0, 0.6, 0.5, 0.9, 1.0}}).validate(), DomainError);
  CHECK_THROWS_AS(LambdaGrid({{0.1, 0.5, 1.0}}).validate(), DomainError);
}

TEST_CASE("Simpson integration") {
  const double beta = 3.0;
  for (const auto& grid : {LambdaGrid::uniform(5), LambdaGrid::uniform(9),
                           LambdaGrid{{0.0, 0.1, 0.5, 0.8, 1.0}}}) {
    // Node means are -beta dF/dlambda.
    std::vector<NodeEstimate> flat, quad;
    for (double l : grid.nodes) {
      flat.push_back({l, -beta * 0.7, 0.0, 10});
      quad.push_back({l, -beta * (1.0 - 2.0 * l + 3.0 * l * l), 0.0, 10});
    }
    CHECK(thermodynamic_integral(grid, flat, beta).delta_f ==
          doctest::Approx(0.7).epsilon(1e-15));
    // int_0^1 (1 - 2 l + 3 l^2) = 1
    CHECK(std::abs(thermodynamic_integral(grid, quad, beta).delta_f - 1.0) < 1e-15);
  }
  const auto grid = LambdaGrid::uniform(3);
  const std::vector<NodeEstimate> nodes{{0, 0, 0.6}, {0.5, 0, 0.3}, {1, 0, 0.6}};
  // weights 1/6, 4/6, 1/6
  const double sigma = std::sqrt(2 * 0.36 + 16 * 0.09) / 6.0;
  CHECK(thermodynamic_integral(grid, nodes, 2.0).sigma ==
        doctest::Approx(sigma / 2.0).epsilon(1e-14));
  CHECK_THROWS_AS(thermodynamic_integral(LambdaGrid::uniform(5), nodes, 2.0), DomainError);
}

TEST_CASE("partition ratios") {
  CHECK(partition_ratio({0.0, 0.0}, 1, 1, 10.0).value == 1.0);
  CHECK(partition_ratio({0.0, 0.0}, 2, 1, 10.0).value == 2.0);
  const auto r = partition_ratio({-0.1, 0.01}, 1, 1, 10.0);
  CHECK(r.value == doctest::Approx(std::exp(1.0)));
  CHECK(r.sigma == doctest::Approx(std::exp(1.0) * 0.1));
}

TEST_CASE("statistical isotope effects") {
  ReactionSpec r1{"exchange", ReactionMode::Direct, {}};
  auto s1 = exchange(std::make_shared<FreeParticleSurface>(3));
  r1.terms = {{s1, 1}};
  auto e1 = assemble_eie(r1, {flat_term(500, 2, 1, 1)});
  CHECK(e1.eie == 2.0);
  CHECK(e1.symmetry_factor == 2.0);

  ReactionSpec r2{"H2+D2", ReactionMode::Direct, {}};
  SpeciesSpec s2 = s1;
  s2.symmetry_light = 4;
  r2.terms = {{s2, 1}};
  CHECK(assemble_eie(r2, {flat_term(500, 4, 1, 1)}).eie == 4.0);

  // Ratio of ratios: [Q_HD / Q_H2] [Q_D / Q_H]^-1
  ReactionSpec rr{"rr", ReactionMode::RatioOfRatios, {}};
  rr.terms = {{s1, 1}, {s1, -1}};
  const auto e = assemble_eie(rr, {flat_term(500, 2, 1, 1), flat_term(500, 1, 1, -1)});
  CHECK(e.eie == doctest::Approx(2.0).epsilon(1e-15));

  CHECK_THROWS_AS(assemble_eie(rr, {flat_term(500, 2, 1, 1), flat_term(600, 1, 1, -1)}),
                  DomainError);
  CHECK_THROWS_AS(assemble_eie(rr, {flat_term(500, 2, 1, 1)}), DomainError);
  CHECK_THROWS_AS(assemble_eie(rr, {flat_term(500, 2, 1, 1), flat_term(500, 1, 1, 1)}),
                  DomainError);
}

TEST_CASE("free-particle pipeline returns the symmetry statistic exactly") {
  const auto s = exchange(std::make_shared<FreeParticleSurface>(3));
  ReactionSpec r{"exchange", ReactionMode::Direct, {{s, 1}}};
  const auto est = term(s, 1, ThermoPoint::from_kelvin(1000.0, 4), 4000, 3);
  const auto rep = assemble_eie(r, {est});
  CHECK(rep.eie == doctest::Approx(2.0).epsilon(1e-13));
  CHECK(rep.sigma == 0.0);
}

TEST_CASE("harmonic isotope effect formula") {
  const std::vector<double> ml{1.0, 2.0}, mh{2.0, 2.0};
  SUBCASE("equal frequencies leave the classical prefactor") {
    const std::vector<double> w{0.01, 0.02};
    const auto ie = harmonic_ie(w, w, ml, mh, 3, 2, 1, 500.0);
    CHECK(ie.value == doctest::Approx(ie.high_t).epsilon(1e-15));
    CHECK(ie.high_t == doctest::Approx(0.5 * std::pow(0.5, 1.5)).epsilon(1e-15));
  }
  SUBCASE("low-temperature limit at x = 50") {
    const double beta = 1.0;
    const std::vector<double> wl{50.0}, wh{50.0 / std::sqrt(2.0)};
    const auto ie = harmonic_ie(wl, wh, ml, mh, 1, 1, 1, beta);
    CHECK(std::abs(ie.value / ie.low_t - 1.0) < 1e-6);
  }
  SUBCASE("mode count mismatch") {
    const std::vector<double> a{0.01}, b{0.01, 0.02};
    CHECK_THROWS_AS(harmonic_ie(a, b, ml, mh, 3, 1, 1, 1.0), NumericalError);
  }
}

TEST_CASE("harmonic IE equals the exact eigensum ratio for a harmonic bond") {
  // The bond coordinate with reduced masses of H2 and HD, force constant of
  // the Morse curvature: exactly harmonic, so the formula is exact.
  const double k = 2.0 * 0.1744 * 1.02764 * 1.02764;
  const double mu_l = kH / 2.0, mu_h = kH * kD / (kH + kD);
  SpeciesSpec s;
  s.name = "bond";
  s.dim = 1;
  s.atoms = {{"mu", mu_l, mu_h}};
  s.potential = std::make_shared<IsotropicHarmonicSurface>(1, k, std::vector<double>{0.0});
  for (double T : {300.0, 1000.0, 5000.0}) {
    const double beta = beta_from_kelvin(T);
    const GridSpec grid{-2.0, 2.0, 201};
    const auto ql = exact_partition_1d(*s.potential, mu_l, beta, grid);
    const auto qh = exact_partition_1d(*s.potential, mu_h, beta, grid);
    const double exact = std::exp(ql.log_q - qh.log_q);
    CHECK(harmonic_ie(s, T).value == doctest::Approx(exact).epsilon(1e-8));
  }
}

TEST_CASE("harmonic EIE of the exchange reaction tends to 2 when hot") {
  const auto s = exchange(spring_plus_atom());
  ReactionSpec r{"exchange", ReactionMode::Direct, {{s, 1}}};
  const auto hot = harmonic_eie(r, 1e6);
  CHECK(hot.high_t == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(hot.value == doctest::Approx(2.0).epsilon(1e-3));
  const auto warm = harmonic_eie(r, 1000.0);
  CHECK(warm.value > 3.0);
}

TEST_CASE("speedup metric") {
  CHECK(speedup(0.1, 5.0, 0.1, 5.0) == 1.0);
  CHECK(speedup(0.1, 5.0, 0.05, 5.0) == 4.0);
  CHECK(speedup(0.1, 10.0, 0.1, 5.0) == 2.0);
  CHECK_THROWS_AS(speedup(0.1, 5.0, 0.0, 5.0), DomainError);
  CHECK_THROWS_AS(speedup(0.1, 0.0, 0.1, 5.0), DomainError);
}

TEST_CASE("fragment splitting") {
  const auto s = exchange(spring_plus_atom());
  const auto pieces = split_fragments(s);
  REQUIRE(pieces.size() == 2);
  CHECK(pieces[0].species.atoms.size() == 2);
  CHECK(pieces[1].species.atoms[0].m_light == kD);

  auto frozen = s;
  frozen.atoms = {{"H", kH, kD}, {"H", kH, kH}, {"D", kD, kD}};
  const auto only = split_fragments(frozen);
  REQUIRE(only.size() == 1);
  CHECK(only[0].name == "H2+D/HH");
}

TEST_CASE("parallel_for runs every task and forwards failures") {
  std::atomic<int> sum{0};
  parallel_for(100, 4, [&](std::size_t k) { sum += static_cast<int>(k); });
  CHECK(sum == 4950);
  CHECK_THROWS_AS(parallel_for(10, 3,
                               [](std::size_t k) {
                                 if (k == 7) throw NumericalError("boom");
                               }),
                  NumericalError);
}

TEST_CASE("term results do not depend on the worker count") {
  const auto s = exchange(spring_plus_atom());
  const auto thermo = ThermoPoint::from_kelvin(1000.0, 4);
  const auto a = term(s, 1, thermo, 4000, 11, 1);
  const auto b = term(s, 1, thermo, 4000, 11, 3);
  CHECK(a.ratio.value == b.ratio.value);
  CHECK(a.seeds == b.seeds);
}

TEST_CASE("reversal and ratio-of-ratios consistency") {
  const auto s = exchange(spring_plus_atom());
  const auto thermo = ThermoPoint::from_kelvin(1000.0, 8);
  const long long steps = 60000;

  ReactionSpec direct{"exchange", ReactionMode::Direct, {{s, 1}}};
  const auto forward = assemble_eie(direct, {term(s, 1, thermo, steps, 1)});

  const auto back = swapped(s);
  ReactionSpec reverse{"reverse", ReactionMode::Direct, {{back, 1}}};
  const auto backward = assemble_eie(reverse, {term(back, 1, thermo, steps, 2)});
  const double product = forward.eie * backward.eie;
  const double sigma = product * std::hypot(forward.sigma / forward.eie,
                                            backward.sigma / backward.eie);
  CHECK(std::abs(product - 1.0) < 3.0 * sigma);

  // [Q_HD / Q_H2] [Q_D / Q_H]^-1 from separate species.
  SpeciesSpec h2;
  h2.name = "H2";
  h2.dim = 3;
  h2.symmetry_light = 2;
  h2.atoms = {{"H", kH, kH}, {"H", kH, kD}};
  h2.potential = std::make_shared<HarmonicPairSurface>(2, 0, 1, 0.2303, 0.0);
  SpeciesSpec atom;
  atom.name = "H";
  atom.dim = 3;
  atom.atoms = {{"H", kH, kD}};
  atom.potential = std::make_shared<FreeParticleSurface>(1);
  atom.geometry = {0.0, 0.0, 0.0};
  ReactionSpec rr{"rr", ReactionMode::RatioOfRatios, {{h2, 1}, {atom, -1}}};
  REQUIRE_NOTHROW(rr.validate());
  const auto split =
      assemble_eie(rr, {term(h2, 1, thermo, steps, 3), term(atom, -1, thermo, steps, 4)});
  CHECK(std::abs(split.eie - forward.eie) < 3.0 * std::hypot(split.sigma, forward.sigma));

  const double ha = harmonic_eie(direct, 1000.0).value;
  CHECK(std::abs(forward.eie - ha) < 3.0 * forward.sigma);
}
