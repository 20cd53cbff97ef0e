#include <doctest.h>

#include <memory>

#include "isopimc/model.hpp"
#include "isopimc/potential.hpp"

using namespace isopimc;

namespace {

SpeciesSpec hydrogen_pair() {
  SpeciesSpec s;
  s.name = "HH";
  s.dim = 3;
  s.atoms = {{"H", 1.00783, 2.01410}, {"H", 1.00783, 1.00783}};
  s.potential = std::make_shared<HarmonicPairSurface>(2, 0, 1, 0.3, 1.4);
  return s;
}

}  // namespace

TEST_CASE("interpolate_masses endpoints and midpoint") {
  const auto s = hydrogen_pair();
  CHECK(interpolate_masses(s, 0.0)[0] == 1.00783);
  CHECK(interpolate_masses(s, 1.0)[0] == 2.01410);
  CHECK(interpolate_masses(s, 0.5)[0] == doctest::Approx(1.510965).epsilon(1e-14));
  CHECK_THROWS_AS(interpolate_masses(s, -0.1), DomainError);
  CHECK_THROWS_AS(interpolate_masses(s, 1.5), DomainError);
}

TEST_CASE("mass interpolation is affine and spares unsubstituted atoms") {
  const auto s = hydrogen_pair();
  for (double l1 : {0.0, 0.1, 0.37, 0.8}) {
    for (double l2 : {0.0, 0.25, 0.6, 1.0}) {
      const auto a = interpolate_masses(s, l1);
      const auto b = interpolate_masses(s, l2);
      const auto c = interpolate_masses(s, 0.5 * (l1 + l2));
      for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i] + b[i] == doctest::Approx(2.0 * c[i]).epsilon(1e-15));
      }
    }
  }
  for (double l : {0.0, 0.3, 0.77, 1.0}) {
    CHECK(interpolate_masses(s, l)[1] == 1.00783);
  }
  CHECK(mass_derivatives(s)[1] == 0.0);
  CHECK_FALSE(s.atoms[1].substituted());
}

TEST_CASE("trotter schedule") {
  CHECK(trotter_schedule(1000.0, {1000.0, 30}) == 30);
  CHECK(trotter_schedule(200.0, {1000.0, 30}) == 150);
  CHECK(trotter_schedule(500.0, {1000.0, 8}) == 16);
  // ceil(26.67) = 27, bumped to even
  CHECK(trotter_schedule(300.0, {1000.0, 8}) == 28);
  CHECK(trotter_schedule(1e4, {1000.0, 8}) == 2);

  TrotterPlan plan = default_trotter_plan(Scheme::Primitive);
  plan.overrides[200.0] = 160;
  CHECK(plan.at(200.0) == 160);
  CHECK(plan.at(1000.0) == 30);
}

TEST_CASE("beta scales inversely with temperature") {
  CHECK(beta_from_kelvin(300.0) / beta_from_kelvin(600.0) == 2.0);
  CHECK(beta_from_kelvin(1000.0) / beta_from_kelvin(250.0) == 0.25);
  CHECK_THROWS_AS(beta_from_kelvin(0.0), DomainError);
  CHECK_THROWS_AS(ThermoPoint::from_kelvin(300.0, 0), DomainError);
}

TEST_CASE("species validation") {
  auto s = hydrogen_pair();
  CHECK_NOTHROW(s.validate());
  s.atoms[0].m_heavy = 0.0;
  CHECK_THROWS_AS(s.validate(), DomainError);
  s = hydrogen_pair();
  s.symmetry_light = 0;
  CHECK_THROWS_AS(s.validate(), DomainError);
  s = hydrogen_pair();
  s.dim = 2;
  CHECK_THROWS_AS(s.validate(), DomainError);
  s = hydrogen_pair();
  s.atoms.pop_back();
  CHECK_THROWS_AS(s.validate(), DomainError);
}

TEST_CASE("reaction validation checks the isotope inventory") {
  const double h = 1.0, d = 2.0;
  SpeciesSpec s;
  s.name = "HH+D";
  s.dim = 3;
  s.potential = std::make_shared<FreeParticleSurface>(3);
  s.atoms = {{"H", h, h}, {"H", h, d}, {"D", d, h}};
  ReactionSpec r{"exchange", ReactionMode::Direct, {{s, 1}}};
  CHECK_NOTHROW(r.validate());

  r.terms[0].species.atoms[2].m_heavy = d;
  CHECK_THROWS_AS(r.validate(), DomainError);

  r.terms[0].species = s;
  r.terms.push_back({s, 1});
  CHECK_THROWS_AS(r.validate(), DomainError);
}

TEST_CASE("scheme names") {
  CHECK(to_string(Scheme::Primitive) == "PA");
  CHECK(to_string(Scheme::TakahashiImada) == "TI");
  CHECK(scheme_from_string("TI") == Scheme::TakahashiImada);
  CHECK_THROWS_AS(scheme_from_string("chin"), DomainError);
}
