#include <doctest.h>

#include <cmath>
#include <memory>
#include <random>
#include <vector>

#include "isopimc/factorization.hpp"

using namespace isopimc;

namespace {

SpeciesSpec oscillator_1d(double mass, double k) {
  SpeciesSpec s;
  s.name = "osc";
  s.dim = 1;
  s.atoms = {{"X", mass, mass}};
  s.potential = std::make_shared<IsotropicHarmonicSurface>(1, k, std::vector<double>{0.0});
  return s;
}

SpeciesSpec morse_pair() {
  SpeciesSpec s;
  s.name = "pair";
  s.dim = 3;
  s.atoms = {{"H", 1837.0, 1837.0}, {"H", 1837.0, 3671.0}};
  s.potential = std::make_shared<MorseDiatomicSurface>(
      2, 0, 1, MorseDiatomicSurface::Parameters{0.1744, 1.02764, 1.40201});
  return s;
}

void jiggle(PathState& state, const DiscretizedAction& action, double width,
            unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-width, width);
  for (auto& x : state.coords) x += u(rng);
  state.refresh(action);
}

// Written out from the definition: springs between cyclic neighbours plus
// the bead average of V + tau^2/24 V'^2/m for V = k x^2 / 2.
double reference_phi_1d(const std::vector<double>& x, double m, double k,
                        double beta, bool ti) {
  const int P = static_cast<int>(x.size());
  const double tau = beta / P;
  double phi = 0.0;
  for (int s = 0; s < P; ++s) {
    const double dx = x[s] - x[(s + 1) % P];
    phi += P * m * dx * dx / (2.0 * beta * beta);
    const double v = 0.5 * k * x[s] * x[s];
    const double g = k * x[s];
    phi += (v + (ti ? tau * tau * g * g / (24.0 * m) : 0.0)) / P;
  }
  return phi;
}

}  // namespace

TEST_CASE("v_ti examples") {
  const std::vector<double> zero{0.0, 0.0, 0.0}, mass{1.0};
  CHECK(v_ti(zero, mass, 3, 1.0, 2) == 0.0);
  const std::vector<double> g{1.0}, m{1.0};
  CHECK(v_ti(g, m, 1, 1.0, 2) == doctest::Approx(1.0 / 96.0).epsilon(1e-15));
}

TEST_CASE("phi_eff examples") {
  SUBCASE("single bead is the effective potential") {
    const auto s = oscillator_1d(1.0, 1.0);
    for (auto scheme : {Scheme::Primitive, Scheme::TakahashiImada}) {
      const auto action =
          DiscretizedAction::create(scheme, ThermoPoint::from_beta(2.0, 1), s, 0.0);
      auto state = PathState::uniform(action, std::vector<double>{0.8});
      const double v = 0.5 * 0.64;
      const double vti = scheme == Scheme::Primitive ? 0.0 : 4.0 * 0.64 / 24.0;
      CHECK(phi_eff(state, action) == doctest::Approx(v + vti).epsilon(1e-15));
    }
  }
  SUBCASE("free particle with two beads") {
    SpeciesSpec s;
    s.name = "free";
    s.dim = 1;
    s.atoms = {{"X", 3.0, 3.0}};
    s.potential = std::make_shared<FreeParticleSurface>(1);
    const double beta = 4.0, d = 0.7;
    const auto action = DiscretizedAction::create(
        Scheme::TakahashiImada, ThermoPoint::from_beta(beta, 2), s, 0.0);
    auto state = PathState::uniform(action, std::vector<double>{0.0});
    state.coords[1] = d;
    state.refresh(action);
    CHECK(phi_eff(state, action) ==
          doctest::Approx(2.0 * 3.0 * d * d / (beta * beta)).epsilon(1e-15));
  }
  SUBCASE("harmonic beads against a direct summation") {
    const double m = 1.3, k = 0.9, beta = 3.0;
    const auto s = oscillator_1d(m, k);
    for (auto scheme : {Scheme::Primitive, Scheme::TakahashiImada}) {
      const auto action =
          DiscretizedAction::create(scheme, ThermoPoint::from_beta(beta, 4), s, 0.0);
      auto state = PathState::uniform(action, std::vector<double>{0.0});
      jiggle(state, action, 1.0, 11);
      const double ref =
          reference_phi_1d(state.coords, m, k, beta, scheme == Scheme::TakahashiImada);
      CHECK(std::abs(phi_eff(state, action) - ref) <= 1e-12 * std::abs(ref));
    }
  }
}

TEST_CASE("delta_phi matches full recomputation") {
  const auto s = morse_pair();
  for (auto scheme : {Scheme::Primitive, Scheme::TakahashiImada}) {
    for (int P : {1, 2, 5, 8}) {
      const auto action =
          DiscretizedAction::create(scheme, ThermoPoint::from_kelvin(500.0, P), s, 0.3);
      auto state = PathState::uniform(action, s.reference_geometry());
      jiggle(state, action, 0.1, 3 + P);
      const double before = phi_eff(state, action);

      const auto empty = make_proposal(action, 0, {});
      CHECK(delta_phi(state, action, empty).total() == 0.0);

      std::mt19937_64 rng(P);
      std::uniform_real_distribution<double> u(-0.1, 0.1);
      for (int count = 1; count <= P; ++count) {
        for (int start = 0; start < P; ++start) {
          std::vector<double> coords;
          for (int k = 0; k < count; ++k) {
            const auto b = state.bead(state.wrap(start + k));
            for (double x : b) coords.push_back(x + u(rng));
          }
          const auto p = make_proposal(action, start, coords);
          const double delta = delta_phi(state, action, p).total();
          PathState moved = state;
          for (int k = 0; k < count; ++k) {
            auto b = moved.bead(moved.wrap(start + k));
            std::copy(coords.begin() + k * state.stride(),
                      coords.begin() + (k + 1) * state.stride(), b.begin());
          }
          moved.refresh(action);
          const double after = phi_eff(moved, action);
          CHECK(delta == doctest::Approx(after - before).epsilon(1e-9).scale(before));
        }
      }

      // Displace one bead and put it back.
      std::vector<double> out(state.bead(0).begin(), state.bead(0).end());
      out[0] += 0.05;
      const auto there = make_proposal(action, 0, out);
      PathState moved = state;
      std::copy(out.begin(), out.end(), moved.bead(0).begin());
      moved.refresh(action);
      const auto back = make_proposal(
          action, 0, std::vector<double>(state.bead(0).begin(), state.bead(0).end()));
      const double round_trip =
          delta_phi(state, action, there).total() + delta_phi(moved, action, back).total();
      CHECK(std::abs(round_trip) < 1e-12 * std::max(1.0, std::abs(before)));
    }
  }
}

TEST_CASE("phi_eff is translation invariant for molecules") {
  const auto s = morse_pair();
  const auto action = DiscretizedAction::create(
      Scheme::TakahashiImada, ThermoPoint::from_kelvin(300.0, 6), s, 0.5);
  auto state = PathState::uniform(action, s.reference_geometry());
  jiggle(state, action, 0.2, 5);
  const double before = phi_eff(state, action);
  const std::vector<double> shift{12.5, -3.25, 0.75};
  state.translate(shift);
  state.refresh(action);
  CHECK(std::abs(phi_eff(state, action) - before) <= 1e-9 * std::abs(before));
}

TEST_CASE("V_TI is non-negative and vanishes with the gradient") {
  const auto s = morse_pair();
  const auto action = DiscretizedAction::create(
      Scheme::TakahashiImada, ThermoPoint::from_kelvin(300.0, 8), s, 0.0);
  auto state = PathState::uniform(action, s.reference_geometry());
  jiggle(state, action, 0.4, 9);
  for (double c : state.correction) CHECK(c >= 0.0);

  SpeciesSpec free = s;
  free.potential = std::make_shared<FreeParticleSurface>(2);
  const auto ti = DiscretizedAction::create(
      Scheme::TakahashiImada, ThermoPoint::from_kelvin(300.0, 8), free, 0.0);
  const auto pa = DiscretizedAction::create(
      Scheme::Primitive, ThermoPoint::from_kelvin(300.0, 8), free, 0.0);
  PathState a = state, b = state;
  a.refresh(ti);
  b.refresh(pa);
  CHECK(phi_eff(a, ti) == phi_eff(b, pa));
}

TEST_CASE("out-of-domain proposals are flagged") {
  SpeciesSpec s = morse_pair();
  s.potential = std::make_shared<MorseDiatomicSurface>(
      2, 0, 1, MorseDiatomicSurface::Parameters{0.1744, 1.02764, 1.40201, 4.0});
  const auto action = DiscretizedAction::create(
      Scheme::TakahashiImada, ThermoPoint::from_kelvin(300.0, 2), s, 0.0);
  const auto p = make_proposal(action, 0, {0, 0, 0, 0, 0, 5.0});
  CHECK_FALSE(p.in_domain);
}

TEST_CASE("path state caches") {
  const auto s = morse_pair();
  const auto action = DiscretizedAction::create(
      Scheme::TakahashiImada, ThermoPoint::from_kelvin(300.0, 4), s, 0.0);
  auto state = PathState::uniform(action, s.reference_geometry());
  const auto c = state.centroid();
  const double bond = std::hypot(c[3] - c[0], c[4] - c[1], c[5] - c[2]);
  CHECK(bond == doctest::Approx(1.40201));
  CHECK(state.cache_error(action) == 0.0);
  state.coords[2] += 0.1;
  CHECK(state.cache_error(action) > 0.0);
  state.refresh(action);
  CHECK(state.cache_error(action) == 0.0);
  CHECK(state.wrap(-1) == 3);
  CHECK(state.wrap(4) == 0);
}
