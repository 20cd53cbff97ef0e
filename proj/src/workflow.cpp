#include "isopimc/workflow.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <thread>

#include "isopimc/potential.hpp"

namespace isopimc {

LambdaGrid LambdaGrid::uniform(int count) {
  if (count < 3 || count % 2 == 0) {
    throw DomainError("lambda grid needs an odd node count >= 3, got " +
                      std::to_string(count));
  }
  LambdaGrid grid;
  for (int k = 0; k < count; ++k) {
    grid.nodes.push_back(k == count - 1 ? 1.0
                                        : static_cast<double>(k) / (count - 1));
  }
  return grid;
}

void LambdaGrid::validate() const {
  if (nodes.size() < 3 || nodes.size() % 2 == 0) {
    throw DomainError("lambda grid needs an odd node count >= 3, got " +
                      std::to_string(nodes.size()));
  }
  if (nodes.front() != 0.0 || nodes.back() != 1.0) {
    throw DomainError("lambda grid must start at 0 and end at 1");
  }
  for (std::size_t k = 1; k < nodes.size(); ++k) {
    if (!(nodes[k] > nodes[k - 1])) {
      throw DomainError("lambda nodes must be strictly ascending");
    }
  }
}

std::vector<double> LambdaGrid::simpson_weights() const {
  validate();
  std::vector<double> w(nodes.size(), 0.0);
  for (std::size_t k = 0; k + 2 < nodes.size(); k += 2) {
    const double h0 = nodes[k + 1] - nodes[k];
    const double h1 = nodes[k + 2] - nodes[k + 1];
    const double s = (h0 + h1) / 6.0;
    w[k] += s * (2.0 - h1 / h0);
    w[k + 1] += s * (h0 + h1) * (h0 + h1) / (h0 * h1);
    w[k + 2] += s * (2.0 - h0 / h1);
  }
  return w;
}

FreeEnergyDifference thermodynamic_integral(const LambdaGrid& grid,
                                            std::span<const NodeEstimate> nodes,
                                            double beta) {
  const auto w = grid.simpson_weights();
  if (nodes.size() != w.size()) {
    throw DomainError("node estimates do not match the lambda grid");
  }
  if (!(beta > 0.0)) throw DomainError("beta must be positive");
  double integral = 0.0, variance = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    integral += w[k] * nodes[k].mean;
    variance += w[k] * w[k] * nodes[k].sigma * nodes[k].sigma;
  }
  return {-integral / beta, std::sqrt(variance) / beta};
}

Ratio partition_ratio(const FreeEnergyDifference& df, int symmetry_light,
                      int symmetry_heavy, double beta) {
  const double value = static_cast<double>(symmetry_light) / symmetry_heavy *
                       std::exp(-beta * df.delta_f);
  return {value, value * beta * df.sigma};
}

std::vector<Piece> split_fragments(const SpeciesSpec& species) {
  species.validate();
  const auto* sum =
      dynamic_cast<const FragmentSumSurface*>(species.potential.get());
  if (!sum) {
    if (!species.any_substituted()) return {};
    return {{species.name, species}};
  }
  const auto geometry = species.reference_geometry();
  std::vector<Piece> pieces;
  for (std::size_t f = 0; f < sum->fragments().size(); ++f) {
    const auto& frag = sum->fragments()[f];
    SpeciesSpec sub;
    sub.dim = species.dim;
    sub.potential = frag.surface;
    std::string label;
    for (int a : frag.atoms) {
      sub.atoms.push_back(species.atoms[a]);
      label += species.atoms[a].label;
    }
    if (!sub.any_substituted()) continue;
    sub.name = species.name + "/" + label;
    sub.geometry = sum->gather(f, geometry, species.dim);
    pieces.push_back({sub.name, std::move(sub)});
  }
  return pieces;
}

namespace {

std::string format_key(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

}  // namespace

void parallel_for(std::size_t count, int jobs,
                  const std::function<void(std::size_t)>& task) {
  const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(count)));
  if (workers == 1) {
    for (std::size_t k = 0; k < count; ++k) task(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t k = next++; k < count; k = next++) {
        try {
          task(k);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

TermRun run_term(const SpeciesSpec& species, int exponent,
                 const ThermoPoint& thermo, const TiSettings& settings,
                 std::uint64_t master_seed, int jobs) {
  settings.grid.validate();
  settings.mc.validate();
  TermRun run;
  run.species = species.name;
  run.exponent = exponent;
  run.symmetry_light = species.symmetry_light;
  run.symmetry_heavy = species.symmetry_heavy;
  run.thermo = thermo;
  run.scheme = settings.scheme;
  run.lambdas = settings.grid.nodes;

  const auto pieces = split_fragments(species);
  for (const auto& p : pieces) run.pieces.push_back(p.name);
  const std::size_t n_nodes = run.lambdas.size();
  run.chains.assign(n_nodes, std::vector<ChainResult>(pieces.size()));

  const auto t0 = std::chrono::steady_clock::now();
  parallel_for(n_nodes * pieces.size(), jobs, [&](std::size_t k) {
    const std::size_t node = k / pieces.size();
    const std::size_t piece = k % pieces.size();
    ChainSpec spec;
    spec.species = pieces[piece].species;
    spec.lambda = run.lambdas[node];
    spec.thermo = thermo;
    spec.scheme = settings.scheme;
    spec.mc = settings.mc;
    spec.mc.seed = derive_seed(
        master_seed, format_key(thermo.temperature) + "|" +
                         to_string(settings.scheme) + "|" + species.name +
                         "|" + pieces[piece].name + "|" +
                         format_key(run.lambdas[node]));
    spec.delta_lambda = settings.delta_lambda;
    spec.record_te = settings.record_te;
    spec.record_cve = settings.record_cve;
    run.chains[node][piece] = run_chain(spec);
  });
  run.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return run;
}

TermEstimate estimate_term(const TermRun& run, EstimatorKind kind,
                           const LambdaGrid& grid) {
  if (grid.nodes != run.lambdas) {
    throw DomainError("term run was made on a different lambda grid");
  }
  TermEstimate est;
  est.species = run.species;
  est.exponent = run.exponent;
  est.symmetry_light = run.symmetry_light;
  est.symmetry_heavy = run.symmetry_heavy;
  est.temperature = run.thermo.temperature;
  est.beta = run.thermo.beta;
  est.trotter = run.thermo.trotter;
  est.scheme = run.scheme;
  est.estimator = kind;
  est.wall_seconds = run.wall_seconds;
  for (std::size_t node = 0; node < run.lambdas.size(); ++node) {
    NodeEstimate ne;
    ne.lambda = run.lambdas[node];
    double variance = 0.0;
    for (std::size_t piece = 0; piece < run.chains[node].size(); ++piece) {
      const auto& chain = run.chains[node][piece];
      const std::string where =
          run.pieces[piece] + " at lambda " + format_key(ne.lambda);
      if (!chain.ok()) throw NumericalError(where + ": " + chain.error);
      const auto& series =
          kind == EstimatorKind::Thermodynamic ? chain.te : chain.cve;
      if (series.empty()) {
        throw DomainError(where + ": estimator " + to_string(kind) +
                          " was not recorded");
      }
      const auto block = block_average(series.samples);
      ne.mean += block.mean;
      variance += block.rmse * block.rmse;
      ne.samples += series.samples.size();
      est.seeds.push_back(series.meta.seed);
      for (const auto& w : chain.warnings) est.warnings.push_back(where + ": " + w);
    }
    ne.sigma = std::sqrt(variance);
    est.nodes.push_back(ne);
  }
  est.free_energy = thermodynamic_integral(grid, est.nodes, est.beta);
  est.ratio = partition_ratio(est.free_energy, est.symmetry_light,
                              est.symmetry_heavy, est.beta);
  return est;
}

namespace {

std::vector<double> frequencies(const SpeciesSpec& species,
                                std::span<const double> masses) {
  const auto geometry = species.reference_geometry();
  const int dim = species.dim;
  const auto* sum =
      dynamic_cast<const FragmentSumSurface*>(species.potential.get());
  std::vector<double> omega;
  if (!sum) {
    omega = normal_mode_frequencies(*species.potential, masses, geometry, dim)
                .frequencies;
  } else {
    // Fragment by fragment, so rigid-body projection acts on each one.
    for (std::size_t f = 0; f < sum->fragments().size(); ++f) {
      const auto& frag = sum->fragments()[f];
      std::vector<double> m;
      for (int a : frag.atoms) m.push_back(masses[a]);
      const auto modes = normal_mode_frequencies(
          *frag.surface, m, sum->gather(f, geometry, dim), dim);
      omega.insert(omega.end(), modes.frequencies.begin(),
                   modes.frequencies.end());
    }
  }
  std::sort(omega.begin(), omega.end());
  return omega;
}

}  // namespace

HarmonicIe harmonic_ie(std::span<const double> omega_light,
                       std::span<const double> omega_heavy,
                       std::span<const double> m_light,
                       std::span<const double> m_heavy, int dim,
                       int symmetry_light, int symmetry_heavy, double beta) {
  if (omega_light.size() != omega_heavy.size()) {
    throw NumericalError("isotopologs have different numbers of vibrations (" +
                         std::to_string(omega_light.size()) + " vs " +
                         std::to_string(omega_heavy.size()) + ")");
  }
  if (m_light.size() != m_heavy.size()) {
    throw DomainError("isotopologs have different atom counts");
  }
  double log_high = std::log(static_cast<double>(symmetry_heavy) / symmetry_light);
  for (std::size_t i = 0; i < m_light.size(); ++i) {
    log_high += 0.5 * dim * std::log(m_light[i] / m_heavy[i]);
  }
  double log_low = log_high, log_full = log_high;
  for (std::size_t n = 0; n < omega_light.size(); ++n) {
    const double xl = beta * omega_light[n];
    const double xh = beta * omega_heavy[n];
    const double zero_point = std::log(xl / xh) - 0.5 * (xl - xh);
    log_low += zero_point;
    log_full += zero_point + std::log(-std::expm1(-xh)) -
                std::log(-std::expm1(-xl));
  }
  return {std::exp(log_full), std::exp(log_high), std::exp(log_low)};
}

HarmonicIe harmonic_ie(const SpeciesSpec& species, double temperature) {
  species.validate();
  const double beta = beta_from_kelvin(temperature);
  const auto ml = interpolate_masses(species, 0.0);
  const auto mh = interpolate_masses(species, 1.0);
  const auto wl = frequencies(species, ml);
  const auto wh = frequencies(species, mh);
  return harmonic_ie(wl, wh, ml, mh, species.dim, species.symmetry_light,
                     species.symmetry_heavy, beta);
}

EieReport assemble_eie(const ReactionSpec& reaction,
                       std::vector<TermEstimate> terms) {
  if (terms.empty()) throw DomainError("no terms to assemble");
  if (terms.size() != reaction.terms.size()) {
    throw DomainError("reaction '" + reaction.name + "' has " +
                      std::to_string(reaction.terms.size()) +
                      " terms, got " + std::to_string(terms.size()));
  }
  EieReport report;
  report.reaction = reaction.name;
  report.mode = reaction.mode;
  report.temperature = terms.front().temperature;
  report.trotter = terms.front().trotter;
  report.scheme = terms.front().scheme;
  report.estimator = terms.front().estimator;
  double log_eie = 0.0, rel_var = 0.0;
  for (std::size_t k = 0; k < terms.size(); ++k) {
    const auto& t = terms[k];
    const double tol = 1e-9 * std::max(1.0, report.temperature);
    if (std::abs(t.temperature - report.temperature) > tol) {
      throw DomainError("temperature mismatch: term '" + t.species + "' at " +
                        format_key(t.temperature) + " K, expected " +
                        format_key(report.temperature) + " K");
    }
    const int e = reaction.terms[k].exponent;
    if (t.exponent != e) {
      throw DomainError("term exponent mismatch for '" + t.species + "'");
    }
    log_eie += e * std::log(t.ratio.value);
    rel_var += std::pow(t.ratio.sigma / t.ratio.value, 2);
    report.symmetry_factor *=
        std::pow(static_cast<double>(t.symmetry_light) / t.symmetry_heavy, e);
    report.wall_seconds += t.wall_seconds;
    report.seeds.insert(report.seeds.end(), t.seeds.begin(), t.seeds.end());
    report.warnings.insert(report.warnings.end(), t.warnings.begin(),
                           t.warnings.end());
  }
  report.eie = std::exp(log_eie);
  report.sigma = report.eie * std::sqrt(rel_var);
  report.terms = std::move(terms);
  return report;
}

HarmonicIe harmonic_eie(const ReactionSpec& reaction, double temperature) {
  HarmonicIe out{1.0, 1.0, 1.0};
  for (const auto& term : reaction.terms) {
    const auto ie = harmonic_ie(term.species, temperature);
    // The species IE is Q(0)/Q(1); the term contributes [Q(1)/Q(0)]^e.
    out.value *= std::pow(ie.value, -term.exponent);
    out.high_t *= std::pow(ie.high_t, -term.exponent);
    out.low_t *= std::pow(ie.low_t, -term.exponent);
  }
  return out;
}

double speedup(double sigma_ref, double time_ref, double sigma, double time) {
  if (!(sigma_ref > 0.0) || !(sigma > 0.0)) {
    throw DomainError("speedup needs nonzero statistical errors");
  }
  if (!(time_ref > 0.0) || !(time > 0.0)) {
    throw DomainError("speedup needs nonzero CPU times");
  }
  return (sigma_ref / sigma) * (sigma_ref / sigma) * (time_ref / time);
}

double speedup(const EieReport& reference, const EieReport& method) {
  return speedup(reference.sigma, reference.wall_seconds, method.sigma,
                 method.wall_seconds);
}

}  // namespace isopimc
