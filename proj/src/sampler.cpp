#include "isopimc/sampler.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

namespace isopimc {

std::uint64_t derive_seed(std::uint64_t master, std::string_view key) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : key) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::uint64_t z = master ^ h;
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void McConfig::validate() const {
  if (total_steps < 0) throw DomainError("total_steps must be >= 0");
  if (!(warmup_fraction >= 0.0 && warmup_fraction < 1.0)) {
    throw DomainError("warmup_fraction must lie in [0, 1)");
  }
  if (estimator_stride < 1) throw DomainError("estimator_stride must be >= 1");
  if (staging_segment < 0) throw DomainError("staging_segment must be >= 0");
  if (!(centroid_move_fraction >= 0.0 && centroid_move_fraction <= 1.0)) {
    throw DomainError("centroid_move_fraction must lie in [0, 1]");
  }
}

int McConfig::segment_length(int beads) const {
  if (beads <= 1) return 0;
  if (staging_segment == 0) return std::max(1, beads / 2);
  if (staging_segment > beads - 1) {
    throw DomainError("staging_segment " + std::to_string(staging_segment) +
                      " needs at least one fixed bead; P = " +
                      std::to_string(beads));
  }
  return staging_segment;
}

long long McConfig::warmup_steps() const {
  return static_cast<long long>(std::floor(warmup_fraction * total_steps));
}

namespace {
double ratio(long long num, long long den) {
  return den > 0 ? static_cast<double>(num) / static_cast<double>(den) : 0.0;
}
}  // namespace

double MoveStats::staging_ratio() const {
  return ratio(staging_accepts, staging_attempts);
}
double MoveStats::centroid_ratio() const {
  return ratio(centroid_accepts, centroid_attempts);
}
double MoveStats::overall_ratio() const {
  return ratio(staging_accepts + centroid_accepts,
               staging_attempts + centroid_attempts);
}

std::vector<double> staging_proposal(const PathState& state,
                                     const DiscretizedAction& action,
                                     int start, int count, Rng& rng) {
  const std::size_t stride = state.stride();
  std::vector<double> out(count * stride);
  std::normal_distribution<double> normal;
  const auto right = state.bead(state.wrap(start + count));
  const double tau = action.tau();
  for (int k = 1; k <= count; ++k) {
    const double* prev = k == 1 ? state.bead(state.wrap(start - 1)).data()
                                : out.data() + (k - 2) * stride;
    double* cur = out.data() + (k - 1) * stride;
    const double n = count - k + 2;
    for (int i = 0; i < state.atoms; ++i) {
      const double sigma = std::sqrt(tau * (n - 1.0) / (action.masses[i] * n));
      for (int d = 0; d < state.dim; ++d) {
        const std::size_t j = i * state.dim + d;
        cur[j] = prev[j] + (right[j] - prev[j]) / n + sigma * normal(rng);
      }
    }
  }
  return out;
}

double staging_log_density(const PathState& state,
                           const DiscretizedAction& action, int start,
                           std::span<const double> coords) {
  const std::size_t stride = state.stride();
  const int count = static_cast<int>(coords.size() / stride);
  const auto right = state.bead(state.wrap(start + count));
  const double tau = action.tau();
  double logp = 0.0;
  for (int k = 1; k <= count; ++k) {
    const double* prev = k == 1 ? state.bead(state.wrap(start - 1)).data()
                                : coords.data() + (k - 2) * stride;
    const double* cur = coords.data() + (k - 1) * stride;
    const double n = count - k + 2;
    for (int i = 0; i < state.atoms; ++i) {
      const double var = tau * (n - 1.0) / (action.masses[i] * n);
      for (int d = 0; d < state.dim; ++d) {
        const std::size_t j = i * state.dim + d;
        const double dev = cur[j] - (prev[j] + (right[j] - prev[j]) / n);
        logp += -dev * dev / (2.0 * var) - 0.5 * std::log(2.0 * M_PI * var);
      }
    }
  }
  return logp;
}

void apply(PathState& state, const Proposal& proposal) {
  const std::size_t stride = state.stride();
  for (int k = 0; k < proposal.count; ++k) {
    const int s = state.wrap(proposal.start + k);
    std::copy_n(proposal.coords.begin() + k * stride, stride,
                state.coords.begin() + s * stride);
    std::copy_n(proposal.gradient.begin() + k * stride, stride,
                state.gradient.begin() + s * stride);
    state.potential[s] = proposal.potential[k];
    state.correction[s] = proposal.correction[k];
  }
}

namespace {

bool metropolis(PathState& state, const DiscretizedAction& action,
                const Proposal& proposal, Rng& rng) {
  if (!proposal.in_domain) return false;
  const double exponent = -action.beta() * delta_phi(state, action, proposal).potential;
  if (exponent < 0.0) {
    std::uniform_real_distribution<double> uniform;
    if (uniform(rng) >= std::exp(exponent)) return false;
  }
  apply(state, proposal);
  return true;
}

}  // namespace

bool staging_move(PathState& state, const DiscretizedAction& action,
                  int count, Rng& rng) {
  std::uniform_int_distribution<int> pick(0, state.beads - 1);
  const int start = pick(rng);
  auto coords = staging_proposal(state, action, start, count, rng);
  return metropolis(state, action,
                    make_proposal(action, start, std::move(coords)), rng);
}

bool centroid_move(PathState& state, const DiscretizedAction& action,
                   double step, Rng& rng) {
  std::uniform_int_distribution<int> pick(0, state.atoms - 1);
  std::uniform_real_distribution<double> shift(-step, step);
  const int atom = pick(rng);
  std::vector<double> delta(state.dim);
  for (auto& x : delta) x = shift(rng);
  std::vector<double> coords = state.coords;
  for (int s = 0; s < state.beads; ++s) {
    for (int d = 0; d < state.dim; ++d) {
      coords[(s * state.atoms + atom) * state.dim + d] += delta[d];
    }
  }
  // Springs are unchanged by a rigid shift of one ring.
  return metropolis(state, action, make_proposal(action, 0, std::move(coords)),
                    rng);
}

void recenter(PathState& state, const DiscretizedAction& action) {
  std::vector<double> com(state.dim, 0.0);
  double total = 0.0;
  for (int s = 0; s < state.beads; ++s) {
    for (int i = 0; i < state.atoms; ++i) {
      const double m = action.masses[i];
      total += m;
      for (int d = 0; d < state.dim; ++d) com[d] += m * state.at(s, i, d);
    }
  }
  for (auto& x : com) x = -x / total;
  state.translate(com);
}

ChainResult run_chain(const ChainSpec& spec) {
  spec.mc.validate();
  const auto action = DiscretizedAction::create(spec.scheme, spec.thermo,
                                                spec.species, spec.lambda);
  const int P = action.beads();
  const int segment = spec.mc.segment_length(P);
  const bool invariant = action.surface->translation_invariant();

  ChainResult result;
  SeriesMetadata meta{EstimatorKind::Thermodynamic,
                      spec.scheme,
                      spec.lambda,
                      spec.thermo.temperature,
                      spec.thermo.beta,
                      P,
                      0.0,
                      spec.mc.seed};
  result.te.meta = meta;
  meta.kind = EstimatorKind::CentroidVirial;
  meta.delta_lambda = spec.delta_lambda;
  result.cve.meta = meta;

  const long long total = spec.mc.total_steps;
  const long long warmup = spec.mc.warmup_steps();
  const long long production = total - warmup;
  const long long expected = production / spec.mc.estimator_stride;
  if (production <= 0 || expected == 0) {
    result.error = "no production samples: total_steps " +
                   std::to_string(total) + ", warm-up " +
                   std::to_string(warmup) + ", stride " +
                   std::to_string(spec.mc.estimator_stride);
    return result;
  }
  if (spec.record_te) result.te.samples.reserve(expected);
  if (spec.record_cve) result.cve.samples.reserve(expected);

  PathState state = PathState::uniform(action, spec.species.reference_geometry());
  Rng rng(spec.mc.seed);
  std::uniform_real_distribution<double> uniform;

  double m_min = *std::min_element(action.masses.begin(), action.masses.end());
  double step = std::min(1.0, 0.5 * std::sqrt(action.beta() / m_min));
  long long window_tries = 0, window_hits = 0;

  const auto t0 = std::chrono::steady_clock::now();
  for (long long t = 0; t < total; ++t) {
    const bool in_warmup = t < warmup;
    bool accepted;
    if (segment == 0 || uniform(rng) < spec.mc.centroid_move_fraction) {
      accepted = centroid_move(state, action, step, rng);
      if (!in_warmup) {
        ++result.moves.centroid_attempts;
        result.moves.centroid_accepts += accepted;
      } else {
        ++window_tries;
        window_hits += accepted;
        if (window_tries == 100) {
          const double r = ratio(window_hits, window_tries);
          if (r > 0.5) step = std::min(step * 1.2, 1e3);
          if (r < 0.3) step = std::max(step / 1.2, 1e-8);
          window_tries = window_hits = 0;
        }
      }
    } else {
      accepted = staging_move(state, action, segment, rng);
      if (!in_warmup) {
        ++result.moves.staging_attempts;
        result.moves.staging_accepts += accepted;
      }
    }
    if (accepted && invariant) recenter(state, action);

    if (in_warmup || (t - warmup + 1) % spec.mc.estimator_stride != 0) continue;
    if (spec.record_te) {
      const double v = te_sample(state, action, spec.species);
      if (!std::isfinite(v)) throw NumericalError("non-finite TE sample");
      result.te.samples.push_back(v);
    }
    if (spec.record_cve) {
      const double v = cve_sample(state, action, spec.species, spec.lambda,
                                  spec.delta_lambda);
      if (!std::isfinite(v)) throw NumericalError("non-finite CVE sample");
      result.cve.samples.push_back(v);
    }
  }
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();

  const double acc = result.moves.overall_ratio();
  if (acc < 0.05 || acc > 0.95) {
    result.warnings.push_back("acceptance ratio " + std::to_string(acc) +
                              " outside [0.05, 0.95]");
  }
  return result;
}

BlockAverage block_average(std::span<const double> series,
                           std::size_t min_blocks) {
  if (series.size() < 2) {
    throw NumericalError("block averaging needs at least 2 samples, got " +
                         std::to_string(series.size()));
  }
  BlockAverage out;
  out.samples = series.size();
  const auto [lo, hi] = std::minmax_element(series.begin(), series.end());
  if (*lo == *hi) {
    // Exact for constant series; summation would leave rounding noise.
    out.mean = *lo;
    out.level_rmse.push_back(0.0);
    out.plateau_level = 0;
    return out;
  }
  out.mean = std::accumulate(series.begin(), series.end(), 0.0) /
             static_cast<double>(series.size());

  std::vector<double> blocks(series.begin(), series.end());
  while (true) {
    const double n = static_cast<double>(blocks.size());
    const double m = std::accumulate(blocks.begin(), blocks.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : blocks) ss += (x - m) * (x - m);
    out.level_rmse.push_back(std::sqrt(ss / (n - 1.0) / n));
    if (blocks.size() / 2 < std::max<std::size_t>(min_blocks, 2)) break;
    std::vector<double> next(blocks.size() / 2);
    for (std::size_t k = 0; k < next.size(); ++k) {
      next[k] = 0.5 * (blocks[2 * k] + blocks[2 * k + 1]);
    }
    blocks = std::move(next);
  }

  const auto& r = out.level_rmse;
  auto close = [](double a, double b) {
    return std::abs(b - a) <= 0.1 * std::max(a, b);
  };
  for (std::size_t l = 0; l + 2 < r.size(); ++l) {
    if (close(r[l], r[l + 1]) && close(r[l + 1], r[l + 2])) {
      out.plateau_level = static_cast<int>(l);
      out.rmse = std::max({r[l], r[l + 1], r[l + 2]});
      return out;
    }
  }
  out.rmse = *std::max_element(r.begin(), r.end());
  return out;
}

}  // namespace isopimc
