#include "isopimc/commands.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>

namespace isopimc {

namespace {

std::string job_name(double temperature, Scheme scheme, const TermRun& run,
                     std::size_t piece, std::size_t node) {
  return format_double(temperature) + "|" + to_string(scheme) + "|" +
         run.species + "|" + run.pieces[piece] + "|" +
         format_double(run.lambdas[node]);
}

void add_jobs(RunManifest& manifest, const TermRun& run) {
  for (std::size_t node = 0; node < run.chains.size(); ++node) {
    for (std::size_t piece = 0; piece < run.chains[node].size(); ++piece) {
      const auto& c = run.chains[node][piece];
      manifest.jobs.push_back(
          {job_name(run.thermo.temperature, run.scheme, run, piece, node),
           c.te.meta.seed, series_sha1({&c.te.samples, &c.cve.samples})});
    }
  }
}

RunManifest start_manifest(const std::string& command, const StudyConfig& config,
                           std::uint64_t seed) {
  RunManifest m;
  m.command = command;
  m.config_text = config.text;
  m.config_hash = git_blob_sha1(config.text);
  m.master_seed = seed;
  m.started = utc_timestamp();
  return m;
}

bool wants(const StudyConfig& config, EstimatorKind kind) {
  return std::find(config.estimators.begin(), config.estimators.end(), kind) !=
         config.estimators.end();
}

std::ofstream open_output(const std::filesystem::path& dir,
                          const std::string& name) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / name);
  if (!out) throw DomainError("cannot write '" + (dir / name).string() + "'");
  return out;
}

std::uint64_t effective_seed(const CommandOptions& options,
                             const StudyConfig& config) {
  return options.seed_override ? *options.seed_override : config.seed;
}

}  // namespace

EieStudy run_eie_study(const StudyConfig& config, std::uint64_t seed, int jobs) {
  if (!config.reaction) throw ConfigError("eie needs a 'reaction' block");
  if (config.temperatures.empty()) throw ConfigError("eie needs 'temperatures'");
  const auto& reaction = *config.reaction;
  EieStudy study;
  study.manifest = start_manifest("eie", config, seed);

  for (double temperature : config.temperatures) {
    std::optional<HarmonicIe> ha;
    if (config.harmonic) ha = harmonic_eie(reaction, temperature);
    const std::size_t first = study.reports.size();
    for (Scheme scheme : config.schemes) {
      TiSettings settings;
      settings.grid = config.grid;
      settings.scheme = scheme;
      settings.mc = config.mc;
      settings.delta_lambda = config.delta_lambda;
      settings.record_te = wants(config, EstimatorKind::Thermodynamic);
      settings.record_cve = wants(config, EstimatorKind::CentroidVirial);
      const auto thermo = ThermoPoint::from_kelvin(
          temperature, config.trotter_at(scheme, temperature));
      std::vector<TermRun> runs;
      for (const auto& term : reaction.terms) {
        runs.push_back(run_term(term.species, term.exponent, thermo, settings,
                                seed, jobs));
        add_jobs(study.manifest, runs.back());
      }
      for (EstimatorKind kind : config.estimators) {
        std::vector<TermEstimate> terms;
        for (const auto& run : runs) {
          terms.push_back(estimate_term(run, kind, config.grid));
        }
        auto report = assemble_eie(reaction, std::move(terms));
        report.harmonic = ha;
        study.reports.push_back(std::move(report));
      }
    }
    if (config.speedup_reference) {
      const EieReport* ref = nullptr;
      for (std::size_t k = first; k < study.reports.size(); ++k) {
        const auto& r = study.reports[k];
        if (r.scheme == config.speedup_reference->scheme &&
            r.estimator == config.speedup_reference->estimator) {
          ref = &r;
        }
      }
      if (ref) {
        for (std::size_t k = first; k < study.reports.size(); ++k) {
          auto& r = study.reports[k];
          if (r.sigma > 0.0 && ref->sigma > 0.0 && r.wall_seconds > 0.0 &&
              ref->wall_seconds > 0.0) {
            r.speedup = speedup(*ref, r);
          }
        }
      }
    }
  }
  study.manifest.finished = utc_timestamp();
  return study;
}

ConvergeStudy run_converge_study(const StudyConfig& config, std::uint64_t seed,
                                 int jobs) {
  if (!config.converge) throw ConfigError("converge needs a 'converge' block");
  const auto& conv = *config.converge;
  const auto& species = config.find_species(conv.species);
  const auto pieces = split_fragments(species);
  ConvergeStudy study;
  study.manifest = start_manifest("converge", config, seed);

  std::optional<double> reference;
  if (conv.oracle_grid) {
    if (species.dim != 1 || species.atom_count() != 1) {
      throw ConfigError("converge.oracle_grid needs a one-atom 1D species");
    }
    const double beta = conv.thermal.beta_value();
    reference = -beta * oracle_dfdl(species, conv.lambda, beta,
                                    config.delta_lambda, *conv.oracle_grid);
  }

  struct Job {
    int trotter;
    Scheme scheme;
    std::size_t piece;
  };
  std::vector<Job> list;
  for (int p : conv.trotter) {
    for (Scheme scheme : config.schemes) {
      for (std::size_t k = 0; k < pieces.size(); ++k) list.push_back({p, scheme, k});
    }
  }
  std::vector<ChainResult> results(list.size());
  std::vector<std::string> names(list.size());
  parallel_for(list.size(), jobs, [&](std::size_t k) {
    const auto& job = list[k];
    ChainSpec spec;
    spec.species = pieces[job.piece].species;
    spec.lambda = conv.lambda;
    spec.thermo = conv.thermal.at(job.trotter);
    spec.scheme = job.scheme;
    spec.mc = config.mc;
    names[k] = "converge|" + std::to_string(job.trotter) + "|" +
               to_string(job.scheme) + "|" + pieces[job.piece].name;
    spec.mc.seed = derive_seed(seed, names[k]);
    spec.delta_lambda = config.delta_lambda;
    spec.record_te = wants(config, EstimatorKind::Thermodynamic);
    spec.record_cve = wants(config, EstimatorKind::CentroidVirial);
    results[k] = run_chain(spec);
  });
  for (std::size_t k = 0; k < list.size(); ++k) {
    if (!results[k].ok()) throw NumericalError(names[k] + ": " + results[k].error);
    study.manifest.jobs.push_back(
        {names[k], results[k].te.meta.seed,
         series_sha1({&results[k].te.samples, &results[k].cve.samples})});
  }

  for (int p : conv.trotter) {
    for (Scheme scheme : config.schemes) {
      for (EstimatorKind kind : config.estimators) {
        ConvergeRow row;
        row.trotter = p;
        row.scheme = to_string(scheme);
        row.estimator = to_string(kind);
        row.reference = reference;
        double variance = 0.0;
        for (std::size_t k = 0; k < list.size(); ++k) {
          if (list[k].trotter != p || list[k].scheme != scheme) continue;
          const auto& series = kind == EstimatorKind::Thermodynamic
                                   ? results[k].te
                                   : results[k].cve;
          const auto block = block_average(series.samples);
          row.value += block.mean;
          variance += block.rmse * block.rmse;
          row.samples += series.samples.size();
          row.wall_seconds += results[k].wall_seconds;
        }
        row.sigma = std::sqrt(variance);
        study.rows.push_back(row);
      }
    }
  }
  if (config.oracle && config.oracle->trotter.size() >= 4) {
    study.fits = run_oracle_study(config).fits;
  }
  study.manifest.finished = utc_timestamp();
  return study;
}

OracleStudy run_oracle_study(const StudyConfig& config) {
  if (!config.oracle) throw ConfigError("oracle needs an 'oracle' block");
  const auto& orc = *config.oracle;
  const auto& surface = *config.potentials.at(orc.potential);
  const double beta = orc.thermal.beta_value();
  OracleStudy study;
  const auto exact = exact_partition_1d(surface, orc.mass, beta, orc.grid);
  study.q_exact = exact.q;
  // Grid error floor for the order fits: how much Q moves on refinement.
  const double floor =
      std::abs(exact_partition_1d(surface, orc.mass, beta, orc.grid.refined()).q -
               exact.q) /
          exact.q +
      1e-14;
  for (Scheme scheme : orc.schemes) {
    std::vector<double> errors;
    for (int p : orc.trotter) {
      OracleRow row;
      row.scheme = to_string(scheme);
      row.trotter = p;
      row.q_trace = discretized_trace(surface, orc.mass, beta, p, scheme, orc.grid);
      row.q_exact = exact.q;
      row.rel_error = std::abs(row.q_trace - exact.q) / exact.q;
      errors.push_back(row.rel_error);
      study.rows.push_back(row);
    }
    if (orc.trotter.size() >= 4) {
      study.fits.emplace_back(scheme,
                              fit_convergence_order(orc.trotter, errors, floor));
    }
  }
  if (orc.dfdl_species) {
    const auto& species = config.find_species(*orc.dfdl_species);
    study.dfdl =
        -beta * oracle_dfdl(species, orc.dfdl_lambda, beta, orc.dfdl_delta, orc.grid);
  }
  return study;
}

std::vector<HarmonicRow> run_harmonic_study(const StudyConfig& config) {
  if (!config.reaction) throw ConfigError("harmonic needs a 'reaction' block");
  if (config.temperatures.empty()) {
    throw ConfigError("harmonic needs 'temperatures'");
  }
  std::vector<HarmonicRow> rows;
  for (double t : config.temperatures) {
    rows.push_back({t, harmonic_eie(*config.reaction, t)});
  }
  return rows;
}

int cmd_eie(const CommandOptions& options, std::ostream& log) {
  const auto config = load_config(options.config);
  const auto study =
      run_eie_study(config, effective_seed(options, config), options.jobs);
  std::vector<EieRow> rows;
  nlohmann::json reports = nlohmann::json::array();
  for (const auto& r : study.reports) {
    rows.push_back(eie_row(r));
    reports.push_back(to_json(r));
  }
  {
    auto out = open_output(options.out_dir, "eie.csv");
    write_eie_csv(out, rows);
  }
  open_output(options.out_dir, "eie_report.json") << reports.dump(2) << '\n';
  open_output(options.out_dir, "manifest.json")
      << to_json(study.manifest).dump(2) << '\n';

  log << std::left << std::setw(10) << "T/K" << std::setw(8) << "scheme"
      << std::setw(6) << "est" << std::setw(6) << "P" << std::setw(14) << "EIE"
      << std::setw(12) << "sigma" << "HA\n";
  for (const auto& r : study.reports) {
    log << std::left << std::setw(10) << r.temperature << std::setw(8)
        << to_string(r.scheme) << std::setw(6) << to_string(r.estimator)
        << std::setw(6) << r.trotter << std::setw(14) << r.eie << std::setw(12)
        << r.sigma << (r.harmonic ? std::to_string(r.harmonic->value) : "-")
        << '\n';
    for (const auto& w : r.warnings) log << "  warning: " << w << '\n';
  }
  return kExitOk;
}

int cmd_converge(const CommandOptions& options, std::ostream& log) {
  const auto config = load_config(options.config);
  const auto study =
      run_converge_study(config, effective_seed(options, config), options.jobs);
  {
    auto out = open_output(options.out_dir, "converge.csv");
    write_converge_csv(out, study.rows);
  }
  nlohmann::json fits = nlohmann::json::object();
  for (const auto& [scheme, fit] : study.fits) fits[to_string(scheme)] = to_json(fit);
  open_output(options.out_dir, "converge_fit.json") << fits.dump(2) << '\n';
  open_output(options.out_dir, "manifest.json")
      << to_json(study.manifest).dump(2) << '\n';
  for (const auto& r : study.rows) {
    log << "P=" << r.trotter << ' ' << r.scheme << ' ' << r.estimator << ' '
        << r.value << " +- " << r.sigma << '\n';
  }
  for (const auto& [scheme, fit] : study.fits) {
    log << to_string(scheme) << " order slope " << fit.slope << '\n';
  }
  return kExitOk;
}

int cmd_oracle(const CommandOptions& options, std::ostream& log) {
  const auto config = load_config(options.config);
  const auto study = run_oracle_study(config);
  {
    auto out = open_output(options.out_dir, "oracle.csv");
    write_oracle_csv(out, study.rows);
  }
  nlohmann::json j = {{"q_exact", study.q_exact}};
  for (const auto& [scheme, fit] : study.fits) j["fits"][to_string(scheme)] = to_json(fit);
  if (study.dfdl) j["minus_beta_dF_dlambda"] = *study.dfdl;
  open_output(options.out_dir, "oracle.json") << j.dump(2) << '\n';
  log << std::setprecision(10) << "Q_exact " << study.q_exact << '\n';
  for (const auto& r : study.rows) {
    log << r.scheme << " P=" << r.trotter << " Q=" << r.q_trace
        << " rel_error=" << r.rel_error << '\n';
  }
  for (const auto& [scheme, fit] : study.fits) {
    log << to_string(scheme) << " slope " << fit.slope << '\n';
  }
  if (study.dfdl) log << "-beta dF/dlambda " << *study.dfdl << '\n';
  return kExitOk;
}

int cmd_harmonic(const CommandOptions& options, std::ostream& log) {
  const auto config = load_config(options.config);
  const auto rows = run_harmonic_study(config);
  auto out = open_output(options.out_dir, "harmonic.csv");
  out << "temperature,ha,high_t,low_t\n";
  for (const auto& r : rows) {
    out << format_double(r.temperature) << ',' << format_double(r.ie.value) << ','
        << format_double(r.ie.high_t) << ',' << format_double(r.ie.low_t) << '\n';
    log << r.temperature << " K: HA " << r.ie.value << " (high-T "
        << r.ie.high_t << ", low-T " << r.ie.low_t << ")\n";
  }
  return kExitOk;
}

int run_guarded(const std::function<int()>& command, std::ostream& err) {
  try {
    return command();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const GridError& e) {
    err << "grid error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const DomainError& e) {
    err << "invalid input: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
}

}  // namespace isopimc
