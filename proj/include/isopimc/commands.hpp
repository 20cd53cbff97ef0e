#pragma once

// Subcommands behind the isopimc executable. Each study function is pure
// apart from timing; the cmd_* wrappers add file output.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "isopimc/config.hpp"
#include "isopimc/report_io.hpp"

namespace isopimc {

enum ExitCode { kExitOk = 0, kExitConfig = 2, kExitNumerical = 3 };

struct CommandOptions {
  std::filesystem::path config;
  std::optional<std::uint64_t> seed_override;
  int jobs = 1;
  std::filesystem::path out_dir = ".";
};

struct EieStudy {
  std::vector<EieReport> reports;
  RunManifest manifest;
};

EieStudy run_eie_study(const StudyConfig& config, std::uint64_t seed, int jobs);

struct ConvergeStudy {
  std::vector<ConvergeRow> rows;
  std::vector<std::pair<Scheme, OrderFit>> fits;
  RunManifest manifest;
};

ConvergeStudy run_converge_study(const StudyConfig& config, std::uint64_t seed,
                                 int jobs);

struct OracleStudy {
  double q_exact = 0.0;
  std::vector<OracleRow> rows;
  std::vector<std::pair<Scheme, OrderFit>> fits;
  /// -beta dF/dlambda when a dfdl species is configured.
  std::optional<double> dfdl;
};

OracleStudy run_oracle_study(const StudyConfig& config);

struct HarmonicRow {
  double temperature = 0.0;
  HarmonicIe ie;
};

std::vector<HarmonicRow> run_harmonic_study(const StudyConfig& config);

int cmd_eie(const CommandOptions& options, std::ostream& log);
int cmd_converge(const CommandOptions& options, std::ostream& log);
int cmd_oracle(const CommandOptions& options, std::ostream& log);
int cmd_harmonic(const CommandOptions& options, std::ostream& log);

/// Runs `command` and maps failures to exit codes: configuration and input
/// errors give 2, numerical failures 3. The message goes to `err`.
int run_guarded(const std::function<int()>& command, std::ostream& err);

}  // namespace isopimc
