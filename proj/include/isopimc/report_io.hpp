#pragma once

// Report emission: JSON trees, flat CSV tables and the run manifest.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "isopimc/oracle.hpp"
#include "isopimc/workflow.hpp"

namespace isopimc {

/// One line of the EIE table. Doubles are written with 17 significant
/// digits so parsing restores them exactly.
struct EieRow {
  double temperature = 0.0;
  std::string scheme;
  std::string estimator;
  int trotter = 0;
  double eie = 0.0;
  double sigma = 0.0;
  std::optional<double> harmonic;
  std::optional<double> speedup;

  bool operator==(const EieRow&) const = default;
};

EieRow eie_row(const EieReport& report);

void write_eie_csv(std::ostream& out, const std::vector<EieRow>& rows);
/// Throws DomainError on malformed input.
std::vector<EieRow> parse_eie_csv(std::istream& in);

struct ConvergeRow {
  int trotter = 0;
  std::string scheme;
  std::string estimator;
  double value = 0.0;  // mean of -beta dF/dlambda
  double sigma = 0.0;
  std::size_t samples = 0;
  double wall_seconds = 0.0;
  std::optional<double> reference;  // oracle -beta dF/dlambda

  bool operator==(const ConvergeRow&) const = default;
};

void write_converge_csv(std::ostream& out, const std::vector<ConvergeRow>& rows);
std::vector<ConvergeRow> parse_converge_csv(std::istream& in);

struct OracleRow {
  std::string scheme;
  int trotter = 0;
  double q_trace = 0.0;
  double q_exact = 0.0;
  double rel_error = 0.0;
};

void write_oracle_csv(std::ostream& out, const std::vector<OracleRow>& rows);

std::string format_double(double value);

nlohmann::json to_json(const EieReport& report, bool include_timing = true);
nlohmann::json to_json(const HarmonicIe& ie);
nlohmann::json to_json(const OrderFit& fit);

/// SHA-1 of "blob <size>\0<content>", as git hashes file contents.
std::string git_blob_sha1(const std::string& content);
/// SHA-1 of the concatenated IEEE-754 bytes of every series, in order.
std::string series_sha1(const std::vector<const std::vector<double>*>& series);

struct ManifestJob {
  std::string name;
  std::uint64_t seed = 0;
  /// SHA-1 over the raw bytes of the job's estimator series.
  std::string series_sha1;
};

struct RunManifest {
  std::string command;
  std::string config_text;
  std::string config_hash;
  std::uint64_t master_seed = 0;
  std::vector<ManifestJob> jobs;
  std::string started;
  std::string finished;
};

nlohmann::json to_json(const RunManifest& manifest);
/// Current UTC time as ISO 8601.
std::string utc_timestamp();

}  // namespace isopimc
