#include "isopimc/report_io.hpp"

#include <openssl/evp.h>
#include <openssl/sha.h>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <istream>
#include <ostream>
#include <sstream>

namespace isopimc {

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

EieRow eie_row(const EieReport& report) {
  EieRow row;
  row.temperature = report.temperature;
  row.scheme = to_string(report.scheme);
  row.estimator = to_string(report.estimator);
  row.trotter = report.trotter;
  row.eie = report.eie;
  row.sigma = report.sigma;
  if (report.harmonic) row.harmonic = report.harmonic->value;
  row.speedup = report.speedup;
  return row;
}

namespace {

const char* kEieHeader = "temperature,scheme,estimator,trotter,eie,sigma,ha,f";
const char* kConvergeHeader =
    "trotter,scheme,estimator,value,sigma,samples,wall_seconds,reference";

std::string optional_field(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string();
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_number(const std::string& text, int line) {
  std::size_t used = 0;
  double v;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) {
    throw DomainError("CSV line " + std::to_string(line) + ": bad number '" +
                      text + "'");
  }
  return v;
}

std::optional<double> parse_optional(const std::string& text, int line) {
  if (text.empty()) return std::nullopt;
  return parse_number(text, line);
}

template <class Row, class Parse>
std::vector<Row> parse_table(std::istream& in, const char* header,
                             std::size_t columns, Parse parse) {
  std::string line;
  if (!std::getline(in, line) || line != header) {
    throw DomainError(std::string("CSV header must be '") + header + "'");
  }
  std::vector<Row> rows;
  int number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != columns) {
      throw DomainError("CSV line " + std::to_string(number) + ": expected " +
                        std::to_string(columns) + " fields");
    }
    rows.push_back(parse(f, number));
  }
  return rows;
}

}  // namespace

void write_eie_csv(std::ostream& out, const std::vector<EieRow>& rows) {
  out << kEieHeader << '\n';
  for (const auto& r : rows) {
    out << format_double(r.temperature) << ',' << r.scheme << ',' << r.estimator
        << ',' << r.trotter << ',' << format_double(r.eie) << ','
        << format_double(r.sigma) << ',' << optional_field(r.harmonic) << ','
        << optional_field(r.speedup) << '\n';
  }
}

std::vector<EieRow> parse_eie_csv(std::istream& in) {
  return parse_table<EieRow>(in, kEieHeader, 8, [](const auto& f, int line) {
    EieRow r;
    r.temperature = parse_number(f[0], line);
    r.scheme = f[1];
    r.estimator = f[2];
    r.trotter = static_cast<int>(parse_number(f[3], line));
    r.eie = parse_number(f[4], line);
    r.sigma = parse_number(f[5], line);
    r.harmonic = parse_optional(f[6], line);
    r.speedup = parse_optional(f[7], line);
    return r;
  });
}

void write_converge_csv(std::ostream& out, const std::vector<ConvergeRow>& rows) {
  out << kConvergeHeader << '\n';
  for (const auto& r : rows) {
    out << r.trotter << ',' << r.scheme << ',' << r.estimator << ','
        << format_double(r.value) << ',' << format_double(r.sigma) << ','
        << r.samples << ',' << format_double(r.wall_seconds) << ','
        << optional_field(r.reference) << '\n';
  }
}

std::vector<ConvergeRow> parse_converge_csv(std::istream& in) {
  return parse_table<ConvergeRow>(in, kConvergeHeader, 8, [](const auto& f, int line) {
    ConvergeRow r;
    r.trotter = static_cast<int>(parse_number(f[0], line));
    r.scheme = f[1];
    r.estimator = f[2];
    r.value = parse_number(f[3], line);
    r.sigma = parse_number(f[4], line);
    r.samples = static_cast<std::size_t>(parse_number(f[5], line));
    r.wall_seconds = parse_number(f[6], line);
    r.reference = parse_optional(f[7], line);
    return r;
  });
}

void write_oracle_csv(std::ostream& out, const std::vector<OracleRow>& rows) {
  out << "scheme,trotter,q_trace,q_exact,rel_error\n";
  for (const auto& r : rows) {
    out << r.scheme << ',' << r.trotter << ',' << format_double(r.q_trace) << ','
        << format_double(r.q_exact) << ',' << format_double(r.rel_error) << '\n';
  }
}

nlohmann::json to_json(const HarmonicIe& ie) {
  return {{"value", ie.value}, {"high_t", ie.high_t}, {"low_t", ie.low_t}};
}

nlohmann::json to_json(const OrderFit& fit) {
  return {{"trotter", fit.trotter},
          {"error", fit.error},
          {"slope", fit.slope},
          {"intercept", fit.intercept},
          {"residual", fit.residual}};
}

nlohmann::json to_json(const EieReport& report, bool include_timing) {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& t : report.terms) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : t.nodes) {
      nodes.push_back({{"lambda", n.lambda},
                       {"minus_beta_dF_dlambda", n.mean},
                       {"sigma", n.sigma},
                       {"samples", n.samples}});
    }
    nlohmann::json term = {{"species", t.species},
                           {"exponent", t.exponent},
                           {"symmetry_light", t.symmetry_light},
                           {"symmetry_heavy", t.symmetry_heavy},
                           {"delta_f_hartree", t.free_energy.delta_f},
                           {"delta_f_sigma", t.free_energy.sigma},
                           {"ratio", t.ratio.value},
                           {"ratio_sigma", t.ratio.sigma},
                           {"integrand", nodes}};
    if (include_timing) term["wall_seconds"] = t.wall_seconds;
    terms.push_back(term);
  }
  nlohmann::json j = {
      {"reaction", report.reaction},
      {"mode", report.mode == ReactionMode::Direct ? "direct" : "ratio-of-ratios"},
      {"temperature", report.temperature},
      {"trotter", report.trotter},
      {"scheme", to_string(report.scheme)},
      {"estimator", to_string(report.estimator)},
      {"eie", report.eie},
      {"sigma", report.sigma},
      {"symmetry_factor", report.symmetry_factor},
      {"terms", terms},
      {"seeds", report.seeds},
      {"warnings", report.warnings}};
  if (report.harmonic) j["harmonic"] = to_json(*report.harmonic);
  if (include_timing) {
    j["wall_seconds"] = report.wall_seconds;
    if (report.speedup) j["speedup"] = *report.speedup;
  }
  return j;
}

namespace {
std::string hex_digest(const unsigned char* digest) {
  std::string hex;
  char buf[3];
  for (int k = 0; k < SHA_DIGEST_LENGTH; ++k) {
    std::snprintf(buf, sizeof buf, "%02x", digest[k]);
    hex += buf;
  }
  return hex;
}
}  // namespace

std::string git_blob_sha1(const std::string& content) {
  const std::string data =
      "blob " + std::to_string(content.size()) + std::string(1, '\0') + content;
  unsigned char digest[SHA_DIGEST_LENGTH];
  SHA1(reinterpret_cast<const unsigned char*>(data.data()), data.size(), digest);
  return hex_digest(digest);
}

std::string series_sha1(const std::vector<const std::vector<double>*>& series) {
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr);
  for (const auto* s : series) {
    EVP_DigestUpdate(ctx, s->data(), s->size() * sizeof(double));
  }
  unsigned char digest[SHA_DIGEST_LENGTH];
  EVP_DigestFinal_ex(ctx, digest, nullptr);
  EVP_MD_CTX_free(ctx);
  return hex_digest(digest);
}

nlohmann::json to_json(const RunManifest& m) {
  nlohmann::json seeds = nlohmann::json::array();
  for (const auto& job : m.jobs) {
    seeds.push_back(
        {{"job", job.name}, {"seed", job.seed}, {"series_sha1", job.series_sha1}});
  }
  return {{"command", m.command},
          {"config_hash", m.config_hash},
          {"master_seed", m.master_seed},
          {"job_seeds", seeds},
          {"started", m.started},
          {"finished", m.finished},
          {"config", m.config_text}};
}

std::string utc_timestamp() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace isopimc
