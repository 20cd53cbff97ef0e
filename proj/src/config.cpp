#include "isopimc/config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace isopimc {

ConfigError::ConfigError(const std::string& message, int line, int column)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ", column " +
                                        std::to_string(column) + ": " + message
                                  : message),
      line_(line),
      column_(column) {}

double ThermalInput::beta_value() const {
  return beta ? *beta : beta_from_kelvin(*temperature);
}

ThermoPoint ThermalInput::at(int trotter) const {
  return beta ? ThermoPoint::from_beta(*beta, trotter)
              : ThermoPoint::from_kelvin(*temperature, trotter);
}

const SpeciesSpec& StudyConfig::find_species(const std::string& name) const {
  for (const auto& s : species) {
    if (s.name == name) return s;
  }
  throw ConfigError("unknown species '" + name + "'");
}

int StudyConfig::trotter_at(Scheme scheme, double temperature) const {
  const auto it = trotter.find(scheme);
  return (it != trotter.end() ? it->second : default_trotter_plan(scheme))
      .at(temperature);
}

namespace {

[[noreturn]] void fail(const YAML::Node& node, const std::string& message) {
  const auto mark = node.Mark();
  if (mark.line < 0) throw ConfigError(message);
  throw ConfigError(message, mark.line + 1, mark.column + 1);
}

YAML::Node require(const YAML::Node& parent, const std::string& key,
                   const std::string& where) {
  if (!parent.IsMap()) fail(parent, where + " must be a mapping");
  const YAML::Node node = parent[key];
  if (!node) fail(parent, where + ": missing '" + key + "'");
  return node;
}

template <class T>
T as(const YAML::Node& node, const std::string& what) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    fail(node, "invalid value for " + what);
  }
}

template <class T>
T get(const YAML::Node& parent, const std::string& key, const std::string& where) {
  return as<T>(require(parent, key, where), where + "." + key);
}

template <class T>
T get_or(const YAML::Node& parent, const std::string& key, T fallback,
         const std::string& where) {
  const YAML::Node node = parent[key];
  return node ? as<T>(node, where + "." + key) : fallback;
}

void check_keys(const YAML::Node& node, const std::set<std::string>& allowed,
                const std::string& where) {
  if (!node.IsMap()) fail(node, where + " must be a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) fail(kv.first, where + ": unknown key '" + key + "'");
  }
}

std::vector<double> doubles(const YAML::Node& node, const std::string& what) {
  if (!node.IsSequence()) fail(node, what + " must be a list");
  std::vector<double> out;
  for (const auto& x : node) out.push_back(as<double>(x, what));
  return out;
}

std::vector<int> ints(const YAML::Node& node, const std::string& what) {
  if (!node.IsSequence()) fail(node, what + " must be a list");
  std::vector<int> out;
  for (const auto& x : node) out.push_back(as<int>(x, what));
  return out;
}

Scheme scheme_of(const YAML::Node& node) {
  try {
    return scheme_from_string(as<std::string>(node, "scheme"));
  } catch (const DomainError& e) {
    fail(node, e.what());
  }
}

EstimatorKind estimator_of(const YAML::Node& node) {
  try {
    return estimator_from_string(as<std::string>(node, "estimator"));
  } catch (const DomainError& e) {
    fail(node, e.what());
  }
}

double mass_scale(const YAML::Node& node, const std::string& where) {
  const auto unit = as<std::string>(node, where);
  if (unit == "amu") return units::amu;
  if (unit == "au" || unit == "me") return 1.0;
  fail(node, where + " must be 'amu' or 'au'");
}

ThermalInput thermal_of(const YAML::Node& parent, const std::string& where) {
  ThermalInput t;
  if (parent["temperature"]) t.temperature = get<double>(parent, "temperature", where);
  if (parent["beta"]) t.beta = get<double>(parent, "beta", where);
  if (t.temperature.has_value() == t.beta.has_value()) {
    fail(parent, where + ": give exactly one of 'temperature' or 'beta'");
  }
  if (t.temperature && !(*t.temperature > 0.0)) {
    fail(parent["temperature"], where + ": temperature must be positive");
  }
  if (t.beta && !(*t.beta > 0.0)) fail(parent["beta"], where + ": beta must be positive");
  return t;
}

GridSpec grid_of(const YAML::Node& node, const std::string& where) {
  check_keys(node, {"lower", "upper", "points", "box"}, where);
  GridSpec g;
  g.lower = get<double>(node, "lower", where);
  g.upper = get<double>(node, "upper", where);
  g.points = get<int>(node, "points", where);
  g.box = get_or<bool>(node, "box", false, where);
  try {
    g.validate();
  } catch (const GridError& e) {
    fail(node, where + ": " + e.what());
  }
  return g;
}

SurfacePtr parse_potential(const YAML::Node& node,
                           const std::map<std::string, SurfacePtr>& known,
                           const std::filesystem::path& base_dir,
                           const std::string& where) {
  const auto type = get<std::string>(node, "type", where);
  const int atoms = get<int>(node, "atoms", where);
  if (atoms < 1) fail(node["atoms"], where + ": atoms must be >= 1");
  auto pair = [&]() -> std::pair<int, int> {
    if (!node["pair"]) return {0, atoms > 1 ? 1 : 0};
    const auto p = ints(node["pair"], where + ".pair");
    if (p.size() != 2) fail(node["pair"], where + ".pair must hold two indices");
    return {p[0], p[1]};
  };
  try {
    if (type == "free") {
      check_keys(node, {"id", "type", "atoms"}, where);
      return std::make_shared<FreeParticleSurface>(atoms);
    }
    if (type == "harmonic") {
      check_keys(node, {"id", "type", "atoms", "force_constant", "center"}, where);
      std::vector<double> center;
      if (node["center"]) center = doubles(node["center"], where + ".center");
      return std::make_shared<IsotropicHarmonicSurface>(
          atoms, get<double>(node, "force_constant", where), center);
    }
    if (type == "harmonic_pair") {
      check_keys(node, {"id", "type", "atoms", "force_constant", "r_e", "pair"},
                 where);
      const auto [i, j] = pair();
      return std::make_shared<HarmonicPairSurface>(
          atoms, i, j, get<double>(node, "force_constant", where),
          get_or<double>(node, "r_e", 0.0, where));
    }
    if (type == "morse") {
      check_keys(node, {"id", "type", "atoms", "well_depth", "range", "r_e",
                        "r_max", "pair"},
                 where);
      MorseDiatomicSurface::Parameters p;
      p.well_depth = get<double>(node, "well_depth", where);
      p.range = get<double>(node, "range", where);
      p.r_e = get<double>(node, "r_e", where);
      p.r_max = get_or<double>(node, "r_max", p.r_max, where);
      const auto [i, j] = pair();
      return std::make_shared<MorseDiatomicSurface>(atoms, i, j, p);
    }
    if (type == "fragments") {
      check_keys(node, {"id", "type", "atoms", "fragments"}, where);
      const auto list = require(node, "fragments", where);
      if (!list.IsSequence()) fail(list, where + ".fragments must be a list");
      std::vector<FragmentSumSurface::Fragment> frags;
      for (const auto& f : list) {
        check_keys(f, {"atoms", "potential"}, where + ".fragments[]");
        const auto id = get<std::string>(f, "potential", where + ".fragments[]");
        const auto it = known.find(id);
        if (it == known.end()) {
          fail(f["potential"], where + ": unknown potential id '" + id +
                                   "' (define it earlier in the list)");
        }
        frags.push_back({ints(require(f, "atoms", where), where + ".atoms"),
                         it->second});
      }
      return std::make_shared<FragmentSumSurface>(atoms, std::move(frags));
    }
    if (type == "tabulated") {
      check_keys(node, {"id", "type", "atoms", "file", "order"}, where);
      auto file = std::filesystem::path(get<std::string>(node, "file", where));
      if (file.is_relative()) file = base_dir / file;
      return TabulatedSurface::load(file, atoms,
                                    get_or<int>(node, "order", 3, where));
    }
  } catch (const DomainError& e) {
    fail(node, where + ": " + e.what());
  }
  fail(node["type"], where + ": unknown potential type '" + type + "'");
}

SpeciesSpec parse_species(const YAML::Node& node,
                          const std::map<std::string, SurfacePtr>& potentials,
                          double default_scale) {
  SpeciesSpec s;
  s.name = get<std::string>(node, "name", "species");
  const std::string where = "species '" + s.name + "'";
  check_keys(node, {"name", "dimension", "potential", "symmetry", "atoms",
                    "geometry", "mass_unit"},
             where);
  const double scale =
      node["mass_unit"] ? mass_scale(node["mass_unit"], where + ".mass_unit")
                        : default_scale;
  s.dim = get_or<int>(node, "dimension", 3, where);
  if (!node["potential"]) fail(node, where + ": missing potential id");
  const auto id = get<std::string>(node, "potential", where);
  const auto it = potentials.find(id);
  if (it == potentials.end()) {
    fail(node["potential"], where + ": unknown potential id '" + id + "'");
  }
  s.potential = it->second;
  if (const auto sym = node["symmetry"]) {
    if (sym.IsSequence()) {
      const auto v = ints(sym, where + ".symmetry");
      if (v.size() != 2) fail(sym, where + ".symmetry must be [light, heavy]");
      s.symmetry_light = v[0];
      s.symmetry_heavy = v[1];
    } else {
      s.symmetry_light = s.symmetry_heavy = as<int>(sym, where + ".symmetry");
    }
  }
  const auto atoms = require(node, "atoms", where);
  if (!atoms.IsSequence()) fail(atoms, where + ".atoms must be a list");
  for (const auto& a : atoms) {
    check_keys(a, {"label", "light", "heavy", "mass"}, where + ".atoms[]");
    AtomSpec atom;
    atom.label = get_or<std::string>(a, "label", "X", where);
    if (a["mass"]) {
      atom.m_light = atom.m_heavy = get<double>(a, "mass", where) * scale;
    } else {
      atom.m_light = get<double>(a, "light", where + ".atoms[]") * scale;
      atom.m_heavy = get<double>(a, "heavy", where + ".atoms[]") * scale;
    }
    s.atoms.push_back(atom);
  }
  if (node["geometry"]) s.geometry = doubles(node["geometry"], where + ".geometry");
  try {
    s.validate();
  } catch (const DomainError& e) {
    fail(node, e.what());
  }
  return s;
}

}  // namespace

StudyConfig parse_config(const std::string& text,
                         const std::filesystem::path& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(e.msg, e.mark.line + 1, e.mark.column + 1);
  }
  if (!root.IsMap()) throw ConfigError("configuration must be a mapping");
  check_keys(root,
             {"schema_version", "seed", "mass_unit", "potentials", "species",
              "reaction", "temperatures", "trotter", "lambda_grid", "schemes",
              "estimators", "delta_lambda", "mc", "harmonic",
              "speedup_reference", "converge", "oracle"},
             "config");

  StudyConfig cfg;
  cfg.text = text;
  cfg.schema_version = get<int>(root, "schema_version", "config");
  if (cfg.schema_version != kSchemaVersion) {
    fail(root["schema_version"], "unsupported schema_version " +
                                     std::to_string(cfg.schema_version) +
                                     " (expected " +
                                     std::to_string(kSchemaVersion) + ")");
  }
  cfg.seed = get_or<std::uint64_t>(root, "seed", 1, "config");
  const double scale =
      root["mass_unit"] ? mass_scale(root["mass_unit"], "mass_unit") : units::amu;

  if (const auto list = root["potentials"]) {
    if (!list.IsSequence()) fail(list, "potentials must be a list");
    for (const auto& p : list) {
      const auto id = get<std::string>(p, "id", "potential");
      if (cfg.potentials.count(id)) fail(p, "duplicate potential id '" + id + "'");
      cfg.potentials[id] =
          parse_potential(p, cfg.potentials, base_dir, "potential '" + id + "'");
    }
  }
  if (const auto list = root["species"]) {
    if (!list.IsSequence()) fail(list, "species must be a list");
    for (const auto& s : list) {
      cfg.species.push_back(parse_species(s, cfg.potentials, scale));
    }
  }

  if (const auto r = root["reaction"]) {
    check_keys(r, {"name", "mode", "terms"}, "reaction");
    ReactionSpec reaction;
    reaction.name = get_or<std::string>(r, "name", "reaction", "reaction");
    const auto mode = get_or<std::string>(r, "mode", "direct", "reaction");
    if (mode == "direct") {
      reaction.mode = ReactionMode::Direct;
    } else if (mode == "ratio-of-ratios") {
      reaction.mode = ReactionMode::RatioOfRatios;
    } else {
      fail(r["mode"], "reaction.mode must be 'direct' or 'ratio-of-ratios'");
    }
    const auto terms = require(r, "terms", "reaction");
    if (!terms.IsSequence()) fail(terms, "reaction.terms must be a list");
    for (const auto& t : terms) {
      check_keys(t, {"species", "exponent"}, "reaction.terms[]");
      const auto name = get<std::string>(t, "species", "reaction.terms[]");
      const auto found = std::find_if(cfg.species.begin(), cfg.species.end(),
                                      [&](const auto& s) { return s.name == name; });
      if (found == cfg.species.end()) {
        fail(t["species"], "reaction term names unknown species '" + name + "'");
      }
      reaction.terms.push_back(
          {*found, get_or<int>(t, "exponent", 1, "reaction.terms[]")});
    }
    try {
      reaction.validate();
    } catch (const DomainError& e) {
      fail(r, e.what());
    }
    cfg.reaction = std::move(reaction);
  }

  if (const auto t = root["temperatures"]) {
    cfg.temperatures = doubles(t, "temperatures");
    for (double x : cfg.temperatures) {
      if (!(x > 0.0)) fail(t, "temperatures must be positive");
    }
  }

  if (const auto tr = root["trotter"]) {
    if (!tr.IsMap()) fail(tr, "trotter must be a mapping of scheme to plan");
    for (const auto& kv : tr) {
      const Scheme scheme = scheme_of(kv.first);
      const auto where = "trotter." + kv.first.as<std::string>();
      check_keys(kv.second, {"reference", "overrides"}, where);
      TrotterPlan plan = default_trotter_plan(scheme);
      if (const auto ref = kv.second["reference"]) {
        check_keys(ref, {"temperature", "trotter"}, where + ".reference");
        plan.reference.temperature = get<double>(ref, "temperature", where);
        plan.reference.trotter = get<int>(ref, "trotter", where);
        if (!(plan.reference.temperature > 0.0) || plan.reference.trotter < 1) {
          fail(ref, where + ".reference needs temperature > 0 and trotter >= 1");
        }
      }
      if (const auto ov = kv.second["overrides"]) {
        if (!ov.IsMap()) fail(ov, where + ".overrides must map T to P");
        for (const auto& o : ov) {
          const int p = as<int>(o.second, where + ".overrides");
          if (p < 1) fail(o.second, where + ".overrides: P must be >= 1");
          plan.overrides[as<double>(o.first, where + ".overrides")] = p;
        }
      }
      cfg.trotter[scheme] = plan;
    }
  }

  if (const auto g = root["lambda_grid"]) {
    try {
      if (g.IsSequence()) {
        cfg.grid.nodes = doubles(g, "lambda_grid");
        cfg.grid.validate();
      } else {
        cfg.grid = LambdaGrid::uniform(as<int>(g, "lambda_grid"));
      }
    } catch (const DomainError& e) {
      fail(g, e.what());
    }
  }
  if (const auto s = root["schemes"]) {
    if (!s.IsSequence()) fail(s, "schemes must be a list");
    cfg.schemes.clear();
    for (const auto& x : s) cfg.schemes.push_back(scheme_of(x));
  }
  if (const auto e = root["estimators"]) {
    if (!e.IsSequence()) fail(e, "estimators must be a list");
    cfg.estimators.clear();
    for (const auto& x : e) cfg.estimators.push_back(estimator_of(x));
  }
  cfg.delta_lambda = get_or<double>(root, "delta_lambda", cfg.delta_lambda, "config");
  if (!(cfg.delta_lambda > 0.0) || cfg.delta_lambda > 0.25) {
    fail(root["delta_lambda"], "delta_lambda must lie in (0, 0.25]");
  }

  if (const auto mc = root["mc"]) {
    check_keys(mc, {"total_steps", "warmup_fraction", "estimator_stride",
                    "staging_segment", "centroid_move_fraction"},
               "mc");
    cfg.mc.total_steps = get_or<long long>(mc, "total_steps", cfg.mc.total_steps, "mc");
    cfg.mc.warmup_fraction =
        get_or<double>(mc, "warmup_fraction", cfg.mc.warmup_fraction, "mc");
    cfg.mc.estimator_stride =
        get_or<int>(mc, "estimator_stride", cfg.mc.estimator_stride, "mc");
    cfg.mc.staging_segment =
        get_or<int>(mc, "staging_segment", cfg.mc.staging_segment, "mc");
    cfg.mc.centroid_move_fraction = get_or<double>(
        mc, "centroid_move_fraction", cfg.mc.centroid_move_fraction, "mc");
    try {
      cfg.mc.validate();
    } catch (const DomainError& e) {
      fail(mc, e.what());
    }
  }
  cfg.mc.seed = cfg.seed;
  cfg.harmonic = get_or<bool>(root, "harmonic", cfg.harmonic, "config");

  if (const auto sr = root["speedup_reference"]) {
    check_keys(sr, {"scheme", "estimator"}, "speedup_reference");
    cfg.speedup_reference = SpeedupReference{
        scheme_of(require(sr, "scheme", "speedup_reference")),
        estimator_of(require(sr, "estimator", "speedup_reference"))};
  }

  if (const auto c = root["converge"]) {
    check_keys(c, {"species", "lambda", "temperature", "beta", "trotter",
                   "oracle_grid"},
               "converge");
    ConvergeConfig conv;
    conv.species = get<std::string>(c, "species", "converge");
    try {
      cfg.find_species(conv.species);
    } catch (const ConfigError& e) {
      fail(c["species"], e.what());
    }
    conv.lambda = get_or<double>(c, "lambda", 0.5, "converge");
    if (!(conv.lambda >= 0.0 && conv.lambda <= 1.0)) {
      fail(c["lambda"], "converge.lambda must lie in [0, 1]");
    }
    conv.thermal = thermal_of(c, "converge");
    conv.trotter = ints(require(c, "trotter", "converge"), "converge.trotter");
    if (conv.trotter.empty()) fail(c["trotter"], "converge.trotter is empty");
    for (int p : conv.trotter) {
      if (p < 1) fail(c["trotter"], "converge.trotter values must be >= 1");
    }
    if (c["oracle_grid"]) conv.oracle_grid = grid_of(c["oracle_grid"], "converge.oracle_grid");
    cfg.converge = std::move(conv);
  }

  if (const auto o = root["oracle"]) {
    check_keys(o, {"potential", "mass", "temperature", "beta", "grid", "trotter",
                   "schemes", "dfdl"},
               "oracle");
    OracleConfig orc;
    orc.potential = get<std::string>(o, "potential", "oracle");
    const auto it = cfg.potentials.find(orc.potential);
    if (it == cfg.potentials.end()) {
      fail(o["potential"], "oracle: unknown potential id '" + orc.potential + "'");
    }
    if (it->second->atom_count() != 1) {
      fail(o["potential"], "oracle: potential must describe one atom");
    }
    orc.mass = get<double>(o, "mass", "oracle") * scale;
    if (!(orc.mass > 0.0)) fail(o["mass"], "oracle: mass must be positive");
    orc.thermal = thermal_of(o, "oracle");
    orc.grid = grid_of(require(o, "grid", "oracle"), "oracle.grid");
    if (o["trotter"]) orc.trotter = ints(o["trotter"], "oracle.trotter");
    for (int p : orc.trotter) {
      if (p < 1) fail(o["trotter"], "oracle.trotter values must be >= 1");
    }
    if (const auto s = o["schemes"]) {
      if (!s.IsSequence()) fail(s, "oracle.schemes must be a list");
      orc.schemes.clear();
      for (const auto& x : s) orc.schemes.push_back(scheme_of(x));
    }
    if (const auto d = o["dfdl"]) {
      check_keys(d, {"species", "lambda", "delta_lambda"}, "oracle.dfdl");
      orc.dfdl_species = get<std::string>(d, "species", "oracle.dfdl");
      try {
        const auto& sp = cfg.find_species(*orc.dfdl_species);
        if (sp.dim != 1 || sp.atom_count() != 1) {
          fail(d["species"], "oracle.dfdl needs a one-atom 1D species");
        }
      } catch (const ConfigError& e) {
        if (e.line() > 0) throw;
        fail(d["species"], e.what());
      }
      orc.dfdl_lambda = get_or<double>(d, "lambda", 0.5, "oracle.dfdl");
      orc.dfdl_delta =
          get_or<double>(d, "delta_lambda", kDefaultDeltaLambda, "oracle.dfdl");
    }
    cfg.oracle = std::move(orc);
  }
  return cfg;
}

StudyConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  auto base = path.parent_path();
  if (base.empty()) base = ".";
  return parse_config(buf.str(), base);
}

}  // namespace isopimc
