#ifndef CTOED_APP_CONFIG_HPP
#define CTOED_APP_CONFIG_HPP

#include <fstream>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "ctoed/basis.hpp"
#include "ctoed/design.hpp"
#include "ctoed/design_search.hpp"
#include "ctoed/error.hpp"
#include "ctoed/kernel.hpp"

namespace ctoed::app {

using nlohmann::json;

/// Malformed or schema-violating configuration (exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

enum class DesignMode { uniform, explicit_points, optimize };
enum class OutputFormat { json, csv, text };

struct BasisSpec {
  std::string type = "polynomial";  // polynomial | trig
  std::vector<int> powers;
  std::vector<int> frequencies;
  std::vector<double> offsets;  // per-component additive shift, empty = none
};

struct KernelSpec {
  std::string type = "brownian";  // brownian | exponential
  double lambda = 1.0;
};

struct SimulationSpec {
  std::vector<double> theta;
  int replicates = 100000;
  std::uint64_t seed = 1;
};

struct RunConfig {
  BasisSpec basis;
  double a = 1.0;
  double b = 2.0;
  KernelSpec kernel;
  int n = 5;
  DesignMode design_mode = DesignMode::uniform;
  bool design_specified = false;
  std::vector<double> points;
  Objective objective = Objective::mse_star;
  PsoConfig pso;
  OutputFormat format = OutputFormat::text;
  std::optional<SimulationSpec> simulation;

  Interval interval() const { return Interval(a, b); }
};

inline std::string to_string(DesignMode m) {
  switch (m) {
    case DesignMode::uniform: return "uniform";
    case DesignMode::explicit_points: return "explicit";
    case DesignMode::optimize: return "optimize";
  }
  return "uniform";
}

inline std::string to_string(OutputFormat f) {
  switch (f) {
    case OutputFormat::json: return "json";
    case OutputFormat::csv: return "csv";
    case OutputFormat::text: return "text";
  }
  return "text";
}

inline Objective parse_objective(const std::string& s, const std::string& where = "objective") {
  if (s == "mse-star" || s == "mse_star") return Objective::mse_star;
  if (s == "wlse" || s == "wlse-trace" || s == "wlse_trace") return Objective::wlse_trace;
  throw ConfigError(where + ": expected \"mse-star\" or \"wlse\", got \"" + s + "\"");
}

inline OutputFormat parse_format(const std::string& s, const std::string& where = "output.format") {
  if (s == "json") return OutputFormat::json;
  if (s == "csv") return OutputFormat::csv;
  if (s == "text" || s == "text-table") return OutputFormat::text;
  throw ConfigError(where + ": expected json, csv or text, got \"" + s + "\"");
}

inline DesignMode parse_design_mode(const std::string& s, const std::string& where = "design.type") {
  if (s == "uniform") return DesignMode::uniform;
  if (s == "explicit") return DesignMode::explicit_points;
  if (s == "optimize") return DesignMode::optimize;
  throw ConfigError(where + ": expected uniform, explicit or optimize, got \"" + s + "\"");
}

namespace detail {

inline void allow_keys(const json& j, const std::string& path,
                       std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const char* k : keys) known = known || key == k;
    if (!known) throw ConfigError(path + "." + key + ": unknown key");
  }
}

template <class T>
T get(const json& j, const std::string& path) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw ConfigError(path + ": wrong type (" + std::string(j.type_name()) + ")");
  }
}

template <class T>
void read(const json& obj, const char* key, const std::string& path, T& out) {
  if (obj.contains(key)) out = get<T>(obj.at(key), path + "." + key);
}

inline BasisSpec parse_basis(const json& j, const std::string& path) {
  allow_keys(j, path, {"type", "powers", "frequencies", "offsets", "offset"});
  BasisSpec s;
  read(j, "type", path, s.type);
  if (s.type == "polynomial") {
    if (!j.contains("powers")) throw ConfigError(path + ".powers: required for polynomial basis");
    read(j, "powers", path, s.powers);
  } else if (s.type == "trig") {
    if (!j.contains("frequencies")) {
      throw ConfigError(path + ".frequencies: required for trig basis");
    }
    read(j, "frequencies", path, s.frequencies);
  } else {
    throw ConfigError(path + ".type: expected polynomial or trig, got \"" + s.type + "\"");
  }
  if (j.contains("offset") && j.contains("offsets")) {
    throw ConfigError(path + ": give either offset or offsets, not both");
  }
  if (j.contains("offset")) {
    s.offsets.assign(1, get<double>(j.at("offset"), path + ".offset"));
  }
  read(j, "offsets", path, s.offsets);
  return s;
}

}  // namespace detail

/// Parses a RunConfig. A previously written JSON report is accepted too: its
/// embedded "config" block (with the design made explicit) is used.
inline RunConfig parse_config(const json& root) {
  using detail::allow_keys;
  using detail::get;
  using detail::read;
  if (root.is_object() && root.contains("report") && root.contains("config")) {
    return parse_config(root.at("config"));
  }
  allow_keys(root, "config",
             {"model", "kernel", "n", "design", "objective", "pso", "output", "simulation"});
  RunConfig c;

  if (root.contains("model")) {
    const json& m = root.at("model");
    allow_keys(m, "config.model", {"basis", "interval"});
    if (m.contains("basis")) c.basis = detail::parse_basis(m.at("basis"), "config.model.basis");
    if (m.contains("interval")) {
      const auto iv = get<std::vector<double>>(m.at("interval"), "config.model.interval");
      if (iv.size() != 2) throw ConfigError("config.model.interval: expected [a, b]");
      c.a = iv[0];
      c.b = iv[1];
    }
  } else {
    c.basis.powers = {2};
  }
  if (!(c.a < c.b)) throw ConfigError("config.model.interval: need a < b");
  if (c.a < 0.0) throw ConfigError("config.model.interval: need a >= 0");

  if (root.contains("kernel")) {
    const json& k = root.at("kernel");
    allow_keys(k, "config.kernel", {"type", "lambda"});
    read(k, "type", "config.kernel", c.kernel.type);
    read(k, "lambda", "config.kernel", c.kernel.lambda);
    if (c.kernel.type != "brownian" && c.kernel.type != "exponential") {
      throw ConfigError("config.kernel.type: expected brownian or exponential, got \"" +
                        c.kernel.type + "\"");
    }
    if (c.kernel.type == "exponential" && !(c.kernel.lambda > 0.0)) {
      throw ConfigError("config.kernel.lambda: must be positive");
    }
  }

  read(root, "n", "config", c.n);
  if (c.n < 2) throw ConfigError("config.n: must be >= 2");

  if (root.contains("design")) {
    const json& d = root.at("design");
    allow_keys(d, "config.design", {"type", "points"});
    c.design_specified = true;
    if (d.contains("type")) {
      c.design_mode =
          parse_design_mode(get<std::string>(d.at("type"), "config.design.type"), "config.design.type");
    }
    if (c.design_mode == DesignMode::explicit_points) {
      if (!d.contains("points")) throw ConfigError("config.design.points: required for explicit");
      read(d, "points", "config.design", c.points);
      if (!root.contains("n")) c.n = static_cast<int>(c.points.size());
      if (static_cast<int>(c.points.size()) != c.n) {
        throw ConfigError("config.design.points: has " + std::to_string(c.points.size()) +
                          " entries but n = " + std::to_string(c.n));
      }
    } else if (d.contains("points")) {
      throw ConfigError("config.design.points: only valid with type explicit");
    }
  }

  if (root.contains("objective")) {
    c.objective = parse_objective(get<std::string>(root.at("objective"), "config.objective"),
                                  "config.objective");
  }

  if (root.contains("pso")) {
    const json& p = root.at("pso");
    allow_keys(p, "config.pso",
               {"swarm_size", "iterations", "inertia", "cognitive", "social", "seed", "restarts"});
    read(p, "swarm_size", "config.pso", c.pso.swarm_size);
    read(p, "iterations", "config.pso", c.pso.iterations);
    read(p, "inertia", "config.pso", c.pso.inertia);
    read(p, "cognitive", "config.pso", c.pso.cognitive);
    read(p, "social", "config.pso", c.pso.social);
    read(p, "seed", "config.pso", c.pso.seed);
    read(p, "restarts", "config.pso", c.pso.restarts);
    try {
      c.pso.validate();
    } catch (const InvalidInput& e) {
      throw ConfigError(std::string("config.pso: ") + e.what());
    }
  }

  if (root.contains("output")) {
    const json& o = root.at("output");
    allow_keys(o, "config.output", {"format"});
    if (o.contains("format")) {
      c.format = parse_format(get<std::string>(o.at("format"), "config.output.format"));
    }
  }

  if (root.contains("simulation")) {
    const json& s = root.at("simulation");
    allow_keys(s, "config.simulation", {"theta", "replicates", "seed"});
    SimulationSpec sim;
    read(s, "theta", "config.simulation", sim.theta);
    read(s, "replicates", "config.simulation", sim.replicates);
    read(s, "seed", "config.simulation", sim.seed);
    if (sim.replicates < 1) throw ConfigError("config.simulation.replicates: must be >= 1");
    c.simulation = sim;
  }
  return c;
}

inline json parse_json_text(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // Translate the byte offset into line and column.
    std::size_t line = 1;
    std::size_t col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError(source + ":" + std::to_string(line) + ":" + std::to_string(col) +
                      ": malformed JSON (" + e.what() + ")");
  }
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(parse_json_text(ss.str(), path));
}

inline json to_json(const RunConfig& c) {
  json basis;
  basis["type"] = c.basis.type;
  if (c.basis.type == "polynomial") {
    basis["powers"] = c.basis.powers;
  } else {
    basis["frequencies"] = c.basis.frequencies;
  }
  if (!c.basis.offsets.empty()) basis["offsets"] = c.basis.offsets;
  json j;
  j["model"] = {{"basis", basis}, {"interval", {c.a, c.b}}};
  j["kernel"] = {{"type", c.kernel.type}};
  if (c.kernel.type == "exponential") j["kernel"]["lambda"] = c.kernel.lambda;
  j["n"] = c.n;
  j["design"] = {{"type", to_string(c.design_mode)}};
  if (c.design_mode == DesignMode::explicit_points) j["design"]["points"] = c.points;
  j["objective"] = to_string(c.objective);
  j["pso"] = {{"swarm_size", c.pso.swarm_size}, {"iterations", c.pso.iterations},
              {"inertia", c.pso.inertia},       {"cognitive", c.pso.cognitive},
              {"social", c.pso.social},         {"seed", c.pso.seed},
              {"restarts", c.pso.restarts}};
  j["output"] = {{"format", to_string(c.format)}};
  if (c.simulation) {
    j["simulation"] = {{"theta", c.simulation->theta},
                       {"replicates", c.simulation->replicates},
                       {"seed", c.simulation->seed}};
  }
  return j;
}

/// Library objects described by a config. Library-level validation errors
/// surface as ConfigError naming the offending block.
struct Model {
  RegressionBasis basis;
  TriangularKernel kernel;
  Interval interval;
};

inline Model build_model(const RunConfig& c) {
  try {
    RegressionBasis basis = c.basis.type == "polynomial" ? polynomial_basis(c.basis.powers)
                                                         : trig_basis(c.basis.frequencies);
    if (!c.basis.offsets.empty()) {
      basis = c.basis.offsets.size() == 1 ? affine_shift(basis, c.basis.offsets[0])
                                          : affine_shift(basis, c.basis.offsets);
    }
    TriangularKernel kernel =
        c.kernel.type == "brownian" ? brownian() : exponential(c.kernel.lambda);
    return Model{std::move(basis), std::move(kernel), c.interval()};
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidBasis& e) {
    throw ConfigError(std::string("config.model.basis: ") + e.what());
  } catch (const InvalidKernel& e) {
    throw ConfigError(std::string("config.kernel: ") + e.what());
  }
}

/// The fixed design named by the config (uniform or explicit).
inline Design fixed_design(const RunConfig& c) {
  if (c.design_mode == DesignMode::explicit_points) {
    try {
      Design d(c.points);
      require_spans(d, c.interval());
      return d;
    } catch (const InvalidDesign& e) {
      throw ConfigError(std::string("config.design.points: ") + e.what());
    }
  }
  return equidistant_design(c.n, c.interval());
}

}  // namespace ctoed::app

#endif  // CTOED_APP_CONFIG_HPP
