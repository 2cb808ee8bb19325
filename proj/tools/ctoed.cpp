// ctoed: command-line front end for BLUE computation, optimal design search,
// efficiency evaluation, Monte Carlo checks and table reproduction.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "ctoed/app/commands.hpp"
#include "ctoed/app/config.hpp"
#include "ctoed/app/report.hpp"
#include "ctoed/app/reproduce.hpp"

namespace {

using namespace ctoed;
using namespace ctoed::app;

constexpr int kExitOk = 0;
constexpr int kExitNumeric = 1;
constexpr int kExitConfig = 2;

struct Overrides {
  std::string config_path;
  std::string objective;
  std::optional<int> n;
  std::optional<std::uint64_t> seed;
  std::optional<int> swarm;
  std::optional<int> iters;
  std::optional<int> restarts;
  std::string design;
  std::string format;
  std::string out;
  std::string data = default_tables_path();
};

void add_common(CLI::App* sub, Overrides& o) {
  sub->add_option("--config", o.config_path, "JSON run configuration (or a previous JSON report)");
  sub->add_option("--objective", o.objective, "design criterion: mse-star | wlse");
  sub->add_option("--n", o.n, "number of design points");
  sub->add_option("--seed", o.seed, "PSO seed (and simulation seed for simulate)");
  sub->add_option("--swarm", o.swarm, "PSO swarm size");
  sub->add_option("--iters", o.iters, "PSO iterations");
  sub->add_option("--restarts", o.restarts, "PSO restarts");
  sub->add_option("--design", o.design,
                  "uniform | optimize | comma-separated explicit points");
  sub->add_option("--format", o.format, "json | csv | text");
  sub->add_option("--out", o.out, "write output to this path instead of stdout");
}

std::vector<double> parse_points(const std::string& s) {
  std::vector<double> pts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      pts.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("--design: cannot parse \"" + item + "\" as a number");
    }
  }
  return pts;
}

RunConfig build_config(const Overrides& o, bool search_by_default) {
  RunConfig c = o.config_path.empty() ? parse_config(json::object()) : load_config(o.config_path);
  if (!o.objective.empty()) c.objective = parse_objective(o.objective, "--objective");
  if (o.n) {
    if (*o.n < 2) throw ConfigError("--n: must be >= 2");
    c.n = *o.n;
  }
  if (o.seed) {
    c.pso.seed = *o.seed;
    if (c.simulation) c.simulation->seed = *o.seed;
  }
  if (o.swarm) c.pso.swarm_size = *o.swarm;
  if (o.iters) c.pso.iterations = *o.iters;
  if (o.restarts) c.pso.restarts = *o.restarts;
  try {
    c.pso.validate();
  } catch (const InvalidInput& e) {
    throw ConfigError(std::string("pso: ") + e.what());
  }
  if (!o.design.empty()) {
    c.design_specified = true;
    if (o.design == "uniform" || o.design == "optimize") {
      c.design_mode = parse_design_mode(o.design, "--design");
      c.points.clear();
    } else {
      c.design_mode = DesignMode::explicit_points;
      c.points = parse_points(o.design);
      c.n = static_cast<int>(c.points.size());
    }
  } else if (search_by_default && !c.design_specified) {
    c.design_mode = DesignMode::optimize;
  }
  if (c.design_mode == DesignMode::explicit_points && static_cast<int>(c.points.size()) != c.n) {
    throw ConfigError("design has " + std::to_string(c.points.size()) + " points but n = " +
                      std::to_string(c.n));
  }
  if (!o.format.empty()) c.format = parse_format(o.format, "--format");
  return c;
}

void emit(const Report& r, OutputFormat format, const std::string& out) {
  const std::string body = render(r, format);
  if (out.empty()) {
    std::cout << body;
    return;
  }
  std::ofstream f(out);
  if (!f) throw ConfigError(out + ": cannot open output file");
  f << body;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal designs and linear unbiased estimators for regression with "
               "triangular-kernel correlated errors"};
  app.require_subcommand(1);
  Overrides o;

  auto* blue = app.add_subcommand("blue", "continuous-time BLUE: C, C^-1, degenerate cases");
  auto* weights = app.add_subcommand("weights", "optimal weights of theta*_n for a design");
  auto* design = app.add_subcommand("design", "optimal design search (PSO)");
  auto* efficiency = app.add_subcommand("efficiency", "efficiencies of BLUE_n and theta*_n");
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo check of variances and bias");
  auto* reproduce = app.add_subcommand("reproduce", "regenerate a published table");
  for (auto* sub : {blue, weights, design, efficiency, simulate, reproduce}) add_common(sub, o);
  std::string which;
  reproduce->add_option("table", which, "table1 | table2 | table3")->required();
  reproduce->add_option("--data", o.data, "published table values (JSON)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (reproduce->parsed()) {
      RunConfig c = build_config(o, false);
      const json tables = load_published_tables(o.data);
      const Report r = cmd_reproduce(which, tables, c.pso);
      emit(r, c.format, o.out);
      return kExitOk;
    }
    const RunConfig c = build_config(o, design->parsed());
    Report r;
    if (blue->parsed()) r = cmd_blue(c);
    if (weights->parsed()) r = cmd_weights(c);
    if (design->parsed()) r = cmd_design(c);
    if (efficiency->parsed()) r = cmd_efficiency(c);
    if (simulate->parsed()) r = cmd_simulate(c);
    emit(r, c.format, o.out);
    return kExitOk;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
}
