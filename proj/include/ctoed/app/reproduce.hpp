#ifndef CTOED_APP_REPRODUCE_HPP
#define CTOED_APP_REPRODUCE_HPP

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ctoed/app/commands.hpp"
#include "ctoed/app/config.hpp"
#include "ctoed/app/report.hpp"

#ifndef CTOED_DATA_DIR
#define CTOED_DATA_DIR "data"
#endif

namespace ctoed::app {

inline std::string default_tables_path() { return std::string(CTOED_DATA_DIR) + "/published_tables.json"; }

inline json load_published_tables(const std::string& path = default_tables_path()) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open published tables");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_json_text(ss.str(), path);
}

inline RegressionBasis basis_from_json(const json& j) {
  RunConfig c;
  c.basis = detail::parse_basis(j, "basis");
  return build_model(c).basis;
}

inline TriangularKernel kernel_by_name(const std::string& name, double lambda) {
  if (name == "brownian") return brownian();
  if (name == "exponential") return exponential(lambda);
  throw ConfigError("unknown kernel \"" + name + "\" in published tables");
}

/// One compared quantity.
struct DiffEntry {
  std::string row;
  std::string column;
  double computed = 0.0;
  double published = 0.0;
  double tolerance = 0.0;
  bool pass() const { return std::abs(computed - published) <= tolerance; }
};

inline json to_json(const DiffEntry& d) {
  return {{"row", d.row},           {"column", d.column},
          {"computed", d.computed}, {"published", d.published},
          {"diff", d.computed - d.published},
          {"tolerance", d.tolerance}, {"pass", d.pass()}};
}

inline void finish(Report& r, const std::vector<DiffEntry>& diffs) {
  json arr = json::array();
  r.csv_header = {"row", "column", "computed", "published", "diff", "tolerance", "pass"};
  for (const auto& d : diffs) {
    arr.push_back(to_json(d));
    r.ok = r.ok && d.pass();
    r.csv_rows.push_back({d.row, d.column, fmt(d.computed, 12), fmt(d.published, 12),
                          fmt(d.computed - d.published, 6), fmt(d.tolerance, 6),
                          d.pass() ? "1" : "0"});
  }
  r.results["diff"] = arr;
  r.results["pass"] = r.ok;
  std::size_t failed = 0;
  for (const auto& d : diffs) failed += d.pass() ? 0 : 1;
  r.text += "\n" + std::to_string(diffs.size() - failed) + "/" + std::to_string(diffs.size()) +
            " compared values within tolerance\n";
}

inline Report reproduce_table1(const json& tables) {
  const json& t = tables.at("table1");
  const Interval iv(t.at("setting").at("interval")[0].get<double>(),
                    t.at("setting").at("interval")[1].get<double>());
  const int n = t.at("setting").at("n").get<int>();
  const double tol = t.at("tolerance").get<double>();
  const TriangularKernel k = brownian();
  const Design d = equidistant_design(n, iv);

  Report r;
  r.command = "reproduce table1";
  std::vector<DiffEntry> diffs;
  std::vector<std::string> header{"f(t)"};
  std::vector<std::string> blue_row{"BLUE_n uni"}, star_row{"theta*_n uni"},
      dpz_row{"DPZ (published)"};
  json rows = json::array();
  for (const json& row : t.at("rows")) {
    const std::string name = row.at("model").get<std::string>();
    const RegressionBasis f = basis_from_json(row.at("basis"));
    const Matrix c_inv = c_matrix(f, iv).c_inv;
    const double eff_blue = efficiency_of(wlse_variance(f, k, d).variance, c_inv);
    const double eff_star = efficiency_multi(optimal_weights_multi(f, d, iv), f, iv);
    header.push_back(name);
    blue_row.push_back(fixed(100.0 * eff_blue, 3));
    star_row.push_back(fixed(100.0 * eff_star, 3));
    dpz_row.push_back(fixed(row.at("dpz").get<double>(), 3));
    diffs.push_back({name, "blue_n", 100.0 * eff_blue, row.at("blue_n").get<double>(), tol});
    diffs.push_back({name, "star", 100.0 * eff_star, row.at("star").get<double>(), tol});
    rows.push_back({{"model", name},
                    {"blue_n", eff_blue},
                    {"star", eff_star},
                    {"dpz", row.at("dpz")},
                    {"dpz_status", "published, not computed"}});

    const json& hp = t.at("high_precision");
    if (hp.at("model").get<std::string>() == name) {
      const double htol = hp.at("tolerance").get<double>();
      diffs.push_back({name, "blue_n (fraction)", eff_blue, hp.at("blue_n").get<double>(), htol});
      diffs.push_back({name, "star (fraction)", eff_star, hp.at("star").get<double>(), htol});
    }
  }
  r.results["rows"] = rows;
  r.text = "Efficiencies (%) on the uniform " + std::to_string(n) + "-point design, Brownian errors\n" +
           text_table(header, {blue_row, star_row, dpz_row});
  finish(r, diffs);
  return r;
}

struct TableDesigns {
  std::string model;
  std::string kernel;
  Design blue_n;
  Design star;
};

/// Optimal designs for both estimators for every (model, kernel) pair of
/// the stored tables.
inline std::vector<TableDesigns> compute_table_designs(const json& tables, const PsoConfig& pso) {
  const json& s = tables.at("table2").at("setting");
  const Interval iv(s.at("interval")[0].get<double>(), s.at("interval")[1].get<double>());
  const int n = s.at("n").get<int>();
  const double lambda = s.at("lambda").get<double>();
  std::vector<TableDesigns> out;
  for (const std::string model : {"4.1", "4.2"}) {
    const RegressionBasis f = basis_from_json(tables.at("models").at(model));
    for (const std::string kname : {"brownian", "exponential"}) {
      const TriangularKernel k = kernel_by_name(kname, lambda);
      out.push_back({model, kname,
                     optimize_design(Objective::wlse_trace, f, k, n, iv, pso).design,
                     optimize_design(Objective::mse_star, f, k, n, iv, pso).design});
    }
  }
  return out;
}

inline std::string design_string(const Design& d) {
  std::string s = "[";
  for (std::size_t i = 0; i < d.size(); ++i) s += (i ? ", " : "") + fixed(d[i], 3);
  return s + "]";
}

inline Report reproduce_table2(const json& tables, const PsoConfig& pso) {
  const json& t = tables.at("table2");
  const double tol = t.at("tolerance").get<double>();
  const auto designs = compute_table_designs(tables, pso);
  Report r;
  r.command = "reproduce table2";
  std::vector<DiffEntry> diffs;
  std::vector<std::vector<std::string>> rows;
  json out = json::array();
  for (const auto& td : designs) {
    rows.push_back({td.model, td.kernel, design_string(td.blue_n), design_string(td.star)});
    out.push_back({{"model", td.model},
                   {"kernel", td.kernel},
                   {"blue_n", td.blue_n.values()},
                   {"star", td.star.values()}});
    for (const json& row : t.at("rows")) {
      if (row.at("model") != td.model || row.at("kernel") != td.kernel) continue;
      const std::string est = row.at("estimator").get<std::string>();
      const Design& d = est == "star" ? td.star : td.blue_n;
      const auto published = row.at("design").get<std::vector<double>>();
      for (std::size_t i = 0; i < published.size() && i < d.size(); ++i) {
        diffs.push_back({"(" + td.model + ") " + td.kernel + " t" + std::to_string(i + 1), est,
                         d[i], published[i], tol});
      }
    }
  }
  r.results["designs"] = out;
  r.results["seed"] = pso.seed;
  r.text = "Optimal designs on [1, 2], n = 5 (seed " + std::to_string(pso.seed) + ")\n" +
           text_table({"model", "kernel", "BLUE_n", "theta*_n"}, rows);
  finish(r, diffs);
  return r;
}

inline Report reproduce_table3(const json& tables, const PsoConfig& pso) {
  const json& t = tables.at("table3");
  const double tol = t.at("tolerance").get<double>();
  const json& s = t.at("setting");
  const Interval iv(s.at("interval")[0].get<double>(), s.at("interval")[1].get<double>());
  const int n = s.at("n").get<int>();
  const double lambda = s.at("lambda").get<double>();
  const auto designs = compute_table_designs(tables, pso);

  Report r;
  r.command = "reproduce table3";
  std::vector<DiffEntry> diffs;
  std::vector<std::vector<std::string>> rows;
  json out = json::array();
  for (const std::string block : {"optimal", "uniform"}) {
    for (const auto& td : designs) {
      const Model m{basis_from_json(tables.at("models").at(td.model)),
                    kernel_by_name(td.kernel, lambda), iv};
      const Design uni = equidistant_design(n, iv);
      const Design& d_blue = block == "optimal" ? td.blue_n : uni;
      const Design& d_star = block == "optimal" ? td.star : uni;
      const double eff_blue = evaluate_design(m, d_blue).wlse_efficiency;
      const double eff_star = evaluate_design(m, d_star).star_efficiency;
      double dpz = std::nan("");
      for (const json& row : t.at("rows")) {
        if (row.at("design") != block || row.at("model") != td.model ||
            row.at("kernel") != td.kernel) {
          continue;
        }
        const std::string label = block + " (" + td.model + ") " + td.kernel;
        diffs.push_back({label, "blue_n", 100.0 * eff_blue, row.at("blue_n").get<double>(), tol});
        diffs.push_back({label, "star", 100.0 * eff_star, row.at("star").get<double>(), tol});
        dpz = row.at("dpz").get<double>();
      }
      rows.push_back({block, td.model, td.kernel, fixed(100.0 * eff_blue, 2),
                      fixed(100.0 * eff_star, 2), fixed(dpz, 2)});
      out.push_back({{"design", block},
                     {"model", td.model},
                     {"kernel", td.kernel},
                     {"blue_n", eff_blue},
                     {"star", eff_star},
                     {"dpz", dpz},
                     {"dpz_status", "published, not computed"}});
    }
  }
  r.results["rows"] = out;
  r.results["seed"] = pso.seed;
  r.text = "Efficiencies (%) for n = 5 on [1, 2]; DPZ column echoed from published values\n" +
           text_table({"design", "model", "kernel", "BLUE_n", "theta*_n", "DPZ (published)"}, rows);
  finish(r, diffs);
  return r;
}

inline Report cmd_reproduce(const std::string& which, const json& tables, const PsoConfig& pso) {
  if (which == "table1") return reproduce_table1(tables);
  if (which == "table2") return reproduce_table2(tables, pso);
  if (which == "table3") return reproduce_table3(tables, pso);
  throw ConfigError("reproduce: expected table1, table2 or table3, got \"" + which + "\"");
}

}  // namespace ctoed::app

#endif  // CTOED_APP_REPRODUCE_HPP
