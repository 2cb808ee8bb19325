#ifndef CTOED_APP_COMMANDS_HPP
#define CTOED_APP_COMMANDS_HPP

#include <sstream>
#include <string>
#include <vector>

#include "ctoed/app/config.hpp"
#include "ctoed/app/report.hpp"
#include "ctoed/continuous_blue.hpp"
#include "ctoed/design_search.hpp"
#include "ctoed/discrete_estimator.hpp"
#include "ctoed/finite_blue.hpp"
#include "ctoed/montecarlo.hpp"

namespace ctoed::app {

/// Var of the continuous-time BLUE for a > 0.
inline Matrix continuous_variance(const Model& m) {
  if (m.kernel.kind() == KernelKind::brownian) return c_matrix(m.basis, m.interval).c_inv;
  return blue_general_kernel(m.basis, m.kernel, m.interval).c_inv;
}

/// Resolves the design of a config, running the search when requested.
struct ResolvedDesign {
  Design design;
  std::optional<SearchResult> search;
};

inline ResolvedDesign resolve_design(const RunConfig& c, const Model& m) {
  if (c.design_mode != DesignMode::optimize) return {fixed_design(c), std::nullopt};
  SearchResult r = optimize_design(c.objective, m.basis, m.kernel, c.n, m.interval, c.pso);
  Design d = r.design;
  return {std::move(d), std::move(r)};
}

/// The config as it should be re-ingested: the design actually used made
/// explicit.
inline json explicit_config(RunConfig c, const Design& d) {
  c.design_mode = DesignMode::explicit_points;
  c.points = d.values();
  c.n = static_cast<int>(d.size());
  return to_json(c);
}

inline std::string model_line(const RunConfig& c, const Model& m) {
  std::ostringstream os;
  os << "model   f = " << m.basis.label() << " on [" << c.a << ", " << c.b << "], kernel "
     << m.kernel.label() << "\n";
  return os.str();
}

inline Report cmd_blue(const RunConfig& c) {
  const Model m = build_model(c);
  Report r;
  r.command = "blue";
  r.config = to_json(c);
  std::ostringstream text;
  text << model_line(c, m);
  r.csv_header = {"quantity", "i", "j", "value"};
  auto add_matrix = [&](const std::string& name, const Matrix& x) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      for (Eigen::Index j = 0; j < x.cols(); ++j) {
        r.csv_rows.push_back({name, std::to_string(i), std::to_string(j), fmt(x(i, j), 17)});
      }
    }
  };

  const bool degenerate = c.a == 0.0 && m.kernel.u(c.a) == 0.0;
  if (!degenerate) {
    const ContinuousBlue blue = m.kernel.kind() == KernelKind::brownian
                                    ? c_matrix(m.basis, m.interval)
                                    : blue_general_kernel(m.basis, m.kernel, m.interval);
    r.results["degenerate_kind"] = to_string(blue.degenerate_kind);
    r.results["C"] = to_json(*blue.c);
    r.results["C_inv"] = to_json(blue.c_inv);
    r.results["trace_C_inv"] = blue.c_inv.trace();
    text << "case    regular (a > 0)\nC =\n" << matrix_text(*blue.c) << "C^-1 =\n"
         << matrix_text(blue.c_inv) << "tr C^-1 = " << fmt(blue.c_inv.trace(), 10) << "\n";
    add_matrix("C", *blue.c);
    add_matrix("C_inv", blue.c_inv);
    r.text = text.str();
    return r;
  }

  if (m.kernel.kind() != KernelKind::brownian) {
    throw DomainError("degenerate start (u(a) = 0) is supported for the Brownian kernel only");
  }
  const GramRank rank = gram_rank(m.basis, m.interval);
  if (rank.has_intercept) {
    const InterceptBlue ib = degenerate_intercept(m.basis, m.interval);
    const Matrix cov = ib.covariance();
    r.results["degenerate_kind"] = to_string(DegenerateKind::intercept);
    r.results["intercept_index"] = ib.intercept_index;
    r.results["var_tilde"] = to_json(ib.var_tilde);
    r.results["var_theta1"] = ib.var_theta1;
    r.results["cov_theta1_tilde"] = to_json(ib.cov_row);
    r.results["C_inv"] = to_json(cov);
    r.results["trace_C_inv"] = cov.trace();
    text << "case    a = 0 with intercept (component " << ib.intercept_index
         << " constant); intercept read from Y_0\n"
         << "Var(theta_tilde) = M0~^-1 =\n" << matrix_text(ib.var_tilde)
         << "Var(theta_1) = " << fmt(ib.var_theta1, 10) << "\n"
         << "Cov(theta_1, theta_tilde) = " << vector_text(ib.cov_row) << "\n"
         << "full covariance =\n" << matrix_text(cov);
    add_matrix("C_inv", cov);
  } else {
    const Vector f0 = m.basis.value(0.0);
    const bool f0_zero = f0.cwiseAbs().maxCoeff() == 0.0;
    const ContinuousBlue blue =
        f0_zero ? degenerate_f0_zero(m.basis, m.interval) : degenerate_no_intercept(m.basis, m.interval);
    r.results["degenerate_kind"] = to_string(blue.degenerate_kind);
    r.results["C_inv"] = to_json(blue.c_inv);
    r.results["trace_C_inv"] = blue.c_inv.trace();
    text << "case    a = 0, " << (f0_zero ? "f(0) = 0: Var = M0^-1" : "f(0) != 0: limit of C_a^-1")
         << "\nC^-1 =\n" << matrix_text(blue.c_inv);
    if (blue.c) {
      r.results["C"] = to_json(*blue.c);
      add_matrix("C", *blue.c);
    }
    if (blue.y0_coefficient) {
      r.results["y0_coefficient"] = to_json(*blue.y0_coefficient);
      text << "coefficient of Y_0 = " << vector_text(*blue.y0_coefficient) << "\n";
    }
    add_matrix("C_inv", blue.c_inv);
  }
  r.text = text.str();
  return r;
}

inline void add_design_rows(Report& r, const Design& d, const Matrix& w) {
  r.csv_header = {"index", "t"};
  for (Eigen::Index k = 0; k < w.rows(); ++k) r.csv_header.push_back("w" + std::to_string(k + 1));
  for (std::size_t i = 0; i < d.size(); ++i) {
    std::vector<std::string> row{std::to_string(i + 1), fmt(d[i], 17)};
    for (Eigen::Index k = 0; k < w.rows(); ++k) {
      row.push_back(fmt(w(k, static_cast<Eigen::Index>(i)), 17));
    }
    r.csv_rows.push_back(std::move(row));
  }
}

inline std::string design_weights_text(const Design& d, const Matrix& w) {
  std::vector<std::string> header{"i", "t"};
  for (Eigen::Index k = 0; k < w.rows(); ++k) header.push_back("w" + std::to_string(k + 1));
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < d.size(); ++i) {
    std::vector<std::string> row{std::to_string(i + 1), fixed(d[i], 6)};
    for (Eigen::Index k = 0; k < w.rows(); ++k) {
      row.push_back(fmt(w(k, static_cast<Eigen::Index>(i)), 8));
    }
    rows.push_back(std::move(row));
  }
  return text_table(header, rows);
}

/// Efficiencies of θ̂_BLUE,n (WLSE) and θ̂ₙ* at one design.
struct DesignEvaluation {
  Matrix c_inv;
  Matrix wlse_variance;
  Matrix star_variance;
  double wlse_efficiency = 0.0;
  double star_efficiency = 0.0;
  double wlse_gap_min_eig = 0.0;
  double star_gap_min_eig = 0.0;
};

inline DesignEvaluation evaluate_design(const Model& m, const Design& d) {
  DesignEvaluation e;
  e.c_inv = continuous_variance(m);
  e.wlse_variance = wlse_variance(m.basis, m.kernel, d).variance;
  e.star_variance = optimal_estimator(m.basis, m.kernel, d, m.interval).variance();
  e.wlse_efficiency = efficiency_of(e.wlse_variance, e.c_inv);
  e.star_efficiency = efficiency_of(e.star_variance, e.c_inv);
  e.wlse_gap_min_eig = min_eigenvalue(e.wlse_variance - e.c_inv);
  e.star_gap_min_eig = min_eigenvalue(e.star_variance - e.c_inv);
  return e;
}

inline json to_json(const DesignEvaluation& e) {
  return {{"C_inv", to_json(e.c_inv)},
          {"wlse_variance", to_json(e.wlse_variance)},
          {"star_variance", to_json(e.star_variance)},
          {"efficiency_wlse", e.wlse_efficiency},
          {"efficiency_star", e.star_efficiency},
          {"lower_bound_min_eig_wlse", e.wlse_gap_min_eig},
          {"lower_bound_min_eig_star", e.star_gap_min_eig}};
}

inline std::string evaluation_text(const DesignEvaluation& e) {
  std::ostringstream os;
  os << "efficiency  BLUE_n (WLSE) = " << fixed(100.0 * e.wlse_efficiency, 3)
     << "%   theta*_n = " << fixed(100.0 * e.star_efficiency, 3) << "%\n";
  return os.str();
}

inline Report cmd_weights(const RunConfig& c) {
  const Model m = build_model(c);
  const ResolvedDesign rd = resolve_design(c, m);
  const KernelEstimator est = optimal_estimator(m.basis, m.kernel, rd.design, m.interval);
  const Matrix w = est.observation_weights();
  Report r;
  r.command = "weights";
  r.config = explicit_config(c, rd.design);
  json inc = json::array();
  for (const Vector& mu : est.transformed.weights) inc.push_back(to_json(mu));
  r.results = {{"design", rd.design.values()},
               {"observation_weights", to_json(w)},
               {"increment_weights", inc},
               {"pseudo_inverse_used", est.transformed.pseudo_inverse_used},
               {"unbiased", check_unbiased(est.transformed, est.model.basis, est.model.interval)},
               {"variance", to_json(est.variance())},
               {"efficiency", est.efficiency()}};
  add_design_rows(r, rd.design, w);
  std::ostringstream text;
  text << model_line(c, m) << "theta*_n = W Y with observation weights:\n"
       << design_weights_text(rd.design, w) << "efficiency = " << fixed(100.0 * est.efficiency(), 4)
       << "%" << (est.transformed.pseudo_inverse_used ? "  (Moore-Penrose inverse used)" : "")
       << "\n";
  r.text = text.str();
  return r;
}

inline Report cmd_efficiency(const RunConfig& c) {
  const Model m = build_model(c);
  const ResolvedDesign rd = resolve_design(c, m);
  const DesignEvaluation e = evaluate_design(m, rd.design);
  Report r;
  r.command = "efficiency";
  r.config = explicit_config(c, rd.design);
  r.results = to_json(e);
  r.results["design"] = rd.design.values();
  r.csv_header = {"estimator", "efficiency", "trace_variance", "lower_bound_min_eig"};
  r.csv_rows = {{"blue_n", fmt(e.wlse_efficiency, 17), fmt(e.wlse_variance.trace(), 17),
                 fmt(e.wlse_gap_min_eig, 17)},
                {"star", fmt(e.star_efficiency, 17), fmt(e.star_variance.trace(), 17),
                 fmt(e.star_gap_min_eig, 17)}};
  std::ostringstream text;
  text << model_line(c, m) << "design  " << vector_text(Eigen::Map<const Vector>(
                                               rd.design.values().data(),
                                               static_cast<Eigen::Index>(rd.design.size())))
       << "\n" << evaluation_text(e) << "tr C^-1 = " << fmt(e.c_inv.trace(), 10)
       << "   tr Var BLUE_n = " << fmt(e.wlse_variance.trace(), 10)
       << "   tr Var theta*_n = " << fmt(e.star_variance.trace(), 10) << "\n";
  r.text = text.str();
  return r;
}

inline Report cmd_design(const RunConfig& c) {
  const Model m = build_model(c);
  const ResolvedDesign rd = resolve_design(c, m);
  const DesignEvaluation e = evaluate_design(m, rd.design);
  const KernelEstimator est = optimal_estimator(m.basis, m.kernel, rd.design, m.interval);
  const Matrix w = c.objective == Objective::mse_star
                       ? est.observation_weights()
                       : wlse_weights(m.basis, m.kernel, rd.design);
  Report r;
  r.command = "design";
  r.config = explicit_config(c, rd.design);
  r.results = to_json(e);
  r.results["design"] = rd.design.values();
  r.results["objective"] = to_string(c.objective);
  r.results["weights"] = to_json(w);
  r.results["seed"] = c.pso.seed;
  r.results["searched"] = rd.search.has_value();
  std::ostringstream text;
  text << model_line(c, m);
  if (rd.search) {
    const SearchResult& s = *rd.search;
    r.results["objective_value"] = s.objective_value;
    r.results["converged"] = s.converged;
    r.results["evaluations"] = s.evaluations;
    r.results["failed_evaluations"] = s.failed_evaluations;
    text << "optimal design for " << to_string(c.objective) << " (seed " << c.pso.seed << ", "
         << c.pso.restarts << " restarts): objective = " << fmt(s.objective_value, 10)
         << (s.converged ? "" : "  [not converged]") << "\n";
  } else {
    DesignObjective obj(c.objective, m.basis, m.kernel, m.interval);
    r.results["objective_value"] = obj(rd.design);
    text << "fixed " << to_string(c.design_mode) << " design, no search: objective = "
         << fmt(obj(rd.design), 10) << "\n";
  }
  text << design_weights_text(rd.design, w) << evaluation_text(e);
  add_design_rows(r, rd.design, w);
  r.text = text.str();
  return r;
}

inline Report cmd_simulate(const RunConfig& c) {
  const Model m = build_model(c);
  const ResolvedDesign rd = resolve_design(c, m);
  SimulationSpec spec = c.simulation.value_or(SimulationSpec{});
  if (spec.theta.empty()) spec.theta.assign(static_cast<std::size_t>(m.basis.size()), 1.0);
  if (static_cast<Eigen::Index>(spec.theta.size()) != m.basis.size()) {
    throw ConfigError("config.simulation.theta: has " + std::to_string(spec.theta.size()) +
                      " entries, basis has " + std::to_string(m.basis.size()));
  }
  const SimulationPlan plan{m.basis, m.kernel, rd.design,
                            Eigen::Map<const Vector>(spec.theta.data(),
                                                     static_cast<Eigen::Index>(spec.theta.size())),
                            spec.replicates, spec.seed};
  const KernelEstimator star = optimal_estimator(m.basis, m.kernel, rd.design, m.interval);
  const Matrix wl = wlse_weights(m.basis, m.kernel, rd.design);
  struct Case {
    std::string name;
    Matrix weights;
    Matrix theory;
  };
  const std::vector<Case> cases{
      {"star", star.observation_weights(), star.variance()},
      {"blue_n", wl, wlse_variance(m.basis, m.kernel, rd.design).variance}};

  Report r;
  r.command = "simulate";
  RunConfig used = c;
  used.simulation = spec;
  r.config = explicit_config(used, rd.design);
  r.csv_header = {"estimator", "quantity", "i", "j", "empirical", "se", "theory", "z", "pass"};
  std::ostringstream text;
  text << model_line(c, m) << spec.replicates << " replicates, seed " << spec.seed
       << ", batch means over " << kDefaultBatches << " batches\n";
  for (const Case& k : cases) {
    const MseReport mr = empirical_mse(k.weights, plan);
    const Matrix z = mr.z_scores(k.theory);
    const bool cov_ok = mr.mse_within(k.theory, 3.0);
    const bool bias_ok = mr.bias_within(4.0);
    r.ok = r.ok && cov_ok && bias_ok;
    r.results[k.name] = {{"bias", to_json(mr.bias)},     {"bias_se", to_json(mr.bias_se)},
                         {"mse", to_json(mr.mse)},       {"mse_se", to_json(mr.mse_se)},
                         {"theory", to_json(k.theory)},  {"z", to_json(z)},
                         {"covariance_within_3se", cov_ok}, {"bias_within_4se", bias_ok}};
    for (Eigen::Index i = 0; i < mr.bias.size(); ++i) {
      r.csv_rows.push_back({k.name, "bias", std::to_string(i), "", fmt(mr.bias(i), 17),
                            fmt(mr.bias_se(i), 17), "0", fmt(mr.bias(i) / mr.bias_se(i), 6),
                            std::abs(mr.bias(i)) <= 4.0 * mr.bias_se(i) ? "1" : "0"});
    }
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      for (Eigen::Index j = 0; j < z.cols(); ++j) {
        r.csv_rows.push_back({k.name, "mse", std::to_string(i), std::to_string(j),
                              fmt(mr.mse(i, j), 17), fmt(mr.mse_se(i, j), 17),
                              fmt(k.theory(i, j), 17), fmt(z(i, j), 6),
                              std::abs(z(i, j)) <= 3.0 ? "1" : "0"});
      }
    }
    text << (k.name == "star" ? "theta*_n" : "BLUE_n (WLSE)") << ": covariance within 3 SE: "
         << (cov_ok ? "yes" : "NO") << ", bias within 4 SE: " << (bias_ok ? "yes" : "NO")
         << ", max |z| = " << fixed(z.cwiseAbs().maxCoeff(), 2) << "\n";
  }
  r.results["pass"] = r.ok;
  r.text = text.str();
  return r;
}

}  // namespace ctoed::app

#endif  // CTOED_APP_COMMANDS_HPP
