#ifndef CTOED_APP_REPORT_HPP
#define CTOED_APP_REPORT_HPP

#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "ctoed/app/config.hpp"
#include "ctoed/linalg.hpp"

namespace ctoed::app {

/// Output of one subcommand. `results` is the machine contract; `text` is
/// the human-readable rendering and `csv` the tabular one.
struct Report {
  std::string command;
  json config;
  json results;
  std::string text;
  std::vector<std::string> csv_header;
  std::vector<std::vector<std::string>> csv_rows;
  bool ok = true;
};

inline json to_json(const Vector& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

inline json to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j) row[static_cast<std::size_t>(j)] = m(i, j);
    rows.push_back(row);
  }
  return rows;
}

inline std::string fmt(double x, int precision = 6) {
  std::ostringstream os;
  os << std::setprecision(precision) << x;
  return os.str();
}

inline std::string fixed(double x, int decimals) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(decimals) << x;
  return os.str();
}

inline std::string matrix_text(const Matrix& m, int indent = 2) {
  std::ostringstream os;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    os << std::string(static_cast<std::size_t>(indent), ' ');
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      os << std::setw(14) << std::setprecision(8) << m(i, j);
    }
    os << '\n';
  }
  return os.str();
}

inline std::string vector_text(const Vector& v) {
  std::ostringstream os;
  os << '[';
  for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? ", " : "") << std::setprecision(8) << v(i);
  os << ']';
  return os.str();
}

/// Fixed-width text table.
inline std::string text_table(const std::vector<std::string>& header,
                              const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size());
  for (std::size_t j = 0; j < header.size(); ++j) width[j] = header[j].size();
  for (const auto& r : rows) {
    for (std::size_t j = 0; j < r.size() && j < width.size(); ++j) {
      width[j] = std::max(width[j], r[j].size());
    }
  }
  std::ostringstream os;
  auto line = [&](const std::vector<std::string>& r) {
    for (std::size_t j = 0; j < width.size(); ++j) {
      os << (j ? " | " : "") << std::left << std::setw(static_cast<int>(width[j]))
         << (j < r.size() ? r[j] : "");
    }
    os << '\n';
  };
  line(header);
  std::size_t total = 0;
  for (std::size_t w : width) total += w;
  os << std::string(total + 3 * (width.size() - 1), '-') << '\n';
  for (const auto& r : rows) line(r);
  return os.str();
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

inline std::string render(const Report& r, OutputFormat format) {
  switch (format) {
    case OutputFormat::json: {
      json j;
      j["report"] = r.command;
      j["ok"] = r.ok;
      if (!r.config.is_null()) j["config"] = r.config;
      j["results"] = r.results;
      return j.dump(2) + "\n";
    }
    case OutputFormat::csv: {
      std::ostringstream os;
      auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << csv_escape(cells[i]);
        os << '\n';
      };
      line(r.csv_header);
      for (const auto& row : r.csv_rows) line(row);
      return os.str();
    }
    case OutputFormat::text: return r.text;
  }
  return r.text;
}

}  // namespace ctoed::app

#endif  // CTOED_APP_REPORT_HPP
