#pragma once

// Count and graph file readers/writers.
//
//   wide  : cumulative counts, one row per (sub)region, metadata columns then
//           one M/D/YY column per day.
//   long  : "territory,date,count" with ISO dates, daily counts.
//   graph : "D=<int>", optional "labels=<id>,<id>,...", then one "d1,d2"
//           edge per line (1-based). '#' starts a comment.

#include "rrt/core.hpp"
#include "rrt/model.hpp"
#include "rrt/operators.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace rrt {

/// What happened while assembling a count matrix.
struct LoadReport {
  std::vector<std::string> warnings;
  int filled_cells = 0;       // missing (territory, day) cells set to 0
  int aggregated_rows = 0;    // input rows merged into an existing territory
  int negative_daily = 0;     // negative daily counts kept as-is
  int dropped_territories = 0;

  nlohmann::json to_json() const {
    return {{"warnings", warnings},
            {"filled_cells", filled_cells},
            {"aggregated_rows", aggregated_rows},
            {"negative_daily", negative_daily},
            {"dropped_territories", dropped_territories}};
  }
};

namespace csv {

/// Splits one CSV record; double quotes group fields and "" escapes a quote.
inline std::vector<std::string> split_record(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

inline bool parse_number(const std::string& s, double& v) {
  if (s.empty()) return false;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  if (*b == '+') ++b;
  auto [p, ec] = std::from_chars(b, e, v);
  return ec == std::errc{} && p == e;
}

/// Shortest decimal form that reads back to the same double.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "NaN";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

inline std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

}  // namespace csv

/// Territory order: numeric identifiers by value, everything else
/// lexicographically after them.
struct TerritoryLess {
  static bool numeric(const std::string& s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
  }
  bool operator()(const std::string& a, const std::string& b) const {
    const bool na = numeric(a), nb = numeric(b);
    if (na != nb) return na;
    if (na) {
      auto strip = [](const std::string& s) {
        auto p = s.find_first_not_of('0');
        return p == std::string::npos ? std::string() : s.substr(p);
      };
      const auto sa = strip(a), sb = strip(b);
      if (sa.size() != sb.size()) return sa.size() < sb.size();
      if (sa != sb) return sa < sb;
    }
    return a < b;
  }
};

// ---------------------------------------------------------------------------
// Readers

inline CountMatrix parse_cumulative_wide(std::istream& in, LoadReport* report = nullptr) {
  LoadReport local;
  LoadReport& rep = report ? *report : local;
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty file", 1);
  const auto header = csv::split_record(line);

  std::size_t first_date = header.size();
  std::vector<Date> dates;
  for (std::size_t j = 0; j < header.size(); ++j) {
    Date d;
    if (parse_us_date(header[j], d)) {
      if (first_date == header.size()) first_date = j;
      dates.push_back(d);
    } else if (first_date != header.size()) {
      throw FormatError("unparseable date column '" + header[j] + "'", 1);
    }
  }
  if (first_date == header.size() || first_date == 0) throw FormatError("header must have metadata columns followed by dates", 1);
  for (std::size_t j = 1; j < dates.size(); ++j)
    if (days_between(dates[j - 1], dates[j]) <= 0) throw FormatError("date columns are not increasing", 1);

  std::size_t key_col = 0;
  for (std::size_t j = 0; j < first_date; ++j)
    if (header[j] == "Country/Region" || header[j] == "Country_Region") key_col = j;

  std::vector<std::string> names;
  std::map<std::string, std::size_t> index;
  std::vector<std::vector<double>> cumulative;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto f = csv::split_record(line);
    if (f.size() != header.size()) throw FormatError("expected " + std::to_string(header.size()) + " fields", lineno);
    std::vector<double> row(dates.size());
    for (std::size_t j = 0; j < dates.size(); ++j)
      if (!csv::parse_number(f[first_date + j], row[j])) throw FormatError("bad count '" + f[first_date + j] + "'", lineno);
    auto [it, fresh] = index.emplace(f[key_col], names.size());
    if (fresh) {
      names.push_back(f[key_col]);
      cumulative.push_back(std::move(row));
    } else {
      auto& acc = cumulative[it->second];
      for (std::size_t j = 0; j < row.size(); ++j) acc[j] += row[j];
      ++rep.aggregated_rows;
    }
  }
  if (names.empty()) throw FormatError("no data rows", lineno);

  const long T = days_between(dates.front(), dates.back()) + 1;
  if (T < CountMatrix::kMinDays) throw FormatError("need at least 3 days");
  Matrix daily = Matrix::Zero(static_cast<Eigen::Index>(names.size()), T);
  for (std::size_t d = 0; d < names.size(); ++d) {
    double prev = 0.0;
    for (std::size_t j = 0; j < dates.size(); ++j) {
      const long t = days_between(dates.front(), dates[j]);
      const double v = cumulative[d][j] - prev;
      daily(static_cast<Eigen::Index>(d), t) = v;
      if (v < 0.0) ++rep.negative_daily;
      prev = cumulative[d][j];
    }
  }
  const long gaps = T - static_cast<long>(dates.size());
  if (gaps > 0) {
    rep.filled_cells += static_cast<int>(gaps * static_cast<long>(names.size()));
    rep.warnings.push_back(std::to_string(gaps) + " missing date column(s) filled with 0");
  }
  if (rep.negative_daily > 0) rep.warnings.push_back(std::to_string(rep.negative_daily) + " negative daily count(s) kept");
  return CountMatrix(std::move(daily), std::move(names), dates.front());
}

inline CountMatrix parse_daily_long(std::istream& in, LoadReport* report = nullptr) {
  LoadReport local;
  LoadReport& rep = report ? *report : local;
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty file", 1);
  const auto header = csv::split_record(line);
  if (header.size() != 3 || header[0] != "territory" || header[1] != "date" || (header[2] != "count" && header[2] != "value"))
    throw FormatError("header must be territory,date,count", 1);

  struct Cell {
    std::string territory;
    Date date;
    double value;
  };
  std::vector<Cell> cells;
  std::map<std::pair<std::string, long>, std::size_t> seen;
  std::set<std::string, TerritoryLess> territories;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto f = csv::split_record(line);
    if (f.size() != 3) throw FormatError("expected 3 fields", lineno);
    Cell c{f[0], {}, 0.0};
    if (c.territory.empty()) throw FormatError("empty territory", lineno);
    if (!parse_iso_date(f[1], c.date)) throw FormatError("bad date '" + f[1] + "'", lineno);
    if (!csv::parse_number(f[2], c.value)) throw FormatError("bad count '" + f[2] + "'", lineno);
    const long key = std::chrono::sys_days{c.date}.time_since_epoch().count();
    if (!seen.emplace(std::make_pair(c.territory, key), lineno).second)
      throw FormatError("duplicate (territory, date) pair " + c.territory + "," + f[1], lineno);
    territories.insert(c.territory);
    cells.push_back(std::move(c));
  }
  if (cells.empty()) throw FormatError("no data rows", lineno);

  Date first = cells.front().date, last = cells.front().date;
  for (const auto& c : cells) {
    if (days_between(c.date, first) > 0) first = c.date;
    if (days_between(last, c.date) > 0) last = c.date;
  }
  const long T = days_between(first, last) + 1;
  if (T < CountMatrix::kMinDays) throw FormatError("need at least 3 days");
  std::vector<std::string> names(territories.begin(), territories.end());
  std::map<std::string, Eigen::Index> row;
  for (std::size_t i = 0; i < names.size(); ++i) row[names[i]] = static_cast<Eigen::Index>(i);

  Matrix v = Matrix::Zero(static_cast<Eigen::Index>(names.size()), T);
  for (const auto& c : cells) {
    v(row[c.territory], days_between(first, c.date)) = c.value;
    if (c.value < 0.0) ++rep.negative_daily;
  }
  const long missing = static_cast<long>(names.size()) * T - static_cast<long>(cells.size());
  if (missing > 0) {
    rep.filled_cells += static_cast<int>(missing);
    rep.warnings.push_back(std::to_string(missing) + " missing (territory, date) cell(s) filled with 0");
  }
  if (rep.negative_daily > 0) rep.warnings.push_back(std::to_string(rep.negative_daily) + " negative daily count(s) kept");
  return CountMatrix(std::move(v), std::move(names), first);
}

inline EpiGraph parse_graph(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  long D = -1;
  std::vector<std::string> labels;
  std::vector<EpiGraph::Edge> edges;
  std::set<EpiGraph::Edge> seen;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line.erase(std::remove_if(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); }), line.end());
    if (line.empty()) continue;
    if (D < 0) {
      if (line.rfind("D=", 0) != 0) throw FormatError("first line must be D=<int>", lineno);
      double v;
      if (!csv::parse_number(line.substr(2), v) || v < 1 || v != std::floor(v)) throw FormatError("bad vertex count", lineno);
      D = static_cast<long>(v);
      continue;
    }
    if (line.rfind("labels=", 0) == 0) {
      if (!labels.empty() || !edges.empty()) throw FormatError("labels must directly follow the header", lineno);
      labels = csv::split_record(line.substr(7));
      if (static_cast<long>(labels.size()) != D)
        throw FormatError("expected " + std::to_string(D) + " labels, got " + std::to_string(labels.size()), lineno);
      continue;
    }
    const auto f = csv::split_record(line);
    double a, b;
    if (f.size() != 2 || !csv::parse_number(f[0], a) || !csv::parse_number(f[1], b) || a != std::floor(a) ||
        b != std::floor(b))
      throw FormatError("expected d1,d2", lineno);
    if (a < 1 || b < 1 || a > D || b > D) throw GraphError("vertex index out of [1, D] (line " + std::to_string(lineno) + ")");
    if (a == b) throw GraphError("self-loop (line " + std::to_string(lineno) + ")");
    EpiGraph::Edge e{static_cast<int>(std::min(a, b)) - 1, static_cast<int>(std::max(a, b)) - 1};
    if (!seen.insert(e).second) throw GraphError("duplicate edge (line " + std::to_string(lineno) + ")");
    edges.push_back(e);
  }
  if (D < 0) throw FormatError("missing D=<int> header", lineno);
  EpiGraph g(static_cast<int>(D), std::move(edges));
  g.set_labels(std::move(labels));
  return g;
}

namespace detail {
inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  return in;
}
}  // namespace detail

inline CountMatrix load_cumulative_wide(const std::string& path, LoadReport* report = nullptr) {
  auto in = detail::open_input(path);
  return parse_cumulative_wide(in, report);
}

inline CountMatrix load_daily_long(const std::string& path, LoadReport* report = nullptr) {
  auto in = detail::open_input(path);
  return parse_daily_long(in, report);
}

inline EpiGraph load_graph(const std::string& path) {
  auto in = detail::open_input(path);
  return parse_graph(in);
}

/// Restricts and orders the count rows to the graph's vertices. A labelled
/// graph is the authority: territories absent from it are dropped with a
/// warning. An unlabelled graph matches rows by position.
inline CountMatrix align_to_graph(const CountMatrix& z, const EpiGraph& g, LoadReport* report = nullptr) {
  if (g.labels().empty()) {
    if (g.num_vertices() != z.num_territories())
      throw GraphError("graph has " + std::to_string(g.num_vertices()) + " vertices but the data have " +
                       std::to_string(z.num_territories()) + " territories");
    return z;
  }
  std::map<std::string, int> row;
  for (std::size_t i = 0; i < z.territories().size(); ++i) row[z.territories()[i]] = static_cast<int>(i);
  std::vector<int> pick;
  for (const auto& lab : g.labels()) {
    auto it = row.find(lab);
    if (it == row.end()) throw GraphError("graph vertex '" + lab + "' has no data");
    pick.push_back(it->second);
  }
  const int dropped = static_cast<int>(z.num_territories()) - static_cast<int>(pick.size());
  if (report && dropped > 0) {
    report->dropped_territories += dropped;
    report->warnings.push_back(std::to_string(dropped) + " territory(ies) not in the graph dropped");
  }
  return z.select_rows(pick);
}

// ---------------------------------------------------------------------------
// Writers

inline void write_long(std::ostream& out, const Matrix& values, const std::vector<std::string>& territories, Date first_day,
                       const std::string& value_column = "value") {
  require_shape(static_cast<Eigen::Index>(territories.size()) == values.rows(), "write_long: label count mismatch");
  out << "territory,date," << value_column << '\n';
  for (Eigen::Index d = 0; d < values.rows(); ++d) {
    const std::string name = csv::quote_if_needed(territories[static_cast<std::size_t>(d)]);
    for (Eigen::Index t = 0; t < values.cols(); ++t)
      out << name << ',' << format_iso_date(add_days(first_day, static_cast<long>(t))) << ','
          << csv::format_number(values(d, t)) << '\n';
  }
}

inline void write_long(const std::string& path, const Matrix& values, const std::vector<std::string>& territories,
                       Date first_day, const std::string& value_column = "value") {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path);
  write_long(out, values, territories, first_day, value_column);
}

inline void write_counts(const std::string& path, const CountMatrix& z) {
  write_long(path, z.values(), z.territories(), z.first_day(), "count");
}

}  // namespace rrt
