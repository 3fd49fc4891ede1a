#pragma once

#include <Eigen/Dense>

#include <chrono>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

namespace rrt {

/// Row-major D x T array: one row per territory, one column per day.
using Matrix = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ParameterError : Error {
  using Error::Error;
};
struct ShapeError : Error {
  using Error::Error;
};
struct DomainError : Error {
  using Error::Error;
};
struct GraphError : Error {
  using Error::Error;
};
struct DataError : Error {
  using Error::Error;
};
struct FormatError : Error {
  FormatError(const std::string& what, std::size_t line = 0)
      : Error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

inline void require_shape(bool ok, const char* what) {
  if (!ok) throw ShapeError(what);
}

// Calendar day; arithmetic through sys_days.
using Date = std::chrono::year_month_day;

inline Date make_date(int y, unsigned m, unsigned d) {
  return Date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
}

inline Date add_days(Date d, long n) {
  return Date{std::chrono::sys_days{d} + std::chrono::days{n}};
}

inline long days_between(Date from, Date to) {
  return (std::chrono::sys_days{to} - std::chrono::sys_days{from}).count();
}

/// Parses YYYY-MM-DD. Returns false on anything else.
inline bool parse_iso_date(std::string_view s, Date& out) {
  int y = 0;
  unsigned m = 0, d = 0;
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
  for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u})
    if (s[i] < '0' || s[i] > '9') return false;
  y = std::stoi(std::string(s.substr(0, 4)));
  m = static_cast<unsigned>(std::stoi(std::string(s.substr(5, 2))));
  d = static_cast<unsigned>(std::stoi(std::string(s.substr(8, 2))));
  out = make_date(y, m, d);
  return out.ok();
}

/// Parses M/D/YY (two-digit year taken as 20YY) or M/D/YYYY.
inline bool parse_us_date(std::string_view s, Date& out) {
  auto p1 = s.find('/');
  if (p1 == std::string_view::npos) return false;
  auto p2 = s.find('/', p1 + 1);
  if (p2 == std::string_view::npos) return false;
  auto digits = [](std::string_view v) {
    if (v.empty() || v.size() > 4) return false;
    for (char c : v)
      if (c < '0' || c > '9') return false;
    return true;
  };
  auto ms = s.substr(0, p1), ds = s.substr(p1 + 1, p2 - p1 - 1), ys = s.substr(p2 + 1);
  if (!digits(ms) || !digits(ds) || !digits(ys) || ms.size() > 2 || ds.size() > 2) return false;
  if (ys.size() != 2 && ys.size() != 4) return false;
  int y = std::stoi(std::string(ys));
  if (ys.size() == 2) y += 2000;
  out = make_date(y, static_cast<unsigned>(std::stoi(std::string(ms))),
                  static_cast<unsigned>(std::stoi(std::string(ds))));
  return out.ok();
}

inline std::string format_iso_date(Date d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()),
                static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
  return buf;
}

}  // namespace rrt
