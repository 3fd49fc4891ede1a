#pragma once

// Synthetic scenarios with known ground truth, and two independent reference
// minimizers of the penalized KL functional for small instances.

#include "rrt/core.hpp"
#include "rrt/hyperparameters.hpp"
#include "rrt/model.hpp"
#include "rrt/operators.hpp"
#include "rrt/serial_interval.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace rrt {

// ---------------------------------------------------------------------------
// Random numbers
//
// Engine: std::mt19937_64 (its output sequence is fixed by the C++ standard),
// seeded per territory with splitmix64(seed + d). Uniforms on [0, 1) take the
// top 53 bits. Poisson variates use sequential-search inversion for
// lambda < 10 and Hormann's PTRS transformed rejection otherwise.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline double uniform01(std::mt19937_64& eng) { return static_cast<double>(eng() >> 11) * 0x1.0p-53; }

inline long poisson_sample(std::mt19937_64& eng, double lam) {
  if (!(lam >= 0.0) || !std::isfinite(lam)) throw ParameterError("poisson_sample: intensity must be finite and >= 0");
  if (lam == 0.0) return 0;
  if (lam < 10.0) {
    const double u = uniform01(eng);
    double p = std::exp(-lam), cdf = p;
    long k = 0;
    while (u > cdf && k < 1000) {
      ++k;
      p *= lam / static_cast<double>(k);
      cdf += p;
    }
    return k;
  }
  const double slam = std::sqrt(lam), loglam = std::log(lam);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double invalpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = uniform01(eng) - 0.5;
    const double v = uniform01(eng);
    const double us = 0.5 - std::abs(u);
    const double kf = std::floor((2.0 * a / us + b) * u + lam + 0.43);
    if (us >= 0.07 && v <= vr) return static_cast<long>(kf);
    if (kf < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(invalpha) - std::log(a / (us * us) + b) <= -lam + kf * loglam - std::lgamma(kf + 1.0))
      return static_cast<long>(kf);
  }
}

// ---------------------------------------------------------------------------
// Scenarios

struct OutlierEvent {
  int territory = 0;  // 0-based
  int day = 0;        // 0-based
  double magnitude = 0.0;
};

struct ScenarioSpec {
  Matrix r_true;                         // D x T, >= 0
  std::vector<OutlierEvent> outliers;
  bool outliers_relative = false;        // magnitude as a fraction of R * PhiZ
  std::uint64_t seed = 1;
  std::vector<double> initial_counts;    // one per territory, fills the first tau days
  Date first_day = make_date(2020, 3, 1);

  void validate() const {
    if (r_true.rows() < 1 || r_true.cols() < CountMatrix::kMinDays) throw ParameterError("scenario: R_true too small");
    if (!r_true.allFinite() || (r_true < 0.0).any()) throw ParameterError("scenario: R_true must be finite and >= 0");
    if (static_cast<Eigen::Index>(initial_counts.size()) != r_true.rows())
      throw ParameterError("scenario: need one initial count per territory");
    for (double c : initial_counts)
      if (!(c > 0.0)) throw ParameterError("scenario: initial counts must be positive");
    for (const auto& ev : outliers)
      if (ev.territory < 0 || ev.territory >= r_true.rows() || ev.day < 0 || ev.day >= r_true.cols())
        throw ParameterError("scenario: outlier outside [1, D] x [1, T]");
  }
};

/// Piecewise-linear row through (day, value) knots (1-based days), held
/// constant outside the first and last knot.
inline std::vector<double> piecewise_linear(const std::vector<std::pair<int, double>>& knots, int T) {
  if (knots.empty()) throw ParameterError("piecewise_linear: no knots");
  std::vector<double> row(static_cast<std::size_t>(T));
  for (int t = 1; t <= T; ++t) {
    double v;
    if (t <= knots.front().first) {
      v = knots.front().second;
    } else if (t >= knots.back().first) {
      v = knots.back().second;
    } else {
      std::size_t i = 1;
      while (knots[i].first < t) ++i;
      const auto [t0, v0] = knots[i - 1];
      const auto [t1, v1] = knots[i];
      v = v0 + (v1 - v0) * static_cast<double>(t - t0) / static_cast<double>(t1 - t0);
    }
    row[static_cast<std::size_t>(t - 1)] = v;
  }
  return row;
}

struct Scenario {
  CountMatrix z;
  Matrix o_true;
  Matrix r_true;
};

/// Draws Z[d,t] ~ Poisson(max(R_true (Phi Z) + O_true, 0)) day by day after
/// the first tau days, which hold initial_counts[d].
inline Scenario generate(const ScenarioSpec& spec, const SerialInterval& phi) {
  spec.validate();
  const Eigen::Index D = spec.r_true.rows(), T = spec.r_true.cols();
  Matrix z = Matrix::Zero(D, T), o_true = Matrix::Zero(D, T);
  Matrix magnitude = Matrix::Zero(D, T);
  for (const auto& ev : spec.outliers) magnitude(ev.territory, ev.day) += ev.magnitude;

  for (Eigen::Index d = 0; d < D; ++d) {
    std::mt19937_64 eng(splitmix64(spec.seed + static_cast<std::uint64_t>(d)));
    for (Eigen::Index t = 0; t < T; ++t) {
      if (t < phi.tau()) {
        z(d, t) = std::round(spec.initial_counts[static_cast<std::size_t>(d)]);
        continue;
      }
      double phiz = 0.0;
      for (int u = 1; u <= phi.tau(); ++u) phiz += phi.phi(u) * z(d, t - u);
      const double clean = spec.r_true(d, t) * phiz;
      const double o = spec.outliers_relative ? magnitude(d, t) * clean : magnitude(d, t);
      o_true(d, t) = o;
      z(d, t) = static_cast<double>(poisson_sample(eng, std::max(clean + o, 0.0)));
    }
  }
  return {CountMatrix(std::move(z), {}, spec.first_day), std::move(o_true), spec.r_true};
}

namespace detail {

inline std::string trim(std::string s) {
  const char* ws = " \t\r\n";
  s.erase(0, s.find_first_not_of(ws));
  s.erase(s.find_last_not_of(ws) + 1);
  return s;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  return out;
}

inline double to_double(const std::string& s, std::size_t line) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw FormatError("bad number '" + s + "'", line);
    return v;
  } catch (const std::logic_error&) {
    throw FormatError("bad number '" + s + "'", line);
  }
}

inline long to_long(const std::string& s, std::size_t line) {
  try {
    std::size_t pos = 0;
    long v = std::stol(s, &pos);
    if (pos != s.size()) throw FormatError("bad integer '" + s + "'", line);
    return v;
  } catch (const std::logic_error&) {
    throw FormatError("bad integer '" + s + "'", line);
  }
}

}  // namespace detail

/// Parses a key=value scenario file:
///
///   territories=1
///   days=300
///   seed=42
///   start_date=2020-03-01
///   initial_counts=1000            (one value, or one per territory)
///   r_breakpoints=1:1.3;100:0.8;300:1.0
///   r_breakpoints.2=...            (per-territory override, 1-based)
///   outliers=1:50:200;1:51:-100    (territory:day:magnitude, 1-based)
///   outliers_relative=false
///
/// '#' starts a comment.
inline ScenarioSpec parse_scenario(std::istream& in) {
  std::map<std::string, std::pair<std::string, std::size_t>> kv;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = detail::trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("expected key=value", lineno);
    auto key = detail::trim(line.substr(0, eq));
    if (!kv.emplace(key, std::make_pair(detail::trim(line.substr(eq + 1)), lineno)).second)
      throw FormatError("duplicate key '" + key + "'", lineno);
  }
  auto get = [&](const std::string& k) -> const std::pair<std::string, std::size_t>& {
    auto it = kv.find(k);
    if (it == kv.end()) throw FormatError("missing key '" + k + "'");
    return it->second;
  };

  ScenarioSpec spec;
  const long D = detail::to_long(get("territories").first, get("territories").second);
  const long T = detail::to_long(get("days").first, get("days").second);
  if (D < 1 || T < CountMatrix::kMinDays) throw FormatError("territories must be >= 1 and days >= 3");
  spec.seed = static_cast<std::uint64_t>(detail::to_long(get("seed").first, get("seed").second));
  if (kv.count("start_date") && !parse_iso_date(kv["start_date"].first, spec.first_day))
    throw FormatError("bad start_date", kv["start_date"].second);

  auto counts = detail::split(get("initial_counts").first, ',');
  if (counts.size() == 1) counts.assign(static_cast<std::size_t>(D), counts.front());
  if (static_cast<long>(counts.size()) != D) throw FormatError("initial_counts: need 1 or D values", get("initial_counts").second);
  for (const auto& c : counts) spec.initial_counts.push_back(detail::to_double(c, get("initial_counts").second));

  auto parse_knots = [&](const std::pair<std::string, std::size_t>& v) {
    std::vector<std::pair<int, double>> knots;
    for (const auto& item : detail::split(v.first, ';')) {
      if (item.empty()) continue;
      auto parts = detail::split(item, ':');
      if (parts.size() != 2) throw FormatError("breakpoint must be day:value", v.second);
      const long day = detail::to_long(parts[0], v.second);
      if (day < 1 || day > T) throw FormatError("breakpoint day outside [1, days]", v.second);
      if (!knots.empty() && day <= knots.back().first) throw FormatError("breakpoint days must increase", v.second);
      knots.emplace_back(static_cast<int>(day), detail::to_double(parts[1], v.second));
    }
    return piecewise_linear(knots, static_cast<int>(T));
  };
  spec.r_true = Matrix(D, T);
  for (long d = 0; d < D; ++d) {
    const std::string key = "r_breakpoints." + std::to_string(d + 1);
    const auto row = parse_knots(kv.count(key) ? kv[key] : get("r_breakpoints"));
    for (long t = 0; t < T; ++t) spec.r_true(d, t) = row[static_cast<std::size_t>(t)];
  }

  if (kv.count("outliers")) {
    const auto& v = kv["outliers"];
    for (const auto& item : detail::split(v.first, ';')) {
      if (item.empty()) continue;
      auto parts = detail::split(item, ':');
      if (parts.size() != 3) throw FormatError("outlier must be territory:day:magnitude", v.second);
      spec.outliers.push_back({static_cast<int>(detail::to_long(parts[0], v.second) - 1),
                               static_cast<int>(detail::to_long(parts[1], v.second) - 1),
                               detail::to_double(parts[2], v.second)});
    }
  }
  if (kv.count("outliers_relative")) {
    const auto& v = kv["outliers_relative"].first;
    if (v != "true" && v != "false") throw FormatError("outliers_relative must be true or false", kv["outliers_relative"].second);
    spec.outliers_relative = v == "true";
  }
  spec.validate();
  return spec;
}

inline ScenarioSpec load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  return parse_scenario(in);
}

// ---------------------------------------------------------------------------
// Reference minimizers

struct OracleResult {
  Matrix r, o;
  double objective = kInf;
  long iterations = 0;
  bool converged = false;
};

enum class OracleMethod { subgradient, barrier };

namespace detail {

inline bool forced_zero(double z, double phiz) { return z == 0.0 && phiz == 0.0; }

// Euclidean projection of (r, o) onto {r >= 0, phiz r + o >= floor}.
inline std::pair<double, double> project_wedge(double r, double o, double phiz, double floor) {
  auto feasible = [&](double rr, double oo) { return rr >= 0.0 && phiz * rr + oo >= floor - 1e-15; };
  if (feasible(r, o)) return {r, o};
  std::pair<double, double> best{0.0, std::max(o, floor)};  // on r = 0
  double best_d = kInf;
  auto consider = [&](double rr, double oo) {
    if (!feasible(rr, oo)) return;
    const double dd = (rr - r) * (rr - r) + (oo - o) * (oo - o);
    if (dd < best_d) {
      best_d = dd;
      best = {rr, oo};
    }
  };
  consider(std::max(r, 0.0), o);
  const double viol = floor - (phiz * r + o);
  const double nn = phiz * phiz + 1.0;
  consider(r + viol * phiz / nn, o + viol / nn);
  consider(0.0, std::max(o, floor));
  return best;
}

}  // namespace detail

/// Projected subgradient descent with normalized steps gamma0 / sqrt(k + 1);
/// returns the best feasible point seen.
inline OracleResult subgradient_oracle(const Matrix& z, const Matrix& phiz, const EpiGraph& graph,
                                       const Hyperparameters& h, long budget = 1000000) {
  const Eigen::Index D = z.rows(), T = z.cols();
  const bool pinned = h.outliers_pinned();
  Matrix r = Matrix::Ones(D, T), o = Matrix::Zero(D, T);
  Matrix floor = Matrix::Zero(D, T);
  for (Eigen::Index d = 0; d < D; ++d)
    for (Eigen::Index t = 0; t < T; ++t) {
      const double zz = z(d, t), pz = phiz(d, t);
      if (detail::forced_zero(zz, pz)) {
        r(d, t) = 0.0;
      } else if (pz == 0.0 && !pinned) {
        o(d, t) = zz;
      }
      if (zz > 0.0) floor(d, t) = 1e-12 * std::max(zz, 1.0);
    }
  OracleResult best{r, o, objective(r, o, z, phiz, graph, h), 0, false};
  const double gamma0 = 0.5 * (1.0 + z.abs().maxCoeff() / std::max(phiz.maxCoeff(), 1e-12));

  Matrix gr(D, T), go(D, T);
  for (long k = 0; k < budget; ++k) {
    gr.setZero();
    go.setZero();
    for (Eigen::Index i = 0; i < r.size(); ++i) {
      const double zz = z.data()[i], pz = phiz.data()[i];
      if (detail::forced_zero(zz, pz) || (pinned && unexplained_entry(zz, pz))) continue;
      const double p = r.data()[i] * pz + o.data()[i];
      const double dk = 1.0 - (zz > 0.0 ? zz / p : 0.0);
      gr.data()[i] = pz * dk;
      go.data()[i] = dk;
    }
    if (h.lambda_t > 0.0) gr += h.lambda_t * d2_adjoint(d2_apply(r).sign(), T);
    if (h.lambda_s > 0.0 && graph.num_edges() > 0) gr += h.lambda_s * graph_adjoint(graph_apply(r, graph).sign(), graph);
    if (pinned)
      go.setZero();
    else
      go += h.lambda_o * o.sign();
    const double gn = std::sqrt(gr.square().sum() + go.square().sum());
    if (gn == 0.0) {
      best.converged = true;
      break;
    }
    const double step = gamma0 / std::sqrt(static_cast<double>(k) + 1.0) / gn;
    r -= step * gr;
    o -= step * go;
    for (Eigen::Index i = 0; i < r.size(); ++i) {
      const double zz = z.data()[i], pz = phiz.data()[i];
      if (detail::forced_zero(zz, pz)) {
        r.data()[i] = 0.0;
        o.data()[i] = 0.0;
      } else if (pinned) {
        o.data()[i] = 0.0;
        const double lo = pz > 0.0 ? floor.data()[i] / pz : 0.0;
        r.data()[i] = std::max(r.data()[i], lo);
      } else {
        auto [rr, oo] = detail::project_wedge(r.data()[i], o.data()[i], pz, floor.data()[i]);
        r.data()[i] = rr;
        o.data()[i] = oo;
      }
    }
    const double j = objective(r, o, z, phiz, graph, h);
    if (j < best.objective) {
      best.objective = j;
      best.r = r;
      best.o = o;
    }
    best.iterations = k + 1;
  }
  return best;
}

/// Log-barrier interior-point method on the epigraph reformulation of the
/// l1 terms, with damped Newton steps. Accurate to ~1e-9 on small instances.
inline OracleResult barrier_oracle(const Matrix& z, const Matrix& phiz, const EpiGraph& graph, const Hyperparameters& h,
                                   double gap_tol = 1e-11) {
  using SpMat = Eigen::SparseMatrix<double>;
  using Trip = Eigen::Triplet<double>;
  const Eigen::Index D = z.rows(), T = z.cols();
  const bool pinned = h.outliers_pinned();

  // Variable layout.
  int n = 0;
  Eigen::ArrayXXi rvar = Eigen::ArrayXXi::Constant(D, T, -1), ovar = Eigen::ArrayXXi::Constant(D, T, -1);
  for (Eigen::Index d = 0; d < D; ++d)
    for (Eigen::Index t = 0; t < T; ++t)
      if (!detail::forced_zero(z(d, t), phiz(d, t))) rvar(d, t) = n++;
  if (!pinned)
    for (Eigen::Index d = 0; d < D; ++d)
      for (Eigen::Index t = 0; t < T; ++t)
        if (rvar(d, t) >= 0) ovar(d, t) = n++;

  std::vector<double> c;
  std::vector<std::vector<std::pair<int, double>>> abs_rows;  // linear forms bounded by an epigraph variable
  std::vector<int> abs_var;
  auto add_abs = [&](std::vector<std::pair<int, double>> form, double weight) {
    abs_rows.push_back(std::move(form));
    abs_var.push_back(n++);
    c.resize(static_cast<std::size_t>(n), 0.0);
    c.back() = weight;
  };
  c.assign(static_cast<std::size_t>(n), 0.0);
  if (h.lambda_t > 0.0)
    for (Eigen::Index d = 0; d < D; ++d)
      for (Eigen::Index t = 1; t + 1 < T; ++t) {
        std::vector<std::pair<int, double>> f;
        if (rvar(d, t - 1) >= 0) f.emplace_back(rvar(d, t - 1), 0.5);
        if (rvar(d, t) >= 0) f.emplace_back(rvar(d, t), -1.0);
        if (rvar(d, t + 1) >= 0) f.emplace_back(rvar(d, t + 1), 0.5);
        if (!f.empty()) add_abs(std::move(f), h.lambda_t);
      }
  if (h.lambda_s > 0.0)
    for (const auto& [a, b] : graph.edges())
      for (Eigen::Index t = 0; t < T; ++t) {
        std::vector<std::pair<int, double>> f;
        if (rvar(a, t) >= 0) f.emplace_back(rvar(a, t), 1.0);
        if (rvar(b, t) >= 0) f.emplace_back(rvar(b, t), -1.0);
        if (!f.empty()) add_abs(std::move(f), h.lambda_s);
      }
  if (!pinned && h.lambda_o > 0.0)
    for (Eigen::Index d = 0; d < D; ++d)
      for (Eigen::Index t = 0; t < T; ++t)
        if (ovar(d, t) >= 0) add_abs({{ovar(d, t), 1.0}}, h.lambda_o);

  // KL terms: p = phiz R + O.
  struct KlTerm {
    double z;
    std::vector<std::pair<int, double>> a;
  };
  std::vector<KlTerm> kl;
  for (Eigen::Index d = 0; d < D; ++d)
    for (Eigen::Index t = 0; t < T; ++t) {
      if (rvar(d, t) < 0) continue;
      if (pinned && unexplained_entry(z(d, t), phiz(d, t))) continue;
      KlTerm term{z(d, t), {}};
      if (phiz(d, t) != 0.0) term.a.emplace_back(rvar(d, t), phiz(d, t));
      if (ovar(d, t) >= 0) term.a.emplace_back(ovar(d, t), 1.0);
      kl.push_back(std::move(term));
    }

  // Inequalities G x > 0.
  std::vector<Trip> gt;
  int m = 0;
  for (std::size_t i = 0; i < abs_rows.size(); ++i)
    for (double sgn : {1.0, -1.0}) {
      gt.emplace_back(m, abs_var[i], 1.0);
      for (auto [j, v] : abs_rows[i]) gt.emplace_back(m, j, -sgn * v);
      ++m;
    }
  for (Eigen::Index d = 0; d < D; ++d)
    for (Eigen::Index t = 0; t < T; ++t)
      if (rvar(d, t) >= 0) gt.emplace_back(m++, rvar(d, t), 1.0);
  for (const auto& term : kl) {
    if (term.a.empty()) continue;
    for (auto [j, v] : term.a) gt.emplace_back(m, j, v);
    ++m;
  }
  SpMat G(m, n);
  G.setFromTriplets(gt.begin(), gt.end());
  Eigen::Map<const Vector> cvec(c.data(), n);

  // Strictly feasible start.
  Vector x = Vector::Zero(n);
  for (Eigen::Index d = 0; d < D; ++d)
    for (Eigen::Index t = 0; t < T; ++t) {
      if (rvar(d, t) >= 0) x[rvar(d, t)] = 1.0;
      if (ovar(d, t) >= 0) x[ovar(d, t)] = 1.0;
    }
  for (std::size_t i = 0; i < abs_rows.size(); ++i) {
    double v = 0.0;
    for (auto [j, w] : abs_rows[i]) v += w * x[j];
    x[abs_var[i]] = std::abs(v) + 1.0;
  }

  auto p_of = [](const KlTerm& term, const Vector& xx) {
    double p = 0.0;
    for (auto [j, v] : term.a) p += v * xx[j];
    return p;
  };
  auto barrier_value = [&](const Vector& xx, double t) {
    const Vector s = G * xx;
    if ((s.array() <= 0.0).any()) return kInf;
    double f = cvec.dot(xx);
    for (const auto& term : kl) {
      const double p = p_of(term, xx);
      f += p - (term.z > 0.0 ? term.z * std::log(p) : 0.0);
    }
    return t * f - s.array().log().sum();
  };

  double t = 1.0;
  const double mu = 8.0;
  long newton_steps = 0;
  Eigen::SimplicialLDLT<SpMat> ldlt;
  bool pattern_ready = false;
  for (int outer = 0; outer < 200; ++outer) {
    for (int inner = 0; inner < 200; ++inner) {
      const Vector s = G * x;
      const Vector inv_s = s.cwiseInverse();
      Vector grad = t * cvec - G.transpose() * inv_s;
      std::vector<Trip> ht;
      for (const auto& term : kl) {
        const double p = p_of(term, x);
        const double d1 = t * (1.0 - (term.z > 0.0 ? term.z / p : 0.0));
        const double d2 = t * (term.z > 0.0 ? term.z / (p * p) : 0.0);
        for (auto [j, v] : term.a) {
          grad[j] += d1 * v;
          if (d2 > 0.0)
            for (auto [k2, w] : term.a) ht.emplace_back(j, k2, d2 * v * w);
        }
      }
      SpMat H(n, n);
      H.setFromTriplets(ht.begin(), ht.end());
      H += SpMat(G.transpose() * inv_s.cwiseAbs2().asDiagonal() * G);
      for (int j = 0; j < n; ++j) H.coeffRef(j, j) += 1e-14;
      if (!pattern_ready) {
        ldlt.analyzePattern(H);
        pattern_ready = true;
      }
      ldlt.factorize(H);
      if (ldlt.info() != Eigen::Success) throw Error("barrier_oracle: Newton system factorization failed");
      const Vector dx = -ldlt.solve(grad);
      const double dec2 = -grad.dot(dx);
      ++newton_steps;
      if (dec2 / 2.0 < 1e-14) break;
      double step = 1.0;
      const double f0 = barrier_value(x, t);
      while (step > 1e-20) {
        const double f1 = barrier_value(x + step * dx, t);
        if (f1 <= f0 - 0.25 * step * dec2) break;
        step *= 0.5;
      }
      x += step * dx;
      if (step <= 1e-20) break;
    }
    if (static_cast<double>(m) / t < gap_tol) break;
    t *= mu;
  }

  OracleResult res;
  res.r = Matrix::Zero(D, T);
  res.o = Matrix::Zero(D, T);
  for (Eigen::Index d = 0; d < D; ++d)
    for (Eigen::Index tt = 0; tt < T; ++tt) {
      if (rvar(d, tt) >= 0) res.r(d, tt) = std::max(x[rvar(d, tt)], 0.0);
      if (ovar(d, tt) >= 0) res.o(d, tt) = x[ovar(d, tt)];
    }
  res.objective = objective(res.r, res.o, z, phiz, graph, h);
  res.iterations = newton_steps;
  res.converged = std::isfinite(res.objective);
  return res;
}

inline OracleResult oracle_solve(const Matrix& z, const Matrix& phiz, const EpiGraph& graph, const Hyperparameters& h,
                                 OracleMethod method = OracleMethod::barrier, long budget = 1000000) {
  if (z.rows() > 3 || z.cols() > 15) throw ParameterError("oracle_solve: small instances only (D <= 3, T <= 15)");
  return method == OracleMethod::barrier ? barrier_oracle(z, phiz, graph, h) : subgradient_oracle(z, phiz, graph, h, budget);
}

}  // namespace rrt
