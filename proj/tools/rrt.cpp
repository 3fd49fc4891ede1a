// rrt: estimate time- and territory-varying reproduction numbers from daily
// counts, with explicit outlier terms.

#include "rrt/epidata.hpp"
#include "rrt/pipeline.hpp"
#include "rrt/synth.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#ifndef RRT_VERSION
#define RRT_VERSION "unknown"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitNotConverged = 2;

struct InputOptions {
  std::string input;
  std::string format = "long";
  std::string graph;
};

struct SiOptions {
  double shape = rrt::SerialInterval::kDefaultShape;
  double rate = rrt::SerialInterval::kDefaultRate;
  int tau = rrt::SerialInterval::kDefaultTau;
};

struct SolveOptions {
  double lambda_t = rrt::Hyperparameters::kDefaultLambdaT;
  std::optional<double> lambda_s;
  std::string lambda_o = "0.025";
  double epsilon = 1e-7;
  long k_max = 200000;
  int k_smooth = 500;
  unsigned threads = 0;
  bool trace = false;
};

double parse_lambda_o(const std::string& s) {
  if (s == "inf" || s == "+inf" || s == "Inf") return rrt::kInf;
  double v;
  if (!rrt::csv::parse_number(s, v) || !(v >= 0.0)) throw rrt::ParameterError("--lambda-o must be >= 0 or 'inf'");
  return v;
}

json number_or_string(double v) {
  if (std::isfinite(v)) return v;
  return rrt::csv::format_number(v);
}

void add_input_flags(CLI::App* app, InputOptions& in) {
  app->add_option("-i,--input", in.input, "count file")->required()->check(CLI::ExistingFile);
  app->add_option("--format", in.format, "wide (cumulative, one row per region) or long (territory,date,count)")
      ->check(CLI::IsMember({"wide", "long"}))
      ->capture_default_str();
}

void add_si_flags(CLI::App* app, SiOptions& si) {
  app->add_option("--si-shape", si.shape, "serial interval Gamma shape")->capture_default_str();
  app->add_option("--si-rate", si.rate, "serial interval Gamma rate (1/day)")->capture_default_str();
  app->add_option("--si-tau", si.tau, "serial interval support in days")->capture_default_str();
}

void add_solve_flags(CLI::App* app, SolveOptions& s, bool with_lambda_s) {
  app->add_option("--lambda-t", s.lambda_t, "temporal regularization weight")->capture_default_str();
  if (with_lambda_s) app->add_option("--lambda-s", s.lambda_s, "spatial weight (default 0.002 with --graph, else 0)");
  app->add_option("--lambda-o", s.lambda_o, "outlier weight, or 'inf' to disable outliers")->capture_default_str();
  app->add_option("--epsilon", s.epsilon, "stopping threshold on the smoothed relative increment")->capture_default_str();
  app->add_option("--k-max", s.k_max, "iteration cap")->capture_default_str();
  app->add_option("--k-smooth", s.k_smooth, "stopping window in iterations")->capture_default_str();
  app->add_option("--threads", s.threads, "worker threads for per-territory solves (0: all cores)");
  app->add_flag("--trace", s.trace, "write trace.csv");
}

rrt::CountMatrix load_counts(const InputOptions& in, rrt::LoadReport& report) {
  return in.format == "wide" ? rrt::load_cumulative_wide(in.input, &report) : rrt::load_daily_long(in.input, &report);
}

rrt::SerialInterval make_si(const SiOptions& si) { return rrt::discretize_gamma(si.shape, si.rate, si.tau); }

json si_json(const SiOptions& si) { return {{"shape", si.shape}, {"rate", si.rate}, {"tau", si.tau}}; }

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw rrt::FormatError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void write_trace(const fs::path& path, const rrt::PipelineResult& res, const std::vector<std::string>& names) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw rrt::FormatError("cannot write " + path.string());
  out << "territory,iteration,objective,increment,smoothed_increment\n";
  for (std::size_t s = 0; s < res.solves.size(); ++s) {
    const auto& e = res.solves[s];
    const std::string who = res.joint ? "all" : rrt::csv::quote_if_needed(names[s]);
    for (std::size_t i = 0; i < e.objective_trace.size(); ++i) {
      out << who << ',' << e.trace_iterations[i] << ',' << rrt::csv::format_number(e.objective_trace[i]) << ',';
      if (i == 0)
        out << ",\n";
      else
        out << rrt::csv::format_number(e.increment_trace[i - 1]) << ','
            << rrt::csv::format_number(e.smoothed_trace[i - 1]) << '\n';
    }
  }
}

/// Writes R_hat / O_hat / P_hat (+trace) and returns the manifest's result block.
json write_estimate(const fs::path& dir, const rrt::CountMatrix& z, const rrt::PipelineResult& res, bool trace) {
  rrt::write_long((dir / "R_hat.csv").string(), res.r_hat, z.territories(), z.first_day());
  rrt::write_long((dir / "O_hat.csv").string(), res.o_hat, z.territories(), z.first_day());
  rrt::write_long((dir / "P_hat.csv").string(), res.p_hat, z.territories(), z.first_day());
  if (trace) write_trace(dir / "trace.csv", res, z.territories());
  return {{"iterations", res.iterations()},
          {"converged", res.converged()},
          {"objective", res.objective()},
          {"joint", res.joint},
          {"clipped_negative", res.clipped_negative},
          {"alpha", res.alpha}};
}

struct RunContext {
  std::vector<std::string> args;  // arguments after the program name, minus --out-dir
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
};

json base_manifest(const std::string& command, const RunContext& ctx) {
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - ctx.start).count();
  return {{"command", command}, {"version", RRT_VERSION}, {"args", ctx.args}, {"wall_time_s", wall}};
}

rrt::EstimateOptions estimate_options(const SolveOptions& s, bool has_graph) {
  rrt::EstimateOptions opt;
  opt.hyper.lambda_t = s.lambda_t;
  opt.hyper.lambda_s = has_graph ? s.lambda_s.value_or(rrt::Hyperparameters::kDefaultLambdaSJoint) : 0.0;
  opt.hyper.lambda_o = parse_lambda_o(s.lambda_o);
  opt.hyper.validate();
  opt.solver.epsilon = s.epsilon;
  opt.solver.k_max = s.k_max;
  opt.solver.k_smooth = s.k_smooth;
  opt.solver.validate();
  opt.threads = s.threads;
  return opt;
}

json hyper_json(const rrt::EstimateOptions& opt) {
  return {{"lambda_t", opt.hyper.lambda_t},
          {"lambda_s", opt.hyper.lambda_s},
          {"lambda_o", number_or_string(opt.hyper.lambda_o)}};
}

json solver_json(const rrt::EstimateOptions& opt) {
  return {{"epsilon", opt.solver.epsilon}, {"k_max", opt.solver.k_max}, {"k_smooth", opt.solver.k_smooth}};
}

int cmd_estimate(const InputOptions& in, const SiOptions& si, const SolveOptions& s, const fs::path& out_dir,
                 const RunContext& ctx) {
  rrt::LoadReport report;
  rrt::CountMatrix z = load_counts(in, report);
  std::optional<rrt::EpiGraph> graph;
  if (!in.graph.empty()) {
    graph = rrt::load_graph(in.graph);
    z = rrt::align_to_graph(z, *graph, &report);
  } else if (s.lambda_s && *s.lambda_s != 0.0) {
    report.warnings.push_back("--lambda-s ignored without --graph");
  }
  const auto opt = estimate_options(s, graph.has_value());
  const auto phi = make_si(si);
  fs::create_directories(out_dir);
  const auto res = rrt::estimate(z, phi, graph ? &*graph : nullptr, opt);

  json m = base_manifest("estimate", ctx);
  m["inputs"] = {{"input", in.input}, {"format", in.format}, {"graph", in.graph}};
  m["hyper"] = hyper_json(opt);
  m["solver"] = solver_json(opt);
  m["serial_interval"] = si_json(si);
  m["result"] = write_estimate(out_dir, z, res, s.trace);
  m["load_report"] = report.to_json();
  write_json(out_dir / "manifest.json", m);
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
  if (!res.converged()) {
    std::cerr << "not converged after " << res.iterations() << " iterations\n";
    return kExitNotConverged;
  }
  return kExitOk;
}

int cmd_mle(const InputOptions& in, const SiOptions& si, const fs::path& out_dir, const RunContext& ctx) {
  rrt::LoadReport report;
  const auto z = load_counts(in, report);
  const rrt::Matrix r = rrt::mle(z, make_si(si));
  fs::create_directories(out_dir);
  rrt::write_long((out_dir / "R_mle.csv").string(), r, z.territories(), z.first_day());
  json m = base_manifest("mle", ctx);
  m["inputs"] = {{"input", in.input}, {"format", in.format}};
  m["serial_interval"] = si_json(si);
  m["result"] = {{"undefined_entries", rrt::count_undefined(r)}};
  m["load_report"] = report.to_json();
  write_json(out_dir / "manifest.json", m);
  return kExitOk;
}

int cmd_baseline(const InputOptions& in, const SiOptions& si, SolveOptions s, int window, double k, bool chain,
                 const fs::path& out_dir, const RunContext& ctx) {
  rrt::LoadReport report;
  const auto z = load_counts(in, report);
  fs::create_directories(out_dir);
  json m = base_manifest("baseline", ctx);
  m["inputs"] = {{"input", in.input}, {"format", in.format}};
  m["filter"] = {{"window", window}, {"k", k}};
  int code = kExitOk;
  if (chain) {
    s.lambda_o = "inf";
    const auto opt = estimate_options(s, false);
    const auto res = rrt::two_step(z, make_si(si), opt, window, k);
    rrt::write_counts((out_dir / "Z_clean.csv").string(), res.clean);
    rrt::write_long((out_dir / "O_baseline.csv").string(), res.median_outliers, z.territories(), z.first_day());
    m["hyper"] = hyper_json(opt);
    m["solver"] = solver_json(opt);
    m["serial_interval"] = si_json(si);
    m["result"] = write_estimate(out_dir, res.clean, res.estimate, s.trace);
    if (!res.estimate.converged()) code = kExitNotConverged;
  } else {
    const auto [clean, outliers] = rrt::sliding_median_baseline(z, window, k);
    rrt::write_counts((out_dir / "Z_clean.csv").string(), clean);
    rrt::write_long((out_dir / "O_baseline.csv").string(), outliers, z.territories(), z.first_day());
    m["result"] = {{"replaced", static_cast<int>((outliers != 0.0).count())}};
  }
  m["load_report"] = report.to_json();
  write_json(out_dir / "manifest.json", m);
  return code;
}

int cmd_synth(const std::string& scenario, const SiOptions& si, const fs::path& out_dir, const RunContext& ctx) {
  const auto spec = rrt::load_scenario(scenario);
  const auto sc = rrt::generate(spec, make_si(si));
  fs::create_directories(out_dir);
  rrt::write_counts((out_dir / "Z.csv").string(), sc.z);
  rrt::write_long((out_dir / "O_true.csv").string(), sc.o_true, sc.z.territories(), sc.z.first_day());
  rrt::write_long((out_dir / "R_true.csv").string(), sc.r_true, sc.z.territories(), sc.z.first_day());
  json m = base_manifest("synth", ctx);
  m["inputs"] = {{"scenario", scenario}};
  m["serial_interval"] = si_json(si);
  m["result"] = {{"territories", sc.z.num_territories()}, {"days", sc.z.num_days()}, {"seed", spec.seed}};
  write_json(out_dir / "manifest.json", m);
  return kExitOk;
}

std::vector<std::string> strip_out_dir(const std::vector<std::string>& args) {
  std::vector<std::string> kept;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--out-dir" || args[i] == "-o") {
      ++i;
      continue;
    }
    if (args[i].rfind("--out-dir=", 0) == 0) continue;
    kept.push_back(args[i]);
  }
  return kept;
}

int dispatch(std::vector<std::string> args);

int cmd_replay(const std::string& manifest, const std::string& out_dir) {
  std::ifstream f(manifest);
  if (!f) throw rrt::FormatError("cannot open " + manifest);
  const json m = json::parse(f);
  if (!m.contains("args") || !m["args"].is_array()) throw rrt::FormatError(manifest + ": no args recorded");
  auto args = m["args"].get<std::vector<std::string>>();
  args.push_back("--out-dir");
  args.push_back(out_dir);
  return dispatch(std::move(args));
}

int dispatch(std::vector<std::string> args) {
  CLI::App app{"Reproduction number estimation with outlier correction"};
  app.require_subcommand(1);
  app.set_version_flag("--version", RRT_VERSION);

  InputOptions in;
  SiOptions si;
  SolveOptions solve;
  std::string out_dir = "out";
  int window = 7;
  double k = 2.5;
  bool chain = false;
  std::string scenario, manifest;

  auto* est = app.add_subcommand("estimate", "penalized joint estimate of R and outliers");
  add_input_flags(est, in);
  est->add_option("--graph", in.graph, "territory adjacency file")->check(CLI::ExistingFile);
  add_solve_flags(est, solve, true);
  add_si_flags(est, si);
  est->add_option("-o,--out-dir", out_dir)->capture_default_str();

  auto* mle = app.add_subcommand("mle", "ratio estimate Z / (Phi Z)");
  add_input_flags(mle, in);
  add_si_flags(mle, si);
  mle->add_option("-o,--out-dir", out_dir)->capture_default_str();

  auto* base = app.add_subcommand("baseline", "sliding-median outlier removal, optionally followed by estimation");
  add_input_flags(base, in);
  base->add_option("--window", window, "median window in days")->capture_default_str()->check(CLI::PositiveNumber);
  base->add_option("--k", k, "threshold in standard deviations")->capture_default_str();
  base->add_flag("--estimate", chain, "estimate R on the cleaned counts with outliers disabled");
  add_solve_flags(base, solve, false);
  add_si_flags(base, si);
  base->add_option("-o,--out-dir", out_dir)->capture_default_str();

  auto* syn = app.add_subcommand("synth", "sample counts from a scenario file");
  syn->add_option("scenario", scenario, "scenario file")->required()->check(CLI::ExistingFile);
  add_si_flags(syn, si);
  syn->add_option("-o,--out-dir", out_dir)->capture_default_str();

  auto* rep = app.add_subcommand("replay", "re-run the command recorded in a manifest");
  rep->add_option("manifest", manifest)->required()->check(CLI::ExistingFile);
  rep->add_option("-o,--out-dir", out_dir)->required();

  RunContext ctx;
  ctx.args = strip_out_dir(args);
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (*est) return cmd_estimate(in, si, solve, out_dir, ctx);
    if (*mle) return cmd_mle(in, si, out_dir, ctx);
    if (*base) return cmd_baseline(in, si, solve, window, k, chain, out_dir, ctx);
    if (*syn) return cmd_synth(scenario, si, out_dir, ctx);
    if (*rep) return cmd_replay(manifest, out_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}

}  // namespace

int main(int argc, char** argv) { return dispatch(std::vector<std::string>(argv + 1, argv + argc)); }
