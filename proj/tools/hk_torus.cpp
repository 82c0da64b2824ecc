// Command-line front end: simulate, verify, batch, unroll, matrix, rate.
//
// Exit status: 0 when every check passed, 1 when one failed,
// 2 on usage, configuration or I/O errors.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"

#include "hktorus/hktorus.hpp"

namespace {

using namespace hktorus;

constexpr int kExitFailedCheck = 1;
constexpr int kExitError = 2;

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("hk_torus");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("HK_TORUS_LOG")) {
    spdlog::set_level(spdlog::level::from_str(env));
  }
}

/// Flags shared by every subcommand that builds a system from scratch.
struct ConfigFlags {
  RunConfig config;
  std::string init = "random-uniform";
  double stop_eps = 0.0;
  double tol_merge = 0.0;
  CLI::Option* n_opt = nullptr;
  CLI::Option* stop_eps_opt = nullptr;
  CLI::Option* tol_merge_opt = nullptr;

  void attach(CLI::App* app) {
    n_opt = app->add_option("--n", config.n, "number of agents (default: count of explicit positions, else 10)");
    app->add_option("--p", config.p, "circle perimeter")->capture_default_str();
    app->add_option("--radius", config.radius, "influence radius")->capture_default_str();
    app->add_option("--seed", config.seed, "seed for random-uniform initialization")->capture_default_str();
    app->add_option("--init", init,
                    "random-uniform | equally-spaced | comma-separated positions")
        ->capture_default_str();
    app->add_option("--horizon", config.horizon, "maximum number of steps")->capture_default_str();
    stop_eps_opt = app->add_option("--stop-eps", stop_eps, "stop when every move is at most this (default 1e-13 p)");
    app->add_option("--stop-consecutive", config.stop_consecutive,
                    "quiet steps required before stopping")
        ->capture_default_str();
    tol_merge_opt = app->add_option("--tol-merge", tol_merge, "merge tolerance (default 1e-12 p)");
    app->add_option("--tol-nbr", config.tol_nbr, "neighbor threshold slack")->capture_default_str();
    app->add_flag("--record-matrices", config.record_matrices,
                  "also write A_t for every uncut step to <out>.A.csv");
  }

  RunConfig resolve() {
    if (init == "random-uniform") {
      config.init = InitKind::RandomUniform;
    } else if (init == "equally-spaced") {
      config.init = InitKind::EquallySpaced;
    } else {
      config.init = InitKind::Explicit;
      config.positions.clear();
      std::stringstream ss(init);
      std::string item;
      while (std::getline(ss, item, ',')) {
        try {
          std::size_t used = 0;
          config.positions.push_back(std::stod(item, &used));
          if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
          throw Error(ErrorCode::ConfigInvalid, "init: cannot parse position '" + item + "'");
        }
      }
      if (n_opt->count() == 0) config.n = config.positions.size();
    }
    if (stop_eps_opt->count() > 0) config.stop_eps = stop_eps;
    if (tol_merge_opt->count() > 0) config.tol_merge = tol_merge;
    config.validate();
    return config;
  }
};

/// Output goes to `path`, or stdout when it is empty or "-".
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty() && path != "-") {
      file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
      if (!*file_) throw Error(ErrorCode::IoError, "cannot open '" + path + "' for writing");
    }
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }
  void finish(const std::string& path) {
    stream().flush();
    if (!stream()) throw Error(ErrorCode::IoError, "write to '" + path + "' failed");
  }

 private:
  std::unique_ptr<std::ofstream> file_;
};

TraceFile load_trace(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open trace '" + path + "'");
  return read_trace(in);
}

std::vector<TransitionMatrix> uncut_A_matrices(const Trace& trace) {
  std::vector<TransitionMatrix> out;
  if (!trace.params.strict_sixth()) return out;
  for (std::size_t k = 0; k + 1 < trace.records.size(); ++k) {
    const auto s = trace.state_at(k);
    const auto g = compute_neighbors(s, trace.tol_nbr);
    if (detect_cut(g).cut) break;
    out.push_back(build_A(s, g));
  }
  return out;
}

int cmd_simulate(ConfigFlags& flags, const std::string& out_path) {
  const RunConfig cfg = flags.resolve();
  if (cfg.record_matrices && (out_path.empty() || out_path == "-")) {
    throw Error(ErrorCode::ConfigInvalid, "record_matrices: needs --out to name the CSV file");
  }
  const Trace trace = simulate(cfg);
  spdlog::info("simulated {} agents for {} steps", cfg.n, trace.last_t());
  Output out(out_path);
  write_trace(out.stream(), cfg, trace);
  out.finish(out_path);
  if (cfg.record_matrices) {
    const std::string csv = out_path + ".A.csv";
    Output m(csv);
    write_matrices_csv(m.stream(), uncut_A_matrices(trace));
    m.finish(csv);
  }
  return 0;
}

int cmd_verify(const std::string& trace_path, const std::string& checks, const std::string& out_path) {
  const auto names = parse_checks(checks);
  const TraceFile tf = load_trace(trace_path);
  const VerifyReport rep = verify_trace(tf.trace, names, tf.config.tol_merge_value());
  for (const auto& c : rep.checks) {
    if (c.status == CheckStatus::Fail) spdlog::error("check {} failed: {}", c.name, c.detail);
  }
  Output out(out_path);
  out.stream() << rep.to_json().dump(2) << '\n';
  out.finish(out_path);
  return rep.ok() ? 0 : kExitFailedCheck;
}

int cmd_batch(ConfigFlags& flags, const std::string& seeds, std::size_t parallelism,
              const std::string& checks, const std::string& out_path) {
  const RunConfig cfg = flags.resolve();
  std::uint64_t first = 0;
  std::uint64_t count = 0;
  const auto colon = seeds.find(':');
  try {
    if (colon == std::string::npos) {
      count = std::stoull(seeds);
    } else {
      first = std::stoull(seeds.substr(0, colon));
      const std::uint64_t last = std::stoull(seeds.substr(colon + 1));
      if (last < first) throw std::invalid_argument(seeds);
      count = last - first;
    }
  } catch (const std::exception&) {
    throw Error(ErrorCode::ConfigInvalid, "seeds: expected COUNT or FIRST:END, got '" + seeds + "'");
  }
  const auto rows = run_batch(cfg, first, count, parallelism, parse_checks(checks));
  Output out(out_path);
  write_batch_csv(out.stream(), rows);
  out.finish(out_path);
  bool ok = true;
  for (const auto& r : rows) {
    if (r.failed > 0) ok = false;
    if (!r.error.empty()) spdlog::warn("seed {}: {}", r.seed, r.error);
  }
  return ok ? 0 : kExitFailedCheck;
}

int cmd_unroll(ConfigFlags& flags, const std::vector<int>& copies, const std::string& out_path) {
  const RunConfig cfg = flags.resolve();
  for (int N : copies) {
    if (N < 4) throw Error(ErrorCode::InvalidN, "unrolling needs N >= 4, got " + std::to_string(N));
  }
  const SystemState s0 = initial_state(cfg);
  Output out(out_path);
  auto& os = out.stream();
  os << "N,n,V_N_0,V_N_1,W_0,W_1,R_0,R_1,S,R_0_in_bounds,R_1_in_bounds,line_decrease,finite_inequality\n";
  bool ok = true;
  for (int N : copies) {
    const auto r = unroll_check(s0, N);
    os << N << ',' << r.n << ',' << format_real(r.V_N_0) << ',' << format_real(r.V_N_1) << ','
       << format_real(r.W_0) << ',' << format_real(r.W_1) << ',' << format_real(r.R_0) << ','
       << format_real(r.R_1) << ',' << format_real(r.S) << ',' << r.r0_in_bounds() << ','
       << r.r1_in_bounds() << ',' << r.line_decrease_holds() << ',' << r.finite_inequality_holds()
       << '\n';
    // A single agent is reported but never counted as a failure.
    if (r.n >= 2 && !(r.r0_in_bounds() && r.r1_in_bounds() && r.line_decrease_holds() &&
                      r.finite_inequality_holds())) {
      ok = false;
    }
  }
  out.finish(out_path);
  return ok ? 0 : kExitFailedCheck;
}

int cmd_matrix(const std::string& trace_path, const std::string& kind, long t, const std::string& out_path) {
  const TraceFile tf = load_trace(trace_path);
  const Trace& trace = tf.trace;
  std::vector<TransitionMatrix> ms;
  if (kind == "A") {
    if (t >= 0) {
      if (static_cast<std::size_t>(t) >= trace.records.size()) {
        throw Error(ErrorCode::HorizonTooShort, "trace has no record at t = " + std::to_string(t));
      }
      const auto s = trace.state_at(static_cast<std::size_t>(t));
      ms.push_back(build_A(s, compute_neighbors(s, trace.tol_nbr)));
    } else {
      if (!trace.params.strict_sixth()) throw Error(ErrorCode::RadiusTooLarge, "A needs r < p/6");
      ms = uncut_A_matrices(trace);
    }
  } else if (kind == "B") {
    const auto graphs = trace.graphs();
    const auto stab = detect_stability(trace, graphs);
    const std::size_t at = t >= 0 ? static_cast<std::size_t>(t) : stab.t0_candidate;
    if (at >= graphs.size()) {
      throw Error(ErrorCode::HorizonTooShort, "trace has no record at t = " + std::to_string(at));
    }
    ms.push_back(build_B(graphs[at], at));
  } else {
    throw Error(ErrorCode::WrongKind, "kind must be A or B, got '" + kind + "'");
  }
  Output out(out_path);
  write_matrices_csv(out.stream(), ms);
  out.finish(out_path);
  return 0;
}

int cmd_rate(const std::string& trace_path, const std::string& out_path) {
  const TraceFile tf = load_trace(trace_path);
  const VerifyReport rep = verify_trace(tf.trace, {"rate"}, tf.config.tol_merge_value());
  nlohmann::ordered_json j = rep.to_json();
  nlohmann::ordered_json slim;
  slim["n"] = j["n"];
  slim["last_t"] = j["last_t"];
  slim["stability"] = {{"t0_candidate", rep.stability.t0_candidate},
                       {"stable_window", rep.stability.stable_window}};
  slim["rate"] = j["rate"];
  Output out(out_path);
  out.stream() << slim.dump(2) << '\n';
  out.finish(out_path);
  return rep.ok() ? 0 : kExitFailedCheck;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Hegselmann-Krause dynamics on the circle: simulation and verification"};
  app.require_subcommand(1);

  ConfigFlags sim_flags;
  std::string sim_out;
  auto* sim = app.add_subcommand("simulate", "run one simulation and write a JSONL trace");
  sim_flags.attach(sim);
  sim->add_option("--out,-o", sim_out, "trace file (default stdout)");

  std::string verify_trace_path, verify_checks = "all", verify_out;
  auto* ver = app.add_subcommand("verify", "run the checks over a trace and write a JSON report");
  ver->add_option("trace", verify_trace_path, "trace file")->required();
  ver->add_option("--checks", verify_checks, "comma-separated checks or 'all'")->capture_default_str();
  ver->add_option("--out,-o", verify_out, "report file (default stdout)");

  ConfigFlags batch_flags;
  std::string batch_seeds = "0:100", batch_checks = "all", batch_out;
  std::size_t batch_par = 1;
  auto* bat = app.add_subcommand("batch", "simulate and verify a range of seeds, summarised as CSV");
  batch_flags.attach(bat);
  bat->add_option("--seeds", batch_seeds, "COUNT or FIRST:END (END exclusive)")->capture_default_str();
  bat->add_option("--parallelism,-j", batch_par, "worker threads")->capture_default_str();
  bat->add_option("--checks", batch_checks, "comma-separated checks or 'all'")->capture_default_str();
  bat->add_option("--out,-o", batch_out, "CSV file (default stdout)");

  ConfigFlags unroll_flags;
  std::vector<int> unroll_N = {4, 8, 16};
  std::string unroll_out;
  auto* unr = app.add_subcommand("unroll", "compare the unrolled line system with the circle");
  unroll_flags.attach(unr);
  unr->add_option("--N", unroll_N, "number of copies (each >= 4)")->delimiter(',')->capture_default_str();
  unr->add_option("--out,-o", unroll_out, "CSV file (default stdout)");

  std::string mat_trace, mat_kind = "A", mat_out;
  long mat_t = -1;
  auto* mat = app.add_subcommand("matrix", "export A_t or B from a trace as dense CSV");
  mat->add_option("trace", mat_trace, "trace file")->required();
  mat->add_option("--kind", mat_kind, "A or B")->capture_default_str();
  mat->add_option("--t", mat_t, "time step (default: every uncut step for A, t0 for B)");
  mat->add_option("--out,-o", mat_out, "CSV file (default stdout)");

  std::string rate_trace, rate_out;
  auto* rat = app.add_subcommand("rate", "estimate the post-t0 contraction rate of a trace");
  rat->add_option("trace", rate_trace, "trace file")->required();
  rat->add_option("--out,-o", rate_out, "JSON file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitError;
  }

  try {
    if (sim->parsed()) return cmd_simulate(sim_flags, sim_out);
    if (ver->parsed()) return cmd_verify(verify_trace_path, verify_checks, verify_out);
    if (bat->parsed()) return cmd_batch(batch_flags, batch_seeds, batch_par, batch_checks, batch_out);
    if (unr->parsed()) return cmd_unroll(unroll_flags, unroll_N, unroll_out);
    if (mat->parsed()) return cmd_matrix(mat_trace, mat_kind, mat_t, mat_out);
    if (rat->parsed()) return cmd_rate(rate_trace, rate_out);
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return kExitError;
  } catch (const std::exception& e) {
    spdlog::error("unexpected failure: {}", e.what());
    return kExitError;
  }
  return kExitError;
}
