#pragma once

#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hktorus/dynamics.hpp"
#include "hktorus/spectral.hpp"
#include "hktorus/trace.hpp"

namespace hktorus {

inline constexpr const char* kTraceSchema = "hk-torus-trace/1";

enum class InitKind { RandomUniform, EquallySpaced, Explicit };

inline std::string to_string(InitKind k) {
  switch (k) {
    case InitKind::RandomUniform: return "random-uniform";
    case InitKind::EquallySpaced: return "equally-spaced";
    case InitKind::Explicit: return "explicit";
  }
  return "random-uniform";
}

struct RunConfig {
  std::size_t n = 10;
  double p = 10.0;
  double radius = 1.0;
  std::uint64_t seed = 0;
  InitKind init = InitKind::RandomUniform;
  std::vector<double> positions;  // used when init == Explicit
  std::size_t horizon = 2000;
  std::optional<double> stop_eps;   // default 1e-13 p
  std::size_t stop_consecutive = 1;
  std::optional<double> tol_merge;  // default 1e-12 p
  double tol_nbr = 0.0;
  bool record_matrices = false;

  double stop_eps_value() const { return stop_eps.value_or(1e-13 * p); }
  double tol_merge_value() const { return tol_merge.value_or(1e-12 * p); }

  /// Collects every field-level problem into one ConfigInvalid error.
  void validate() const {
    std::vector<std::string> problems;
    if (n < 1) problems.push_back("n: must be at least 1");
    if (!(p > 0.0) || !std::isfinite(p)) problems.push_back("p: must be a positive finite number");
    if (!(radius > 0.0) || !(radius <= p / 2.0)) problems.push_back("radius: must lie in (0, p/2]");
    if (init == InitKind::Explicit) {
      if (positions.size() != n) {
        problems.push_back("positions: expected " + std::to_string(n) + " values, got " +
                           std::to_string(positions.size()));
      }
      for (double x : positions) {
        if (!std::isfinite(x)) {
          problems.push_back("positions: values must be finite");
          break;
        }
      }
    }
    if (stop_eps && !(*stop_eps >= 0.0)) problems.push_back("stop_eps: must be nonnegative");
    if (tol_merge && !(*tol_merge >= 0.0)) problems.push_back("tol_merge: must be nonnegative");
    if (!(tol_nbr >= 0.0)) problems.push_back("tol_nbr: must be nonnegative");
    if (stop_consecutive < 1) problems.push_back("stop_consecutive: must be at least 1");
    if (!problems.empty()) {
      std::string msg;
      for (const auto& s : problems) msg += (msg.empty() ? "" : "; ") + s;
      throw Error(ErrorCode::ConfigInvalid, msg);
    }
  }

  CircleParams params() const { return CircleParams::make(p, radius); }
};

/// Uniform double in [0, 1) from the top 53 bits of one mt19937_64 draw. Both
/// the engine and this mapping are fully specified, so seeds reproduce across
/// platforms (std::uniform_real_distribution is not).
inline double unit_uniform(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

/// Builds the t = 0 state, relabeling agents in phi order.
inline SystemState initial_state(const RunConfig& config) {
  config.validate();
  const CircleParams params = config.params();
  std::vector<double> xs;
  xs.reserve(config.n);
  switch (config.init) {
    case InitKind::RandomUniform: {
      std::mt19937_64 gen(config.seed);
      for (std::size_t i = 0; i < config.n; ++i) xs.push_back(unit_uniform(gen) * config.p);
      break;
    }
    case InitKind::EquallySpaced:
      for (std::size_t i = 0; i < config.n; ++i) {
        xs.push_back(static_cast<double>(i) * config.p / static_cast<double>(config.n));
      }
      break;
    case InitKind::Explicit:
      xs = config.positions;
      break;
  }
  return SystemState::make_relabeled(params, xs);
}

inline Trace simulate(const RunConfig& config) {
  const SystemState s0 = initial_state(config);
  return run(s0, config.horizon, config.stop_eps_value(),
             RunOptions{config.stop_consecutive, config.tol_nbr});
}

// ---------------------------------------------------------------------------
// JSONL traces
// ---------------------------------------------------------------------------

/// 17 significant digits: exact round trip for binary64.
inline std::string format_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

namespace detail {
inline void write_reals(std::ostream& os, const std::vector<double>& xs) {
  os << '[';
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) os << ',';
    os << format_real(xs[i]);
  }
  os << ']';
}

inline void write_edges(std::ostream& os, const std::vector<Edge>& edges) {
  os << '[';
  for (std::size_t k = 0; k < edges.size(); ++k) {
    if (k) os << ',';
    os << '[' << edges[k].first + 1 << ',' << edges[k].second + 1 << ']';
  }
  os << ']';
}

inline std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, v);
  return buf;
}
}  // namespace detail

inline void write_config_json(std::ostream& os, const RunConfig& c) {
  os << "{\"n\":" << c.n << ",\"p\":" << format_real(c.p) << ",\"radius\":" << format_real(c.radius)
     << ",\"seed\":" << c.seed << ",\"init\":\"" << to_string(c.init) << '"';
  if (c.init == InitKind::Explicit) {
    os << ",\"positions\":";
    detail::write_reals(os, c.positions);
  }
  os << ",\"horizon\":" << c.horizon << ",\"stop_eps\":" << format_real(c.stop_eps_value())
     << ",\"stop_consecutive\":" << c.stop_consecutive
     << ",\"tol_merge\":" << format_real(c.tol_merge_value())
     << ",\"tol_nbr\":" << format_real(c.tol_nbr)
     << ",\"record_matrices\":" << (c.record_matrices ? "true" : "false") << '}';
}

/// One JSONL line, without the trailing newline. Agent labels in events are
/// 1-based.
inline std::string record_to_json(const TraceRecord& rec) {
  std::ostringstream os;
  os << "{\"t\":" << rec.t << ",\"positions\":";
  detail::write_reals(os, rec.positions);
  os << ",\"moves\":";
  detail::write_reals(os, rec.moves);
  os << ",\"W\":" << format_real(rec.W) << ",\"graph_hash\":\"" << detail::hex64(rec.graph_hash)
     << "\",\"cut\":" << (rec.cut ? "true" : "false");
  if (rec.events) {
    os << ",\"events\":{\"added\":";
    detail::write_edges(os, rec.events->added);
    os << ",\"removed\":";
    detail::write_edges(os, rec.events->removed);
    os << '}';
  }
  os << '}';
  return os.str();
}

inline void write_trace(std::ostream& os, const RunConfig& config, const Trace& trace) {
  os << "{\"schema\":\"" << kTraceSchema << "\",\"config\":";
  write_config_json(os, config);
  os << "}\n";
  for (const auto& rec : trace.records) os << record_to_json(rec) << '\n';
}

namespace detail {
[[noreturn]] inline void corrupt(std::size_t line, const std::string& why) {
  throw Error(ErrorCode::TraceCorrupt, "line " + std::to_string(line) + ": " + why);
}

inline std::vector<Edge> parse_edges(const nlohmann::json& j, std::size_t n, std::size_t line) {
  std::vector<Edge> out;
  for (const auto& e : j) {
    const auto a = e.at(0).get<std::size_t>();
    const auto b = e.at(1).get<std::size_t>();
    if (a < 1 || b < 1 || a > n || b > n) corrupt(line, "event agent label out of range");
    out.emplace_back(a - 1, b - 1);
  }
  return out;
}
}  // namespace detail

inline RunConfig config_from_json(const nlohmann::json& j) {
  RunConfig c;
  c.n = j.at("n").get<std::size_t>();
  c.p = j.at("p").get<double>();
  c.radius = j.at("radius").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  const auto init = j.at("init").get<std::string>();
  if (init == "random-uniform") {
    c.init = InitKind::RandomUniform;
  } else if (init == "equally-spaced") {
    c.init = InitKind::EquallySpaced;
  } else if (init == "explicit") {
    c.init = InitKind::Explicit;
    c.positions = j.at("positions").get<std::vector<double>>();
  } else {
    throw Error(ErrorCode::ConfigInvalid, "init: unknown kind '" + init + "'");
  }
  c.horizon = j.at("horizon").get<std::size_t>();
  c.stop_eps = j.at("stop_eps").get<double>();
  c.stop_consecutive = j.value("stop_consecutive", std::size_t{1});
  c.tol_merge = j.at("tol_merge").get<double>();
  c.tol_nbr = j.at("tol_nbr").get<double>();
  c.record_matrices = j.value("record_matrices", false);
  c.validate();
  return c;
}

inline TraceRecord record_from_json(const nlohmann::json& j, std::size_t n, std::size_t line) {
  TraceRecord rec;
  rec.t = j.at("t").get<std::size_t>();
  rec.positions = j.at("positions").get<std::vector<double>>();
  rec.moves = j.at("moves").get<std::vector<double>>();
  rec.W = j.at("W").get<double>();
  rec.graph_hash = std::stoull(j.at("graph_hash").get<std::string>(), nullptr, 16);
  rec.cut = j.at("cut").get<bool>();
  if (rec.positions.size() != n || rec.moves.size() != n) {
    detail::corrupt(line, "expected " + std::to_string(n) + " agents");
  }
  const double nn = static_cast<double>(n * n);
  if (!(rec.W >= 0.0 && rec.W <= nn)) detail::corrupt(line, "W outside [0, n^2]");
  if (j.contains("events")) {
    GraphEvent ev;
    ev.t = rec.t == 0 ? 0 : rec.t - 1;
    ev.added = detail::parse_edges(j["events"].at("added"), n, line);
    ev.removed = detail::parse_edges(j["events"].at("removed"), n, line);
    rec.events = std::move(ev);
  }
  return rec;
}

struct TraceFile {
  RunConfig config;
  Trace trace;
};

/// Parses a JSONL trace. With `check_hashes`, every record's graph hash and
/// cut flag are recomputed from its positions and must match.
inline TraceFile read_trace(std::istream& is, bool check_hashes = true) {
  TraceFile out;
  std::string text;
  std::size_t line = 0;
  bool have_header = false;
  while (std::getline(is, text)) {
    ++line;
    if (text.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      detail::corrupt(line, e.what());
    }
    try {
      if (!have_header) {
        if (j.value("schema", std::string{}) != kTraceSchema) detail::corrupt(line, "missing or unknown schema");
        out.config = config_from_json(j.at("config"));
        out.trace.params = out.config.params();
        out.trace.tol_nbr = out.config.tol_nbr;
        have_header = true;
        continue;
      }
      TraceRecord rec = record_from_json(j, out.config.n, line);
      if (rec.t != out.trace.records.size()) detail::corrupt(line, "records must be consecutive from t = 0");
      out.trace.records.push_back(std::move(rec));
    } catch (const nlohmann::json::exception& e) {
      detail::corrupt(line, e.what());
    } catch (const Error& e) {
      if (e.code() == ErrorCode::TraceCorrupt) throw;
      detail::corrupt(line, e.what());
    }
  }
  if (!have_header) throw Error(ErrorCode::TraceCorrupt, "empty trace");
  if (out.trace.records.empty()) throw Error(ErrorCode::TraceCorrupt, "trace has no records");
  if (check_hashes) {
    for (std::size_t k = 0; k < out.trace.records.size(); ++k) {
      SystemState s;
      try {
        s = out.trace.state_at(k);
      } catch (const Error& e) {
        detail::corrupt(k + 2, e.what());
      }
      const auto g = compute_neighbors(s, out.trace.tol_nbr);
      if (g.hash() != out.trace.records[k].graph_hash) detail::corrupt(k + 2, "graph hash mismatch");
      if (detect_cut(g).cut != out.trace.records[k].cut) detail::corrupt(k + 2, "cut flag mismatch");
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dense matrix CSV
// ---------------------------------------------------------------------------

inline std::string to_string(MatrixKind k) { return k == MatrixKind::A ? "A" : "B"; }

/// Header line `t,kind,n`, then per matrix one `t,kind,n` line followed by its
/// n rows.
inline void write_matrices_csv(std::ostream& os, const std::vector<TransitionMatrix>& ms) {
  os << "t,kind,n\n";
  for (const auto& m : ms) {
    os << m.t << ',' << to_string(m.kind) << ',' << m.n << '\n';
    for (std::size_t i = 0; i < m.n; ++i) {
      for (std::size_t k = 0; k < m.n; ++k) {
        if (k) os << ',';
        os << format_real(m(i, k));
      }
      os << '\n';
    }
  }
}

}  // namespace hktorus
