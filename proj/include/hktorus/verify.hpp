#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "hktorus/analysis.hpp"
#include "hktorus/spectral.hpp"
#include "hktorus/trace.hpp"

namespace hktorus {

inline constexpr const char* kReportSchema = "hk-torus-verify/1";

/// Check names accepted by verify_trace, in report order.
inline const std::vector<std::string>& all_checks() {
  static const std::vector<std::string> names = {
      "lyapunov", "k2-bound", "prop3", "prop4", "perimeter", "matrix-identity",
      "column-stochastic", "rooted", "velocity-recursion", "rate"};
  return names;
}

/// Comma-separated list (or "all") into validated check names.
inline std::vector<std::string> parse_checks(std::string_view csv) {
  if (csv.empty() || csv == "all") return all_checks();
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= csv.size()) {
    const auto end = std::min(csv.find(',', start), csv.size());
    std::string name(csv.substr(start, end - start));
    if (!name.empty()) {
      if (std::find(all_checks().begin(), all_checks().end(), name) == all_checks().end()) {
        throw Error(ErrorCode::UnknownCheck, "'" + name + "'");
      }
      if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(name);
    }
    start = end + 1;
  }
  return out;
}

enum class CheckStatus { Pass, Fail, Skipped };

inline std::string to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::Pass: return "pass";
    case CheckStatus::Fail: return "fail";
    case CheckStatus::Skipped: return "skipped";
  }
  return "skipped";
}

struct CheckResult {
  CheckResult() = default;
  explicit CheckResult(std::string n) : name(std::move(n)) {}

  std::string name;
  CheckStatus status = CheckStatus::Skipped;
  std::string reason;             // set when skipped
  std::size_t steps_checked = 0;  // steps, events or matrices examined
  std::size_t violations = 0;
  double max_residual = 0.0;      // check-specific worst value, see detail
  std::string detail;

  static CheckResult skipped(std::string name, std::string reason) {
    CheckResult r;
    r.name = std::move(name);
    r.reason = std::move(reason);
    return r;
  }
};

struct VerifyReport {
  std::size_t n = 0;
  double p = 0.0;
  double radius = 0.0;
  std::size_t last_t = 0;
  std::vector<CheckResult> checks;
  GraphStabilityReport stability;
  std::optional<RateEstimate> rate;
  std::string rate_skip_reason;

  bool ok() const {
    return std::none_of(checks.begin(), checks.end(),
                        [](const CheckResult& c) { return c.status == CheckStatus::Fail; });
  }

  const CheckResult* find(std::string_view name) const {
    for (const auto& c : checks) {
      if (c.name == name) return &c;
    }
    return nullptr;
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["schema"] = kReportSchema;
    j["n"] = n;
    j["p"] = p;
    j["radius"] = radius;
    j["last_t"] = last_t;
    j["ok"] = ok();
    auto& cj = j["checks"];
    cj = nlohmann::ordered_json::object();
    for (const auto& c : checks) {
      nlohmann::ordered_json e;
      e["status"] = to_string(c.status);
      if (c.status == CheckStatus::Skipped) {
        e["reason"] = c.reason;
      } else {
        e["checked"] = c.steps_checked;
        e["violations"] = c.violations;
        e["max_residual"] = c.max_residual;
      }
      if (!c.detail.empty()) e["detail"] = c.detail;
      cj[c.name] = std::move(e);
    }
    nlohmann::ordered_json edges = nlohmann::ordered_json::array();
    for (const auto& [a, b] : stability.final_edges) edges.push_back({a + 1, b + 1});
    j["stability"] = {{"t0_candidate", stability.t0_candidate},
                      {"stable_window", stability.stable_window},
                      {"final_edges", std::move(edges)}};
    if (rate) {
      j["rate"] = {{"status", "estimated"},
                   {"rho_hat", rate->rho_hat},
                   {"r_squared", rate->r_squared},
                   {"fit_window", {rate->fit_first, rate->fit_last}},
                   {"points", rate->points},
                   {"worst_case_rate", rate->worst_case_rate}};
    } else {
      j["rate"] = {{"status", "skipped"}, {"reason", rate_skip_reason}};
    }
    return j;
  }
};

namespace detail {

inline std::string format_gap(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", x);
  return buf;
}

/// Precomputed per-record data shared by the checks.
struct TraceView {
  const Trace& trace;
  std::vector<SystemState> states;
  std::vector<InfluenceGraph> graphs;
  std::vector<bool> cut;
  std::size_t first_cut;  // records.size() when never cut

  explicit TraceView(const Trace& tr) : trace(tr) {
    states.reserve(tr.records.size());
    for (std::size_t k = 0; k < tr.records.size(); ++k) {
      states.push_back(tr.state_at(k));
      graphs.push_back(compute_neighbors(states.back(), tr.tol_nbr));
      cut.push_back(detect_cut(graphs.back()).cut);
    }
    first_cut = static_cast<std::size_t>(std::find(cut.begin(), cut.end(), true) - cut.begin());
  }

  std::size_t size() const { return states.size(); }
  double p() const { return trace.params.p; }
  double n() const { return static_cast<double>(trace.agents()); }
  bool unit_radius() const { return trace.params.r == 1.0; }
};

inline void finish(CheckResult& c) {
  c.status = c.violations == 0 ? CheckStatus::Pass : CheckStatus::Fail;
}

inline CheckResult run_lyapunov(const TraceView& v) {
  if (!v.unit_radius()) return CheckResult::skipped("lyapunov", "radius-not-unit");
  if (v.size() < 2) return CheckResult::skipped("lyapunov", "horizon-too-short");
  CheckResult c{"lyapunov"};
  const double tol = 1e-9 * v.n() * v.n();
  double worst = 0.0;
  for (const auto& rec : check_lyapunov_decrease(v.trace)) {
    ++c.steps_checked;
    if (rec.slack() < -tol) ++c.violations;
    worst = std::max(worst, -rec.slack());
  }
  c.max_residual = worst;
  c.detail = "max of 4*sum(move^2) - (W(t) - W(t+1))";
  finish(c);
  return c;
}

inline CheckResult run_k2(const TraceView& v) {
  if (!v.unit_radius()) return CheckResult::skipped("k2-bound", "radius-not-unit");
  CheckResult c{"k2-bound"};
  const double bound = v.n() * v.n() / 4.0 + 1e-9 * v.n() * v.n();
  const auto acc = kinetic_energy(v.trace, 2.0);
  for (double prefix : acc.prefix) {
    ++c.steps_checked;
    if (prefix > bound) ++c.violations;
  }
  c.max_residual = acc.partial;
  c.detail = "largest K2 prefix; bound n^2/4 = " + std::to_string(v.n() * v.n() / 4.0);
  finish(c);
  return c;
}

inline CheckResult run_prop3(const TraceView& v) {
  CheckResult c{"prop3"};
  for (std::size_t k = 0; k + 1 < v.size(); ++k) {
    if (diff_graphs(v.graphs[k], v.graphs[k + 1]).added.empty()) continue;
    ++c.steps_checked;
    if (!find_left_gainer(v.graphs[k], v.graphs[k + 1])) {
      ++c.violations;
      if (c.detail.empty()) c.detail = "no left gainer for the link additions at t = " + std::to_string(k);
    }
  }
  finish(c);
  return c;
}

inline CheckResult run_prop4(const TraceView& v) {
  if (!v.unit_radius()) return CheckResult::skipped("prop4", "radius-not-unit");
  CheckResult c{"prop4"};
  std::size_t unverifiable = 0;
  double worst_margin = -1.0;  // largest (threshold - achieved move)
  for (std::size_t k = 0; k + 1 < v.size(); ++k) {
    if (diff_graphs(v.graphs[k], v.graphs[k + 1]).added.empty()) continue;
    if (k + 2 > v.trace.last_t()) {
      ++unverifiable;
      continue;
    }
    const auto res = check_addlink_move(v.trace, k);
    ++c.steps_checked;
    if (!res.pass) ++c.violations;
    worst_margin = c.steps_checked == 1 ? res.threshold - res.magnitude
                                        : std::max(worst_margin, res.threshold - res.magnitude);
  }
  c.max_residual = c.steps_checked ? worst_margin : 0.0;
  c.detail = "max of 1/(6n) - largest move";
  if (unverifiable) c.detail += "; " + std::to_string(unverifiable) + " event(s) too close to the end";
  finish(c);
  return c;
}

inline CheckResult run_perimeter(const TraceView& v) {
  if (v.first_cut == 0) return CheckResult::skipped("perimeter", "cut-present");
  CheckResult c{"perimeter"};
  double min_gap = 0.0;
  for (std::size_t k = 0; k < v.first_cut; ++k) {
    const auto x = diff_vector(v.states[k]);
    const double res = std::abs(x.sum() - v.p());
    const double lo = *std::min_element(x.entries.begin(), x.entries.end());
    min_gap = k == 0 ? lo : std::min(min_gap, lo);
    ++c.steps_checked;
    if (res > 1e-9 * v.p() || lo < -1e-12 * v.p()) ++c.violations;
    c.max_residual = std::max(c.max_residual, res);
  }
  c.detail = "max |sum x* - p|; smallest gap " + format_gap(min_gap);
  finish(c);
  return c;
}

struct MatrixChecks {
  CheckResult identity{"matrix-identity"};
  CheckResult stochastic{"column-stochastic"};
  CheckResult rooted{"rooted"};
};

inline MatrixChecks run_matrix_checks(const TraceView& v, double tol_merge) {
  MatrixChecks out;
  std::string reason;
  if (!v.trace.params.strict_sixth()) reason = "radius-too-large";
  else if (v.first_cut == 0) reason = "cut-present";
  else if (v.size() < 2) reason = "horizon-too-short";
  if (!reason.empty()) {
    out.identity = CheckResult::skipped("matrix-identity", reason);
    out.stochastic = CheckResult::skipped("column-stochastic", reason);
    out.rooted = CheckResult::skipped("rooted", reason);
    return out;
  }
  const std::size_t n = v.trace.agents();
  double min_entry = 0.0;
  for (std::size_t k = 0; k < v.first_cut && k + 1 < v.size(); ++k) {
    const auto A = build_A(v.states[k], v.graphs[k]);
    const auto x0 = diff_vector(v.states[k]);
    const auto x1 = diff_vector(v.states[k + 1]);
    const auto pred = A.apply(x0.entries);
    double res = 0.0;
    for (std::size_t i = 0; i < n; ++i) res = std::max(res, std::abs(pred[i] - x1.entries[i]));
    const double lo = A.min_entry();
    min_entry = std::min(min_entry, lo);
    ++out.identity.steps_checked;
    if (res > 1e-9 * v.p() || lo < -1e-12) ++out.identity.violations;
    out.identity.max_residual = std::max(out.identity.max_residual, res);

    double dev = 0.0;
    for (double s : column_sums(A)) dev = std::max(dev, std::abs(s - 1.0));
    ++out.stochastic.steps_checked;
    if (dev > 1e-9) ++out.stochastic.violations;
    out.stochastic.max_residual = std::max(out.stochastic.max_residual, dev);

    ++out.rooted.steps_checked;
    try {
      const auto merges = detect_merges(v.states[k + 1], tol_merge);
      const auto rr = check_rooted(A, merges);
      if (!rr.rooted || rr.tree_edges.size() + 1 != n) {
        ++out.rooted.violations;
        if (out.rooted.detail.empty()) out.rooted.detail = "first failure at t = " + std::to_string(k);
      }
    } catch (const Error& e) {
      ++out.rooted.violations;
      if (out.rooted.detail.empty()) out.rooted.detail = e.what();
    }
  }
  out.identity.detail = "max ||A x*(t) - x*(t+1)||_inf; min entry " + format_gap(min_entry);
  out.stochastic.detail = "max |column sum - 1|";
  finish(out.identity);
  finish(out.stochastic);
  finish(out.rooted);
  return out;
}

inline CheckResult run_velocity(const TraceView& v, std::size_t t0) {
  const char* name = "velocity-recursion";
  if (!v.trace.params.strict_sixth()) return CheckResult::skipped(name, "radius-too-large");
  if (v.first_cut < v.size()) return CheckResult::skipped(name, "cut-present");
  if (t0 + 2 > v.trace.last_t()) return CheckResult::skipped(name, "horizon-too-short");
  CheckResult c{name};
  const auto res = check_velocity_recursion(v.trace, t0, v.graphs);
  c.steps_checked = res.residuals.size();
  for (double r : res.residuals) {
    if (r > res.tolerance) ++c.violations;
  }
  c.max_residual = res.max_residual;
  c.detail = "max ||xdot(t) - B xdot(t-1)||_inf for t > " + std::to_string(t0);
  finish(c);
  return c;
}

}  // namespace detail

/// Runs the selected checks over a trace. Graphs, cut flags and every
/// derived quantity are recomputed from the recorded positions.
inline VerifyReport verify_trace(const Trace& trace, const std::vector<std::string>& checks,
                                 double tol_merge) {
  if (trace.records.empty()) throw Error(ErrorCode::TraceCorrupt, "trace has no records");
  const detail::TraceView view(trace);
  VerifyReport rep;
  rep.n = trace.agents();
  rep.p = trace.params.p;
  rep.radius = trace.params.r;
  rep.last_t = trace.last_t();
  rep.stability = detect_stability(trace, view.graphs);

  auto wanted = [&checks](std::string_view name) {
    return std::find(checks.begin(), checks.end(), name) != checks.end();
  };
  std::optional<detail::MatrixChecks> matrix;
  if (wanted("matrix-identity") || wanted("column-stochastic") || wanted("rooted")) {
    matrix = detail::run_matrix_checks(view, tol_merge);
  }

  try {
    rep.rate = estimate_rate(trace, rep.stability.t0_candidate);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::InsufficientDecayData) throw;
    rep.rate_skip_reason = "no-decay-data";
  }

  for (const auto& name : all_checks()) {
    if (!wanted(name)) continue;
    if (name == "lyapunov") rep.checks.push_back(detail::run_lyapunov(view));
    else if (name == "k2-bound") rep.checks.push_back(detail::run_k2(view));
    else if (name == "prop3") rep.checks.push_back(detail::run_prop3(view));
    else if (name == "prop4") rep.checks.push_back(detail::run_prop4(view));
    else if (name == "perimeter") rep.checks.push_back(detail::run_perimeter(view));
    else if (name == "matrix-identity") rep.checks.push_back(matrix->identity);
    else if (name == "column-stochastic") rep.checks.push_back(matrix->stochastic);
    else if (name == "rooted") rep.checks.push_back(matrix->rooted);
    else if (name == "velocity-recursion") {
      rep.checks.push_back(detail::run_velocity(view, rep.stability.t0_candidate));
    } else if (name == "rate") {
      if (!rep.rate) {
        rep.checks.push_back(CheckResult::skipped("rate", rep.rate_skip_reason));
      } else {
        CheckResult c{"rate"};
        c.steps_checked = rep.rate->points;
        c.max_residual = rep.rate->rho_hat;
        c.violations = (rep.rate->rho_hat < 1.0 && rep.rate->r_squared >= 0.9) ? 0 : 1;
        c.detail = "rho_hat; fit r^2 " + detail::format_gap(rep.rate->r_squared);
        detail::finish(c);
        rep.checks.push_back(c);
      }
    }
  }
  return rep;
}

inline VerifyReport verify_trace(const Trace& trace, double tol_merge) {
  return verify_trace(trace, all_checks(), tol_merge);
}

}  // namespace hktorus
