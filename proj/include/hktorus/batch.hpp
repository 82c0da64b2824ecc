#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "hktorus/io.hpp"
#include "hktorus/verify.hpp"

namespace hktorus {

/// Summary of simulate + verify for one seed.
struct BatchRow {
  std::uint64_t seed = 0;
  std::size_t n = 0;
  std::size_t last_t = 0;
  bool cut = false;  // cut at the final record
  std::size_t passed = 0;
  std::size_t failed = 0;
  std::size_t skipped = 0;
  std::string failed_checks;  // '|' separated
  double max_k2 = 0.0;
  std::size_t t0 = 0;
  std::size_t stable_window = 0;
  std::optional<double> rho_hat;
  std::optional<double> r_squared;
  std::string error;
};

inline BatchRow run_seed(const RunConfig& tmpl, std::uint64_t seed,
                         const std::vector<std::string>& checks) {
  BatchRow row;
  row.seed = seed;
  row.n = tmpl.n;
  try {
    RunConfig cfg = tmpl;
    cfg.seed = seed;
    const Trace trace = simulate(cfg);
    const VerifyReport rep = verify_trace(trace, checks, cfg.tol_merge_value());
    row.last_t = trace.last_t();
    row.cut = trace.records.back().cut;
    for (const auto& c : rep.checks) {
      switch (c.status) {
        case CheckStatus::Pass: ++row.passed; break;
        case CheckStatus::Skipped: ++row.skipped; break;
        case CheckStatus::Fail:
          ++row.failed;
          row.failed_checks += (row.failed_checks.empty() ? "" : "|") + c.name;
          break;
      }
    }
    row.max_k2 = kinetic_energy(trace, 2.0).partial;
    row.t0 = rep.stability.t0_candidate;
    row.stable_window = rep.stability.stable_window;
    if (rep.rate) {
      row.rho_hat = rep.rate->rho_hat;
      row.r_squared = rep.rate->r_squared;
    }
  } catch (const std::exception& e) {
    row.error = e.what();
  }
  return row;
}

/// Runs seeds [first, first + count) on `parallelism` worker threads. Rows
/// come back sorted by seed regardless of scheduling.
inline std::vector<BatchRow> run_batch(const RunConfig& tmpl, std::uint64_t first,
                                       std::uint64_t count, std::size_t parallelism,
                                       const std::vector<std::string>& checks = all_checks()) {
  tmpl.validate();
  std::vector<BatchRow> rows(count);
  std::atomic<std::uint64_t> next{0};
  auto worker = [&] {
    for (std::uint64_t k = next++; k < count; k = next++) {
      rows[k] = run_seed(tmpl, first + k, checks);
    }
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min<std::uint64_t>(parallelism, count));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return rows;
}

inline void write_batch_csv(std::ostream& os, const std::vector<BatchRow>& rows) {
  os << "seed,n,last_t,cut,passed,failed,skipped,failed_checks,max_k2,t0,stable_window,"
        "rho_hat,r_squared,error\n";
  for (const auto& r : rows) {
    std::string err = r.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    os << r.seed << ',' << r.n << ',' << r.last_t << ',' << (r.cut ? 1 : 0) << ',' << r.passed
       << ',' << r.failed << ',' << r.skipped << ',' << r.failed_checks << ','
       << format_real(r.max_k2) << ',' << r.t0 << ',' << r.stable_window << ','
       << (r.rho_hat ? format_real(*r.rho_hat) : "") << ','
       << (r.r_squared ? format_real(*r.r_squared) : "") << ',' << err << '\n';
  }
}

}  // namespace hktorus
