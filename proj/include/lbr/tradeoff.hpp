#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "lbr/bounds.hpp"
#include "lbr/model.hpp"

namespace lbr {

/// ceil(r_bar * m), with values within 1e-9 of an integer snapped first.
/// Throws ConfigError for r_bar outside [0, 1].
int min_active_nodes(double r_bar, int m);

// Smallest m' >= min_active_nodes(r_bar, m) with both effective speedups
// above 1, or nullopt when even m' = m is overloaded.
std::optional<int> min_feasible_nodes(const RouterConfig& cfg, double r_bar);

inline constexpr std::int64_t kMaxSearchDelay = 1'000'000;

struct FrontierPoint {
  int m_active = 0;
  double power = 0.0;
  bool feasible = false;
  // Smallest integer d with end-to-end tail(d) <= target; empty when
  // infeasible or beyond kMaxSearchDelay.
  std::optional<std::int64_t> delay_bound;
  std::optional<std::int64_t> queue_bound;
};

struct FrontierOptions {
  EvalPolicy policy{};
  ScalingReading reading = ScalingReading::active;
  bool queue_bounds = true;
  unsigned threads = 0;  // 0 picks the hardware concurrency
  double sigma = 0.0;    // burst term for lookup_table, which has no traffic spec
};

/// One point per m' from floor(r_bar m / min(alpha, beta)) (the last
/// overloaded count, kept as an infeasible marker) up to m. Throws
/// OverloadError when no m' is feasible.
std::vector<FrontierPoint> frontier(const RouterConfig& cfg, const TrafficSpec& spec,
                                    const PowerModel& power, double target_prob,
                                    const FrontierOptions& opts = {});

// Smallest integer x >= 0 with log_tail(x) <= log_target, searched up to cap.
template <class F>
std::optional<std::int64_t> smallest_threshold(F&& log_tail, double log_target,
                                               std::int64_t cap = kMaxSearchDelay) {
  if (log_tail(0.0) <= log_target) return 0;
  std::int64_t lo = 0;
  std::int64_t hi = 1;
  while (log_tail(double(hi)) > log_target) {
    if (hi >= cap) return std::nullopt;
    lo = hi;
    hi = std::min(cap, hi * 2);
  }
  while (hi - lo > 1) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    (log_tail(double(mid)) <= log_target ? hi : lo) = mid;
  }
  return hi;
}

struct LookupRow {
  double load = 0.0;
  std::optional<int> m_active;  // empty when the budget cannot be met
  double power = 0.0;
  std::optional<std::int64_t> delay_bound;
};

/// For each load, the smallest m' whose end-to-end delay bound at target_prob
/// is within delay_budget (slots; +inf means feasibility alone).
std::vector<LookupRow> lookup_table(const RouterConfig& cfg, const PowerModel& power,
                                    const std::vector<double>& loads, double target_prob,
                                    double delay_budget, const FrontierOptions& opts = {});

}  // namespace lbr
