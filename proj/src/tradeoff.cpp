#include "lbr/tradeoff.hpp"

#include <algorithm>
#include <cmath>

#include "lbr/errors.hpp"
#include "parallel.hpp"

namespace lbr {

int min_active_nodes(double r_bar, int m) {
  if (!(r_bar >= 0.0) || r_bar > 1.0 + kRateTolerance)
    throw ConfigError("min_active_nodes: load must be in [0, 1] (inadmissible traffic)");
  if (m < 0) throw ConfigError("min_active_nodes: m must be >= 0");
  double x = std::min(r_bar, 1.0) * m;
  const double nearest = std::round(x);
  if (std::abs(x - nearest) <= 1e-9) x = nearest;
  return static_cast<int>(std::ceil(x));
}

namespace {

bool speedups_ok(const RouterConfig& cfg, int m_active, double r_bar) {
  RouterConfig c = cfg;
  c.m_active = m_active;
  const CanonicalParams p = scale_only(c, r_bar);
  return p.alpha_eff > 1.0 && p.beta_eff > 1.0;
}

FrontierPoint evaluate_point(const RouterConfig& cfg, int m_active, double r_bar, double sigma,
                             const PowerModel& power, double log_target, const FrontierOptions& opts) {
  FrontierPoint pt;
  pt.m_active = m_active;
  pt.power = power.power(m_active);
  if (m_active < 1 || !speedups_ok(cfg, m_active, r_bar)) return pt;
  pt.feasible = true;
  RouterConfig c = cfg;
  c.m_active = m_active;
  BoundEvaluator eval(canonicalize(c, r_bar, sigma, opts.reading), opts.policy);
  pt.delay_bound = smallest_threshold([&](double d) { return eval.log_end_to_end_delay(d); }, log_target);
  if (opts.queue_bounds)
    pt.queue_bound = smallest_threshold([&](double q) { return eval.log_middle_queue(q); }, log_target);
  return pt;
}

}  // namespace

std::optional<int> min_feasible_nodes(const RouterConfig& cfg, double r_bar) {
  for (int m_active = std::max(1, min_active_nodes(r_bar, cfg.m)); m_active <= cfg.m; ++m_active)
    if (speedups_ok(cfg, m_active, r_bar)) return m_active;
  return std::nullopt;
}

std::vector<FrontierPoint> frontier(const RouterConfig& cfg, const TrafficSpec& spec,
                                    const PowerModel& power, double target_prob,
                                    const FrontierOptions& opts) {
  if (!(target_prob > 0.0 && target_prob < 1.0)) throw ConfigError("frontier: target must be in (0, 1)");
  if (power.max_active() < cfg.m) throw ConfigError("frontier: power model does not cover m' = m");
  if (spec.n() != cfg.n) throw ConfigError("frontier: traffic matrix does not match n");
  const double r_bar = max_load(spec);
  if (r_bar <= 0.0) throw NoTrafficError("frontier: traffic has zero load");
  min_active_nodes(r_bar, cfg.m);

  const double slowest = std::min(cfg.alpha, cfg.beta);
  const int first = std::clamp(static_cast<int>(std::floor(r_bar * cfg.m / slowest + 1e-9)), 1, cfg.m);
  std::vector<FrontierPoint> points(static_cast<std::size_t>(cfg.m - first + 1));
  const double log_target = std::log(target_prob);
  detail::parallel_for(points.size(), opts.threads, [&](std::size_t i) {
    points[i] = evaluate_point(cfg, first + static_cast<int>(i), r_bar, spec.sigma(), power, log_target, opts);
  });
  if (std::none_of(points.begin(), points.end(), [](const FrontierPoint& p) { return p.feasible; }))
    throw OverloadError("no feasible configuration: every m' leaves an effective speedup <= 1");
  return points;
}

std::vector<LookupRow> lookup_table(const RouterConfig& cfg, const PowerModel& power,
                                    const std::vector<double>& loads, double target_prob,
                                    double delay_budget, const FrontierOptions& opts) {
  if (!(target_prob > 0.0 && target_prob < 1.0)) throw ConfigError("lookup: target must be in (0, 1)");
  for (double r : loads)
    if (!(r > 0.0 && r <= 1.0)) throw ConfigError("lookup: loads must be in (0, 1]");
  const double log_target = std::log(target_prob);
  FrontierOptions point_opts = opts;
  point_opts.queue_bounds = false;

  std::vector<LookupRow> rows(loads.size());
  detail::parallel_for(loads.size(), opts.threads, [&](std::size_t r) {
    LookupRow& row = rows[r];
    row.load = loads[r];
    const auto lo = min_feasible_nodes(cfg, row.load);
    if (!lo) return;
    auto meets = [&](int m_active) {
      const FrontierPoint pt = evaluate_point(cfg, m_active, row.load, opts.sigma, power, log_target, point_opts);
      return pt.delay_bound && double(*pt.delay_bound) <= delay_budget ? pt.delay_bound : std::nullopt;
    };
    if (std::isinf(delay_budget)) {
      row.m_active = *lo;
      row.delay_bound = meets(*lo);
      row.power = power.power(*lo);
      return;
    }
    // The delay bound does not increase with m', so bisect on m'.
    if (!meets(cfg.m)) return;
    int bad = *lo - 1;
    int good = cfg.m;
    while (good - bad > 1) {
      const int mid = bad + (good - bad) / 2;
      (meets(mid) ? good : bad) = mid;
    }
    row.m_active = good;
    row.delay_bound = meets(good);
    row.power = power.power(good);
  });
  return rows;
}

}  // namespace lbr
