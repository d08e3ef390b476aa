#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <random>
#include <string>
#include <vector>

#include "lbr/bounds.hpp"
#include "lbr/model.hpp"

namespace lbr {

struct Packet {
  std::int64_t id = 0;
  std::int64_t admitted = 0;  // slot the packet entered Q1
  std::int64_t t1 = -1;       // slot served from Q1
  std::int64_t t2 = -1;       // slot served from Q2
  std::int64_t seq = 0;       // position in the queue it currently sits in
  int i = 0;
  int j = 0;
  int k = 0;
};

/// Fractional-rate link. Gains `rate` credit each slot, capped at 1 + rate,
/// and serves floor(credit) packets.
struct Link {
  std::deque<Packet> queue;
  double credit = 0.0;
  std::int64_t enqueued = 0;
  std::int64_t dequeued = 0;
};

struct TokenBucket {
  double depth = 1.0;
  double rate = 0.0;
  double tokens = 1.0;
  void refill() { tokens = std::min(depth, tokens + rate); }
  bool ready() const { return tokens >= 1.0; }
};

enum class Quantity { input_q, middle_q, output_q, input_d, middle_d, output_d, e2e_d };
inline constexpr std::array<Quantity, 7> kAllQuantities = {
    Quantity::input_q,  Quantity::middle_q, Quantity::output_q, Quantity::input_d,
    Quantity::middle_d, Quantity::output_d, Quantity::e2e_d};

std::string to_string(Quantity q);
Quantity quantity_from_string(const std::string& s);

/// Counts over integer values.
struct Histogram {
  std::vector<std::uint64_t> counts;
  std::uint64_t total = 0;
  std::uint64_t max_value = 0;
  double sum = 0.0;

  void add(std::uint64_t v);
  // Fraction of samples >= x.
  double tail(double x) const;
  double mean() const { return total ? sum / double(total) : 0.0; }
};

struct TailStats {
  std::int64_t warmup = 0;
  std::int64_t horizon = 0;
  std::array<Histogram, kAllQuantities.size()> hist;

  // Largest occupancy of any queue of each stage over each half of the run.
  std::array<std::uint64_t, 3> max_queue_first_half{};
  std::array<std::uint64_t, 3> max_queue_second_half{};

  const Histogram& at(Quantity q) const { return hist[static_cast<std::size_t>(q)]; }
  Histogram& at(Quantity q) { return hist[static_cast<std::size_t>(q)]; }
  bool operator==(const TailStats&) const;
};

bool operator==(const Histogram& a, const Histogram& b);

struct AuditOptions {
  bool enabled = false;
};

struct AuditReport {
  bool conservation = true;
  bool fifo = true;
  bool credits = true;
  bool shaping = true;
  std::vector<std::uint64_t> routing_counts;  // per active middle node
  std::vector<std::string> problems;
  bool ok() const { return conservation && fifo && credits && shaping; }
};

/// Three-stage router in slotted time. One slot of step():
///   arrivals are drawn per (i, k) and join a per-pair backlog, admitted when
///   the pair, input and output token buckets each hold a token; admitted
///   packets pick a random active middle node and join Q1[i][j]; then the
///   output, middle and input links are served in that order, so a packet
///   moves at most one stage per slot.
class Simulator {
 public:
  Simulator(const RouterConfig& cfg, const TrafficSpec& spec, std::uint64_t seed,
            AuditOptions audit = {});

  void step();
  std::int64_t clock() const { return clock_; }

  std::uint64_t injected() const { return injected_; }
  std::uint64_t departed() const { return departed_; }
  std::uint64_t resident() const;
  std::uint64_t backlog() const;

  const Link& q1(int i, int j) const { return q1_[idx1(i, j)]; }
  const Link& q2(int j, int k) const { return q2_[idx2(j, k)]; }
  const Link& q3(int k) const { return q3_[static_cast<std::size_t>(k)]; }

  // Per-link admitted arrival count into Q1 since the start.
  std::uint64_t link_arrivals(int i, int j) const { return q1_[idx1(i, j)].enqueued; }

  void set_stats(TailStats* stats) { stats_ = stats; }
  // Runs the shaping envelope check over the recorded history.
  AuditReport audit() const;

 private:
  std::size_t idx1(int i, int j) const { return static_cast<std::size_t>(i) * m_ + j; }
  std::size_t idx2(int j, int k) const { return static_cast<std::size_t>(j) * n_ + k; }
  void admit();
  void enqueue(Link& link, Packet p);
  template <class Fn>
  void serve(Link& link, double rate, Fn&& forward);
  void sample();

  RouterConfig cfg_;
  TrafficSpec spec_;
  int n_;
  int m_;
  std::int64_t clock_ = 0;
  std::int64_t next_id_ = 0;
  std::uint64_t injected_ = 0;
  std::uint64_t departed_ = 0;
  std::size_t rr_start_ = 0;
  std::vector<std::size_t> order_;

  std::vector<std::mt19937_64> arrival_rng_;
  std::mt19937_64 routing_rng_;

  std::vector<TokenBucket> pair_bucket_;
  std::vector<TokenBucket> input_bucket_;
  std::vector<TokenBucket> output_bucket_;
  std::vector<std::uint64_t> pending_;

  std::vector<Link> q1_;
  std::vector<Link> q2_;
  std::vector<Link> q3_;

  TailStats* stats_ = nullptr;

  AuditOptions audit_opts_;
  AuditReport audit_;
  // Per-slot admissions per pair, input and output (audit mode only).
  std::vector<std::vector<std::uint8_t>> admissions_;
};

/// Runs horizon slots and collects statistics after warmup. Refuses
/// inadmissible traffic with ConfigError.
TailStats run(const RouterConfig& cfg, const TrafficSpec& spec, std::uint64_t seed,
              std::int64_t horizon, std::int64_t warmup);

// Default warmup is a tenth of the horizon.
TailStats run(const RouterConfig& cfg, const TrafficSpec& spec, std::uint64_t seed,
              std::int64_t horizon);

/// Empirical P(X >= x) per threshold. Throws ConfigError when no samples.
TailCurve empirical_tail(const TailStats& stats, Quantity q, const std::vector<double>& thresholds);

/// Per-quantity domination check of the analytic bound.
struct ValidationRow {
  Quantity quantity;
  double threshold = 0.0;
  double empirical = 0.0;
  double bound = 1.0;
  double std_error = 0.0;
  std::uint64_t samples = 0;
  bool pass = true;
};

struct ValidationReport {
  std::vector<ValidationRow> rows;  // only thresholds with bound < 1
  bool ok() const;
  std::size_t failures() const;
};

struct ValidationOptions {
  std::vector<double> thresholds;  // defaults to 0..200
  EvalPolicy policy{};
  ScalingReading reading = ScalingReading::active;
  // Added to every log bound; negative values shrink the bound (test hook).
  double log_bias = 0.0;
};

/// Compares empirical tails with the bounds of the canonical system built
/// from the traffic's r-bar. PASS iff empirical <= bound + 3 standard errors.
/// The output stage is not checked.
ValidationReport validate_against_bounds(const TailStats& stats, const RouterConfig& cfg,
                                         const TrafficSpec& spec, const ValidationOptions& opts);

}  // namespace lbr
