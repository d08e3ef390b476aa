#include "lbr/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "lbr/errors.hpp"

namespace lbr {

std::string to_string(Quantity q) {
  switch (q) {
    case Quantity::input_q: return "input_q";
    case Quantity::middle_q: return "middle_q";
    case Quantity::output_q: return "output_q";
    case Quantity::input_d: return "input_d";
    case Quantity::middle_d: return "middle_d";
    case Quantity::output_d: return "output_d";
    case Quantity::e2e_d: return "e2e_d";
  }
  return "?";
}

Quantity quantity_from_string(const std::string& s) {
  for (Quantity q : kAllQuantities)
    if (to_string(q) == s) return q;
  throw ConfigError("unknown quantity '" + s + "'");
}

void Histogram::add(std::uint64_t v) {
  if (v >= counts.size()) counts.resize(v + 1, 0);
  ++counts[v];
  ++total;
  max_value = std::max(max_value, v);
  sum += double(v);
}

double Histogram::tail(double x) const {
  if (total == 0) return 0.0;
  if (x <= 0.0) return 1.0;
  const double c = std::ceil(x);
  if (c > double(max_value)) return 0.0;
  std::uint64_t above = 0;
  for (auto v = static_cast<std::size_t>(c); v < counts.size(); ++v) above += counts[v];
  return double(above) / double(total);
}

bool operator==(const Histogram& a, const Histogram& b) {
  return a.counts == b.counts && a.total == b.total && a.max_value == b.max_value && a.sum == b.sum;
}

bool TailStats::operator==(const TailStats& o) const {
  return warmup == o.warmup && horizon == o.horizon && hist == o.hist &&
         max_queue_first_half == o.max_queue_first_half &&
         max_queue_second_half == o.max_queue_second_half;
}

namespace {

std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

bool bernoulli(std::mt19937_64& rng, double p) {
  return double(rng() >> 11) * 0x1.0p-53 < p;
}

TokenBucket make_bucket(double burst, double rate) {
  TokenBucket b;
  // Cap at burst + 1 + rate: admissions over any k slots stay within
  // burst + 1 + rate * k, and a backlogged bucket never discards credit.
  b.depth = burst + 1.0 + rate;
  b.rate = rate;
  b.tokens = b.depth;
  return b;
}

}  // namespace

Simulator::Simulator(const RouterConfig& cfg, const TrafficSpec& spec, std::uint64_t seed,
                     AuditOptions audit)
    : cfg_(cfg), spec_(spec), n_(cfg.n), m_(cfg.m), audit_opts_(audit) {
  cfg_.validate();
  const AdmissibilityReport rep = validate_admissible(spec_, cfg_);
  if (!rep.ok()) throw ConfigError("inadmissible traffic: " + rep.describe());
  for (double r : spec_.rates())
    if (r > 1.0) throw ConfigError("traffic: per-pair rates must be <= 1");

  const auto pairs = static_cast<std::size_t>(n_) * n_;
  arrival_rng_.reserve(pairs);
  for (std::size_t p = 0; p < pairs; ++p) arrival_rng_.push_back(make_stream(seed, p + 1));
  routing_rng_ = make_stream(seed, 0);

  for (int i = 0; i < n_; ++i)
    for (int k = 0; k < n_; ++k) pair_bucket_.push_back(make_bucket(spec_.pair_burst(i, k), spec_.rate(i, k)));
  input_bucket_.assign(n_, make_bucket(spec_.sigma(), 1.0));
  output_bucket_.assign(n_, make_bucket(spec_.sigma(), 1.0 - cfg_.epsilon));
  pending_.assign(pairs, 0);

  q1_.resize(static_cast<std::size_t>(n_) * m_);
  q2_.resize(static_cast<std::size_t>(m_) * n_);
  q3_.resize(n_);

  audit_.routing_counts.assign(cfg_.m_active, 0);
  if (audit_opts_.enabled) admissions_.resize(pairs + 2 * static_cast<std::size_t>(n_));
}

std::uint64_t Simulator::resident() const {
  std::uint64_t r = 0;
  for (const auto& l : q1_) r += l.queue.size();
  for (const auto& l : q2_) r += l.queue.size();
  for (const auto& l : q3_) r += l.queue.size();
  return r;
}

std::uint64_t Simulator::backlog() const {
  std::uint64_t b = 0;
  for (auto p : pending_) b += p;
  return b;
}

void Simulator::enqueue(Link& link, Packet p) {
  p.seq = link.enqueued++;
  link.queue.push_back(p);
}

template <class Fn>
void Simulator::serve(Link& link, double rate, Fn&& forward) {
  link.credit = std::min(link.credit + rate, 1.0 + rate);
  if (audit_opts_.enabled && (link.credit < 0.0 || link.credit > 1.0 + rate + 1e-12)) {
    audit_.credits = false;
    audit_.problems.push_back("credit out of range at slot " + std::to_string(clock_));
  }
  while (link.credit >= 1.0 && !link.queue.empty()) {
    Packet p = link.queue.front();
    link.queue.pop_front();
    if (audit_opts_.enabled && p.seq != link.dequeued) {
      audit_.fifo = false;
      audit_.problems.push_back("FIFO order broken at slot " + std::to_string(clock_));
    }
    ++link.dequeued;
    link.credit -= 1.0;
    forward(p);
  }
}

void Simulator::admit() {
  for (auto& b : pair_bucket_) b.refill();
  for (auto& b : input_bucket_) b.refill();
  for (auto& b : output_bucket_) b.refill();

  const auto pairs = pending_.size();
  for (std::size_t p = 0; p < pairs; ++p)
    if (bernoulli(arrival_rng_[p], spec_.rates()[p])) ++pending_[p];

  if (audit_opts_.enabled)
    for (auto& h : admissions_) h.push_back(0);

  std::uniform_int_distribution<int> pick(0, cfg_.m_active - 1);
  // Fullest pair buckets go first: a full bucket blocked by its input or
  // output bucket would lose credit at the next refill.
  order_.resize(pairs);
  for (std::size_t s = 0; s < pairs; ++s) order_[s] = (rr_start_ + s) % pairs;
  bool progress = true;
  while (progress) {
    progress = false;
    std::stable_sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) {
      return pair_bucket_[a].tokens > pair_bucket_[b].tokens;
    });
    for (const std::size_t p : order_) {
      if (pending_[p] == 0) continue;
      const int i = static_cast<int>(p / n_);
      const int k = static_cast<int>(p % n_);
      if (!pair_bucket_[p].ready() || !input_bucket_[i].ready() || !output_bucket_[k].ready()) continue;
      pair_bucket_[p].tokens -= 1.0;
      input_bucket_[i].tokens -= 1.0;
      output_bucket_[k].tokens -= 1.0;
      --pending_[p];
      progress = true;

      Packet pk;
      pk.id = next_id_++;
      pk.admitted = clock_;
      pk.i = i;
      pk.k = k;
      pk.j = pick(routing_rng_);
      ++audit_.routing_counts[pk.j];
      enqueue(q1_[idx1(i, pk.j)], pk);
      ++injected_;
      if (audit_opts_.enabled) {
        ++admissions_[p].back();
        ++admissions_[pairs + i].back();
        ++admissions_[pairs + n_ + k].back();
      }
    }
  }
  rr_start_ = (rr_start_ + 1) % pairs;
}

void Simulator::step() {
  admit();

  const double out_rate = 1.0;
  const double mid_rate = cfg_.beta / m_;
  const double in_rate = cfg_.alpha / m_;
  const bool record = stats_ && clock_ >= stats_->warmup;

  for (int k = 0; k < n_; ++k) {
    serve(q3_[k], out_rate, [&](const Packet& p) {
      ++departed_;
      if (record) stats_->at(Quantity::output_d).add(static_cast<std::uint64_t>(clock_ - (p.t2 + 1)));
    });
  }
  for (int j = 0; j < cfg_.m_active; ++j) {
    for (int k = 0; k < n_; ++k) {
      serve(q2_[idx2(j, k)], mid_rate, [&](Packet p) {
        p.t2 = clock_;
        if (record) {
          const auto d1 = static_cast<std::uint64_t>(p.t1 - p.admitted);
          const auto d2 = static_cast<std::uint64_t>(p.t2 - (p.t1 + 1));
          stats_->at(Quantity::middle_d).add(d2);
          stats_->at(Quantity::e2e_d).add(d1 + d2);
        }
        enqueue(q3_[p.k], p);
      });
    }
  }
  for (int i = 0; i < n_; ++i) {
    for (int j = 0; j < cfg_.m_active; ++j) {
      serve(q1_[idx1(i, j)], in_rate, [&](Packet p) {
        p.t1 = clock_;
        if (record) stats_->at(Quantity::input_d).add(static_cast<std::uint64_t>(p.t1 - p.admitted));
        enqueue(q2_[idx2(j, p.k)], p);
      });
    }
  }

  if (audit_opts_.enabled && injected_ != departed_ + resident()) {
    audit_.conservation = false;
    audit_.problems.push_back("conservation broken at slot " + std::to_string(clock_));
  }
  if (stats_) sample();
  ++clock_;
}

void Simulator::sample() {
  TailStats& s = *stats_;
  const bool record = clock_ >= s.warmup;
  auto& maxes = clock_ < s.horizon / 2 ? s.max_queue_first_half : s.max_queue_second_half;
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < cfg_.m_active; ++j) {
      const auto v = q1_[idx1(i, j)].queue.size();
      maxes[0] = std::max<std::uint64_t>(maxes[0], v);
      if (record) s.at(Quantity::input_q).add(v);
    }
  for (int j = 0; j < cfg_.m_active; ++j)
    for (int k = 0; k < n_; ++k) {
      const auto v = q2_[idx2(j, k)].queue.size();
      maxes[1] = std::max<std::uint64_t>(maxes[1], v);
      if (record) s.at(Quantity::middle_q).add(v);
    }
  for (int k = 0; k < n_; ++k) {
    const auto v = q3_[k].queue.size();
    maxes[2] = std::max<std::uint64_t>(maxes[2], v);
    if (record) s.at(Quantity::output_q).add(v);
  }
}

namespace {

// Largest A(s, t) - rate (t - s) over all windows of a per-slot count series.
// Lindley form keeps the running value small, so rounding stays near 1e-13
// even over millions of slots.
double max_excess(const std::vector<std::uint8_t>& counts, double rate) {
  double ending_here = 0.0;
  double worst = 0.0;
  for (const std::uint8_t c : counts) {
    ending_here = std::max(0.0, ending_here) + double(c) - rate;
    worst = std::max(worst, ending_here);
  }
  return worst;
}

}  // namespace

AuditReport Simulator::audit() const {
  AuditReport rep = audit_;
  if (!audit_opts_.enabled) return rep;
  const auto pairs = pending_.size();
  auto check = [&](const std::vector<std::uint8_t>& series, double burst, double rate,
                   const std::string& what) {
    const double excess = max_excess(series, rate);
    if (excess > burst + 1.0 + 1e-9) {
      rep.shaping = false;
      std::ostringstream msg;
      msg << what << " exceeds its envelope by " << excess - burst - 1.0 << " packets";
      rep.problems.push_back(msg.str());
    }
  };
  for (std::size_t p = 0; p < pairs; ++p)
    check(admissions_[p], spec_.pair_bursts()[p], spec_.rates()[p], "pair " + std::to_string(p));
  for (int i = 0; i < n_; ++i) check(admissions_[pairs + i], spec_.sigma(), 1.0, "input " + std::to_string(i));
  for (int k = 0; k < n_; ++k)
    check(admissions_[pairs + n_ + k], spec_.sigma(), 1.0 - cfg_.epsilon, "output " + std::to_string(k));
  return rep;
}

TailStats run(const RouterConfig& cfg, const TrafficSpec& spec, std::uint64_t seed,
              std::int64_t horizon, std::int64_t warmup) {
  if (warmup < 0 || horizon < warmup) throw ConfigError("sim: need horizon >= warmup >= 0");
  Simulator sim(cfg, spec, seed);
  TailStats stats;
  stats.warmup = warmup;
  stats.horizon = horizon;
  sim.set_stats(&stats);
  for (std::int64_t t = 0; t < horizon; ++t) sim.step();
  return stats;
}

TailStats run(const RouterConfig& cfg, const TrafficSpec& spec, std::uint64_t seed,
              std::int64_t horizon) {
  return run(cfg, spec, seed, horizon, horizon / 10);
}

TailCurve empirical_tail(const TailStats& stats, Quantity q, const std::vector<double>& thresholds) {
  const Histogram& h = stats.at(q);
  if (h.total == 0) throw ConfigError("no samples for " + to_string(q));
  TailCurve c;
  c.samples = h.total;
  for (double x : thresholds) {
    const double p = h.tail(x);
    c.points.push_back({x, p, p > 0.0 ? std::log10(p) : -std::numeric_limits<double>::infinity()});
  }
  return c;
}

bool ValidationReport::ok() const { return failures() == 0; }

std::size_t ValidationReport::failures() const {
  return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const ValidationRow& r) { return !r.pass; }));
}

ValidationReport validate_against_bounds(const TailStats& stats, const RouterConfig& cfg,
                                         const TrafficSpec& spec, const ValidationOptions& opts) {
  ValidationReport rep;
  const double r_bar = max_load(spec);
  if (r_bar <= 0.0) return rep;
  BoundEvaluator eval(canonicalize(cfg, r_bar, spec.sigma(), opts.reading), opts.policy);
  eval.set_log_bias(opts.log_bias);

  std::vector<double> thresholds = opts.thresholds;
  if (thresholds.empty())
    for (int x = 0; x <= 200; ++x) thresholds.push_back(x);

  const Quantity checked[] = {Quantity::input_q, Quantity::middle_q, Quantity::input_d,
                              Quantity::middle_d, Quantity::e2e_d};
  for (Quantity q : checked) {
    const Histogram& h = stats.at(q);
    if (h.total == 0) continue;
    for (double x : thresholds) {
      double log_b = 0.0;
      switch (q) {
        case Quantity::input_q: log_b = eval.log_input_queue(x); break;
        case Quantity::middle_q: log_b = eval.log_middle_queue(x); break;
        case Quantity::input_d: log_b = eval.log_input_delay(x); break;
        case Quantity::middle_d: log_b = eval.log_middle_delay(x); break;
        default: log_b = eval.log_end_to_end_delay(x); break;
      }
      if (!(log_b < 0.0)) continue;
      ValidationRow row;
      row.quantity = q;
      row.threshold = x;
      row.bound = std::exp(log_b);
      row.empirical = h.tail(x);
      row.samples = h.total;
      row.std_error = std::sqrt(row.empirical * (1.0 - row.empirical) / double(h.total));
      row.pass = row.empirical <= row.bound + 3.0 * row.std_error;
      rep.rows.push_back(row);
    }
  }
  return rep;
}

}  // namespace lbr
