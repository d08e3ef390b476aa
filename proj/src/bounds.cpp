#include "lbr/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "closed_forms.hpp"
#include "lbr/errors.hpp"
#include "lbr/log_sum.hpp"
#include "lbr/series.hpp"

namespace lbr {

void EvalPolicy::validate() const {
  if (!(tolerance > 0.0 && tolerance < 1.0)) throw ConfigError("policy: tolerance must be in (0, 1)");
  if (max_terms < 1) throw ConfigError("policy: max_terms must be >= 1");
  if (path == SumPath::closed_form && form == ChernoffForm::tight)
    throw ConfigError("policy: the closed forms are derived from the loose Chernoff form; use form=loose");
}

CanonicalParams scale_only(const RouterConfig& cfg, double r_bar, double sigma,
                           ScalingReading reading) {
  if (!(r_bar > 0.0)) throw NoTrafficError("canonicalize: r_bar must be > 0 (no traffic to scale)");
  CanonicalParams p;
  const double active = cfg.m_active;
  p.m_eff = reading == ScalingReading::active ? active : double(cfg.m);
  p.alpha_eff = cfg.alpha * active / (cfg.m * r_bar);
  p.beta_eff = cfg.beta * active / (cfg.m * r_bar);
  p.n = cfg.n;
  p.sigma = sigma;
  p.time_scale = r_bar;
  return p;
}

CanonicalParams canonicalize(const RouterConfig& cfg, double r_bar, double sigma,
                             ScalingReading reading) {
  const CanonicalParams p = scale_only(cfg, r_bar, sigma, reading);
  if (!(p.alpha_eff > 1.0) || !(p.beta_eff > 1.0)) {
    std::ostringstream msg;
    msg << "overload: effective speedups alpha=" << p.alpha_eff << " beta=" << p.beta_eff
        << " must both exceed 1 (m_active=" << cfg.m_active << ", r_bar=" << r_bar << ")";
    throw OverloadError(msg.str());
  }
  return p;
}

namespace {

void check_params(const CanonicalParams& p) {
  if (!(p.m_eff >= 1.0)) throw ConfigError("bounds: m_eff must be >= 1");
  if (p.n < 1) throw ConfigError("bounds: n must be >= 1");
  if (!(p.sigma >= 0.0)) throw ConfigError("bounds: sigma must be >= 0");
  if (!(p.time_scale > 0.0)) throw ConfigError("bounds: time_scale must be > 0");
  if (!(p.alpha_eff > 1.0) || !(p.beta_eff > 1.0))
    throw OverloadError("bounds: effective speedups must exceed 1 for a finite bound");
}

void check_threshold(double x) {
  if (!(x >= 0.0) || std::isnan(x)) throw DomainError("bounds: thresholds must be >= 0");
}

// Sums row(d) over d >= first. Stops once the row is decreasing and both the
// row and the geometric continuation of the last ratio fall below tolerance
// relative to the running total.
template <class Row>
double sum_rows(Row row, std::int64_t first, const EvalPolicy& pol, bool& capped) {
  LogSum acc;
  double prev = kNegInf;
  const double log_tol = std::log(pol.tolerance);
  for (std::int64_t d = first;; ++d) {
    const double r = row(d, acc.value());
    acc.add(r);
    const double total = acc.value();
    if (total == kPosInf) return kPosInf;
    if (d > first && r < prev) {
      const double lr = r - prev;
      const double tail = r == kNegInf ? kNegInf : r + lr - log1mexp(lr);
      if (r <= log_tol + total && tail <= log_tol + total) break;
    }
    if (r == kNegInf && prev == kNegInf && d > first + 64) break;
    if (d - first >= pol.max_terms) {
      capped = true;
      break;
    }
    prev = r;
  }
  return acc.value();
}

// First t >= 0 where pred(t) holds, for a predicate that stays true once true.
template <class Pred>
std::int64_t first_index(Pred pred) {
  if (pred(0)) return 0;
  std::int64_t bad = 0;
  std::int64_t good = 1;
  while (!pred(good)) {
    bad = good;
    if (good > (std::int64_t{1} << 60)) return kUnbounded;
    good *= 2;
  }
  while (good - bad > 1) {
    const std::int64_t mid = bad + (good - bad) / 2;
    (pred(mid) ? good : bad) = mid;
  }
  return good;
}

}  // namespace

BoundEvaluator::BoundEvaluator(const CanonicalParams& params, const EvalPolicy& policy)
    : p_(params), policy_(policy) {
  policy_.validate();
  check_params(p_);
}

double BoundEvaluator::input_closed(double q) const {
  return closed::log_input_queue(p_.m_eff, p_.alpha_eff, q);
}

double BoundEvaluator::input_numeric(double q, bool with_sigma) {
  const double m = p_.m_eff;
  const double sigma = with_sigma ? p_.sigma : 0.0;
  const ChernoffWindow w{sigma / m, 1.0 / m, q, p_.alpha_eff / m};
  SeriesControl ctl{policy_.tolerance, policy_.max_terms};
  const SeriesResult r = log_window_sum(policy_.form, w, 0, kUnbounded, ctl);
  capped_ |= r.capped;
  return r.log_value;
}

double BoundEvaluator::middle_closed(double q) const {
  return closed::log_middle_queue(p_.n, p_.m_eff, p_.alpha_eff, p_.beta_eff, q);
}

double BoundEvaluator::single_input_factor(std::int64_t d) {
  while (static_cast<std::int64_t>(single_factor_.size()) <= d) {
    const auto k = static_cast<double>(single_factor_.size());
    single_factor_.push_back(input_numeric(k * p_.alpha_eff / p_.m_eff));
  }
  return single_factor_[static_cast<std::size_t>(d)];
}

double BoundEvaluator::input_factor(std::int64_t d) {
  return std::log(double(p_.n)) + single_input_factor(d);
}

double BoundEvaluator::middle_numeric(double q) {
  const double m = p_.m_eff;
  SeriesControl ctl{policy_.tolerance, policy_.max_terms};
  auto row = [&](std::int64_t d, double scale) {
    const double lf = input_factor(d);
    if (lf == kNegInf) return kNegInf;
    const ChernoffWindow w{(double(d) + p_.sigma) / m, 1.0 / m, q, p_.beta_eff / m};
    const SeriesResult r = log_window_sum(policy_.form, w, 0, kUnbounded, ctl, scale - lf);
    capped_ |= r.capped;
    return lf + r.log_value;
  };
  return sum_rows(row, 0, policy_, capped_);
}

double BoundEvaluator::log_f(double q) {
  return policy_.path == SumPath::closed_form ? input_closed(q) : input_numeric(q);
}

double BoundEvaluator::log_g(double q) {
  if (policy_.path == SumPath::closed_form && p_.beta_eff <= 2.0) return middle_closed(q);
  return middle_numeric(q);
}

double BoundEvaluator::log_input_queue(double q) {
  check_threshold(q);
  return log_f(q) + log_bias_;
}

double BoundEvaluator::log_input_delay(double d, bool union_over_inputs) {
  check_threshold(d);
  const double q = d * p_.time_scale * p_.alpha_eff / p_.m_eff;
  return log_f(q) + (union_over_inputs ? std::log(double(p_.n)) : 0.0) + log_bias_;
}

double BoundEvaluator::log_middle_queue(double q) {
  check_threshold(q);
  return log_g(q) + log_bias_;
}

double BoundEvaluator::log_middle_delay(double d) {
  check_threshold(d);
  return log_g(d * p_.time_scale * p_.beta_eff / p_.m_eff) + log_bias_;
}

double BoundEvaluator::log_end_to_end_delay(double d) {
  check_threshold(d);
  const double dc = d * p_.time_scale;
  return log_add(log_f(dc * p_.alpha_eff / (2.0 * p_.m_eff)), log_g(dc * p_.beta_eff / (2.0 * p_.m_eff))) +
         log_bias_;
}

double BoundEvaluator::log_middle_queue_corrected(double q) {
  check_threshold(q);
  if (policy_.path != SumPath::numeric)
    throw ConfigError("the dependence-corrected bound is only available on the numeric path");
  const double n = p_.n;
  if (p_.n < 2) return kPosInf;
  const double m = p_.m_eff;
  const double beta = p_.beta_eff;
  const double cut = 5.0 * beta / (m * n);
  SeriesControl ctl{policy_.tolerance, policy_.max_terms};
  auto row = [&](std::int64_t d, double scale) {
    const double lf1 = single_input_factor(d);
    const double base = double(d) + p_.sigma;
    // (a) the flow's own arrivals are large; jointly with the delay event this
    // is at most min(delay bound, arrival bound).
    const ChernoffWindow wa{base / (m * n), 1.0 / (m * n), 0.0, cut};
    const std::int64_t cross = first_index([&](std::int64_t t) {
      return log_chernoff(policy_.form, wa.mean(double(t)), wa.threshold(double(t))) < lf1;
    });
    LogSum part;
    if (cross > 0) part.add(lf1 + std::log(double(cross)));
    if (cross != kUnbounded) {
      const SeriesResult ra = log_window_sum(policy_.form, wa, cross, kUnbounded, ctl, scale - std::log(n));
      capped_ |= ra.capped;
      part.add(ra.log_value);
    } else {
      part.add(kPosInf);
    }
    // (b) the other n - 1 flows carry the rest.
    const ChernoffWindow wb{base * (n - 1.0) / (n * m), (n - 1.0) / (n * m), q, beta / m - cut};
    const SeriesResult rb = log_window_sum(policy_.form, wb, 0, kUnbounded, ctl, scale - std::log(n) - lf1);
    capped_ |= rb.capped;
    part.add(lf1 + rb.log_value);
    return std::log(n) + part.value();
  };
  return sum_rows(row, 0, policy_, capped_) + log_bias_;
}

double BoundEvaluator::output_factor(std::int64_t d) {
  while (static_cast<std::int64_t>(output_factor_.size()) <= d) {
    const auto k = static_cast<double>(output_factor_.size());
    const double m = p_.m_eff;
    output_factor_.push_back(std::log(double(p_.n) * m) + log_f(k * p_.alpha_eff / (2.0 * m)) +
                             std::log(m) + log_g(k * p_.beta_eff / (2.0 * m)));
  }
  return output_factor_[static_cast<std::size_t>(d)];
}

double BoundEvaluator::log_output_queue(double q, const OutputStage& out) {
  check_threshold(q);
  if (!(out.epsilon > 0.0 && out.epsilon <= 1.0)) throw ConfigError("output: epsilon must be in (0, 1]");
  if (!(out.sigma_k >= 0.0)) throw ConfigError("output: sigma_k must be >= 0");
  const double shift = out.sigma_k - q;
  const auto first = static_cast<std::int64_t>(std::max(0.0, std::floor(-shift) + 1.0));
  auto row = [&](std::int64_t d, double) {
    const double weight = double(d) + shift;
    if (!(weight > 0.0)) return kNegInf;
    return output_factor(d) + std::log(weight / out.epsilon);
  };
  return sum_rows(row, first, policy_, capped_) + log_bias_;
}

double BoundEvaluator::log_output_delay(double d, const OutputStage& out) {
  check_threshold(d);
  return log_output_queue(d * p_.time_scale * (1.0 - out.epsilon), out);
}

namespace {

double clamp_prob(double log_p) {
  if (!(log_p < 0.0)) return 1.0;
  return std::exp(log_p);
}

}  // namespace

double input_queue_tail(double q, const CanonicalParams& p, const EvalPolicy& policy) {
  BoundEvaluator e(p, policy);
  return clamp_prob(e.log_input_queue(q));
}

double input_delay_tail(double d, const CanonicalParams& p, const EvalPolicy& policy,
                        bool union_over_inputs) {
  BoundEvaluator e(p, policy);
  return clamp_prob(e.log_input_delay(d, union_over_inputs));
}

double middle_queue_tail(double q, const CanonicalParams& p, const EvalPolicy& policy) {
  BoundEvaluator e(p, policy);
  return clamp_prob(e.log_middle_queue(q));
}

double middle_delay_tail(double d, const CanonicalParams& p, const EvalPolicy& policy) {
  BoundEvaluator e(p, policy);
  return clamp_prob(e.log_middle_delay(d));
}

double end_to_end_delay_tail(double d, const CanonicalParams& p, const EvalPolicy& policy) {
  BoundEvaluator e(p, policy);
  return clamp_prob(e.log_end_to_end_delay(d));
}

double middle_queue_tail_corrected(double q, const CanonicalParams& p, const EvalPolicy& policy) {
  BoundEvaluator e(p, policy);
  return clamp_prob(e.log_middle_queue_corrected(q));
}

double output_queue_tail(double q, const CanonicalParams& p, double epsilon, double sigma_k,
                         const EvalPolicy& policy) {
  BoundEvaluator e(p, policy);
  return clamp_prob(e.log_output_queue(q, {epsilon, sigma_k}));
}

double output_delay_tail(double d, const CanonicalParams& p, double epsilon, double sigma_k,
                         const EvalPolicy& policy) {
  BoundEvaluator e(p, policy);
  return clamp_prob(e.log_output_delay(d, {epsilon, sigma_k}));
}

std::string to_string(CurveKind k) {
  switch (k) {
    case CurveKind::input_q: return "input_q";
    case CurveKind::input_d: return "input_d";
    case CurveKind::middle_q: return "middle_q";
    case CurveKind::middle_d: return "middle_d";
    case CurveKind::e2e_d: return "e2e_d";
    case CurveKind::output_q: return "output_q";
    case CurveKind::output_d: return "output_d";
    case CurveKind::middle_q_corrected: return "middle_q_corrected";
  }
  return "?";
}

CurveKind curve_kind_from_string(const std::string& s) {
  for (auto k : {CurveKind::input_q, CurveKind::input_d, CurveKind::middle_q, CurveKind::middle_d,
                 CurveKind::e2e_d, CurveKind::output_q, CurveKind::output_d,
                 CurveKind::middle_q_corrected})
    if (to_string(k) == s) return k;
  throw ConfigError("unknown curve kind '" + s + "'");
}

TailPoint make_point(double threshold, double log_p) {
  TailPoint pt;
  pt.threshold = threshold;
  pt.probability = clamp_prob(log_p);
  pt.log10_probability = (log_p < 0.0) ? log_p / std::log(10.0) : 0.0;
  return pt;
}

TailCurve tail_curve(CurveKind kind, const std::vector<double>& thresholds, BoundEvaluator& eval,
                     const OutputStage& out) {
  for (std::size_t i = 1; i < thresholds.size(); ++i)
    if (!(thresholds[i] > thresholds[i - 1]))
      throw ConfigError("tail_curve: thresholds must be strictly increasing");
  TailCurve curve;
  double running = kPosInf;
  for (double x : thresholds) {
    double l = 0.0;
    switch (kind) {
      case CurveKind::input_q: l = eval.log_input_queue(x); break;
      case CurveKind::input_d: l = eval.log_input_delay(x); break;
      case CurveKind::middle_q: l = eval.log_middle_queue(x); break;
      case CurveKind::middle_d: l = eval.log_middle_delay(x); break;
      case CurveKind::e2e_d: l = eval.log_end_to_end_delay(x); break;
      case CurveKind::output_q: l = eval.log_output_queue(x, out); break;
      case CurveKind::output_d: l = eval.log_output_delay(x, out); break;
      case CurveKind::middle_q_corrected: l = eval.log_middle_queue_corrected(x); break;
    }
    running = std::min(running, l);
    curve.points.push_back(make_point(x, running));
  }
  curve.truncation_cap_reached = eval.truncation_cap_reached();
  return curve;
}

TailCurve tail_curve(CurveKind kind, const std::vector<double>& thresholds, const CanonicalParams& p,
                     const EvalPolicy& policy, const OutputStage& out) {
  BoundEvaluator e(p, policy);
  return tail_curve(kind, thresholds, e, out);
}

}  // namespace lbr
