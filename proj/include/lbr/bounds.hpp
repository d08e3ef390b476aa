#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lbr/chernoff.hpp"
#include "lbr/model.hpp"

namespace lbr {

enum class SumPath { closed_form, numeric };

// How the time-scaled system is built when m' < m or r-bar < 1.
//   active: m_eff = m'
//   full:   m_eff = m
enum class ScalingReading { active, full };

struct EvalPolicy {
  ChernoffForm form = ChernoffForm::tight;
  SumPath path = SumPath::numeric;
  double tolerance = 1e-12;
  std::int64_t max_terms = 10'000'000;

  // Closed forms exist only for the loose form.
  void validate() const;
};

/// Parameters of the time-scaled router the bounds are evaluated on.
/// Delay thresholds are given in original slots and multiplied by time_scale.
struct CanonicalParams {
  double m_eff = 1.0;
  double alpha_eff = 2.0;
  double beta_eff = 2.0;
  int n = 1;
  double sigma = 0.0;
  double time_scale = 1.0;
};

/// Throws NoTrafficError for r_bar <= 0 and OverloadError when an effective
/// speedup is <= 1.
CanonicalParams canonicalize(const RouterConfig& cfg, double r_bar, double sigma = 0.0,
                             ScalingReading reading = ScalingReading::active);

// Same scaling without the feasibility checks.
CanonicalParams scale_only(const RouterConfig& cfg, double r_bar, double sigma = 0.0,
                           ScalingReading reading = ScalingReading::active);

struct OutputStage {
  double epsilon = 0.05;
  double sigma_k = 0.0;
};

/// Evaluates the tail bounds of one canonical system. Every method returns the
/// natural log of the raw bound, which may exceed 0. Intermediate per-d factors
/// are cached, so sweeping thresholds on one evaluator is much cheaper than
/// building a fresh one per point.
class BoundEvaluator {
 public:
  BoundEvaluator(const CanonicalParams& params, const EvalPolicy& policy);

  const CanonicalParams& params() const { return p_; }
  const EvalPolicy& policy() const { return policy_; }

  double log_input_queue(double q);
  /// Single queue, or any of the n queues feeding one middle node.
  double log_input_delay(double d, bool union_over_inputs = false);
  double log_middle_queue(double q);
  double log_middle_delay(double d);
  double log_end_to_end_delay(double d);
  double log_middle_queue_corrected(double q);
  double log_output_queue(double q, const OutputStage& out);
  double log_output_delay(double d, const OutputStage& out);

  // Scales every returned bound by this factor (log added). Test hook for
  // negative controls; 0 leaves results untouched.
  void set_log_bias(double b) { log_bias_ = b; }

  // Set once any sum hit the term cap; the value returned is then not a bound.
  bool truncation_cap_reached() const { return capped_; }

 private:
  double input_closed(double q) const;
  double input_numeric(double q, bool with_sigma = true);
  double middle_closed(double q) const;
  double middle_numeric(double q);
  double input_factor(std::int64_t d);       // log n f(d alpha / m), cached
  double single_input_factor(std::int64_t d);  // log f(d alpha / m), cached
  double output_factor(std::int64_t d);       // log nm f(..) m g(..), cached
  double log_f(double q);
  double log_g(double q);

  CanonicalParams p_;
  EvalPolicy policy_;
  double log_bias_ = 0.0;
  bool capped_ = false;
  std::vector<double> input_factor_;
  std::vector<double> single_factor_;
  std::vector<double> output_factor_;
};

// Clamped probabilities, one evaluator per call.
double input_queue_tail(double q, const CanonicalParams& p, const EvalPolicy& policy);
double input_delay_tail(double d, const CanonicalParams& p, const EvalPolicy& policy,
                        bool union_over_inputs = false);
double middle_queue_tail(double q, const CanonicalParams& p, const EvalPolicy& policy);
double middle_delay_tail(double d, const CanonicalParams& p, const EvalPolicy& policy);
double end_to_end_delay_tail(double d, const CanonicalParams& p, const EvalPolicy& policy);
double middle_queue_tail_corrected(double q, const CanonicalParams& p, const EvalPolicy& policy);
double output_queue_tail(double q, const CanonicalParams& p, double epsilon, double sigma_k,
                         const EvalPolicy& policy);
double output_delay_tail(double d, const CanonicalParams& p, double epsilon, double sigma_k,
                         const EvalPolicy& policy);

enum class CurveKind { input_q, input_d, middle_q, middle_d, e2e_d, output_q, output_d, middle_q_corrected };

std::string to_string(CurveKind k);
CurveKind curve_kind_from_string(const std::string& s);

struct TailPoint {
  double threshold = 0.0;
  double probability = 1.0;
  double log10_probability = 0.0;
};

struct TailCurve {
  std::vector<TailPoint> points;
  std::uint64_t samples = 0;  // empirical curves only
  bool truncation_cap_reached = false;
};

// exp(log_p) clamped into [0, 1], and the matching log10.
TailPoint make_point(double threshold, double log_p);

/// Points are clamped, then made non-increasing with a running minimum
/// (a bound at a smaller threshold also bounds every larger one).
TailCurve tail_curve(CurveKind kind, const std::vector<double>& thresholds, BoundEvaluator& eval,
                     const OutputStage& out = {});
TailCurve tail_curve(CurveKind kind, const std::vector<double>& thresholds,
                     const CanonicalParams& p, const EvalPolicy& policy, const OutputStage& out = {});

}  // namespace lbr
