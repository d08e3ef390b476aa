#include <doctest.h>

#include <cmath>

#include "lbr/bounds.hpp"
#include "lbr/errors.hpp"
#include "lbr/log_sum.hpp"
#include "oracles.hpp"

using namespace lbr;

namespace {

CanonicalParams params(double m, double alpha, double beta, int n, double sigma = 0.0) {
  CanonicalParams p;
  p.m_eff = m;
  p.alpha_eff = alpha;
  p.beta_eff = beta;
  p.n = n;
  p.sigma = sigma;
  return p;
}

EvalPolicy policy(ChernoffForm f, SumPath path = SumPath::numeric) {
  EvalPolicy p;
  p.form = f;
  p.path = path;
  return p;
}

const EvalPolicy kTight = policy(ChernoffForm::tight);
const EvalPolicy kLoose = policy(ChernoffForm::loose);
const EvalPolicy kClosed = policy(ChernoffForm::loose, SumPath::closed_form);

oracle::Form of(ChernoffForm f) { return f == ChernoffForm::tight ? oracle::Form::tight : oracle::Form::loose; }

double rel(double a, double b) { return std::abs(std::expm1(a - b)); }

}  // namespace

TEST_CASE("canonicalize") {
  const CanonicalParams id = canonicalize({20, 80, 80, 2.0, 2.0, 0.05}, 1.0);
  CHECK(id.m_eff == 80.0);
  CHECK(id.alpha_eff == 2.0);
  CHECK(id.beta_eff == 2.0);
  CHECK(id.time_scale == 1.0);

  const CanonicalParams s = canonicalize({20, 80, 60, 2.0, 3.0, 0.05}, 0.75);
  CHECK(s.m_eff == 60.0);
  CHECK(s.alpha_eff == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(s.beta_eff == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(s.time_scale == 0.75);

  const CanonicalParams disp = canonicalize({20, 80, 60, 2.0, 3.0, 0.05}, 0.75, 0.0, ScalingReading::full);
  CHECK(disp.m_eff == 80.0);
  CHECK(disp.alpha_eff == doctest::Approx(2.0));

  CHECK_THROWS_AS(canonicalize({20, 80, 40, 2.0, 2.0, 0.05}, 1.0), OverloadError);
  CHECK_THROWS_AS(canonicalize({20, 80, 80, 2.0, 2.0, 0.05}, 0.0), NoTrafficError);
  CHECK(scale_only({20, 80, 40, 2.0, 2.0, 0.05}, 1.0).alpha_eff == 1.0);
}

TEST_CASE("policy validation") {
  CHECK_NOTHROW(kClosed.validate());
  CHECK_THROWS_AS(policy(ChernoffForm::tight, SumPath::closed_form).validate(), ConfigError);
  EvalPolicy p;
  p.tolerance = 0.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  CHECK_THROWS_AS(BoundEvaluator(params(80, 1.0, 2.0, 20), kTight), OverloadError);
}

TEST_CASE("input queue closed form") {
  // e^-10 / (1 - e^-1/3)
  CHECK(input_queue_tail(30, params(1, 2.0, 2.0, 1), kClosed) == doctest::Approx(1.6015853410259206e-4).epsilon(1e-12));
  // two-term form, split at t - s = qm / (2 - alpha)
  CHECK(input_queue_tail(30, params(1, 1.5, 2.0, 1), kClosed) == doctest::Approx(8.456685317871454e-2).epsilon(1e-12));
  CHECK(input_queue_tail(0, params(1, 1.5, 2.0, 1), kClosed) == 1.0);

  // Exactly log-linear with slope -1/3 once alpha >= 2.
  BoundEvaluator e(params(80, 2.5, 2.0, 20), kClosed);
  for (double q : {5.0, 17.0, 60.0}) CHECK(e.log_input_queue(q + 3.0) - e.log_input_queue(q) == doctest::Approx(-1.0));
}

TEST_CASE("input queue numeric path matches direct summation") {
  for (ChernoffForm f : {ChernoffForm::tight, ChernoffForm::loose})
    for (double m : {1.0, 8.0, 80.0})
      for (double alpha : {1.2, 2.0, 3.5})
        for (double sigma : {0.0, 3.0})
          for (double q : {0.5, 5.0, 30.0}) {
            BoundEvaluator e(params(m, alpha, 2.0, 4, sigma), policy(f));
            const double o = double(oracle::log_input(of(f), m, alpha, sigma, q));
            CHECK_MESSAGE(rel(e.log_input_queue(q), o) < 1e-10, "m=" << m << " alpha=" << alpha << " q=" << q);
          }
  // Loose numeric equals the closed form when every term has delta >= 1.
  CHECK(input_queue_tail(30, params(1, 2.0, 2.0, 1), kLoose) == doctest::Approx(1.6015853410259206e-4).epsilon(1e-11));
}

TEST_CASE("input delay") {
  const CanonicalParams p = params(1, 2.0, 2.0, 1);
  CHECK(input_delay_tail(0, p, kClosed) == 1.0);
  CHECK(input_delay_tail(15, p, kClosed) == doctest::Approx(input_queue_tail(30, p, kClosed)).epsilon(1e-15));
  // 20 e^-20 / (1 - e^-1/240)
  CHECK(input_delay_tail(2400, params(80, 2.0, 2.0, 20), kClosed, true) ==
        doctest::Approx(9.914163237492144e-6).epsilon(1e-12));
}

TEST_CASE("middle queue numeric path matches direct summation") {
  for (ChernoffForm f : {ChernoffForm::tight, ChernoffForm::loose})
    for (double sigma : {0.0, 2.0})
      for (double q : {1.0, 6.0, 15.0}) {
        BoundEvaluator e(params(8, 2.2, 1.7, 4, sigma), policy(f));
        const double o = double(oracle::log_middle(of(f), 4, 8, 2.2, 1.7, sigma, q));
        CHECK_MESSAGE(rel(e.log_middle_queue(q), o) < 1e-10, "q=" << q << " sigma=" << sigma);
      }
}

TEST_CASE("middle queue reference values at n=20, m=80") {
  // Direct double sums, long double, run once and frozen (each takes ~30 s).
  BoundEvaluator loose(params(80, 2.0, 2.0, 20), kLoose);
  CHECK(rel(loose.log_middle_queue(40), 6.11527958425445) < 1e-9);
  BoundEvaluator tight(params(80, 2.0, 2.0, 20), kTight);
  CHECK(rel(tight.log_middle_queue(40), -26.8871672247163) < 1e-9);
  CHECK(rel(tight.log_middle_queue_corrected(40), 13.6447758567257) < 1e-9);
}

TEST_CASE("closed forms dominate the numeric sums") {
  for (double alpha : {1.5, 2.0, 3.0})
    for (double beta : {1.2, 1.6, 2.0}) {
      BoundEvaluator closed(params(8, alpha, beta, 4), kClosed);
      BoundEvaluator numeric(params(8, alpha, beta, 4), kLoose);
      for (double q : {1.0, 4.0, 10.0, 25.0}) {
        CHECK(closed.log_input_queue(q) >= numeric.log_input_queue(q) - 1e-12);
        CHECK_MESSAGE(closed.log_middle_queue(q) >= numeric.log_middle_queue(q) - 1e-12,
                      "alpha=" << alpha << " beta=" << beta << " q=" << q);
      }
    }
  // Above beta = 2 the closed path falls back to the numeric sum.
  BoundEvaluator closed(params(8, 3.0, 3.0, 4), kClosed);
  BoundEvaluator numeric(params(8, 3.0, 3.0, 4), kLoose);
  CHECK(closed.log_middle_queue(5) == numeric.log_middle_queue(5));
}

TEST_CASE("tight form is below loose form") {
  BoundEvaluator t(params(8, 1.8, 2.4, 4, 1.0), kTight);
  BoundEvaluator l(params(8, 1.8, 2.4, 4, 1.0), kLoose);
  for (double x : {0.0, 2.0, 7.0, 20.0}) {
    CHECK(t.log_input_queue(x) <= l.log_input_queue(x) + 1e-12);
    CHECK(t.log_middle_queue(x) <= l.log_middle_queue(x) + 1e-12);
    CHECK(t.log_end_to_end_delay(10 * x) <= l.log_end_to_end_delay(10 * x) + 1e-12);
  }
}

TEST_CASE("middle delay and end-to-end delay") {
  const CanonicalParams p = params(80, 2.0, 2.0, 20);
  CHECK(middle_delay_tail(0, p, kTight) == 1.0);
  BoundEvaluator e(p, kTight);
  CHECK(e.log_middle_delay(1600) == e.log_middle_queue(40));
  CHECK(e.log_middle_delay(3200) <= e.log_middle_delay(1600));
  CHECK(end_to_end_delay_tail(0, p, kTight) == 1.0);

  for (double d : {800.0, 2400.0, 4000.0}) {
    const double f = e.log_input_queue(d * 2.0 / 160.0);
    const double g = e.log_middle_queue(d * 2.0 / 160.0);
    CHECK(e.log_end_to_end_delay(d) == doctest::Approx(log_add(f, g)).epsilon(1e-14));
  }
  // Both parts near 1e-6 add to about 2e-6.
  BoundEvaluator s(params(8, 2.0, 4.0, 4), kTight);
  const double f = std::exp(s.log_input_queue(1.0));
  CHECK(std::exp(s.log_end_to_end_delay(8.0)) == doctest::Approx(f + std::exp(s.log_middle_queue(2.0))));
}

TEST_CASE("time scaling") {
  // m = 80, m' = 60, r-bar = 0.75 against the canonical m = 60 system with
  // thresholds in canonical slots.
  const CanonicalParams scaled = canonicalize({20, 80, 60, 2.0, 3.0, 0.05}, 0.75);
  const CanonicalParams direct = canonicalize({20, 60, 60, 2.0, 3.0, 0.05}, 1.0);
  BoundEvaluator a(scaled, kTight), b(direct, kTight);
  for (double d : {100.0, 1000.0, 4000.0}) {
    CHECK(rel(a.log_end_to_end_delay(d), b.log_end_to_end_delay(d * 0.75)) < 1e-12);
    CHECK(rel(a.log_input_delay(d), b.log_input_delay(d * 0.75)) < 1e-12);
    CHECK(rel(a.log_middle_delay(d), b.log_middle_delay(d * 0.75)) < 1e-12);
  }
  CHECK(rel(a.log_middle_queue(12.0), b.log_middle_queue(12.0)) < 1e-12);
}

TEST_CASE("dependence-corrected bound") {
  const CanonicalParams p = params(4, 2.2, 2.2, 10);
  BoundEvaluator e(p, kTight);
  for (double q : {2.0, 10.0}) {
    const double o = double(oracle::log_middle_corrected(oracle::Form::tight, 10, 4, 2.2, 2.2, 0.0, q));
    CHECK(rel(e.log_middle_queue_corrected(q), o) < 1e-10);
  }
  CHECK(middle_queue_tail_corrected(0, p, kTight) == 1.0);
  CHECK(e.log_middle_queue_corrected(3.0) >= e.log_middle_queue(3.0));
  const TailCurve c = tail_curve(CurveKind::middle_q_corrected, {10, 20, 30, 40, 50, 60, 70, 80}, e);
  for (std::size_t i = 1; i < c.points.size(); ++i) CHECK(c.points[i].probability <= c.points[i - 1].probability);

  // The other flows' share of the threshold shrinks with the window unless
  // beta (n - 5) > n - 1; the sum then diverges.
  BoundEvaluator few(params(8, 2.2, 2.2, 4), kTight);
  CHECK(few.log_middle_queue_corrected(5.0) == kPosInf);
  BoundEvaluator single(params(8, 2.2, 2.2, 1), kTight);
  CHECK(single.log_middle_queue_corrected(5.0) == kPosInf);
  BoundEvaluator closed(p, kClosed);
  CHECK_THROWS_AS(closed.log_middle_queue_corrected(5.0), ConfigError);
}

TEST_CASE("output stage") {
  BoundEvaluator e(params(8, 2.2, 2.2, 4, 1.0), kTight);
  // Direct triple sum, long double, frozen.
  CHECK(rel(e.log_output_queue(20, {0.05, 0.0}), 17.3425637999604) < 1e-9);
  const CanonicalParams p = params(8, 2.2, 2.2, 4);
  CHECK(output_queue_tail(0, p, 1.0, 0.0, kTight) == 1.0);
  CHECK(output_delay_tail(0, p, 0.05, 0.0, kTight) == 1.0);
  CHECK(output_delay_tail(50, p, 1.0, 0.0, kTight) == output_queue_tail(0, p, 1.0, 0.0, kTight));
  CHECK_THROWS_AS(output_queue_tail(5, p, 0.0, 0.0, kTight), ConfigError);
  const TailCurve c = tail_curve(CurveKind::output_d, {0, 200, 400, 800, 1600}, p, kTight, {0.05, 0.0});
  for (std::size_t i = 1; i < c.points.size(); ++i) CHECK(c.points[i].probability <= c.points[i - 1].probability);
}

TEST_CASE("tail curves") {
  const CanonicalParams p = params(80, 2.0, 2.0, 20);
  const TailCurve zero = tail_curve(CurveKind::middle_q, {0}, p, kTight);
  REQUIRE(zero.points.size() == 1);
  CHECK(zero.points[0].threshold == 0.0);
  CHECK(zero.points[0].probability == 1.0);
  CHECK(zero.points[0].log10_probability == 0.0);
  CHECK_THROWS_AS(tail_curve(CurveKind::input_q, {1, 1}, p, kTight), ConfigError);
  CHECK_THROWS_AS(tail_curve(CurveKind::input_q, {3, 2}, p, kTight), ConfigError);
  CHECK_THROWS_AS(input_queue_tail(-1, p, kTight), DomainError);

  // Far tails keep their log10 after the probability underflows.
  const TailPoint far = make_point(5.0, -2000.0);
  CHECK(far.probability == 0.0);
  CHECK(far.log10_probability == doctest::Approx(-2000.0 / std::log(10.0)));

  for (const std::string name : {"input_q", "input_d", "middle_q", "middle_d", "e2e_d", "output_q", "output_d", "middle_q_corrected"})
    CHECK(to_string(curve_kind_from_string(name)) == name);
  CHECK_THROWS_AS(curve_kind_from_string("bogus"), ConfigError);

  // Figure 2 configuration: higher speedup gives a lower curve.
  std::vector<double> q;
  for (int x = 10; x <= 100; x += 10) q.push_back(x);
  std::vector<TailCurve> curves;
  for (double s : {2.0, 3.0, 4.0, 5.0}) curves.push_back(tail_curve(CurveKind::middle_q, q, params(80, s, s, 20), kTight));
  for (std::size_t c = 1; c < curves.size(); ++c)
    for (std::size_t i = 0; i < q.size(); ++i)
      CHECK(curves[c].points[i].log10_probability < curves[c - 1].points[i].log10_probability);
}

TEST_CASE("bias hook and term cap") {
  BoundEvaluator e(params(8, 2.0, 2.0, 4), kTight);
  const double base = e.log_middle_queue(10);
  e.set_log_bias(std::log(0.5));
  CHECK(e.log_middle_queue(10) == doctest::Approx(base + std::log(0.5)));

  EvalPolicy capped = kTight;
  capped.max_terms = 3;
  BoundEvaluator c(params(80, 2.0, 2.0, 20), capped);
  c.log_middle_queue(40);
  CHECK(c.truncation_cap_reached());
  CHECK_FALSE(e.truncation_cap_reached());
}
