#include "lbr/series.hpp"

#include <algorithm>
#include <array>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <vector>

#include "lbr/log_sum.hpp"

namespace lbr {

namespace {

// A run is integrated with Euler-Maclaurin only where |L'| and |L''| are below
// these; the 8th-order remainder is then far below 1e-12 of the run's mass.
constexpr double kFlatSlope = 0.15;
constexpr double kFlatCurvature = 0.02;
constexpr std::int64_t kMinFlatRun = 24;
// The exponent has poles where mean or threshold vanish; its t-derivatives
// grow like k!/r^k at distance r, so the flat part keeps this far away.
constexpr double kPoleDistance = 30.0;
constexpr int kJetOrder = 7;
// B_2k / (2k)!
constexpr std::array<double, 4> kEulerMaclaurin = {1.0 / 12.0, -1.0 / 720.0, 1.0 / 30240.0,
                                                   -1.0 / 1209600.0};

using Jet = std::array<double, kJetOrder + 1>;

// c * u^pu * mu^pm with u and mu affine in t.
struct Mono {
  double c;
  int pu;
  int pm;
};

double ipow(double x, int p) {
  if (p == 0) return 1.0;
  return p > 0 ? std::pow(x, p) : 1.0 / std::pow(x, -p);
}

// Fills L[from..kJetOrder] with successive derivatives of the monomial sum.
void fill_derivatives(std::vector<Mono> poly, double u, double u1, double mu, double mu1, int from,
                      Jet& L) {
  for (int k = from; k <= kJetOrder; ++k) {
    double v = 0.0;
    for (const auto& m : poly) v += m.c * ipow(u, m.pu) * ipow(mu, m.pm);
    L[k] = v;
    if (k == kJetOrder) break;
    std::vector<Mono> next;
    next.reserve(poly.size() * 2);
    for (const auto& m : poly) {
      if (m.pu != 0 && u1 != 0.0) next.push_back({m.c * m.pu * u1, m.pu - 1, m.pm});
      if (m.pm != 0) next.push_back({m.c * m.pm * mu1, m.pu, m.pm - 1});
    }
    poly = std::move(next);
  }
}

// Exponent of the tight form on a run where threshold > mean > 0.
class TightExponent {
 public:
  explicit TightExponent(const ChernoffWindow& w)
      : w_(w), h_(w.thr1 * w.mean0 - w.thr0 * w.mean1) {}

  double value(double t) const {
    const double mu = w_.mean(t);
    const double d = (w_.threshold(t) - mu) / mu;
    return mu * (d - (1.0 + d) * std::log1p(d));
  }
  double slope(double t) const {
    const double mu = w_.mean(t);
    const double d = (w_.threshold(t) - mu) / mu;
    return w_.mean1 * d - w_.thr1 * std::log1p(d);
  }
  double curvature(double t) const {
    const double mu = w_.mean(t);
    return -h_ * h_ / (w_.threshold(t) * mu * mu);
  }
  double asymptotic_slope() const {
    const double d = w_.thr1 / w_.mean1 - 1.0;
    if (d <= 0.0) return 0.0;
    return w_.mean1 * d - w_.thr1 * std::log1p(d);
  }
  double flat_start() const {
    if (w_.thr1 < 0.0) return kPosInf;
    double p = -w_.mean0 / w_.mean1;
    if (w_.thr1 > 0.0) p = std::max(p, -w_.thr0 / w_.thr1);
    return p + kPoleDistance;
  }
  void jet(double t, Jet& L) const {
    L[0] = value(t);
    L[1] = slope(t);
    fill_derivatives({{-h_ * h_, -1, -2}}, w_.threshold(t), w_.thr1, w_.mean(t), w_.mean1, 2, L);
  }

 private:
  ChernoffWindow w_;
  double h_;
};

// Exponent of the loose form where 0 < delta < 1: -(x - mu)^2 / (3 mu).
class QuadraticExponent {
 public:
  explicit QuadraticExponent(const ChernoffWindow& w)
      : w_(w),
        y0_(w.thr0 - w.mean0),
        y1_(w.thr1 - w.mean1),
        k_(y1_ * w.mean0 - y0_ * w.mean1) {}

  double value(double t) const {
    const double y = y0_ + y1_ * t;
    return -y * y / (3.0 * w_.mean(t));
  }
  double slope(double t) const {
    const double y = y0_ + y1_ * t;
    const double mu = w_.mean(t);
    return -(2.0 * y * y1_ * mu - y * y * w_.mean1) / (3.0 * mu * mu);
  }
  double curvature(double t) const {
    const double mu = w_.mean(t);
    return -2.0 * k_ * k_ / (3.0 * mu * mu * mu);
  }
  double asymptotic_slope() const { return -y1_ * y1_ / (3.0 * w_.mean1); }
  double flat_start() const { return -w_.mean0 / w_.mean1 + kPoleDistance; }
  void jet(double t, Jet& L) const {
    L[0] = value(t);
    L[1] = slope(t);
    fill_derivatives({{-2.0 * k_ * k_ / 3.0, 0, -3}}, 0.0, 0.0, w_.mean(t), w_.mean1, 2, L);
  }

 private:
  ChernoffWindow w_;
  double y0_, y1_, k_;
};

// Smallest t in [lo, hi] with pred(t) true for a predicate that is false then
// true. hi may be kUnbounded. Returns hi + 1 (or kUnbounded) when never true.
template <class Pred>
std::int64_t first_true(Pred pred, std::int64_t lo, std::int64_t hi) {
  if (pred(lo)) return lo;
  std::int64_t bad = lo;
  std::int64_t good;
  if (hi == kUnbounded) {
    std::int64_t step = 1;
    for (;;) {
      if (step > (std::int64_t{1} << 60)) return kUnbounded;
      const std::int64_t probe = lo + step;
      if (pred(probe)) {
        good = probe;
        break;
      }
      bad = probe;
      step *= 2;
    }
  } else {
    if (!pred(hi)) return hi + 1;
    good = hi;
  }
  while (good - bad > 1) {
    const std::int64_t mid = bad + (good - bad) / 2;
    if (pred(mid))
      good = mid;
    else
      bad = mid;
  }
  return good;
}

double log_count(std::int64_t a, std::int64_t b) {
  return std::log(static_cast<double>(b - a) + 1.0);
}

// log sum_{j=0}^{k-1} exp(r j)
double log_geometric_block(double r, double k) {
  if (r == 0.0) return std::log(k);
  if (r < 0.0) return log1mexp(r * k) - log1mexp(r);
  return r * (k - 1.0) + log1mexp(-r * k) - log1mexp(-r);
}

class RunSummer {
 public:
  RunSummer(const SeriesControl& control, double log_scale, SeriesResult& out)
      : control_(control), log_tol_(std::log(control.tolerance)), log_scale_(log_scale), out_(out) {}

  double reference() const { return std::max(acc_.value(), log_scale_); }
  LogSum& acc() { return acc_; }

  template <class E>
  void smooth_run(const E& e, std::int64_t a, std::int64_t b) {
    if (b == kUnbounded && !(e.asymptotic_slope() < 0.0)) {
      acc_.add(kPosInf);
      return;
    }
    const double flat_start = e.flat_start();
    auto flat_left = [&](std::int64_t t) {
      return double(t) >= flat_start && e.slope(double(t)) <= kFlatSlope && std::abs(e.curvature(double(t))) <= kFlatCurvature;
    };
    auto steep_right = [&](std::int64_t t) { return e.slope(double(t)) < -kFlatSlope; };

    const std::int64_t k1 = std::isfinite(flat_start) ? first_true(flat_left, a, b) : kUnbounded;
    std::int64_t k2 = kUnbounded;
    if (k1 != kUnbounded && (b == kUnbounded || k1 <= b)) {
      if (b == kUnbounded && e.asymptotic_slope() >= -kFlatSlope) {
        k2 = kUnbounded;
      } else {
        const std::int64_t s = first_true(steep_right, k1, b);
        k2 = (s == kUnbounded) ? kUnbounded : s - 1;
      }
    }
    const bool has_flat = k1 != kUnbounded && (b == kUnbounded || k1 <= b) &&
                          (k2 == kUnbounded || k2 - k1 + 1 >= kMinFlatRun);
    if (!has_flat) {
      const std::int64_t c = peak_index(e, a, b);
      right_loop(e, c, b, kNegInf, false);
      if (c > a) left_loop(e, c - 1, a, e.value(double(c)));
      return;
    }
    const Flat f = flat_segment(e, k1, k2);
    if (!f.left_covered && k1 > a) left_loop(e, k1 - 1, a, f.value_lo);
    if (!f.right_covered && k2 != kUnbounded && (b == kUnbounded || k2 < b)) right_loop(e, k2 + 1, b, f.value_hi, true);
  }

  void linear_run(double c0, double c1, std::int64_t a, std::int64_t b) {
    if (b == kUnbounded) {
      if (!(c1 < 0.0)) {
        acc_.add(kPosInf);
        return;
      }
      acc_.add(c0 + c1 * double(a) - log1mexp(c1));
      return;
    }
    acc_.add(c0 + c1 * double(a) + log_geometric_block(c1, double(b - a) + 1.0));
  }

  void constant_run(double value, std::int64_t a, std::int64_t b) {
    if (b == kUnbounded) {
      acc_.add(kPosInf);
      return;
    }
    acc_.add(value + log_count(a, b));
  }

 private:
  // Integer index of the maximum over [a, b].
  template <class E>
  std::int64_t peak_index(const E& e, std::int64_t a, std::int64_t b) {
    const std::int64_t t = first_true([&](std::int64_t x) { return e.slope(double(x)) <= 0.0; }, a, b);
    if (t == kUnbounded) return a;  // cannot happen for a convergent run
    if (b != kUnbounded && t > b) return b;
    if (t > a && e.value(double(t - 1)) > e.value(double(t))) return t - 1;
    return t;
  }

  // Real location of the maximum on [lo, hi] by safeguarded Newton.
  template <class E>
  double peak_location(const E& e, double lo, double hi) {
    if (e.slope(lo) <= 0.0) return lo;
    if (std::isfinite(hi) && e.slope(hi) >= 0.0) return hi;
    double a = lo;
    double b = hi;
    if (!std::isfinite(b)) {
      double step = 1.0;
      b = lo + step;
      while (e.slope(b) > 0.0) {
        a = b;
        step *= 2.0;
        b = lo + step;
      }
    }
    double x = 0.5 * (a + b);
    for (int it = 0; it < 100 && b - a > 1e-3; ++it) {
      const double s = e.slope(x);
      if (s > 0.0)
        a = x;
      else
        b = x;
      const double c = e.curvature(x);
      double nx = (c < 0.0) ? x - s / c : 0.5 * (a + b);
      if (!(nx > a && nx < b)) nx = 0.5 * (a + b);
      x = nx;
    }
    return x;
  }

  struct Flat {
    bool left_covered = false;
    bool right_covered = false;
    double value_lo = kNegInf;
    double value_hi = kNegInf;
  };

  // Euler-Maclaurin over the flat part [k1, k2]. Far ends that are negligible
  // are replaced by concavity tail bounds, which then also cover the rest of
  // the run on that side.
  template <class E>
  Flat flat_segment(const E& e, std::int64_t k1, std::int64_t k2) {
    Flat out;
    const double hi_real = (k2 == kUnbounded) ? kPosInf : double(k2);
    const double p = peak_location(e, double(k1), hi_real);
    const double lref = e.value(p);
    const double cut = log_tol_ - std::log(8.0) + std::max(lref, log_scale_);

    std::int64_t hi = k2;
    const std::int64_t right_base = std::max<std::int64_t>(k1, static_cast<std::int64_t>(std::ceil(p)));
    for (std::int64_t w = 8; w < (std::int64_t{1} << 60); w *= 2) {
      const std::int64_t t = right_base + w;
      if (k2 != kUnbounded && t >= k2) break;
      const double s = e.slope(double(t));
      ++out_.evaluations;
      if (s < 0.0) {
        const double bound = e.value(double(t)) + s - log1mexp(s);
        if (bound <= cut) {
          hi = t;
          out.right_covered = true;
          acc_.add(bound);
          break;
        }
      }
    }
    std::int64_t lo = k1;
    const std::int64_t left_base = std::min<std::int64_t>(hi, static_cast<std::int64_t>(std::floor(p)));
    for (std::int64_t w = 8;; w *= 2) {
      const std::int64_t t = left_base - w;
      if (t <= k1) break;
      const double s = e.slope(double(t));
      ++out_.evaluations;
      if (s > 0.0) {
        const double bound = e.value(double(t)) - s - log1mexp(-s);
        if (bound <= cut) {
          lo = t;
          out.left_covered = true;
          acc_.add(bound);
          break;
        }
      }
    }

    const double log_n = std::log(double(hi - lo) + 1.0);
    if (lref + log_n <= log_tol_ + log_scale_) {
      acc_.add(lref + log_n);
    } else {
      acc_.add(lref + std::log(euler_maclaurin(e, double(lo), double(hi), p, lref)));
    }
    out.value_lo = e.value(double(lo));
    out.value_hi = e.value(double(hi));
    return out;
  }

  template <class E>
  double euler_maclaurin(const E& e, double lo, double hi, double p, double lref) {
    std::int64_t calls = 0;
    auto f = [&](double t) {
      ++calls;
      return std::exp(e.value(t) - lref);
    };
    using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
    const double tol = 2e-13;
    double integral = 0.0;
    if (p - lo >= 1.0 && hi - p >= 1.0) {
      integral = GK::integrate(f, lo, p, 12, tol) + GK::integrate(f, p, hi, 12, tol);
    } else {
      integral = GK::integrate(f, lo, hi, 12, tol);
    }
    Jet ja, jb;
    e.jet(lo, ja);
    e.jet(hi, jb);
    const double fa = std::exp(ja[0] - lref);
    const double fb = std::exp(jb[0] - lref);
    const auto ga = derivative_ratios(ja);
    const auto gb = derivative_ratios(jb);
    double s = integral + 0.5 * (fa + fb);
    for (std::size_t j = 0; j < kEulerMaclaurin.size(); ++j) {
      const int order = 2 * static_cast<int>(j) + 1;
      s += kEulerMaclaurin[j] * (fb * gb[order] - fa * ga[order]);
    }
    out_.evaluations += calls + 2;
    return s;
  }

  // f^(n) / f for f = exp(L).
  static Jet derivative_ratios(const Jet& L) {
    static constexpr std::array<std::array<double, 8>, 8> binom = [] {
      std::array<std::array<double, 8>, 8> c{};
      for (int n = 0; n < 8; ++n) {
        c[n][0] = 1.0;
        for (int k = 1; k <= n; ++k) c[n][k] = c[n - 1][k - 1] + (k < n ? c[n - 1][k] : 0.0);
      }
      return c;
    }();
    Jet g{};
    g[0] = 1.0;
    for (int n = 1; n <= kJetOrder; ++n) {
      double v = 0.0;
      for (int k = 0; k < n; ++k) v += binom[n - 1][k] * L[k + 1] * g[n - 1 - k];
      g[n] = v;
    }
    return g;
  }

  // Term by term from t upward to b. prev is the exponent at t-1 when known.
  template <class E>
  void right_loop(const E& e, std::int64_t t, std::int64_t b, double prev, bool have_prev) {
    for (std::int64_t n = 0;; ++t, ++n) {
      if (b != kUnbounded && t > b) return;
      const double l = e.value(double(t));
      acc_.add(l);
      ++out_.evaluations;
      double s;
      if (have_prev && l != kNegInf && prev != kNegInf)
        s = l - prev;
      else
        s = e.slope(double(t));
      if (s < 0.0 && (b == kUnbounded || t < b)) {
        const double bound = l + s - log1mexp(s);
        if (bound <= log_tol_ + reference()) {
          acc_.add(bound);
          return;
        }
      }
      if (n >= control_.max_terms) {
        out_.capped = true;
        return;
      }
      prev = l;
      have_prev = true;
    }
  }

  // Term by term from t downward to a. next is the exponent at t+1.
  template <class E>
  void left_loop(const E& e, std::int64_t t, std::int64_t a, double next) {
    for (std::int64_t n = 0; t >= a; --t, ++n) {
      const double l = e.value(double(t));
      acc_.add(l);
      ++out_.evaluations;
      double s = (next != kNegInf && l != kNegInf) ? next - l : e.slope(double(t));
      if (s > 0.0 && t > a) {
        const double bound = l - s - log1mexp(-s);
        if (bound <= log_tol_ + reference()) {
          acc_.add(bound);
          return;
        }
      }
      if (n >= control_.max_terms) {
        out_.capped = true;
        return;
      }
      next = l;
    }
  }

  const SeriesControl& control_;
  double log_tol_;
  double log_scale_;
  SeriesResult& out_;
  LogSum acc_;
};

// 0: threshold <= mean, 1: smooth concave part, 2: loose form with delta >= 1.
int term_class(ChernoffForm form, const ChernoffWindow& w, std::int64_t t) {
  const double mu = w.mean(double(t));
  const double x = w.threshold(double(t));
  if (x <= mu) return 0;
  if (form == ChernoffForm::tight) return 1;
  if (mu <= 0.0) return 2;
  return (x - mu) / mu >= 1.0 ? 2 : 1;
}

}  // namespace

SeriesResult log_window_sum(ChernoffForm form, const ChernoffWindow& w, std::int64_t first,
                            std::int64_t last, const SeriesControl& control, double log_scale) {
  SeriesResult out;
  if (last != kUnbounded && last < first) return out;
  RunSummer summer(control, log_scale, out);

  if (w.mean(double(first)) <= 0.0) {
    summer.acc().add(log_chernoff(form, w.mean(double(first)), w.threshold(double(first))));
    ++out.evaluations;
    if (first == last) {
      out.log_value = summer.acc().value();
      return out;
    }
    ++first;
  }

  // The class is monotone in t because delta(t) is a ratio of affine functions.
  // Beyond the last crossing of delta = 0 or 1 the class is constant.
  std::int64_t horizon = last;
  if (last == kUnbounded) {
    double far = double(first);
    for (double c : {0.0, 1.0}) {
      const double den = w.thr1 - (1.0 + c) * w.mean1;
      if (den == 0.0) continue;
      const double r = ((1.0 + c) * w.mean0 - w.thr0) / den;
      if (std::isfinite(r)) far = std::max(far, r);
    }
    far = std::min(far, 4e18);
    horizon = static_cast<std::int64_t>(std::ceil(far)) + 2;
  }

  std::int64_t start = first;
  while (true) {
    const int cls = term_class(form, w, start);
    std::int64_t end;
    if (start >= horizon) {
      end = last;
    } else {
      const std::int64_t change =
          first_true([&](std::int64_t t) { return term_class(form, w, t) != cls; }, start, horizon);
      end = change - 1;
      if (change > horizon) end = last;
    }
    switch (cls) {
      case 0:
        summer.constant_run(0.0, start, end);
        break;
      case 2:
        summer.linear_run(-(w.thr0 - w.mean0) / 3.0, -(w.thr1 - w.mean1) / 3.0, start, end);
        break;
      default:
        if (form == ChernoffForm::tight)
          summer.smooth_run(TightExponent(w), start, end);
        else
          summer.smooth_run(QuadraticExponent(w), start, end);
    }
    if (end == last || summer.acc().value() == kPosInf) break;
    start = end + 1;
  }
  out.log_value = summer.acc().value();
  return out;
}

}  // namespace lbr
