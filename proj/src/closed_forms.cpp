#include "closed_forms.hpp"

#include <cmath>
#include <vector>

#include "lbr/chernoff.hpp"
#include "lbr/log_sum.hpp"

namespace lbr::closed {

namespace {

// One geometric component n e^{-a d} / (1 - e^{-c}) of the input delay factor.
struct Component {
  double log_scale;  // log n - log(1 - e^{-c})
  double rate;       // a
};

// log sum_{j=0}^{count-1} e^{-c j}; the infinite sum when c > 0 and the range
// is open.
double log_decay_sum(double c, double count) {
  if (count <= 0.0) return kNegInf;
  if (c == 0.0) return std::log(count);
  if (c > 0.0) return std::isfinite(count) ? log1mexp(-c * count) - log1mexp(-c) : -log1mexp(-c);
  return -c * (count - 1.0) + log1mexp(c * count) - log1mexp(c);
}

// Sums with a positive decay are extended to infinity as published; a
// non-positive decay can only come from the second alpha < 2 component, and
// is then summed over the finite case range instead.
double log_case_sum(double c, double lo, double hi) {
  if (c > 0.0) return log_decay_sum(c, kPosInf);
  return log_decay_sum(c, std::ceil(hi) - std::floor(lo) + 1.0);
}

}  // namespace

double log_input_queue(double m, double alpha, double q) {
  LogSum s;
  s.add(-q / 3.0 - log1mexp(-(alpha - 1.0) / (3.0 * m)));
  if (alpha < 2.0) {
    const double a1 = alpha - 1.0;
    s.add(-a1 * a1 * q / (3.0 * (2.0 - alpha)) - log1mexp(-a1 * a1 / (3.0 * m)));
  }
  return s.value();
}

double log_middle_queue(double n, double m, double alpha, double beta, double q) {
  std::vector<Component> comps;
  comps.push_back({std::log(n) - log1mexp(-(alpha - 1.0) / (3.0 * m)), alpha / (3.0 * m)});
  if (alpha < 2.0) {
    const double a1 = alpha - 1.0;
    comps.push_back({std::log(n) - log1mexp(-a1 * a1 / (3.0 * m)),
                     alpha * a1 * a1 / (3.0 * m * (2.0 - alpha))});
  }
  const double bm1 = beta - 1.0;
  const double b1 = bm1 / (3.0 * m);
  const double b2 = bm1 * bm1 / (3.0 * m);
  const double b4 = bm1 * bm1 / (12.0 * m);
  const double qm = q * m;

  LogSum total;
  for (const auto& c : comps) {
    const double A = c.log_scale;
    const double a = c.rate;
    // 1a
    total.add(A - q / 3.0 - log1mexp(-b1) + log_case_sum(a - 1.0 / (3.0 * m), 0.0, qm / 2.0));
    // 1b
    total.add(A - bm1 * bm1 * q / 3.0 - log1mexp(-b2) + log_case_sum(a - b2, 0.0, qm / 2.0));
    // 2
    if (qm / beta >= qm / 2.0)
      total.add(A - a * qm / 2.0 - bm1 * bm1 * q / 3.0 - log1mexp(-b2) +
                log_case_sum(a - b2, qm / 2.0, qm / beta));
    // 3a
    total.add(A - a * qm / beta - bm1 * bm1 * q / (12.0 * beta) - log1mexp(-b4) - log1mexp(-(a + b4)));
    // 3b
    total.add(A - a * 2.0 * qm / (beta + 1.0) - bm1 * bm1 * q / 6.0 - log1mexp(-b4) -
              log1mexp(-(a + beta * bm1 / (6.0 * m))));
    // 3c
    total.add(std::log((beta + 1.0) / bm1) + A + log_geom_weighted_sum(-a, 2.0 * qm / (beta + 1.0)));
  }
  return total.value();
}

}  // namespace lbr::closed
