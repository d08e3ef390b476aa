#pragma once

#include <cstdint>
#include <limits>

#include "lbr/chernoff.hpp"

namespace lbr {

inline constexpr std::int64_t kUnbounded = std::numeric_limits<std::int64_t>::max();

// A family of Chernoff terms indexed by an integer t:
//   mean(t) = mean0 + mean1 t,  threshold(t) = thr0 + thr1 t.
struct ChernoffWindow {
  double mean0 = 0.0;
  double mean1 = 0.0;
  double thr0 = 0.0;
  double thr1 = 0.0;

  double mean(double t) const { return mean0 + mean1 * t; }
  double threshold(double t) const { return thr0 + thr1 * t; }
};

struct SeriesControl {
  // Terms and tails below tolerance * (running total) are dropped; each drop is
  // replaced by a certified upper bound on what it removed.
  double tolerance = 1e-12;
  std::int64_t max_terms = 10'000'000;
};

struct SeriesResult {
  double log_value = -std::numeric_limits<double>::infinity();
  std::int64_t evaluations = 0;
  bool capped = false;
};

/// log sum_{t=first}^{last} exp(log_chernoff(form, mean(t), threshold(t))).
///
/// last may be kUnbounded. Requires mean1 > 0 and mean(first) >= 0.
/// Runs of terms on which the exponent is smooth and flat are integrated with
/// Euler-Maclaurin; steep runs are summed term by term until a geometric tail
/// bound (valid because each run is log-concave) is negligible. A series whose
/// terms do not decay returns +inf.
///
/// log_scale is an optional outside estimate of the quantity this sum will be
/// added to; it only loosens the point at which tails count as negligible.
SeriesResult log_window_sum(ChernoffForm form, const ChernoffWindow& w, std::int64_t first,
                            std::int64_t last, const SeriesControl& control,
                            double log_scale = -std::numeric_limits<double>::infinity());

}  // namespace lbr
