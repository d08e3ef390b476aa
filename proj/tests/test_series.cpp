#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "lbr/log_sum.hpp"
#include "lbr/series.hpp"
#include "oracles.hpp"

using namespace lbr;

namespace {

oracle::real brute(ChernoffForm f, const ChernoffWindow& w, std::int64_t first, std::int64_t last) {
  const auto of = f == ChernoffForm::tight ? oracle::Form::tight : oracle::Form::loose;
  if (last == kUnbounded)
    return oracle::series([&](std::int64_t t) { return oracle::log_chernoff(of, w.mean(t), w.threshold(t)); }, first);
  oracle::real peak = -INFINITY, sum = 0.0L;
  for (std::int64_t t = first; t <= last; ++t) {
    const oracle::real l = oracle::log_chernoff(of, w.mean(t), w.threshold(t));
    if (l > peak) {
      sum = sum * std::exp(peak - l) + 1.0L;
      peak = l;
    } else {
      sum += std::exp(l - peak);
    }
  }
  return peak + std::log(sum);
}

}  // namespace

TEST_CASE("window sums match direct summation") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int it = 0; it < 400; ++it) {
    const ChernoffForm f = it % 2 ? ChernoffForm::loose : ChernoffForm::tight;
    const double m = std::vector<double>{1, 4, 8, 20, 80}[it % 5];
    const double speed = 1.05 + 3.0 * u(rng);
    const double q = std::pow(10.0, -1.0 + 2.0 * u(rng));
    const double sigma = u(rng) < 0.3 ? 10.0 * u(rng) : 0.0;
    const double d = std::floor(std::pow(10.0, 3.0 * u(rng)));
    ChernoffWindow w;
    switch ((it / 10) % 3) {
      case 0: w = {sigma / m, 1.0 / m, q, speed / m}; break;
      case 1: w = {(d + sigma) / m, 1.0 / m, q, speed / m}; break;
      default: w = {(d + sigma) / (20.0 * m), 1.0 / (20.0 * m), 0.0, 5.0 * speed / (20.0 * m)}; break;
    }
    std::int64_t first = 0, last = kUnbounded;
    if (it % 7 == 3) {
      first = static_cast<std::int64_t>(50 * u(rng));
      last = first + static_cast<std::int64_t>(2000 * u(rng));
    }
    const SeriesResult r = log_window_sum(f, w, first, last, SeriesControl{});
    const double b = double(brute(f, w, first, last));
    const double rel = std::abs(std::expm1(r.log_value - b));
    worst = std::max(worst, rel);
    CHECK_MESSAGE(rel < 1e-10, "window " << it << " engine " << r.log_value << " direct " << b);
    CHECK_FALSE(r.capped);
  }
  MESSAGE("worst relative error " << worst);
}

TEST_CASE("window sum edge cases") {
  SeriesControl ctl;
  // Threshold never above the mean: every term is 1 and the sum diverges.
  const ChernoffWindow flat{1.0, 1.0, 0.5, 0.5};
  CHECK(log_window_sum(ChernoffForm::tight, flat, 0, kUnbounded, ctl).log_value == kPosInf);
  CHECK(log_window_sum(ChernoffForm::tight, flat, 0, 9, ctl).log_value == doctest::Approx(std::log(10.0)));
  // Empty range.
  CHECK(log_window_sum(ChernoffForm::tight, flat, 5, 4, ctl).log_value == kNegInf);
  // Loose form with delta >= 1 everywhere is an exact geometric series.
  const ChernoffWindow geo{0.0, 0.25, 30.0, 0.5};
  const double expect = -10.0 - std::log1p(-std::exp(-1.0 / 12.0));
  CHECK(log_window_sum(ChernoffForm::loose, geo, 0, kUnbounded, ctl).log_value ==
        doctest::Approx(expect).epsilon(1e-13));
}
