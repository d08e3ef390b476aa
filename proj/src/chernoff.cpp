#include "lbr/chernoff.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lbr/errors.hpp"
#include "lbr/log_sum.hpp"

namespace lbr {

namespace {

void check(const ChernoffParams& p) {
  if (!(p.mu >= 0.0) || !std::isfinite(p.mu))
    throw DomainError("chernoff: mu must be finite and >= 0, got " + std::to_string(p.mu));
  if (!(p.delta >= 0.0) || !std::isfinite(p.delta))
    throw DomainError("chernoff: delta must be finite and > 0, got " + std::to_string(p.delta));
}

void check_z(double z) {
  if (!(z > 0.0)) throw DomainError("geometric series: z must be > 0");
  if (!(z < 1.0)) throw DivergenceError("geometric series: z >= 1 diverges");
}

void check_log_z(double log_z) {
  if (std::isnan(log_z)) throw DomainError("geometric series: log z is NaN");
  if (!(log_z < 0.0)) throw DivergenceError("geometric series: z >= 1 diverges");
}

}  // namespace

double chernoff_tight(const ChernoffParams& p) {
  check(p);
  if (p.delta == 0.0 || p.mu == 0.0) return 1.0;
  return std::exp(p.mu * (p.delta - (1.0 + p.delta) * std::log1p(p.delta)));
}

double chernoff_loose(const ChernoffParams& p) {
  check(p);
  if (p.delta == 0.0 || p.mu == 0.0) return 1.0;
  return std::exp(-std::min(p.delta * p.delta, p.delta) * p.mu / 3.0);
}

double log_chernoff(ChernoffForm form, double mean, double threshold) {
  if (threshold <= mean) return 0.0;
  if (mean <= 0.0) return form == ChernoffForm::tight ? kNegInf : -threshold / 3.0;
  const double delta = (threshold - mean) / mean;
  if (form == ChernoffForm::tight) return mean * (delta - (1.0 + delta) * std::log1p(delta));
  if (delta >= 1.0) return -(threshold - mean) / 3.0;
  return -(threshold - mean) * delta / 3.0;
}

double geom_sum(double z, double a) {
  check_z(z);
  return std::pow(z, a) / (1.0 - z);
}

double geom_weighted_sum(double z, double a) {
  check_z(z);
  const double d = 1.0 - z;
  return z * (a * std::pow(z, a - 1.0) - (a - 1.0) * std::pow(z, a)) / (d * d);
}

double log_geom_sum(double log_z, double a) {
  check_log_z(log_z);
  return a * log_z - log1mexp(log_z);
}

double log_geom_weighted_sum(double log_z, double a) {
  check_log_z(log_z);
  // z^a (a - (a-1) z) / (1-z)^2; the bracket is positive for a >= 0.
  const double bracket = a - (a - 1.0) * std::exp(log_z);
  if (!(bracket > 0.0)) throw DomainError("weighted geometric series: start index must be >= 0");
  return a * log_z + std::log(bracket) - 2.0 * log1mexp(log_z);
}

}  // namespace lbr
