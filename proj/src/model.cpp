#include "lbr/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lbr/errors.hpp"

namespace lbr {

void RouterConfig::validate() const {
  std::ostringstream err;
  if (n < 1) err << "n must be >= 1; ";
  if (m < 1) err << "m must be >= 1; ";
  if (m_active < 1 || m_active > m) err << "m_active must be in [1, m]; ";
  if (!(alpha > 0.0) || !std::isfinite(alpha)) err << "alpha must be > 0; ";
  if (!(beta > 0.0) || !std::isfinite(beta)) err << "beta must be > 0; ";
  if (!(epsilon > 0.0 && epsilon <= 1.0)) err << "epsilon must be in (0, 1]; ";
  if (!err.str().empty()) throw ConfigError("router: " + err.str());
}

TrafficSpec::TrafficSpec(int n, std::vector<double> rates, std::vector<double> pair_bursts,
                         double sigma)
    : n_(n), rates_(std::move(rates)), pair_bursts_(std::move(pair_bursts)), sigma_(sigma) {
  if (n < 1) throw ConfigError("traffic: n must be >= 1");
  const auto cells = static_cast<std::size_t>(n) * n;
  if (rates_.size() != cells)
    throw ConfigError("traffic: rate matrix has " + std::to_string(rates_.size()) +
                      " entries, expected " + std::to_string(cells));
  if (pair_bursts_.empty()) pair_bursts_.assign(cells, 0.0);
  if (pair_bursts_.size() != cells) throw ConfigError("traffic: pair burst matrix has wrong size");
  for (double r : rates_)
    if (!(r >= 0.0) || !std::isfinite(r)) throw ConfigError("traffic: rates must be finite and >= 0");
  for (double s : pair_bursts_)
    if (!(s >= 0.0) || !std::isfinite(s)) throw ConfigError("traffic: pair bursts must be >= 0");
  if (!(sigma_ >= 0.0) || !std::isfinite(sigma_)) throw ConfigError("traffic: sigma must be >= 0");
}

TrafficSpec TrafficSpec::uniform(int n, double load, double pair_burst, double sigma) {
  if (n < 1) throw ConfigError("traffic: n must be >= 1");
  const auto cells = static_cast<std::size_t>(n) * n;
  return TrafficSpec(n, std::vector<double>(cells, load / n), std::vector<double>(cells, pair_burst),
                     sigma);
}

double TrafficSpec::input_rate(int i) const {
  double s = 0.0;
  for (int k = 0; k < n_; ++k) s += rate(i, k);
  return s;
}

double TrafficSpec::output_rate(int k) const {
  double s = 0.0;
  for (int i = 0; i < n_; ++i) s += rate(i, k);
  return s;
}

std::string AdmissibilityReport::describe() const {
  if (ok()) return "admissible";
  std::ostringstream out;
  for (const auto& v : violations) {
    out << (v.side == Violation::Side::input ? "input " : "output ") << v.index << ": rate sum "
        << v.sum << " exceeds " << v.limit << "\n";
  }
  return out.str();
}

AdmissibilityReport validate_admissible(const TrafficSpec& spec, const RouterConfig& cfg) {
  if (spec.n() != cfg.n)
    throw ConfigError("traffic matrix is " + std::to_string(spec.n()) + "x" +
                      std::to_string(spec.n()) + " but the router has n = " + std::to_string(cfg.n));
  AdmissibilityReport report;
  for (int i = 0; i < spec.n(); ++i) {
    const double s = spec.input_rate(i);
    if (s > 1.0 + kRateTolerance) report.violations.push_back({Violation::Side::input, i, s, 1.0});
  }
  const double out_limit = 1.0 - cfg.epsilon;
  for (int k = 0; k < spec.n(); ++k) {
    const double s = spec.output_rate(k);
    if (s > out_limit + kRateTolerance)
      report.violations.push_back({Violation::Side::output, k, s, out_limit});
  }
  return report;
}

double max_load(const TrafficSpec& spec) {
  double r = 0.0;
  for (int i = 0; i < spec.n(); ++i) r = std::max({r, spec.input_rate(i), spec.output_rate(i)});
  return r;
}

PowerModel PowerModel::affine(double w0, double w1, int m) {
  if (!(w0 >= 0.0) || !(w1 >= 0.0)) throw ConfigError("power: affine model needs w0 >= 0, w1 >= 0");
  if (m < 0) throw ConfigError("power: m must be >= 0");
  PowerModel p;
  p.w0_ = w0;
  p.w1_ = w1;
  p.max_active_ = m;
  return p;
}

PowerModel PowerModel::table(std::vector<double> values) {
  if (values.empty()) throw ConfigError("power: table must not be empty");
  if (!(values[0] >= 0.0)) throw ConfigError("power: w(0) must be >= 0");
  for (std::size_t i = 1; i < values.size(); ++i)
    if (!(values[i] >= values[i - 1])) throw ConfigError("power: table must be non-decreasing");
  PowerModel p;
  p.max_active_ = static_cast<int>(values.size()) - 1;
  p.table_ = std::move(values);
  return p;
}

double PowerModel::power(int m_active) const {
  if (m_active < 0 || m_active > max_active_)
    throw ConfigError("power: m_active " + std::to_string(m_active) + " outside [0, " +
                      std::to_string(max_active_) + "]");
  if (!table_.empty()) return table_[static_cast<std::size_t>(m_active)];
  return w0_ + w1_ * m_active;
}

}  // namespace lbr
