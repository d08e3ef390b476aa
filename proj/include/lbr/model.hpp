#pragma once

#include <string>
#include <vector>

namespace lbr {

/// Router geometry and link speeds.
///
/// Mesh links run at alpha/m (input to middle) and beta/m (middle to output)
/// packets per slot; output links at 1 packet per slot.
struct RouterConfig {
  int n = 1;
  int m = 1;
  int m_active = 1;
  double alpha = 2.0;
  double beta = 2.0;
  double epsilon = 0.05;

  // Throws ConfigError on any broken invariant.
  void validate() const;
};

/// Per-pair rates and burst terms. rates and pair_bursts are n*n, row-major,
/// entry (i, k) at i * n + k.
class TrafficSpec {
 public:
  TrafficSpec() = default;
  TrafficSpec(int n, std::vector<double> rates, std::vector<double> pair_bursts, double sigma);

  // Every pair at load / n, so each row and column sums to load.
  static TrafficSpec uniform(int n, double load, double pair_burst = 0.0, double sigma = 0.0);

  int n() const { return n_; }
  double rate(int i, int k) const { return rates_[idx(i, k)]; }
  double pair_burst(int i, int k) const { return pair_bursts_[idx(i, k)]; }
  double sigma() const { return sigma_; }
  const std::vector<double>& rates() const { return rates_; }
  const std::vector<double>& pair_bursts() const { return pair_bursts_; }

  double input_rate(int i) const;   // r_i
  double output_rate(int k) const;  // r_k

 private:
  std::size_t idx(int i, int k) const { return static_cast<std::size_t>(i) * n_ + k; }

  int n_ = 0;
  std::vector<double> rates_;
  std::vector<double> pair_bursts_;
  double sigma_ = 0.0;
};

inline constexpr double kRateTolerance = 1e-9;

struct Violation {
  enum class Side { input, output } side;
  int index;
  double sum;
  double limit;
};

struct AdmissibilityReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  std::string describe() const;
};

AdmissibilityReport validate_admissible(const TrafficSpec& spec, const RouterConfig& cfg);

/// r-bar: largest row or column sum.
double max_load(const TrafficSpec& spec);

class PowerModel {
 public:
  // w(m') = w0 + w1 m' for 0 <= m' <= m.
  static PowerModel affine(double w0, double w1, int m);
  // w(m') = table[m'], table has m + 1 entries.
  static PowerModel table(std::vector<double> values);

  double power(int m_active) const;
  int max_active() const { return max_active_; }
  bool is_table() const { return !table_.empty(); }
  double w0() const { return w0_; }
  double w1() const { return w1_; }
  const std::vector<double>& values() const { return table_; }

 private:
  double w0_ = 0.0;
  double w1_ = 1.0;
  int max_active_ = 0;
  std::vector<double> table_;
};

}  // namespace lbr
