#pragma once

#include <cmath>
#include <limits>

namespace lbr {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kPosInf = std::numeric_limits<double>::infinity();

// log(exp(a) + exp(b))
inline double log_add(double a, double b) {
  if (a < b) std::swap(a, b);
  if (b == kNegInf) return a;
  if (a == kPosInf) return a;
  return a + std::log1p(std::exp(b - a));
}

// log(1 - exp(x)) for x < 0
inline double log1mexp(double x) {
  return x > -0.6931471805599453 ? std::log(-std::expm1(x)) : std::log1p(-std::exp(x));
}

// Streaming sum of exp(l_i), kept as a scaled mantissa so that no term
// underflows relative to the running maximum.
class LogSum {
 public:
  void add(double l) {
    if (l == kNegInf) return;
    if (l > ref_) {
      if (l == kPosInf) {
        ref_ = kPosInf;
        acc_ = 1.0;
        return;
      }
      acc_ = acc_ * std::exp(ref_ - l) + 1.0;
      ref_ = l;
    } else if (ref_ != kPosInf) {
      acc_ += std::exp(l - ref_);
    }
  }
  void add(const LogSum& other) {
    if (other.ref_ == kNegInf) return;
    add(other.value());
  }
  double value() const {
    if (ref_ == kNegInf || ref_ == kPosInf) return ref_;
    return ref_ + std::log(acc_);
  }
  bool empty() const { return ref_ == kNegInf; }

 private:
  double ref_ = kNegInf;
  double acc_ = 0.0;
};

}  // namespace lbr
