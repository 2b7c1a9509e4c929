#pragma once

#include <cmath>

namespace levyvar {

/// Neumaier-style compensated accumulator.
///
/// Unlike plain Kahan summation the correction term also survives the case
/// where the incoming addend is larger in magnitude than the running sum,
/// which happens for partial sums of variation series whose first terms are
/// tiny and whose later terms carry a jump.
template <typename Real = double>
class CompensatedSum {
 public:
  CompensatedSum() = default;
  explicit CompensatedSum(Real init) : sum_(init) {}

  CompensatedSum& operator+=(Real value) {
    const Real t = sum_ + value;
    if (std::abs(sum_) >= std::abs(value)) {
      compensation_ += (sum_ - t) + value;
    } else {
      compensation_ += (value - t) + sum_;
    }
    sum_ = t;
    return *this;
  }

  [[nodiscard]] Real value() const { return sum_ + compensation_; }
  explicit operator Real() const { return value(); }

 private:
  Real sum_ = Real{0};
  Real compensation_ = Real{0};
};

}  // namespace levyvar
