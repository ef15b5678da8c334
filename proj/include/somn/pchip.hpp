#pragma once

#include <span>
#include <vector>

namespace somn {

/// Shape-preserving piecewise cubic Hermite interpolant.
///
/// Interior slopes use the Fritsch-Carlson rule in its weighted-harmonic-mean
/// form (zero at local extrema and sign changes); end slopes use the
/// one-sided three-point formula with shape-preserving limits.
class Pchip {
 public:
  Pchip(std::vector<double> x, std::vector<double> y);

  double operator()(double t) const;

  double front() const { return x_.front(); }
  double back() const { return x_.back(); }
  const std::vector<double>& slopes() const { return d_; }

 private:
  std::vector<double> x_, y_, d_;
};

}  // namespace somn
