#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace somn::metrics {

struct ConfusionMatrix {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
  bool operator==(const ConfusionMatrix&) const = default;
};

/// Positive = wake (or REM for the REM task). ShapeError on empty input or
/// length mismatch.
ConfusionMatrix confusion(std::span<const bool> predicted, std::span<const bool> truth);
ConfusionMatrix confusion(const std::vector<bool>& predicted, const std::vector<bool>& truth);

/// Metrics with a zero denominator are std::nullopt, never 0.
/// SE, SP, ACC, PR are fractions in [0, 1].
struct Summary {
  std::optional<double> sensitivity, specificity, accuracy, precision, f1, kappa;
};

Summary summary(const ConfusionMatrix& cm);

struct RocPoint {
  double fpr;
  double tpr;
};

struct RocCurve {
  std::vector<RocPoint> points;  // (0,0) ... (1,1), one step per distinct score
  double auc = 0.0;
};

/// Threshold sweep over distinct scores (descending) with trapezoidal area;
/// tied scores give half credit. DomainError when a class is missing.
RocCurve roc_auc(std::span<const double> scores, const std::vector<bool>& positive);

struct RankSumResult {
  double p_value;
  double neg_log_p;  // natural log, capped at -log(1e-300)
  double u;          // Mann-Whitney U of sample A
  bool exact;
};

inline constexpr std::size_t kExactRankSumLimit = 12;
inline constexpr double kMinPValue = 1e-300;

/// One-sided Wilcoxon rank-sum test of "A tends to exceed B":
/// p = P(U_A >= observed) under exchangeability. Exact enumeration over
/// midranks when n_a + n_b <= 12, otherwise the tie-corrected normal
/// approximation with continuity correction.
RankSumResult rank_sum_test(std::span<const double> a, std::span<const double> b);
RankSumResult rank_sum_exact(std::span<const double> a, std::span<const double> b);
RankSumResult rank_sum_normal(std::span<const double> a, std::span<const double> b);

struct RegressionFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_p_value = 1.0;  // two-sided t-test, n - 2 degrees of freedom
  std::size_t n = 0;
};

/// Ordinary least squares y = intercept + slope * x. DomainError when n < 3
/// or x is constant.
RegressionFit slope_regression(std::span<const double> x, std::span<const double> y);

struct PcaResult {
  std::size_t n = 0, d = 0, k = 0;
  std::vector<double> mean;                // d
  std::vector<double> components;          // k x d, row-major
  std::vector<double> coords;              // n x k, row-major
  std::vector<double> explained_variance;  // k, population variance (divisor n)
  std::vector<double> explained_fraction;  // k
};

/// Projects mean-centred rows of `data` (n x d, row-major) onto the top-k
/// principal directions. Each direction's largest-magnitude loading is made
/// positive. ShapeError when k > d or n <= k.
PcaResult pca_project(std::span<const double> data, std::size_t n, std::size_t d, std::size_t k);

}  // namespace somn::metrics
