#include "somn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>

#include "somn/errors.hpp"

namespace somn::metrics {

ConfusionMatrix confusion(const std::vector<bool>& predicted, const std::vector<bool>& truth) {
  if (predicted.size() != truth.size())
    throw ShapeError("predictions and labels differ in length");
  if (predicted.empty()) throw ShapeError("confusion matrix of an empty sample");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (truth[i]) (predicted[i] ? cm.tp : cm.fn)++;
    else (predicted[i] ? cm.fp : cm.tn)++;
  }
  return cm;
}

ConfusionMatrix confusion(std::span<const bool> predicted, std::span<const bool> truth) {
  return confusion(std::vector<bool>(predicted.begin(), predicted.end()),
                   std::vector<bool>(truth.begin(), truth.end()));
}

namespace {

std::optional<double> ratio(double num, double den) {
  if (den == 0.0) return std::nullopt;
  return num / den;
}

}  // namespace

Summary summary(const ConfusionMatrix& cm) {
  const double total = static_cast<double>(cm.total());
  if (total == 0.0) throw DomainError("summary of an empty confusion matrix");
  const double tp = static_cast<double>(cm.tp), fp = static_cast<double>(cm.fp);
  const double tn = static_cast<double>(cm.tn), fn = static_cast<double>(cm.fn);
  Summary s;
  s.sensitivity = ratio(tp, tp + fn);
  s.specificity = ratio(tn, tn + fp);
  s.accuracy = (tp + tn) / total;
  s.precision = ratio(tp, tp + fp);
  if (s.sensitivity && s.precision && (*s.sensitivity + *s.precision) > 0.0)
    s.f1 = 2.0 * *s.sensitivity * *s.precision / (*s.sensitivity + *s.precision);
  const double p_e = ((tp + fp) * (tp + fn) + (fn + tn) * (fp + tn)) / (total * total);
  if (p_e < 1.0) s.kappa = (*s.accuracy - p_e) / (1.0 - p_e);
  return s;
}

RocCurve roc_auc(std::span<const double> scores, const std::vector<bool>& positive) {
  if (scores.size() != positive.size()) throw ShapeError("scores and labels differ in length");
  const auto n_pos = static_cast<std::size_t>(std::count(positive.begin(), positive.end(), true));
  const std::size_t n_neg = positive.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) throw DomainError("ROC needs both classes");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocCurve roc;
  roc.points.push_back({0.0, 0.0});
  std::size_t tp = 0, fp = 0;
  double area2 = 0.0;  // twice the area in (fp, tp) count units
  for (std::size_t i = 0; i < order.size();) {
    const double s = scores[order[i]];
    const std::size_t tp0 = tp, fp0 = fp;
    for (; i < order.size() && scores[order[i]] == s; ++i) (positive[order[i]] ? tp : fp)++;
    area2 += static_cast<double>(fp - fp0) * static_cast<double>(tp + tp0);
    roc.points.push_back({static_cast<double>(fp) / static_cast<double>(n_neg),
                          static_cast<double>(tp) / static_cast<double>(n_pos)});
  }
  roc.auc = area2 / (2.0 * static_cast<double>(n_pos) * static_cast<double>(n_neg));
  return roc;
}

namespace {

struct Ranked {
  std::vector<double> ranks;  // midranks of the pooled sample, A first then B
  double tie_term = 0.0;      // sum over tie groups of t^3 - t
};

Ranked midranks(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size() + b.size();
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return pooled[i] < pooled[j]; });
  Ranked r;
  r.ranks.resize(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && pooled[order[j]] == pooled[order[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) r.ranks[order[k]] = mid;
    const double t = static_cast<double>(j - i);
    r.tie_term += t * t * t - t;
    i = j;
  }
  return r;
}

RankSumResult finish(double p, double u, bool exact) {
  p = std::clamp(p, 0.0, 1.0);
  return {p, -std::log(std::max(p, kMinPValue)), u, exact};
}

void require_samples(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw DomainError("rank-sum test needs two non-empty samples");
}

}  // namespace

RankSumResult rank_sum_exact(std::span<const double> a, std::span<const double> b) {
  require_samples(a, b);
  const std::size_t na = a.size(), n = a.size() + b.size();
  if (n > 24) throw DomainError("exact rank-sum enumeration is limited to 24 observations");
  const Ranked r = midranks(a, b);
  // Doubled midranks are integers, so subset sums compare exactly.
  std::vector<long> twice(n);
  for (std::size_t i = 0; i < n; ++i) twice[i] = std::lround(2.0 * r.ranks[i]);
  long observed = 0;
  for (std::size_t i = 0; i < na; ++i) observed += twice[i];

  std::size_t hits = 0, total = 0;
  std::vector<std::size_t> pick(na);
  std::iota(pick.begin(), pick.end(), std::size_t{0});
  for (;;) {
    long s = 0;
    for (std::size_t i : pick) s += twice[i];
    ++total;
    if (s >= observed) ++hits;
    // next combination in lexicographic order
    std::size_t i = na;
    while (i > 0 && pick[i - 1] == n - na + i - 1) --i;
    if (i == 0) break;
    ++pick[i - 1];
    for (std::size_t j = i; j < na; ++j) pick[j] = pick[j - 1] + 1;
  }
  const double u = static_cast<double>(observed) / 2.0 - static_cast<double>(na * (na + 1)) / 2.0;
  return finish(static_cast<double>(hits) / static_cast<double>(total), u, true);
}

RankSumResult rank_sum_normal(std::span<const double> a, std::span<const double> b) {
  require_samples(a, b);
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double n = na + nb;
  const Ranked r = midranks(a, b);
  double ra = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) ra += r.ranks[i];
  const double u = ra - na * (na + 1.0) / 2.0;
  const double mean = na * nb / 2.0;
  const double var = na * nb / 12.0 * ((n + 1.0) - r.tie_term / (n * (n - 1.0)));
  if (!(var > 0.0)) return finish(1.0, u, false);
  const double z = (u - mean - 0.5) / std::sqrt(var);
  return finish(0.5 * std::erfc(z / std::sqrt(2.0)), u, false);
}

RankSumResult rank_sum_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() + b.size() <= kExactRankSumLimit) return rank_sum_exact(a, b);
  return rank_sum_normal(a, b);
}

RegressionFit slope_regression(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ShapeError("x and y differ in length");
  const std::size_t n = x.size();
  if (n < 3) throw DomainError("slope test needs at least three points");
  const double nn = static_cast<double>(n);
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / nn;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / nn;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw DomainError("slope regression on constant x");
  RegressionFit fit;
  fit.n = n;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = y[i] - fit.intercept - fit.slope * x[i];
    sse += e * e;
  }
  const double dof = nn - 2.0;
  const double se = std::sqrt(sse / dof / sxx);
  if (se == 0.0) {
    fit.slope_p_value = fit.slope == 0.0 ? 1.0 : std::numeric_limits<double>::min();
    return fit;
  }
  const double t = std::abs(fit.slope / se);
  const boost::math::students_t dist(dof);
  const double p = 2.0 * boost::math::cdf(boost::math::complement(dist, t));
  fit.slope_p_value = std::clamp(p, std::numeric_limits<double>::min(), 1.0);
  return fit;
}

PcaResult pca_project(std::span<const double> data, std::size_t n, std::size_t d, std::size_t k) {
  if (data.size() != n * d) throw ShapeError("PCA data size is not n x d");
  if (k > d) throw ShapeError("PCA asked for more components than dimensions");
  if (n <= k) throw ShapeError("PCA needs more rows than components");
  using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Mat x = Eigen::Map<const Mat>(data.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  const Eigen::RowVectorXd mu = x.colwise().mean();
  x.rowwise() -= mu;
  const Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(n);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  const double trace = cov.trace();

  PcaResult r;
  r.n = n;
  r.d = d;
  r.k = k;
  r.mean.assign(mu.data(), mu.data() + d);
  r.components.resize(k * d);
  for (std::size_t c = 0; c < k; ++c) {
    const auto col = static_cast<Eigen::Index>(d - 1 - c);  // eigenvalues ascend
    Eigen::VectorXd v = eig.eigenvectors().col(col);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    for (std::size_t j = 0; j < d; ++j) r.components[c * d + j] = v(static_cast<Eigen::Index>(j));
    const double lambda = std::max(0.0, eig.eigenvalues()(col));
    r.explained_variance.push_back(lambda);
    r.explained_fraction.push_back(trace > 0.0 ? lambda / trace : 0.0);
  }
  const Eigen::Map<const Mat> comps(r.components.data(), static_cast<Eigen::Index>(k),
                                    static_cast<Eigen::Index>(d));
  const Mat coords = x * comps.transpose();
  r.coords.assign(coords.data(), coords.data() + n * k);
  return r;
}

}  // namespace somn::metrics
