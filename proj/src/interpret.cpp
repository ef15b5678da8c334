#include "somn/interpret.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "somn/errors.hpp"
#include "somn/filter.hpp"

namespace somn::interpret {

Activations last_block_activations(const nn::CnnModel& model, const std::vector<std::vector<double>>& inputs,
                                   nn::Exec exec) {
  const auto& spec = model.spec;
  for (const auto& x : inputs)
    if (x.size() != spec.input_length)
      throw ShapeError("window of " + std::to_string(x.size()) + " samples for a model expecting " +
                       std::to_string(spec.input_length));
  Activations a;
  a.n = inputs.size();
  a.t_out = spec.final_length();
  a.filters = spec.filters;
  const std::size_t stride = a.t_out * a.filters;
  a.values.resize(a.n * stride);
#pragma omp parallel for schedule(dynamic) if (exec == nn::Exec::Parallel)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(a.n); ++i) {
    const auto y = nn::conv_features(model, inputs[static_cast<std::size_t>(i)]);
    std::copy(y.begin(), y.end(), a.values.begin() + i * static_cast<std::ptrdiff_t>(stride));
  }
  return a;
}

std::vector<std::size_t> top_k_windows(const Activations& acts, std::size_t t, std::size_t j, std::size_t k) {
  if (t >= acts.t_out || j >= acts.filters) throw AtlasError("atlas cell out of range");
  if (k == 0) throw AtlasError("atlas needs k >= 1");
  if (acts.n < k)
    throw AtlasError("atlas needs " + std::to_string(k) + " windows, cohort has " + std::to_string(acts.n));
  std::vector<std::size_t> idx(acts.n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const auto by_activation = [&](std::size_t a, std::size_t b) {
    const double ya = acts.at(a, t, j), yb = acts.at(b, t, j);
    return ya != yb ? ya > yb : a < b;
  };
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), by_activation);
  idx.resize(k);
  return idx;
}

std::vector<double> extract_atlas(const Activations& acts, const std::vector<std::vector<double>>& inputs,
                                  std::size_t t, std::size_t j, std::size_t k) {
  if (inputs.size() != acts.n) throw ShapeError("atlas inputs and activations differ in count");
  const auto chosen = top_k_windows(acts, t, j, k);
  const std::size_t len = inputs[chosen.front()].size();
  std::vector<double> psi(len), column(k);
  for (std::size_t s = 0; s < len; ++s) {
    for (std::size_t q = 0; q < k; ++q) column[q] = inputs[chosen[q]].at(s);
    psi[s] = dsp::median(column);
  }
  return psi;
}

StageMatrices feature_stage_tests(const Activations& acts, const std::vector<bool>& positive, nn::Exec exec) {
  if (positive.size() != acts.n) throw ShapeError("labels and activations differ in count");
  const auto n_pos = static_cast<std::size_t>(std::count(positive.begin(), positive.end(), true));
  if (n_pos == 0 || n_pos == acts.n) throw DomainError("stage tests need both classes");

  StageMatrices m;
  m.filters = acts.filters;
  m.t_out = acts.t_out;
  m.wake_logp.resize(m.filters * m.t_out);
  m.sleep_logp.resize(m.filters * m.t_out);
  const auto cells = static_cast<std::ptrdiff_t>(m.filters * m.t_out);
#pragma omp parallel for schedule(dynamic) if (exec == nn::Exec::Parallel)
  for (std::ptrdiff_t c = 0; c < cells; ++c) {
    const auto j = static_cast<std::size_t>(c) / m.t_out;
    const auto t = static_cast<std::size_t>(c) % m.t_out;
    std::vector<double> pos, neg;
    pos.reserve(n_pos);
    neg.reserve(acts.n - n_pos);
    for (std::size_t i = 0; i < acts.n; ++i) (positive[i] ? pos : neg).push_back(acts.at(i, t, j));
    m.wake_logp[static_cast<std::size_t>(c)] = metrics::rank_sum_test(pos, neg).neg_log_p;
    m.sleep_logp[static_cast<std::size_t>(c)] = metrics::rank_sum_test(neg, pos).neg_log_p;
  }
  return m;
}

StageSets assign_stage_sets(const StageMatrices& m, double threshold) {
  const std::size_t late = m.t_out - (m.t_out + 3) / 4;
  StageSets sets;
  for (std::size_t j = 0; j < m.filters; ++j) {
    double w = 0.0, s = 0.0;
    for (std::size_t t = late; t < m.t_out; ++t) {
      w = std::max(w, m.wake(j, t));
      s = std::max(s, m.sleep(j, t));
    }
    if (w > threshold && w > s) sets.wake.push_back(j);
    else if (s > threshold && s > w) sets.sleep.push_back(j);
  }
  return sets;
}

Traces sigma_traces(std::span<const double> window, std::size_t t_out, std::size_t filters, const StageSets& sets) {
  if (window.size() != t_out * filters) throw ShapeError("activation window has the wrong size");
  if (sets.wake.empty() || sets.sleep.empty()) throw DomainError("sigma traces need non-empty channel sets");
  const auto trace = [&](const std::vector<std::size_t>& set) {
    std::vector<double> out(t_out, 0.0);
    for (std::size_t t = 0; t < t_out; ++t) {
      double best = -INFINITY;
      for (std::size_t j : set) {
        if (j >= filters) throw DomainError("channel index out of range");
        best = std::max(best, window[t * filters + j]);
      }
      out[t] = best;
    }
    return out;
  };
  return {trace(sets.wake), trace(sets.sleep)};
}

DensePca dense_pca_export(const nn::CnnModel& model, const std::vector<std::vector<double>>& inputs,
                          const std::vector<Stage>& stages, const std::vector<bool>& positive, nn::Exec exec) {
  const std::size_t n = inputs.size();
  if (n < 4) throw ShapeError("dense-layer PCA needs at least four windows");
  if (stages.size() != n || positive.size() != n) throw ShapeError("labels and windows differ in count");
  const std::size_t d = model.spec.dense2;
  std::vector<double> data(n * d);
#pragma omp parallel for schedule(dynamic) if (exec == nn::Exec::Parallel)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    const auto cache = nn::forward(model, inputs[static_cast<std::size_t>(i)], nn::Mode::Infer);
    std::copy(cache.d2_out.begin(), cache.d2_out.end(), data.begin() + i * static_cast<std::ptrdiff_t>(d));
  }
  return {metrics::pca_project(data, n, d, 3), stages, positive};
}

namespace {

std::ostringstream csv_stream() {
  std::ostringstream os;
  os.precision(17);
  return os;
}

}  // namespace

std::string atlas_csv(const std::vector<double>& psi) {
  auto os = csv_stream();
  os << "sample,bpm\n";
  for (std::size_t s = 0; s < psi.size(); ++s) os << s + 1 << ',' << psi[s] << '\n';
  return os.str();
}

std::string matrix_csv(std::span<const double> m, std::size_t rows, std::size_t cols) {
  if (m.size() != rows * cols) throw ShapeError("matrix size mismatch");
  auto os = csv_stream();
  os << "channel";
  for (std::size_t c = 0; c < cols; ++c) os << ",t" << c + 1;
  os << '\n';
  for (std::size_t r = 0; r < rows; ++r) {
    os << r + 1;
    for (std::size_t c = 0; c < cols; ++c) os << ',' << m[r * cols + c];
    os << '\n';
  }
  return os.str();
}

std::string traces_csv(const Traces& traces, bool true_positive) {
  auto os = csv_stream();
  os << "t,sigma_wake,sigma_sleep,true_label\n";
  for (std::size_t t = 0; t < traces.sigma_wake.size(); ++t)
    os << t + 1 << ',' << traces.sigma_wake[t] << ',' << traces.sigma_sleep[t] << ','
       << (true_positive ? 1 : 0) << '\n';
  return os.str();
}

std::string pca_csv(const DensePca& e) {
  auto os = csv_stream();
  os << "pc1,pc2,pc3,positive,stage\n";
  for (std::size_t i = 0; i < e.pca.n; ++i) {
    for (std::size_t c = 0; c < 3; ++c) os << e.pca.coords[i * 3 + c] << ',';
    os << (e.positive[i] ? 1 : 0) << ',' << stage_name(e.stages[i]) << '\n';
  }
  return os.str();
}

}  // namespace somn::interpret
