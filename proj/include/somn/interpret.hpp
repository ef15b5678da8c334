#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "somn/ingest.hpp"
#include "somn/metrics.hpp"
#include "somn/nn/network.hpp"

namespace somn::interpret {

// Indices are 0-based throughout: channel j in [0, filters), sample t in
// [0, t_out). CSV exports print them 1-based.

/// Last-block output for n windows, laid out [i][t][j].
struct Activations {
  std::size_t n = 0;
  std::size_t t_out = 0;
  std::size_t filters = 0;
  std::vector<double> values;

  double at(std::size_t i, std::size_t t, std::size_t j) const { return values[(i * t_out + t) * filters + j]; }
  std::span<const double> window(std::size_t i) const {
    return std::span<const double>(values).subspan(i * t_out * filters, t_out * filters);
  }
};

/// `inputs` are network inputs (median-normalized). ShapeError when a window
/// length differs from the model's input length.
Activations last_block_activations(const nn::CnnModel& model, const std::vector<std::vector<double>>& inputs,
                                   nn::Exec exec = nn::Exec::Parallel);

inline constexpr std::size_t kAtlasTopK = 400;

/// Indices of the k largest y_i^j(t), largest first; equal activations go to
/// the lower index. AtlasError when n < k or (t, j) is out of range.
std::vector<std::size_t> top_k_windows(const Activations& acts, std::size_t t, std::size_t j,
                                       std::size_t k = kAtlasTopK);

/// psi_j(t): elementwise median of the k most activating inputs.
std::vector<double> extract_atlas(const Activations& acts, const std::vector<std::vector<double>>& inputs,
                                  std::size_t t, std::size_t j, std::size_t k = kAtlasTopK);

/// -log p of the one-sided rank-sum tests per (j, t). wake_logp tests
/// "positive-class activations exceed negative-class ones", sleep_logp the
/// reverse. Both stored row-major [j][t].
struct StageMatrices {
  std::size_t filters = 0;
  std::size_t t_out = 0;
  std::vector<double> wake_logp;
  std::vector<double> sleep_logp;

  double wake(std::size_t j, std::size_t t) const { return wake_logp[j * t_out + t]; }
  double sleep(std::size_t j, std::size_t t) const { return sleep_logp[j * t_out + t]; }
};

/// DomainError when the labels contain a single class.
StageMatrices feature_stage_tests(const Activations& acts, const std::vector<bool>& positive,
                                  nn::Exec exec = nn::Exec::Parallel);

inline constexpr double kStageThreshold = 3.0;

struct StageSets {
  std::vector<std::size_t> wake;
  std::vector<std::size_t> sleep;
};

/// Channel j is wake-indicative when the maximum of wake_logp over the final
/// quarter of samples exceeds `threshold` and is larger than the matching
/// sleep_logp maximum; symmetric for sleep.
StageSets assign_stage_sets(const StageMatrices& m, double threshold = kStageThreshold);

struct Traces {
  std::vector<double> sigma_wake;
  std::vector<double> sigma_sleep;
};

/// Pointwise maxima over each channel set for one window (t_out x filters,
/// time-major). DomainError when a set is empty.
Traces sigma_traces(std::span<const double> window, std::size_t t_out, std::size_t filters, const StageSets& sets);

struct DensePca {
  metrics::PcaResult pca;
  std::vector<Stage> stages;
  std::vector<bool> positive;
};

/// Second dense layer (inference mode) projected on its first three
/// principal components. ShapeError for fewer than four windows.
DensePca dense_pca_export(const nn::CnnModel& model, const std::vector<std::vector<double>>& inputs,
                          const std::vector<Stage>& stages, const std::vector<bool>& positive,
                          nn::Exec exec = nn::Exec::Parallel);

std::string atlas_csv(const std::vector<double>& psi);
std::string matrix_csv(std::span<const double> m, std::size_t rows, std::size_t cols);
std::string traces_csv(const Traces& traces, bool true_positive);
std::string pca_csv(const DensePca& export_);

}  // namespace somn::interpret
