#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace somn::scattering {

/// Per-coefficient z-scoring; statistics come from the training cohort only.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;  // 1 / std, or 1 for constant coefficients

  static Standardizer fit(std::span<const double> data, std::size_t n, std::size_t d);
  std::vector<double> apply(std::span<const double> data) const;  // any number of rows
  bool operator==(const Standardizer&) const = default;
};

/// d -> 20 sigmoid -> 20 sigmoid -> 2 (softmax), all layers with bias.
/// Output 0 is the positive class.
struct StHead {
  std::size_t input_dim = 0;
  std::size_t hidden1 = 20;
  std::size_t hidden2 = 20;
  std::size_t outputs = 2;
  std::vector<double> params;  // W1, b1, W2, b2, W3, b3 (weights row-major, out x in)
  Standardizer standardizer;

  std::size_t param_count() const;
  bool operator==(const StHead&) const = default;
};

StHead init_st_head(std::size_t input_dim, std::uint64_t seed);

/// Probabilities for one raw (unstandardized) feature vector.
std::vector<double> st_probs(const StHead& head, std::span<const double> raw);
bool st_predict_positive(const StHead& head, std::span<const double> raw);

/// Mean cross-entropy over standardized rows and its gradient with respect
/// to `params`. Summation order is fixed, so the result does not depend on
/// the thread count.
double st_loss_grad(const StHead& head, std::span<const double> params, std::span<const double> x,
                    const std::vector<bool>& positive, std::vector<double>* grad);

struct ScgConfig {
  std::size_t iterations = 200;
  double sigma = 5e-5;
  double lambda = 5e-7;
  std::uint64_t seed = 0;
};

struct ScgLog {
  std::size_t iteration;
  double loss;
  double lambda;
  bool success;
};

struct StTrainResult {
  StHead head;
  std::vector<ScgLog> log;
  bool symmetry_broken = false;
};

/// Full-batch scaled conjugate gradient (Moller). `features` is n x d raw
/// rows; standardization is fitted here. When `initial` is all zeros or has
/// an exactly zero gradient, a seeded initialization replaces it.
/// Non-finite loss raises TrainError.
StTrainResult train_st_head(std::span<const double> features, std::size_t d, const std::vector<bool>& positive,
                            const ScgConfig& cfg, std::optional<std::vector<double>> initial = std::nullopt);

std::string st_head_to_json(const StHead& head, const std::string& config_hash = "");
StHead st_head_from_json(const std::string& text);

}  // namespace somn::scattering
