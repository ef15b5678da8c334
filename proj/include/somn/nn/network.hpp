#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "somn/nn/architecture.hpp"
#include "somn/nn/kernels.hpp"
#include "somn/rng.hpp"

namespace somn::nn {

struct CnnModel {
  ArchitectureSpec spec;
  std::vector<double> params;  // laid out per ParamLayout
  std::uint64_t rng_seed = 0;

  /// Glorot-uniform weights (bound sqrt(6 / (fan_in + fan_out))), zero biases.
  static CnnModel initialize(const ArchitectureSpec& spec, std::uint64_t seed);
  static CnnModel zeros(const ArchitectureSpec& spec);

  ParamLayout layout() const { return ParamLayout(spec); }

  bool operator==(const CnnModel&) const = default;
};

enum class Mode : std::uint8_t { Train, Infer };

/// Everything backward() needs, plus the activations the interpretation
/// tools read. All activations are time-major (t * filters + c).
struct ForwardCache {
  std::vector<double> input;
  std::vector<std::vector<double>> conv_out;  // post-ReLU output of every conv layer
  std::vector<double> conv_mask;              // dropout scale on the last block (empty in Infer)
  std::vector<double> flat;                   // last block output after dropout
  std::vector<double> d1_act, d1_mask, d1_out;
  std::vector<double> d2_act, d2_mask, d2_out;
  std::vector<double> logits;
  std::vector<double> probs;

  /// Last-block output, final_length x filters, before dropout.
  const std::vector<double>& last_block() const { return conv_out.back(); }
};

/// Class probabilities; index 0 is the positive ("wake") node.
ForwardCache forward(const CnnModel& model, std::span<const double> x, Mode mode,
                     Rng* dropout_rng = nullptr, Exec exec = Exec::Serial);

/// Only the convolutional section, returning the last-block output.
std::vector<double> conv_features(const CnnModel& model, std::span<const double> x,
                                  Exec exec = Exec::Serial);

/// One conv layer with bias and ReLU, as used inside the blocks.
std::vector<double> conv1d_relu(const ConvShape& shape, std::span<const double> in,
                                std::span<const double> w, std::span<const double> b,
                                Exec exec = Exec::Serial);

/// Positive iff the positive node's output >= the negative node's.
bool predict_positive(std::span<const double> probs);

inline constexpr double kLossFloor = 1e-12;

/// -log(max(p_true, 1e-12)).
double cross_entropy(std::span<const double> probs, bool positive);

std::vector<double> softmax(std::span<const double> logits);

/// Exact gradient of the cross-entropy loss w.r.t. every parameter, dropout
/// masks held fixed. Returned in ParamLayout order.
std::vector<double> backward(const CnnModel& model, const ForwardCache& cache, bool positive,
                             Exec exec = Exec::Serial);

/// Same as backward() but accumulates into `grad` (size == params.size()).
void backward_into(const CnnModel& model, const ForwardCache& cache, bool positive,
                   std::span<double> grad, Exec exec = Exec::Serial);

}  // namespace somn::nn
