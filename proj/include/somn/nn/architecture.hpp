#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace somn::nn {

/// Shape of the 1-D CNN: n_blocks x [conv stride 1, conv stride 2], each
/// conv with `filters` kernels of width `kernel`, bias and ReLU; then two
/// ReLU dense layers and a linear output layer fed to softmax.
struct ArchitectureSpec {
  std::size_t input_length = 1200;
  std::size_t n_blocks = 5;
  std::size_t filters = 10;
  std::size_t kernel = 8;
  std::size_t dense1 = 20;
  std::size_t dense2 = 20;
  std::size_t n_outputs = 2;
  double dropout_p = 0.5;

  /// 120 -> 3 blocks, 480 -> 4, 1200 -> 5, 2400 -> 6; ShapeError otherwise.
  static ArchitectureSpec for_input(std::size_t input_length);
  static std::size_t blocks_for_input(std::size_t input_length);

  std::size_t conv_layers() const { return 2 * n_blocks; }
  std::size_t stride(std::size_t layer) const { return layer % 2 == 0 ? 1 : 2; }
  std::size_t in_channels(std::size_t layer) const { return layer == 0 ? 1 : filters; }

  /// Length after each conv layer (ceil(N / stride) with same padding).
  std::vector<std::size_t> conv_lengths() const;
  std::size_t final_length() const { return conv_lengths().back(); }
  std::size_t flattened_size() const { return final_length() * filters; }

  /// Throws ShapeError on zero sizes or a dropout outside [0, 1).
  void validate() const;

  bool operator==(const ArchitectureSpec&) const = default;
};

/// Offsets of every tensor inside the flat parameter vector. Order: for each
/// conv layer its weights (filters x kernel x in_channels) then bias; dense1
/// (dense1 x flattened) and bias; dense2 (dense2 x dense1) and bias; output
/// (n_outputs x dense2) and bias.
struct ParamLayout {
  struct Slice {
    std::size_t offset = 0;
    std::size_t size = 0;
  };

  std::vector<Slice> conv_w, conv_b;
  Slice d1_w, d1_b, d2_w, d2_b, out_w, out_b;
  std::size_t total = 0;

  explicit ParamLayout(const ArchitectureSpec& spec);
};

/// TensorFlow-style "same" padding: total = max((M - 1) * s + K - N, 0),
/// left = total / 2.
struct Padding {
  std::size_t out_length;
  std::size_t left;
};
Padding same_padding(std::size_t n, std::size_t kernel, std::size_t stride);

}  // namespace somn::nn
