#include "somn/nn/architecture.hpp"

#include <string>

#include "somn/errors.hpp"

namespace somn::nn {

std::size_t ArchitectureSpec::blocks_for_input(std::size_t input_length) {
  switch (input_length) {
    case 120: return 3;
    case 480: return 4;
    case 1200: return 5;
    case 2400: return 6;
    default:
      throw ShapeError("no block count defined for input length " + std::to_string(input_length));
  }
}

ArchitectureSpec ArchitectureSpec::for_input(std::size_t input_length) {
  ArchitectureSpec s;
  s.input_length = input_length;
  s.n_blocks = blocks_for_input(input_length);
  return s;
}

std::vector<std::size_t> ArchitectureSpec::conv_lengths() const {
  std::vector<std::size_t> out;
  std::size_t n = input_length;
  for (std::size_t l = 0; l < conv_layers(); ++l) {
    n = (n + stride(l) - 1) / stride(l);
    out.push_back(n);
  }
  return out;
}

void ArchitectureSpec::validate() const {
  if (input_length < 1) throw ShapeError("input length must be positive");
  if (n_blocks < 1 || filters < 1 || kernel < 1 || dense1 < 1 || dense2 < 1 || n_outputs < 2)
    throw ShapeError("architecture sizes must be positive (and at least two outputs)");
  if (!(dropout_p >= 0.0 && dropout_p < 1.0)) throw ShapeError("dropout probability must be in [0, 1)");
}

ParamLayout::ParamLayout(const ArchitectureSpec& spec) {
  auto take = [this](std::size_t n) {
    Slice s{total, n};
    total += n;
    return s;
  };
  for (std::size_t l = 0; l < spec.conv_layers(); ++l) {
    conv_w.push_back(take(spec.filters * spec.kernel * spec.in_channels(l)));
    conv_b.push_back(take(spec.filters));
  }
  d1_w = take(spec.dense1 * spec.flattened_size());
  d1_b = take(spec.dense1);
  d2_w = take(spec.dense2 * spec.dense1);
  d2_b = take(spec.dense2);
  out_w = take(spec.n_outputs * spec.dense2);
  out_b = take(spec.n_outputs);
}

Padding same_padding(std::size_t n, std::size_t kernel, std::size_t stride) {
  if (n < 1) throw ShapeError("convolution input must hold at least one sample");
  const std::size_t m = (n + stride - 1) / stride;
  const std::size_t span = (m - 1) * stride + kernel;
  const std::size_t total = span > n ? span - n : 0;
  return {m, total / 2};
}

}  // namespace somn::nn
