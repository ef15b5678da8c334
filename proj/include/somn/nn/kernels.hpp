#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

namespace somn::nn {

enum class Exec : std::uint8_t { Serial, Parallel };

/// Geometry of one same-padded 1-D convolution. Activations are time-major:
/// element (t, c) lives at t * channels + c. Weights are (filter, tap, channel).
struct ConvShape {
  std::size_t n_in;
  std::size_t c_in;
  std::size_t filters;
  std::size_t kernel;
  std::size_t stride;

  std::size_t n_out() const { return (n_in + stride - 1) / stride; }
  std::size_t pad_left() const;
  std::size_t weight_count() const { return filters * kernel * c_in; }
};

namespace kernels {

// The *_reference kernels are direct transcriptions of the defining sums and
// exist for testing and benchmarking. The optimized kernels assign each
// output element to a single thread with a fixed summation order, so Serial
// and Parallel give bitwise-identical results.

/// pre[m, f] = b[f] + sum_{k, c} w[f, k, c] * in[m * stride + k - pad, c]
void conv1d_forward_reference(const ConvShape& s, std::span<const double> in,
                              std::span<const double> w, std::span<const double> b,
                              std::span<double> pre);
void conv1d_forward(const ConvShape& s, std::span<const double> in, std::span<const double> w,
                    std::span<const double> b, std::span<double> pre, Exec exec = Exec::Serial);

/// Accumulates dW and db from grad_pre (gradient w.r.t. the pre-activation)
/// and, when d_in is non-empty, overwrites d_in with the input gradient.
void conv1d_backward_reference(const ConvShape& s, std::span<const double> in,
                               std::span<const double> w, std::span<const double> grad_pre,
                               std::span<double> dw, std::span<double> db, std::span<double> d_in);
void conv1d_backward(const ConvShape& s, std::span<const double> in, std::span<const double> w,
                     std::span<const double> grad_pre, std::span<double> dw, std::span<double> db,
                     std::span<double> d_in, Exec exec = Exec::Serial);

/// out[o] = b[o] + sum_i w[o, i] * in[i]
void dense_forward(std::span<const double> in, std::span<const double> w,
                   std::span<const double> b, std::span<double> out);

/// Accumulates dW, db; overwrites d_in (if non-empty) with W^T grad_out.
void dense_backward(std::span<const double> in, std::span<const double> w,
                    std::span<const double> grad_out, std::span<double> dw, std::span<double> db,
                    std::span<double> d_in);

}  // namespace kernels
}  // namespace somn::nn
