#include "somn/nn/kernels.hpp"

#include <algorithm>

#include "somn/nn/architecture.hpp"

namespace somn::nn {

std::size_t ConvShape::pad_left() const { return same_padding(n_in, kernel, stride).left; }

namespace kernels {

void conv1d_forward_reference(const ConvShape& s, std::span<const double> in,
                              std::span<const double> w, std::span<const double> b,
                              std::span<double> pre) {
  const auto pad = static_cast<std::ptrdiff_t>(s.pad_left());
  const auto n_in = static_cast<std::ptrdiff_t>(s.n_in);
  for (std::size_t m = 0; m < s.n_out(); ++m) {
    for (std::size_t f = 0; f < s.filters; ++f) {
      double acc = b[f];
      for (std::size_t k = 0; k < s.kernel; ++k) {
        const std::ptrdiff_t t = static_cast<std::ptrdiff_t>(m * s.stride + k) - pad;
        if (t < 0 || t >= n_in) continue;
        for (std::size_t c = 0; c < s.c_in; ++c)
          acc += w[(f * s.kernel + k) * s.c_in + c] * in[static_cast<std::size_t>(t) * s.c_in + c];
      }
      pre[m * s.filters + f] = acc;
    }
  }
}

void conv1d_forward(const ConvShape& s, std::span<const double> in, std::span<const double> w,
                    std::span<const double> b, std::span<double> pre, Exec exec) {
  const auto pad = static_cast<std::ptrdiff_t>(s.pad_left());
  const auto n_in = static_cast<std::ptrdiff_t>(s.n_in);
  const auto n_out = static_cast<std::ptrdiff_t>(s.n_out());
  const std::size_t kc = s.kernel * s.c_in;
  const double* inp = in.data();
  const double* wp = w.data();
#pragma omp parallel for schedule(static) if (exec == Exec::Parallel)
  for (std::ptrdiff_t m = 0; m < n_out; ++m) {
    const std::ptrdiff_t base = m * static_cast<std::ptrdiff_t>(s.stride) - pad;
    // Taps falling inside the signal: k in [k0, k1).
    const std::size_t k0 = base < 0 ? static_cast<std::size_t>(-base) : 0;
    const std::size_t k1 = static_cast<std::size_t>(
        std::clamp<std::ptrdiff_t>(n_in - base, 0, static_cast<std::ptrdiff_t>(s.kernel)));
    const double* window = inp + (base + static_cast<std::ptrdiff_t>(k0)) * static_cast<std::ptrdiff_t>(s.c_in);
    const std::size_t len = k1 > k0 ? (k1 - k0) * s.c_in : 0;
    for (std::size_t f = 0; f < s.filters; ++f) {
      const double* wf = wp + f * kc + k0 * s.c_in;
      double acc = b[f];
      for (std::size_t i = 0; i < len; ++i) acc += wf[i] * window[i];
      pre[static_cast<std::size_t>(m) * s.filters + f] = acc;
    }
  }
}

void conv1d_backward_reference(const ConvShape& s, std::span<const double> in,
                               std::span<const double> w, std::span<const double> grad_pre,
                               std::span<double> dw, std::span<double> db, std::span<double> d_in) {
  const auto pad = static_cast<std::ptrdiff_t>(s.pad_left());
  const auto n_in = static_cast<std::ptrdiff_t>(s.n_in);
  std::fill(d_in.begin(), d_in.end(), 0.0);
  for (std::size_t m = 0; m < s.n_out(); ++m) {
    for (std::size_t f = 0; f < s.filters; ++f) {
      const double g = grad_pre[m * s.filters + f];
      db[f] += g;
      for (std::size_t k = 0; k < s.kernel; ++k) {
        const std::ptrdiff_t t = static_cast<std::ptrdiff_t>(m * s.stride + k) - pad;
        if (t < 0 || t >= n_in) continue;
        for (std::size_t c = 0; c < s.c_in; ++c) {
          const std::size_t wi = (f * s.kernel + k) * s.c_in + c;
          const std::size_t xi = static_cast<std::size_t>(t) * s.c_in + c;
          dw[wi] += g * in[xi];
          if (!d_in.empty()) d_in[xi] += g * w[wi];
        }
      }
    }
  }
}

void conv1d_backward(const ConvShape& s, std::span<const double> in, std::span<const double> w,
                     std::span<const double> grad_pre, std::span<double> dw, std::span<double> db,
                     std::span<double> d_in, Exec exec) {
  const auto pad = static_cast<std::ptrdiff_t>(s.pad_left());
  const auto n_in = static_cast<std::ptrdiff_t>(s.n_in);
  const std::size_t n_out = s.n_out();
  const std::size_t kc = s.kernel * s.c_in;
  const auto filters = static_cast<std::ptrdiff_t>(s.filters);

  // Weight and bias gradients: one filter per thread.
#pragma omp parallel for schedule(static) if (exec == Exec::Parallel)
  for (std::ptrdiff_t fi = 0; fi < filters; ++fi) {
    const auto f = static_cast<std::size_t>(fi);
    double* dwf = dw.data() + f * kc;
    double bias_acc = 0.0;
    for (std::size_t m = 0; m < n_out; ++m) {
      const double g = grad_pre[m * s.filters + f];
      if (g == 0.0) continue;
      bias_acc += g;
      const std::ptrdiff_t base = static_cast<std::ptrdiff_t>(m * s.stride) - pad;
      const std::size_t k0 = base < 0 ? static_cast<std::size_t>(-base) : 0;
      const std::size_t k1 = static_cast<std::size_t>(
          std::clamp<std::ptrdiff_t>(n_in - base, 0, static_cast<std::ptrdiff_t>(s.kernel)));
      if (k1 <= k0) continue;
      const double* window = in.data() + (base + static_cast<std::ptrdiff_t>(k0)) * static_cast<std::ptrdiff_t>(s.c_in);
      double* dwk = dwf + k0 * s.c_in;
      const std::size_t len = (k1 - k0) * s.c_in;
      for (std::size_t i = 0; i < len; ++i) dwk[i] += g * window[i];
    }
    db[f] += bias_acc;
  }

  if (d_in.empty()) return;
  // Input gradient: one input position per thread, gathering every
  // (output, tap) pair that touched it.
#pragma omp parallel for schedule(static) if (exec == Exec::Parallel)
  for (std::ptrdiff_t t = 0; t < n_in; ++t) {
    double* dt = d_in.data() + static_cast<std::size_t>(t) * s.c_in;
    std::fill(dt, dt + s.c_in, 0.0);
    for (std::size_t k = 0; k < s.kernel; ++k) {
      const std::ptrdiff_t j = t + pad - static_cast<std::ptrdiff_t>(k);
      if (j < 0 || j % static_cast<std::ptrdiff_t>(s.stride) != 0) continue;
      const auto m = static_cast<std::size_t>(j / static_cast<std::ptrdiff_t>(s.stride));
      if (m >= n_out) continue;
      for (std::size_t f = 0; f < s.filters; ++f) {
        const double g = grad_pre[m * s.filters + f];
        if (g == 0.0) continue;
        const double* wk = w.data() + f * kc + k * s.c_in;
        for (std::size_t c = 0; c < s.c_in; ++c) dt[c] += g * wk[c];
      }
    }
  }
}

void dense_forward(std::span<const double> in, std::span<const double> w,
                   std::span<const double> b, std::span<double> out) {
  const std::size_t n = in.size();
  for (std::size_t o = 0; o < out.size(); ++o) {
    const double* row = w.data() + o * n;
    double acc = b[o];
    for (std::size_t i = 0; i < n; ++i) acc += row[i] * in[i];
    out[o] = acc;
  }
}

void dense_backward(std::span<const double> in, std::span<const double> w,
                    std::span<const double> grad_out, std::span<double> dw, std::span<double> db,
                    std::span<double> d_in) {
  const std::size_t n = in.size();
  std::fill(d_in.begin(), d_in.end(), 0.0);
  for (std::size_t o = 0; o < grad_out.size(); ++o) {
    const double g = grad_out[o];
    db[o] += g;
    if (g == 0.0) continue;
    double* drow = dw.data() + o * n;
    const double* row = w.data() + o * n;
    for (std::size_t i = 0; i < n; ++i) drow[i] += g * in[i];
    if (!d_in.empty())
      for (std::size_t i = 0; i < n; ++i) d_in[i] += g * row[i];
  }
}

}  // namespace kernels
}  // namespace somn::nn
