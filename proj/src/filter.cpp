#include "somn/filter.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "somn/errors.hpp"

namespace somn::dsp {

namespace {

constexpr double kButterQ = 0.70710678118654752440;

Biquad normalized(double b0, double b1, double b2, double a0, double a1, double a2) {
  return {b0 / a0, b1 / a0, b2 / a0, a1 / a0, a2 / a0};
}

// One pass through a section starting from the steady state for input x0.
void run_section(const Biquad& s, std::vector<double>& x) {
  if (x.empty()) return;
  const double y0 = s.dc_gain() * x[0];
  double z2 = s.b2 * x[0] - s.a2 * y0;
  double z1 = y0 - s.b0 * x[0];
  for (double& v : x) {
    const double in = v;
    const double out = s.b0 * in + z1;
    z1 = s.b1 * in - s.a1 * out + z2;
    z2 = s.b2 * in - s.a2 * out;
    v = out;
  }
}

}  // namespace

Biquad Biquad::butter_lowpass(double cutoff_hz, double fs) {
  const double w0 = 2.0 * std::numbers::pi * cutoff_hz / fs;
  const double c = std::cos(w0);
  const double alpha = std::sin(w0) / (2.0 * kButterQ);
  return normalized((1.0 - c) / 2.0, 1.0 - c, (1.0 - c) / 2.0, 1.0 + alpha, -2.0 * c, 1.0 - alpha);
}

Biquad Biquad::butter_highpass(double cutoff_hz, double fs) {
  const double w0 = 2.0 * std::numbers::pi * cutoff_hz / fs;
  const double c = std::cos(w0);
  const double alpha = std::sin(w0) / (2.0 * kButterQ);
  return normalized((1.0 + c) / 2.0, -(1.0 + c), (1.0 + c) / 2.0, 1.0 + alpha, -2.0 * c, 1.0 - alpha);
}

std::vector<double> filtfilt(std::span<const Biquad> cascade, std::span<const double> x) {
  const std::size_t n = x.size();
  if (n == 0) return {};
  const std::size_t pad = std::min<std::size_t>(n - 1, 3 * (2 * cascade.size() + 1) * 64);

  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  for (const auto& s : cascade) run_section(s, ext);
  std::reverse(ext.begin(), ext.end());
  for (const auto& s : cascade) run_section(s, ext);
  std::reverse(ext.begin(), ext.end());
  return {ext.begin() + static_cast<std::ptrdiff_t>(pad),
          ext.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

std::vector<double> bandpass_filtfilt(std::span<const double> x, double fs, double low_hz,
                                      double high_hz) {
  if (!(low_hz > 0.0 && high_hz > low_hz && high_hz < fs / 2.0))
    throw DomainError("band-pass edges must satisfy 0 < low < high < fs/2");
  const Biquad sections[] = {Biquad::butter_highpass(low_hz, fs),
                             Biquad::butter_lowpass(high_hz, fs)};
  return filtfilt(sections, x);
}

// Each output is an independent window sum, so the serial and parallel
// versions agree bitwise.
std::vector<double> moving_average_serial(std::span<const double> x, std::size_t window) {
  const auto n = static_cast<std::ptrdiff_t>(x.size());
  const auto left = static_cast<std::ptrdiff_t>((window - 1) / 2);
  const auto right = static_cast<std::ptrdiff_t>(window / 2);
  std::vector<double> out(x.size());
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, i - left);
    const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n - 1, i + right);
    double acc = 0.0;
    for (std::ptrdiff_t k = lo; k <= hi; ++k) acc += x[static_cast<std::size_t>(k)];
    out[static_cast<std::size_t>(i)] = acc / static_cast<double>(hi - lo + 1);
  }
  return out;
}

std::vector<double> moving_average(std::span<const double> x, std::size_t window) {
  const auto n = static_cast<std::ptrdiff_t>(x.size());
  const auto left = static_cast<std::ptrdiff_t>((window - 1) / 2);
  const auto right = static_cast<std::ptrdiff_t>(window / 2);
  std::vector<double> out(x.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, i - left);
    const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n - 1, i + right);
    double acc = 0.0;
    for (std::ptrdiff_t k = lo; k <= hi; ++k) acc += x[static_cast<std::size_t>(k)];
    out[static_cast<std::size_t>(i)] = acc / static_cast<double>(hi - lo + 1);
  }
  return out;
}

double median(std::vector<double> v) {
  if (v.empty()) throw DomainError("median of an empty sequence");
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

}  // namespace somn::dsp
