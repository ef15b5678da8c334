#pragma once

#include <span>
#include <vector>

namespace somn::dsp {

/// Normalized second-order section (a0 == 1), transposed direct form II.
struct Biquad {
  double b0, b1, b2, a1, a2;

  /// Butterworth sections from the bilinear transform with prewarping.
  static Biquad butter_lowpass(double cutoff_hz, double fs);
  static Biquad butter_highpass(double cutoff_hz, double fs);

  /// DC gain H(1).
  double dc_gain() const { return (b0 + b1 + b2) / (1.0 + a1 + a2); }
};

/// Zero-phase forward-backward filtering through a cascade of sections.
/// Edges use odd reflection padding and steady-state initial conditions.
std::vector<double> filtfilt(std::span<const Biquad> cascade, std::span<const double> x);

/// Butterworth band-pass as high-pass(low_hz) then low-pass(high_hz).
std::vector<double> bandpass_filtfilt(std::span<const double> x, double fs, double low_hz,
                                      double high_hz);

/// Centered moving average over `window` samples; windows are clipped at the
/// signal edges and averaged over the samples they cover.
std::vector<double> moving_average(std::span<const double> x, std::size_t window);
std::vector<double> moving_average_serial(std::span<const double> x, std::size_t window);

double median(std::vector<double> v);

}  // namespace somn::dsp
