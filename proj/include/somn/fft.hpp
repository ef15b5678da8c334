#pragma once

#include <complex>
#include <cstddef>
#include <memory>

namespace somn::dsp {

/// Complex FFT of a fixed length. Plans are created at construction (not
/// thread-safe); transform calls are safe to run concurrently on distinct
/// buffers.
class Fft {
 public:
  explicit Fft(std::size_t n);
  ~Fft();
  Fft(Fft&&) noexcept;
  Fft& operator=(Fft&&) noexcept;
  Fft(const Fft&) = delete;
  Fft& operator=(const Fft&) = delete;

  std::size_t size() const { return n_; }
  void forward(const std::complex<double>* in, std::complex<double>* out) const;
  /// Normalized inverse: inverse(forward(x)) == x.
  void inverse(const std::complex<double>* in, std::complex<double>* out) const;

 private:
  struct Plans;
  std::size_t n_;
  std::unique_ptr<Plans> plans_;
};

}  // namespace somn::dsp
