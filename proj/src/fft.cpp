#include "somn/fft.hpp"

#include <algorithm>
#include <mutex>

#include <fftw3.h>

#include "somn/errors.hpp"

namespace somn::dsp {

namespace {
std::mutex planner_mutex;
}

struct Fft::Plans {
  fftw_plan fwd = nullptr;
  fftw_plan inv = nullptr;

  ~Plans() {
    std::lock_guard lock(planner_mutex);
    if (fwd) fftw_destroy_plan(fwd);
    if (inv) fftw_destroy_plan(inv);
  }
};

Fft::Fft(std::size_t n) : n_(n), plans_(std::make_unique<Plans>()) {
  if (n == 0) throw DomainError("FFT of length zero");
  std::unique_lock lock(planner_mutex);
  // In-place plans: new-array execution must keep the plan's in-place-ness,
  // so out-of-place calls copy into the output first.
  auto* buf = fftw_alloc_complex(n);
  const int len = static_cast<int>(n);
  plans_->fwd = fftw_plan_dft_1d(len, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
  plans_->inv = fftw_plan_dft_1d(len, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
  fftw_free(buf);
  lock.unlock();
  if (!plans_->fwd || !plans_->inv) throw DomainError("FFTW could not create a plan");
}

Fft::~Fft() = default;

Fft::Fft(Fft&&) noexcept = default;
Fft& Fft::operator=(Fft&&) noexcept = default;

void Fft::forward(const std::complex<double>* in, std::complex<double>* out) const {
  if (in != out) std::copy(in, in + n_, out);
  fftw_execute_dft(plans_->fwd, reinterpret_cast<fftw_complex*>(out), reinterpret_cast<fftw_complex*>(out));
}

void Fft::inverse(const std::complex<double>* in, std::complex<double>* out) const {
  if (in != out) std::copy(in, in + n_, out);
  fftw_execute_dft(plans_->inv, reinterpret_cast<fftw_complex*>(out), reinterpret_cast<fftw_complex*>(out));
  const double scale = 1.0 / static_cast<double>(n_);
  for (std::size_t i = 0; i < n_; ++i) out[i] *= scale;
}

}  // namespace somn::dsp
