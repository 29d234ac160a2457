#include "cgt/fft.hpp"

#include <fftw3.h>

#include <mutex>
#include <vector>

#include "cgt/errors.hpp"

namespace cgt {

namespace {
// FFTW's planner is not reentrant; execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

struct FftPlan::Impl {
  fftw_plan fwd = nullptr;
  fftw_plan inv = nullptr;
};

FftPlan::FftPlan(std::size_t n) : n_(n), impl_(std::make_unique<Impl>()) {
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "FFT length must be positive");
  std::vector<std::complex<double>> scratch(n);
  auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
  const int len = static_cast<int>(n);
  std::lock_guard lock(planner_mutex());
  impl_->fwd = fftw_plan_dft_1d(len, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
  impl_->inv = fftw_plan_dft_1d(len, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
}

FftPlan::~FftPlan() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(impl_->fwd);
  fftw_destroy_plan(impl_->inv);
}

void FftPlan::forward(std::span<std::complex<double>> data) const {
  if (data.size() != n_) throw Error(ErrorCode::ShapeMismatch, "FFT input length");
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(impl_->fwd, buf, buf);
}

void FftPlan::inverse(std::span<std::complex<double>> data) const {
  if (data.size() != n_) throw Error(ErrorCode::ShapeMismatch, "FFT input length");
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(impl_->inv, buf, buf);
  const double scale = 1.0 / static_cast<double>(n_);
  for (auto& v : data) v *= scale;
}

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::size_t next_power_of_two(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace cgt
