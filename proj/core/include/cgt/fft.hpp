#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>

namespace cgt {

/// In-place complex DFT of a fixed length backed by FFTW.
/// Forward is unnormalized, inverse carries the 1/n factor.
class FftPlan {
 public:
  explicit FftPlan(std::size_t n);
  ~FftPlan();
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;

  std::size_t size() const { return n_; }
  void forward(std::span<std::complex<double>> data) const;
  void inverse(std::span<std::complex<double>> data) const;

 private:
  struct Impl;
  std::size_t n_ = 0;
  std::unique_ptr<Impl> impl_;
};

bool is_power_of_two(std::size_t n);
std::size_t next_power_of_two(std::size_t n);

}  // namespace cgt
