#pragma once

// Thin RAII wrapper over FFTW's n-dimensional complex transforms.

#include <complex>
#include <span>
#include <vector>

#include <fftw3.h>

namespace fraccv::detail {

class FftPlan {
 public:
  explicit FftPlan(std::vector<int> dims);
  ~FftPlan();
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;

  [[nodiscard]] std::size_t size() const { return size_; }
  [[nodiscard]] const std::vector<int>& dims() const { return dims_; }

  /// Unnormalised forward / backward transforms of `data` (length size()).
  void forward(std::span<std::complex<double>> data) const;
  void backward(std::span<std::complex<double>> data) const;

 private:
  void run(fftw_plan plan, std::span<std::complex<double>> data) const;

  std::vector<int> dims_;
  std::size_t size_ = 1;
  fftw_complex* buffer_ = nullptr;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

}  // namespace fraccv::detail
