#include "fft.hpp"

#include <algorithm>
#include <cstring>
#include <mutex>

namespace fraccv::detail {

namespace {
// The FFTW planner is not re-entrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

FftPlan::FftPlan(std::vector<int> dims) : dims_(std::move(dims)) {
  for (int d : dims_) size_ *= static_cast<std::size_t>(d);
  std::lock_guard lock(planner_mutex());
  buffer_ = fftw_alloc_complex(size_);
  forward_ = fftw_plan_dft(static_cast<int>(dims_.size()), dims_.data(), buffer_, buffer_,
                           FFTW_FORWARD, FFTW_ESTIMATE);
  backward_ = fftw_plan_dft(static_cast<int>(dims_.size()), dims_.data(), buffer_, buffer_,
                            FFTW_BACKWARD, FFTW_ESTIMATE);
}

FftPlan::~FftPlan() {
  std::lock_guard lock(planner_mutex());
  if (forward_) fftw_destroy_plan(forward_);
  if (backward_) fftw_destroy_plan(backward_);
  if (buffer_) fftw_free(buffer_);
}

void FftPlan::run(fftw_plan plan, std::span<std::complex<double>> data) const {
  std::memcpy(buffer_, data.data(), size_ * sizeof(fftw_complex));
  fftw_execute(plan);
  std::memcpy(static_cast<void*>(data.data()), buffer_, size_ * sizeof(fftw_complex));
}

void FftPlan::forward(std::span<std::complex<double>> data) const { run(forward_, data); }
void FftPlan::backward(std::span<std::complex<double>> data) const { run(backward_, data); }

}  // namespace fraccv::detail
