#include "spectral.hpp"

#include <fftw3.h>

#include <mutex>

#include "bdlp/errors.hpp"

namespace bdlp::detail {
namespace {
// FFTW's planner is not re-entrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

struct PeriodicConvolver::Plans {
  fftw_complex* buffer = nullptr;
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
};

PeriodicConvolver::PeriodicConvolver(int dim, int n) : plans_(std::make_unique<Plans>()) {
  if (dim < 1 || dim > 3 || n < 1) throw PreconditionError("invalid convolution grid");
  int dims[3] = {n, n, n};
  size_ = 1;
  for (int k = 0; k < dim; ++k) size_ *= static_cast<std::size_t>(n);
  std::lock_guard lock(planner_mutex());
  plans_->buffer = fftw_alloc_complex(size_);
  plans_->forward = fftw_plan_dft(dim, dims, plans_->buffer, plans_->buffer, FFTW_FORWARD, FFTW_ESTIMATE);
  plans_->backward = fftw_plan_dft(dim, dims, plans_->buffer, plans_->buffer, FFTW_BACKWARD, FFTW_ESTIMATE);
}

PeriodicConvolver::~PeriodicConvolver() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(plans_->forward);
  fftw_destroy_plan(plans_->backward);
  fftw_free(plans_->buffer);
}

std::vector<std::complex<double>> PeriodicConvolver::transform(std::span<const double> f) {
  for (std::size_t i = 0; i < size_; ++i) {
    plans_->buffer[i][0] = f[i];
    plans_->buffer[i][1] = 0.0;
  }
  fftw_execute(plans_->forward);
  std::vector<std::complex<double>> out(size_);
  for (std::size_t i = 0; i < size_; ++i) out[i] = {plans_->buffer[i][0], plans_->buffer[i][1]};
  return out;
}

void PeriodicConvolver::convolve(std::span<const double> f, std::span<const std::complex<double>> g_hat,
                                 std::span<double> out) {
  for (std::size_t i = 0; i < size_; ++i) {
    plans_->buffer[i][0] = f[i];
    plans_->buffer[i][1] = 0.0;
  }
  fftw_execute(plans_->forward);
  for (std::size_t i = 0; i < size_; ++i) {
    std::complex<double> v{plans_->buffer[i][0], plans_->buffer[i][1]};
    v *= g_hat[i];
    plans_->buffer[i][0] = v.real();
    plans_->buffer[i][1] = v.imag();
  }
  fftw_execute(plans_->backward);
  const double scale = 1.0 / static_cast<double>(size_);
  for (std::size_t i = 0; i < size_; ++i) out[i] = plans_->buffer[i][0] * scale;
}

}  // namespace bdlp::detail
