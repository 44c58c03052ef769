#pragma once

#include <complex>
#include <memory>
#include <span>
#include <vector>

namespace bdlp::detail {

/// Cyclic convolution on a d-dimensional grid with n points per axis via
/// FFTW. Owns its plans and work buffers; one instance must not be used from
/// two threads at once.
class PeriodicConvolver {
 public:
  PeriodicConvolver(int dim, int n);
  ~PeriodicConvolver();
  PeriodicConvolver(const PeriodicConvolver&) = delete;
  PeriodicConvolver& operator=(const PeriodicConvolver&) = delete;

  std::size_t size() const { return size_; }

  /// Unnormalized forward transform of a real grid function.
  std::vector<std::complex<double>> transform(std::span<const double> f);
  /// out_i = sum_j f_j g_{i-j}, with g given by its transform.
  void convolve(std::span<const double> f, std::span<const std::complex<double>> g_hat,
                std::span<double> out);

 private:
  struct Plans;
  std::size_t size_;
  std::unique_ptr<Plans> plans_;
};

}  // namespace bdlp::detail
