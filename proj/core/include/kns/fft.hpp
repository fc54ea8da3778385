#pragma once

#include <complex>

#include "kns/grid.hpp"

namespace kns {

/// In-place complex FFT over a whole torus grid.
///
/// Plans are created once per grid with FFTW_ESTIMATE (deterministic across
/// runs) and FFTW_UNALIGNED, then executed through the new-array interface,
/// which FFTW documents as thread-safe.
class FftPlan {
 public:
  static const FftPlan& get(const TorusGrid& grid);

  ~FftPlan();
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;

  /// data <- sum_x data(x) exp(-i k.x), unnormalized.
  void forward(std::complex<double>* data) const;
  /// data <- sum_k data(k) exp(+i k.x).
  void backward(std::complex<double>* data) const;

 private:
  explicit FftPlan(const TorusGrid& grid);
  void* forward_ = nullptr;
  void* backward_ = nullptr;
};

}  // namespace kns
