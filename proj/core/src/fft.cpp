#include "kns/fft.hpp"

#include <fftw3.h>

#include <map>
#include <memory>
#include <mutex>
#include <vector>

namespace kns {

namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

FftPlan::FftPlan(const TorusGrid& grid) {
  int dims[3] = {grid.n(), grid.n(), grid.n()};
  std::vector<std::complex<double>> scratch(grid.size());
  auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  forward_ = fftw_plan_dft(grid.dim(), dims, buf, buf, FFTW_FORWARD, flags);
  backward_ = fftw_plan_dft(grid.dim(), dims, buf, buf, FFTW_BACKWARD, flags);
}

// Cached plans are never destroyed, so this only runs for plans that failed
// to enter the cache.
FftPlan::~FftPlan() {
  if (forward_) fftw_destroy_plan(static_cast<fftw_plan>(forward_));
  if (backward_) fftw_destroy_plan(static_cast<fftw_plan>(backward_));
}

const FftPlan& FftPlan::get(const TorusGrid& grid) {
  static auto* cache = new std::map<std::pair<int, int>, std::unique_ptr<FftPlan>>();
  std::lock_guard<std::mutex> lock(planner_mutex());
  auto& slot = (*cache)[{grid.dim(), grid.n()}];
  if (!slot) slot.reset(new FftPlan(grid));
  return *slot;
}

void FftPlan::forward(std::complex<double>* data) const {
  auto* buf = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(static_cast<fftw_plan>(forward_), buf, buf);
}

void FftPlan::backward(std::complex<double>* data) const {
  auto* buf = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(static_cast<fftw_plan>(backward_), buf, buf);
}

}  // namespace kns
