#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <map>
#include <mutex>
#include <span>
#include <stdexcept>

namespace cgostab::detail {

// In-place FFTW plans for one ring of length n, shared process-wide.
// The planner is not thread-safe; execution with fftw_execute_dft is.
class RingFftPlans {
 public:
  static RingFftPlans& instance() {
    static RingFftPlans plans;
    return plans;
  }

  RingFftPlans(const RingFftPlans&) = delete;
  RingFftPlans& operator=(const RingFftPlans&) = delete;

  fftw_plan get(int n, int sign) {
    std::lock_guard lock(mutex_);
    auto key = std::make_pair(n, sign);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    fftw_complex* scratch = fftw_alloc_complex(static_cast<std::size_t>(n));
    fftw_plan plan = fftw_plan_dft_1d(n, scratch, scratch, sign,
                                      FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(scratch);
    if (plan == nullptr) throw std::runtime_error("fftw planning failed");
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  RingFftPlans() = default;
  ~RingFftPlans() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  std::mutex mutex_;
  std::map<std::pair<int, int>, fftw_plan> plans_;
};

// Fourier coefficients of each length-n row: c_m = (1/n) sum_j f_j e^{-i m theta_j},
// stored in FFT order (m = 0..n/2-1, then -n/2..-1).
inline void rows_to_modes(std::span<std::complex<double>> data, int n) {
  fftw_plan plan = RingFftPlans::instance().get(n, FFTW_FORWARD);
  const double scale = 1.0 / n;
  for (std::size_t off = 0; off + n <= data.size(); off += n) {
    auto* row = reinterpret_cast<fftw_complex*>(data.data() + off);
    fftw_execute_dft(plan, row, row);
    for (int k = 0; k < n; ++k) data[off + k] *= scale;
  }
}

// Inverse of rows_to_modes: f_j = sum_m c_m e^{i m theta_j}.
inline void modes_to_rows(std::span<std::complex<double>> data, int n) {
  fftw_plan plan = RingFftPlans::instance().get(n, FFTW_BACKWARD);
  for (std::size_t off = 0; off + n <= data.size(); off += n) {
    auto* row = reinterpret_cast<fftw_complex*>(data.data() + off);
    fftw_execute_dft(plan, row, row);
  }
}

// Signed mode number stored at FFT slot k.
inline int mode_of_slot(int k, int n) { return k < n / 2 ? k : k - n; }
inline int slot_of_mode(int m, int n) { return m >= 0 ? m : m + n; }

}  // namespace cgostab::detail
