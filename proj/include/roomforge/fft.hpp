// roomforge/fft.hpp

// Copyright 2026  The roomforge authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <mutex>
#include <span>
#include <stdexcept>
#include <vector>

namespace roomforge {

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

namespace detail {

inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace detail

// Complex FFT of a fixed size backed by FFTW. Plans are made with
// FFTW_ESTIMATE so results do not depend on timing. Executing a plan is
// thread-safe; construction serialises on the planner.
class FftPlan {
 public:
  using Complex = std::complex<double>;

  explicit FftPlan(std::size_t n) : n_(n) {
    if (n == 0) throw std::invalid_argument("FftPlan: size must be positive");
    std::vector<Complex> scratch(n);
    auto* p = reinterpret_cast<fftw_complex*>(scratch.data());
    std::lock_guard lock(detail::fftw_planner_mutex());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    forward_ = fftw_plan_dft_1d(static_cast<int>(n), p, p, FFTW_FORWARD, flags);
    backward_ = fftw_plan_dft_1d(static_cast<int>(n), p, p, FFTW_BACKWARD, flags);
    if (!forward_ || !backward_) throw std::runtime_error("FftPlan: planning failed");
  }

  ~FftPlan() {
    std::lock_guard lock(detail::fftw_planner_mutex());
    if (forward_) fftw_destroy_plan(forward_);
    if (backward_) fftw_destroy_plan(backward_);
  }

  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;

  std::size_t size() const { return n_; }

  void forward(std::span<Complex> data) const { run(forward_, data); }

  /// Inverse transform including the 1/n scale.
  void inverse(std::span<Complex> data) const {
    run(backward_, data);
    const double scale = 1.0 / static_cast<double>(n_);
    for (auto& v : data) v *= scale;
  }

 private:
  void run(fftw_plan plan, std::span<Complex> a) const {
    if (a.size() != n_) throw std::invalid_argument("FftPlan: buffer size mismatch");
    auto* p = reinterpret_cast<fftw_complex*>(a.data());
    fftw_execute_dft(plan, p, p);
  }

  std::size_t n_;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

}  // namespace roomforge
