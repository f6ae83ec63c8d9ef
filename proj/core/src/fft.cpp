#include "fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <mutex>

namespace oesense::detail {
namespace {

// FFTW planning and plan destruction are not thread-safe; execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct PlanGuard {
  fftw_plan plan = nullptr;
  ~PlanGuard() {
    if (plan) {
      std::lock_guard lock(planner_mutex());
      fftw_destroy_plan(plan);
    }
  }
};

std::vector<cplx> transform(std::vector<cplx> in, int sign) {
  const auto n = in.size();
  std::vector<cplx> out(n);
  if (n == 0) return out;
  PlanGuard guard;
  {
    std::lock_guard lock(planner_mutex());
    guard.plan = fftw_plan_dft_1d(
        static_cast<int>(n), reinterpret_cast<fftw_complex*>(in.data()),
        reinterpret_cast<fftw_complex*>(out.data()), sign, FFTW_ESTIMATE);
  }
  fftw_execute(guard.plan);
  return out;
}

}  // namespace

std::vector<cplx> dft_real(std::span<const double> x, std::size_t n) {
  std::vector<cplx> in(n);
  const auto m = std::min(n, x.size());
  for (std::size_t i = 0; i < m; ++i) in[i] = x[i];
  return transform(std::move(in), FFTW_FORWARD);
}

std::vector<cplx> rfft(std::span<const double> x, std::size_t n) {
  auto full = dft_real(x, n);
  full.resize(n / 2 + 1);
  return full;
}

std::vector<cplx> idft(std::span<const cplx> spectrum) {
  return transform(std::vector<cplx>(spectrum.begin(), spectrum.end()),
                   FFTW_BACKWARD);
}

std::size_t next_pow2(std::size_t n) noexcept {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace oesense::detail
