#include "tackscan/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <utility>

#include "tackscan/error.hpp"

namespace tackscan::fft {

namespace {

enum class Kind { r2c, c2r, c2c_backward };

// FFTW planning is not thread-safe; execution on new arrays is.
class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(std::size_t n, Kind kind) {
    std::lock_guard lock(mutex_);
    auto key = std::make_pair(n, kind);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    std::vector<double> real(n);
    std::vector<std::complex<double>> a(n), b(n);
    auto* ca = reinterpret_cast<fftw_complex*>(a.data());
    auto* cb = reinterpret_cast<fftw_complex*>(b.data());
    const int size = static_cast<int>(n);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    fftw_plan plan = nullptr;
    switch (kind) {
      case Kind::r2c: plan = fftw_plan_dft_r2c_1d(size, real.data(), ca, flags); break;
      case Kind::c2r: plan = fftw_plan_dft_c2r_1d(size, ca, real.data(), flags); break;
      case Kind::c2c_backward: plan = fftw_plan_dft_1d(size, ca, cb, FFTW_BACKWARD, flags); break;
    }
    if (!plan) throw RuntimeFailure("FFTW could not plan a transform of size " + std::to_string(n));
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<std::pair<std::size_t, Kind>, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache c;
  return c;
}

}  // namespace

std::vector<std::complex<double>> forward_real(std::span<const double> signal) {
  const std::size_t n = signal.size();
  if (n == 0) return {};
  std::vector<double> in(signal.begin(), signal.end());
  std::vector<std::complex<double>> out(n / 2 + 1);
  fftw_execute_dft_r2c(cache().get(n, Kind::r2c), in.data(), reinterpret_cast<fftw_complex*>(out.data()));
  return out;
}

std::vector<double> inverse_real(std::span<const std::complex<double>> spectrum, std::size_t n) {
  if (n == 0) return {};
  if (spectrum.size() != n / 2 + 1) throw ValidationError("inverse_real: spectrum must hold n/2 + 1 bins");
  // c2r destroys its input.
  std::vector<std::complex<double>> in(spectrum.begin(), spectrum.end());
  std::vector<double> out(n);
  fftw_execute_dft_c2r(cache().get(n, Kind::c2r), reinterpret_cast<fftw_complex*>(in.data()), out.data());
  return out;
}

std::vector<double> envelope(std::span<const double> signal) {
  const std::size_t n = signal.size();
  if (n == 0) return {};
  auto spec = forward_real(signal);
  // Analytic signal: keep DC and Nyquist, double positive bins, zero the rest.
  std::vector<std::complex<double>> full(n, {0.0, 0.0});
  full[0] = spec[0];
  for (std::size_t k = 1; k < (n + 1) / 2; ++k) full[k] = 2.0 * spec[k];
  if (n % 2 == 0) full[n / 2] = spec[n / 2];

  std::vector<std::complex<double>> analytic(n);
  fftw_execute_dft(cache().get(n, Kind::c2c_backward), reinterpret_cast<fftw_complex*>(full.data()),
                   reinterpret_cast<fftw_complex*>(analytic.data()));
  std::vector<double> out(n);
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = std::abs(analytic[i]) * scale;
  return out;
}

}  // namespace tackscan::fft
