#pragma once

#include <complex>
#include <span>
#include <vector>

namespace tackscan::fft {

/// Real-to-half-complex forward transform (sign -1, unnormalized).
/// Output length is n/2 + 1.
std::vector<std::complex<double>> forward_real(std::span<const double> signal);

/// Half-complex to real inverse transform (sign +1, unnormalized) producing
/// `n` samples. `spectrum` must hold n/2 + 1 bins.
std::vector<double> inverse_real(std::span<const std::complex<double>> spectrum, std::size_t n);

/// Magnitude of the analytic signal.
std::vector<double> envelope(std::span<const double> signal);

}  // namespace tackscan::fft
