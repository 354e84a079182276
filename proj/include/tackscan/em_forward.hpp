#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tackscan/scene.hpp"

namespace tackscan {

inline constexpr double kSpeedOfLight = 299792458.0;        // m/s
inline constexpr double kVacuumPermittivity = 8.8541878128e-12;  // F/m

enum class PulseKind { ricker };

struct PulseSpec {
  double center_frequency = 2.6e9;  // Hz
  PulseKind kind = PulseKind::ricker;
  double amplitude = 1.0;
  double delay = 2e-9;  // time of the wavelet centre for a surface echo (s)
};

struct AcquisitionSpec {
  double time_window = 20e-9;            // s
  std::size_t samples_per_trace = 2048;
  double traces_per_meter = 50.0;        // nominal; the scene step sets node spacing
  std::optional<double> noise_snr_db;    // none: noiseless
  std::uint64_t seed = 0;
  // Antenna cross-talk: a copy of the source wavelet arriving `direct_wave_lead`
  // seconds before the surface echo. Amplitude 0 disables it.
  double direct_wave_amplitude = 0.4;
  double direct_wave_lead = 1.0e-9;

  double dt() const { return time_window / static_cast<double>(samples_per_trace); }
};

void validate(const PulseSpec& pulse);
void validate(const AcquisitionSpec& acq);

struct AScan {
  std::vector<double> samples;
  double dt = 0.0;
  double x = 0.0;
  double y = 0.0;
  std::optional<double> truth_quantity;
};

struct BScan {
  std::string name;
  bool longitudinal = true;
  double offset = 0.0;
  std::vector<AScan> traces;
};

/// Relative complex permittivity eps_r - j sigma / (omega eps0); conductivity
/// is ignored at f = 0.
std::complex<double> complex_permittivity(const Layer& layer, double frequency);

/// Normal-incidence Fresnel coefficient from medium 1 into medium 2.
std::complex<double> fresnel_reflection(std::complex<double> eps1, std::complex<double> eps2);

/// Bins k / time_window for k = 0 .. samples/2, the grid synthesize_ascan expects.
std::vector<double> frequency_grid(const AcquisitionSpec& acq);

/// Global reflection coefficient seen from stack[0] (the incident medium),
/// built bottom-up from per-interface Fresnel terms and layer phase delays.
/// Time convention exp(+j omega t).
std::vector<std::complex<double>> layered_reflection_response(const LayerStack& stack,
                                                              std::span<const double> frequencies);

/// Continuous Fourier transform of the (undelayed) source wavelet.
std::complex<double> source_spectrum(const PulseSpec& pulse, double frequency);

/// Ricker wavelet centred at `center`, sampled at t = i * dt.
std::vector<double> sample_wavelet(const PulseSpec& pulse, const AcquisitionSpec& acq, double center);

/// Time trace of the source reflected by `response`, plus the optional
/// direct-wave template and white noise. `stream` picks the noise stream so
/// that every trace of a survey draws independent, reproducible noise.
AScan synthesize_ascan(std::span<const std::complex<double>> response, const PulseSpec& pulse,
                       const AcquisitionSpec& acq, std::uint64_t stream = 0);

/// A survey line as indices into Survey::traces, in acquisition order.
struct ProfileTraces {
  std::string name;
  bool longitudinal = true;
  double offset = 0.0;
  std::vector<std::size_t> trace_indices;
};

struct Survey {
  std::vector<ProfileTraces> profiles;
  std::vector<GridIndex> nodes;  // one entry per distinct node
  std::vector<AScan> traces;     // aligned with nodes

  /// Materializes profile `i` as a B-scan (crossing lines share traces).
  BScan bscan(std::size_t i) const;
};

/// One trace per surveyed node of the scene; noise streams are keyed by the
/// node's flat grid index.
Survey simulate_survey(const PavementScene& scene, const PulseSpec& pulse, const AcquisitionSpec& acq);

}  // namespace tackscan
