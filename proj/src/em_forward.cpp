#include "tackscan/em_forward.hpp"

#include <cmath>
#include <numbers>

#include "tackscan/error.hpp"
#include "tackscan/fft.hpp"
#include "tackscan/random.hpp"

namespace tackscan {

using cd = std::complex<double>;

void validate(const PulseSpec& pulse) {
  if (!(pulse.center_frequency > 0.0)) throw ValidationError("pulse centre frequency must be positive");
  if (!std::isfinite(pulse.amplitude)) throw ValidationError("pulse amplitude must be finite");
  if (!std::isfinite(pulse.delay)) throw ValidationError("pulse delay must be finite");
}

void validate(const AcquisitionSpec& acq) {
  if (!(acq.time_window > 0.0)) throw ValidationError("time window must be positive");
  if (acq.samples_per_trace < 2) throw ValidationError("samples per trace must be >= 2");
  if (!(acq.traces_per_meter > 0.0)) throw ValidationError("traces per metre must be positive");
  if (acq.noise_snr_db && !std::isfinite(*acq.noise_snr_db)) throw ValidationError("noise SNR must be finite");
  if (!std::isfinite(acq.direct_wave_amplitude) || !std::isfinite(acq.direct_wave_lead))
    throw ValidationError("direct-wave parameters must be finite");
}

cd complex_permittivity(const Layer& layer, double frequency) {
  if (frequency <= 0.0 || layer.conductivity == 0.0) return {layer.rel_permittivity, 0.0};
  const double omega = 2.0 * std::numbers::pi * frequency;
  return {layer.rel_permittivity, -layer.conductivity / (omega * kVacuumPermittivity)};
}

cd fresnel_reflection(cd eps1, cd eps2) {
  const cd n1 = std::sqrt(eps1);
  const cd n2 = std::sqrt(eps2);
  return (n1 - n2) / (n1 + n2);
}

std::vector<double> frequency_grid(const AcquisitionSpec& acq) {
  validate(acq);
  std::vector<double> f(acq.samples_per_trace / 2 + 1);
  for (std::size_t k = 0; k < f.size(); ++k) f[k] = static_cast<double>(k) / acq.time_window;
  return f;
}

std::vector<cd> layered_reflection_response(const LayerStack& stack, std::span<const double> frequencies) {
  if (stack.size() < 2) throw ValidationError("layered response needs at least 2 layers");
  validate_stack(stack);
  const std::size_t n = stack.size();
  std::vector<cd> out(frequencies.size());
  std::vector<cd> index(n);
  for (std::size_t k = 0; k < frequencies.size(); ++k) {
    const double f = frequencies[k];
    if (!(f >= 0.0)) throw ValidationError("frequencies must be >= 0");
    for (std::size_t i = 0; i < n; ++i) index[i] = std::sqrt(complex_permittivity(stack[i], f));
    const double k0 = 2.0 * std::numbers::pi * f / kSpeedOfLight;

    cd big_r = (index[n - 2] - index[n - 1]) / (index[n - 2] + index[n - 1]);
    for (std::size_t i = n - 2; i-- > 0;) {
      const cd r = (index[i] - index[i + 1]) / (index[i] + index[i + 1]);
      const cd phase = std::exp(cd{0.0, -2.0} * k0 * index[i + 1] * stack[i + 1].thickness);
      const cd down = big_r * phase;
      big_r = (r + down) / (1.0 + r * down);
    }
    out[k] = big_r;
  }
  return out;
}

cd source_spectrum(const PulseSpec& pulse, double f) {
  // FT of (1 - 2 pi^2 fc^2 t^2) exp(-pi^2 fc^2 t^2).
  const double fc = pulse.center_frequency;
  const double u = f / fc;
  return {pulse.amplitude * 2.0 / std::sqrt(std::numbers::pi) * u * u / fc * std::exp(-u * u), 0.0};
}

std::vector<double> sample_wavelet(const PulseSpec& pulse, const AcquisitionSpec& acq, double center) {
  std::vector<double> w(acq.samples_per_trace);
  const double dt = acq.dt();
  const double a = std::numbers::pi * pulse.center_frequency;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double t = static_cast<double>(i) * dt - center;
    const double arg = a * a * t * t;
    w[i] = pulse.amplitude * (1.0 - 2.0 * arg) * std::exp(-arg);
  }
  return w;
}

AScan synthesize_ascan(std::span<const cd> response, const PulseSpec& pulse, const AcquisitionSpec& acq,
                       std::uint64_t stream) {
  validate(pulse);
  validate(acq);
  const std::size_t n = acq.samples_per_trace;
  if (response.size() != n / 2 + 1)
    throw ValidationError("frequency-grid mismatch: response has " + std::to_string(response.size()) +
                          " bins, acquisition implies " + std::to_string(n / 2 + 1));

  // s(t_i) ~ sum_k S(f_k) R(f_k) exp(+j 2 pi f_k t_i) df, df = 1 / time_window.
  const double df = 1.0 / acq.time_window;
  std::vector<cd> spec(response.size());
  for (std::size_t k = 0; k < spec.size(); ++k) {
    const double f = static_cast<double>(k) * df;
    const cd delay = std::polar(1.0, -2.0 * std::numbers::pi * f * pulse.delay);
    spec[k] = source_spectrum(pulse, f) * delay * response[k] * df;
  }
  // c2r treats the Nyquist and DC bins as real.
  spec.front() = {spec.front().real(), 0.0};
  if (n % 2 == 0) spec.back() = {spec.back().real(), 0.0};

  AScan scan;
  scan.dt = acq.dt();
  scan.samples = fft::inverse_real(spec, n);

  if (acq.direct_wave_amplitude != 0.0) {
    PulseSpec direct = pulse;
    direct.amplitude *= acq.direct_wave_amplitude;
    const auto w = sample_wavelet(direct, acq, pulse.delay - acq.direct_wave_lead);
    for (std::size_t i = 0; i < n; ++i) scan.samples[i] += w[i];
  }

  if (acq.noise_snr_db) {
    double power = 0.0;
    for (double s : scan.samples) power += s * s;
    power /= static_cast<double>(n);
    const double sigma = std::sqrt(power / std::pow(10.0, *acq.noise_snr_db / 10.0));
    if (sigma > 0.0) {
      auto rng = stream_rng(acq.seed, stream);
      std::normal_distribution<double> noise(0.0, sigma);
      for (double& s : scan.samples) s += noise(rng);
    }
  }
  return scan;
}

Survey simulate_survey(const PavementScene& scene, const PulseSpec& pulse, const AcquisitionSpec& acq) {
  validate(pulse);
  validate(acq);
  const GridGeometry& g = scene.geometry();
  const auto freqs = frequency_grid(acq);

  Survey survey;
  survey.nodes = scene.survey_nodes();
  survey.traces.reserve(survey.nodes.size());
  std::vector<std::size_t> slot(g.size(), 0);
  for (std::size_t i = 0; i < survey.nodes.size(); ++i) {
    const GridIndex node = survey.nodes[i];
    const auto response = layered_reflection_response(scene.local_stack(node), freqs);
    AScan scan = synthesize_ascan(response, pulse, acq, g.flat(node));
    scan.x = g.x(node.ix);
    scan.y = g.y(node.iy);
    scan.truth_quantity = scene.quantity()[node];
    survey.traces.push_back(std::move(scan));
    slot[g.flat(node)] = i;
  }

  for (const ProfilePlan& plan : scene.survey_profiles()) {
    ProfileTraces p{plan.name, plan.longitudinal, plan.offset, {}};
    p.trace_indices.reserve(plan.nodes.size());
    for (GridIndex node : plan.nodes) p.trace_indices.push_back(slot[g.flat(node)]);
    survey.profiles.push_back(std::move(p));
  }
  return survey;
}

BScan Survey::bscan(std::size_t i) const {
  const ProfileTraces& p = profiles.at(i);
  BScan b{p.name, p.longitudinal, p.offset, {}};
  b.traces.reserve(p.trace_indices.size());
  for (std::size_t t : p.trace_indices) b.traces.push_back(traces[t]);
  return b;
}

}  // namespace tackscan
