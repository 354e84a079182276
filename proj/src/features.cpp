#include "tackscan/features.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tackscan/fft.hpp"

namespace tackscan {

namespace {

struct FamilyName {
  FeatureFamily family;
  const char* name;
};

constexpr FamilyName kFamilyNames[] = {
    {kWindowEnergy, "window_energy"},
    {kWindowPeakAmplitude, "window_peak_amplitude"},
    {kPeakTime, "peak_time"},
    {kSpectralCentroid, "spectral_centroid"},
    {kSpectralBandEnergies, "spectral_band_energies"},
    {kRawDecimated, "raw_decimated"},
};

std::size_t spectral_length(std::size_t segment) {
  std::size_t n = 256;
  while (n < 4 * segment) n *= 2;
  return n;
}

// Splits [0, total) into `parts` contiguous blocks; block i is [lo, hi).
std::pair<std::size_t, std::size_t> block(std::size_t total, std::size_t parts, std::size_t i) {
  return {total * i / parts, total * (i + 1) / parts};
}

}  // namespace

unsigned parse_families(const std::string& text) {
  unsigned mask = 0;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (item.empty()) continue;
    if (item == "default") {
      mask |= kDefaultFamilies;
      continue;
    }
    bool found = false;
    for (const auto& f : kFamilyNames) {
      if (item == f.name) {
        mask |= f.family;
        found = true;
      }
    }
    if (!found) throw ValidationError("unknown feature family '" + item + "'");
  }
  return mask;
}

std::string families_to_string(unsigned families) {
  std::string out;
  for (const auto& f : kFamilyNames) {
    if (families & f.family) out += (out.empty() ? "" : ",") + std::string(f.name);
  }
  return out;
}

void validate(const FeatureConfig& cfg) {
  if ((cfg.families & 0x3Fu) == 0) throw ValidationError("at least one feature family must be enabled");
  if (cfg.families & ~0x3Fu) throw ValidationError("unknown feature family bits");
  if (cfg.window_count == 0) throw ValidationError("window count must be positive");
  if ((cfg.families & kRawDecimated) && cfg.raw_count == 0) throw ValidationError("raw_count must be positive");
  if (!(cfg.band_reference > 0.0)) throw ValidationError("band reference frequency must be positive");
  const GateSpec& g = cfg.gate;
  if (g.automatic) {
    if (!(g.width > 0.0)) throw ValidationError("automatic gate width must be positive");
    if (!std::isfinite(g.offset)) throw ValidationError("automatic gate offset must be finite");
  } else {
    if (!(g.t_start >= 0.0)) throw ValidationError("gate start must be >= 0");
    if (!(g.t_start < g.t_end)) throw ValidationError("inverted gate bounds");
  }
}

std::size_t feature_dimension(const FeatureConfig& cfg) {
  validate(cfg);
  std::size_t d = 0;
  if (cfg.families & kWindowEnergy) d += cfg.window_count;
  if (cfg.families & kWindowPeakAmplitude) d += cfg.window_count;
  if (cfg.families & kPeakTime) d += 1;
  if (cfg.families & kSpectralCentroid) d += 1;
  if (cfg.families & kSpectralBandEnergies) d += kOctaveBands;
  if (cfg.families & kRawDecimated) d += cfg.raw_count;
  return d;
}

std::vector<std::string> feature_names(const FeatureConfig& cfg) {
  validate(cfg);
  std::vector<std::string> names;
  auto numbered = [&](const char* stem, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) names.push_back(std::string(stem) + std::to_string(i));
  };
  if (cfg.families & kWindowEnergy) numbered("energy", cfg.window_count);
  if (cfg.families & kWindowPeakAmplitude) numbered("peak", cfg.window_count);
  if (cfg.families & kPeakTime) names.emplace_back("peak_time");
  if (cfg.families & kSpectralCentroid) names.emplace_back("centroid");
  if (cfg.families & kSpectralBandEnergies) numbered("band", kOctaveBands);
  if (cfg.families & kRawDecimated) numbered("raw", cfg.raw_count);
  return names;
}

std::size_t first_arrival_index(std::span<const double> samples) {
  const auto env = fft::envelope(samples);
  double peak = 0.0;
  for (double e : env) peak = std::max(peak, e);
  // Anything this small relative to unity is round-off from an all-zero trace.
  if (!(peak > 1e-300)) throw NoArrivalError();
  std::size_t i = 0;
  while (env[i] < 0.5 * peak) ++i;
  while (i + 1 < env.size() && env[i + 1] > env[i]) ++i;
  return i;
}

SampleRange resolve_gate(const AScan& scan, const GateSpec& gate) {
  const std::size_t n = scan.samples.size();
  if (n == 0 || !(scan.dt > 0.0)) throw ValidationError("trace has no samples or a non-positive dt");
  const double window = scan.dt * static_cast<double>(n);
  double t0 = gate.t_start, t1 = gate.t_end;
  if (gate.automatic) {
    if (!(gate.width > 0.0)) throw ValidationError("automatic gate width must be positive");
    const double centre = static_cast<double>(first_arrival_index(scan.samples)) * scan.dt + gate.offset;
    t0 = std::clamp(centre - 0.5 * gate.width, 0.0, window);
    t1 = std::clamp(centre + 0.5 * gate.width, 0.0, window);
  } else {
    if (!(t0 < t1)) throw ValidationError("inverted gate bounds");
    // Allow for rounding in time_window = n * dt.
    if (t0 < 0.0 || t1 > window * (1.0 + 1e-12)) throw ValidationError("gate outside the time window");
  }
  SampleRange r;
  r.begin = std::min(n, static_cast<std::size_t>(std::llround(t0 / scan.dt)));
  r.end = std::min(n, static_cast<std::size_t>(std::llround(t1 / scan.dt)));
  if (r.end <= r.begin) throw ValidationError("gate selects no samples");
  return r;
}

std::vector<double> gate_trace(const AScan& scan, const GateSpec& gate) {
  const SampleRange r = resolve_gate(scan, gate);
  std::vector<double> out(scan.samples.size(), 0.0);
  std::copy(scan.samples.begin() + static_cast<std::ptrdiff_t>(r.begin),
            scan.samples.begin() + static_cast<std::ptrdiff_t>(r.end), out.begin() + static_cast<std::ptrdiff_t>(r.begin));
  return out;
}

FeatureVector extract_features(const AScan& scan, const FeatureConfig& cfg) {
  validate(cfg);
  for (double s : scan.samples)
    if (!std::isfinite(s)) throw ValidationError("trace contains non-finite samples");

  const SampleRange range = resolve_gate(scan, cfg.gate);
  const std::span<const double> seg(scan.samples.data() + range.begin, range.size());
  const std::size_t len = seg.size();
  if (len < cfg.window_count) throw ValidationError("gate is shorter than the number of sub-windows");
  if ((cfg.families & kRawDecimated) && len < cfg.raw_count)
    throw ValidationError("gate is shorter than the raw decimation count");

  FeatureVector out;
  out.reserve(feature_dimension(cfg));

  if (cfg.families & kWindowEnergy) {
    for (std::size_t w = 0; w < cfg.window_count; ++w) {
      const auto [lo, hi] = block(len, cfg.window_count, w);
      double e = 0.0;
      for (std::size_t i = lo; i < hi; ++i) e += seg[i] * seg[i];
      out.push_back(e);
    }
  }
  if (cfg.families & kWindowPeakAmplitude) {
    for (std::size_t w = 0; w < cfg.window_count; ++w) {
      const auto [lo, hi] = block(len, cfg.window_count, w);
      double p = 0.0;
      for (std::size_t i = lo; i < hi; ++i) p = std::max(p, std::abs(seg[i]));
      out.push_back(p);
    }
  }
  if (cfg.families & kPeakTime) {
    std::size_t arg = 0;
    for (std::size_t i = 1; i < len; ++i)
      if (std::abs(seg[i]) > std::abs(seg[arg])) arg = i;
    out.push_back(static_cast<double>(range.begin + arg) * scan.dt);
  }
  if (cfg.families & (kSpectralCentroid | kSpectralBandEnergies)) {
    const std::size_t nfft = spectral_length(len);
    std::vector<double> padded(nfft, 0.0);
    std::copy(seg.begin(), seg.end(), padded.begin());
    const auto spec = fft::forward_real(padded);
    const double df = 1.0 / (static_cast<double>(nfft) * scan.dt);
    std::vector<double> power(spec.size());
    for (std::size_t k = 0; k < spec.size(); ++k) power[k] = std::norm(spec[k]) / static_cast<double>(nfft);

    if (cfg.families & kSpectralCentroid) {
      double num = 0.0, den = 0.0;
      for (std::size_t k = 0; k < power.size(); ++k) {
        num += static_cast<double>(k) * df * power[k];
        den += power[k];
      }
      out.push_back(den > 0.0 ? num / den : 0.0);
    }
    if (cfg.families & kSpectralBandEnergies) {
      for (std::size_t b = 0; b < kOctaveBands; ++b) {
        const double lo = cfg.band_reference * std::ldexp(1.0, static_cast<int>(b) - 3);
        const double hi = 2.0 * lo;
        double e = 0.0;
        for (std::size_t k = 0; k < power.size(); ++k) {
          const double f = static_cast<double>(k) * df;
          if (f >= lo && f < hi) e += power[k];
        }
        out.push_back(e);
      }
    }
  }
  if (cfg.families & kRawDecimated) {
    for (std::size_t r = 0; r < cfg.raw_count; ++r) {
      const auto [lo, hi] = block(len, cfg.raw_count, r);
      double m = 0.0;
      for (std::size_t i = lo; i < hi; ++i) m += seg[i];
      out.push_back(m / static_cast<double>(hi - lo));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

Normalizer fit_normalizer(std::span<const FeatureVector> vectors) {
  if (vectors.empty()) throw ValidationError("cannot fit a normalizer on an empty set");
  if (vectors.size() < 2) throw ValidationError("normalizer needs at least 2 vectors");
  const std::size_t d = vectors.front().size();
  for (const auto& v : vectors)
    if (v.size() != d) throw ValidationError("feature vectors have inconsistent dimensions");

  const double n = static_cast<double>(vectors.size());
  Normalizer norm;
  norm.mean.assign(d, 0.0);
  norm.stddev.assign(d, 0.0);
  norm.degenerate.assign(d, false);
  for (const auto& v : vectors)
    for (std::size_t j = 0; j < d; ++j) norm.mean[j] += v[j];
  for (double& m : norm.mean) m /= n;
  for (const auto& v : vectors) {
    for (std::size_t j = 0; j < d; ++j) {
      const double c = v[j] - norm.mean[j];
      norm.stddev[j] += c * c;
    }
  }
  for (std::size_t j = 0; j < d; ++j) {
    norm.stddev[j] = std::sqrt(norm.stddev[j] / n);
    // Spread at round-off level relative to the column's magnitude counts as none.
    if (!(norm.stddev[j] > 1e-12 * std::abs(norm.mean[j]))) {
      norm.degenerate[j] = true;
    }
  }
  return norm;
}

FeatureVector apply_normalizer(const Normalizer& normalizer, std::span<const double> vector) {
  if (normalizer.dimension() == 0) return FeatureVector(vector.begin(), vector.end());
  if (vector.size() != normalizer.dimension())
    throw ValidationError("feature dimension mismatch: normalizer expects " + std::to_string(normalizer.dimension()) +
                          ", vector has " + std::to_string(vector.size()));
  FeatureVector out(vector.begin(), vector.end());
  for (std::size_t j = 0; j < out.size(); ++j) {
    if (!normalizer.degenerate[j]) out[j] = (out[j] - normalizer.mean[j]) / normalizer.stddev[j];
  }
  return out;
}

Normalizer identity_normalizer(std::size_t dimension) {
  return Normalizer{std::vector<double>(dimension, 0.0), std::vector<double>(dimension, 1.0),
                    std::vector<bool>(dimension, true)};
}

}  // namespace tackscan
