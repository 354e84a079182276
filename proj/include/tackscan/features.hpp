#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "tackscan/em_forward.hpp"
#include "tackscan/error.hpp"

namespace tackscan {

/// Raised by automatic gating when a trace has no detectable arrival.
class NoArrivalError : public ValidationError {
 public:
  NoArrivalError() : ValidationError("no-arrival: trace envelope is identically zero") {}
};

/// Time gate isolating the echo region. Automatic gates are centred at
/// first-arrival time + offset and span `width` seconds.
struct GateSpec {
  bool automatic = true;
  double t_start = 0.0;  // s, manual mode
  double t_end = 0.0;    // s, manual mode
  double offset = 1.8e-9;
  double width = 1.0e-9;
};

enum FeatureFamily : unsigned {
  kWindowEnergy = 1u << 0,
  kWindowPeakAmplitude = 1u << 1,
  kPeakTime = 1u << 2,
  kSpectralCentroid = 1u << 3,
  kSpectralBandEnergies = 1u << 4,
  kRawDecimated = 1u << 5,
};

inline constexpr unsigned kDefaultFamilies =
    kWindowEnergy | kWindowPeakAmplitude | kPeakTime | kSpectralCentroid | kSpectralBandEnergies;
inline constexpr std::size_t kOctaveBands = 6;

struct FeatureConfig {
  GateSpec gate;
  std::size_t window_count = 8;
  unsigned families = kDefaultFamilies;
  double band_reference = 2.6e9;  // octave bands span [ref/8, 8 ref)
  std::size_t raw_count = 16;     // samples kept by raw_decimated
};

/// Parses a comma list of family names (window_energy, ...) into a mask.
unsigned parse_families(const std::string& text);
std::string families_to_string(unsigned families);

void validate(const FeatureConfig& cfg);

/// W*[energy] + W*[peak] + [peak_time] + [centroid] + 6*[bands] + R*[raw].
std::size_t feature_dimension(const FeatureConfig& cfg);
std::vector<std::string> feature_names(const FeatureConfig& cfg);

using FeatureVector = std::vector<double>;

/// Half-open sample range [begin, end) selected by a gate.
struct SampleRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
};

/// Index of the first envelope maximum reaching half of the global maximum.
std::size_t first_arrival_index(std::span<const double> samples);

SampleRange resolve_gate(const AScan& scan, const GateSpec& gate);

/// Copy of the trace with samples outside the gate set to zero.
std::vector<double> gate_trace(const AScan& scan, const GateSpec& gate);

FeatureVector extract_features(const AScan& scan, const FeatureConfig& cfg);

/// Per-column z-score fitted on a training set. Columns whose spread is
/// zero are flagged and passed through untouched. A default-constructed
/// (zero-dimension) normalizer passes every vector through.
struct Normalizer {
  std::vector<double> mean;
  std::vector<double> stddev;
  std::vector<bool> degenerate;

  std::size_t dimension() const { return mean.size(); }
  bool operator==(const Normalizer&) const = default;
};

Normalizer fit_normalizer(std::span<const FeatureVector> vectors);
FeatureVector apply_normalizer(const Normalizer& normalizer, std::span<const double> vector);
/// Identity transform of the given dimension.
Normalizer identity_normalizer(std::size_t dimension);

}  // namespace tackscan
