#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "json.hpp"
#include "tackscan/em_forward.hpp"
#include "tackscan/features.hpp"
#include "tackscan/svm.hpp"

using namespace tackscan;

namespace {

AScan echo_trace(double depth = 0.05, double eps = 5.0) {
  AcquisitionSpec acq;
  acq.direct_wave_amplitude = 0.0;
  const LayerStack s = {Layer{"top", 0.0, eps, 0.0, false}, Layer{"layer", depth, eps, 0.0, false},
                        Layer{"base", 0.0, 12.0, 0.0, true}};
  return synthesize_ascan(layered_reflection_response(s, frequency_grid(acq)), PulseSpec{}, acq);
}

AScan pavement_trace() {
  AcquisitionSpec acq;
  LayerStack s = default_pavement_stack();
  s.insert(s.begin(), air_layer());
  return synthesize_ascan(layered_reflection_response(s, frequency_grid(acq)), PulseSpec{}, acq);
}

double energy(const std::vector<double>& v) {
  double e = 0.0;
  for (double x : v) e += x * x;
  return e;
}

FeatureConfig manual(double t0, double t1, unsigned families = kDefaultFamilies) {
  FeatureConfig cfg;
  cfg.gate.automatic = false;
  cfg.gate.t_start = t0;
  cfg.gate.t_end = t1;
  cfg.families = families;
  return cfg;
}

}  // namespace

TEST_CASE("dimension formula") {
  FeatureConfig cfg;
  CHECK(feature_dimension(cfg) == 24);
  CHECK(feature_names(cfg).size() == 24);
  cfg.families = 0x3Fu;
  cfg.window_count = 8;
  cfg.raw_count = 16;
  // counted family by family: 8 + 8 + 1 + 1 + 6 + 16
  CHECK(feature_dimension(cfg) == 40);
  const AScan a = pavement_trace();
  cfg.gate = manual(1e-9, 6e-9).gate;
  CHECK(extract_features(a, cfg).size() == 40);
  cfg.families = 0;
  CHECK_THROWS_AS(feature_dimension(cfg), ValidationError);
}

TEST_CASE("family names round-trip") {
  const unsigned mask = parse_families("window_energy,raw_decimated");
  CHECK(mask == (kWindowEnergy | kRawDecimated));
  CHECK(parse_families(families_to_string(kDefaultFamilies)) == kDefaultFamilies);
  CHECK_THROWS_AS(parse_families("wavelets"), ValidationError);
}

TEST_CASE("gating") {
  const AScan a = pavement_trace();
  const double window = a.dt * static_cast<double>(a.samples.size());
  SUBCASE("full window is the identity") {
    const auto g = gate_trace(a, manual(0.0, window).gate);
    CHECK(g == a.samples);
  }
  SUBCASE("zero trace has no arrival") {
    AScan z = a;
    std::fill(z.samples.begin(), z.samples.end(), 0.0);
    CHECK_THROWS_AS(gate_trace(z, GateSpec{}), NoArrivalError);
    CHECK_THROWS_AS(resolve_gate(z, GateSpec{}), ValidationError);
  }
  SUBCASE("inverted bounds") {
    CHECK_THROWS_AS(gate_trace(a, manual(3e-9, 2e-9).gate), ValidationError);
    CHECK_THROWS_AS(gate_trace(a, manual(0.0, 2.0 * window).gate), ValidationError);
  }
  SUBCASE("automatic gate is centred on arrival plus offset") {
    GateSpec g;
    const auto r = resolve_gate(a, g);
    const double centre = static_cast<double>(first_arrival_index(a.samples)) * a.dt + g.offset;
    CHECK(static_cast<double>(r.begin) * a.dt == doctest::Approx(centre - 0.5 * g.width).epsilon(0.01));
    CHECK(static_cast<double>(r.size()) * a.dt == doctest::Approx(g.width).epsilon(0.02));
  }
}

TEST_CASE("gate away from a known echo removes almost all energy") {
  const AScan a = echo_trace();
  const double echo = PulseSpec{}.delay + 2.0 * 0.05 * std::sqrt(5.0) / kSpeedOfLight;
  const double total = energy(a.samples);
  const double away = energy(gate_trace(a, manual(echo + 3e-9, echo + 8e-9).gate));
  const double around = energy(gate_trace(a, manual(echo - 1e-9, echo + 1e-9).gate));
  CHECK(away <= 0.01 * total);
  CHECK(around >= 0.99 * total);
}

TEST_CASE("feature homogeneity") {
  const AScan a = pavement_trace();
  const FeatureConfig cfg = manual(1e-9, 8e-9);
  SUBCASE("zero trace gives zero energy and amplitude") {
    AScan z = a;
    std::fill(z.samples.begin(), z.samples.end(), 0.0);
    const auto f = extract_features(z, cfg);
    for (std::size_t i = 0; i < 2 * cfg.window_count; ++i) CHECK(f[i] == 0.0);
  }
  SUBCASE("doubling scales energy by four and keeps peak time") {
    AScan b = a;
    for (double& s : b.samples) s *= 2.0;
    const auto fa = extract_features(a, cfg), fb = extract_features(b, cfg);
    for (std::size_t i = 0; i < cfg.window_count; ++i) CHECK(fb[i] == doctest::Approx(4.0 * fa[i]).epsilon(1e-12));
    CHECK(fb[2 * cfg.window_count] == fa[2 * cfg.window_count]);
  }
  SUBCASE("deterministic") { CHECK(extract_features(a, cfg) == extract_features(a, cfg)); }
  SUBCASE("non-finite samples rejected") {
    AScan b = a;
    b.samples[10] = std::nan("");
    CHECK_THROWS_AS(extract_features(b, cfg), ValidationError);
  }
}

TEST_CASE("delaying a trace shifts peak time and keeps the gated spectrum") {
  const AScan a = echo_trace();
  const std::size_t k = 37;
  AScan b = a;
  std::rotate(b.samples.rbegin(), b.samples.rbegin() + k, b.samples.rend());
  const double shift = static_cast<double>(k) * a.dt;
  const FeatureConfig ca = manual(2e-9, 4e-9);
  const FeatureConfig cb = manual(2e-9 + shift, 4e-9 + shift);
  const auto fa = extract_features(a, ca), fb = extract_features(b, cb);
  const std::size_t pt = 2 * ca.window_count;
  CHECK(fb[pt] - fa[pt] == doctest::Approx(shift).epsilon(1e-9));
  for (std::size_t i = pt + 1; i < fa.size(); ++i) CHECK(fb[i] == doctest::Approx(fa[i]).epsilon(1e-6));
}

TEST_CASE("normalizer") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(3.0, 7.0);
  std::vector<FeatureVector> v(50, FeatureVector(4));
  for (auto& row : v) {
    row[0] = n(rng);
    row[1] = 1e6 + n(rng);
    row[2] = 5.0;  // constant column
    row[3] = -n(rng) * 1e-4;
  }
  const Normalizer norm = fit_normalizer(v);
  CHECK(norm.degenerate == std::vector<bool>{false, false, true, false});

  for (std::size_t j : {0u, 1u, 3u}) {
    double m = 0.0, s = 0.0;
    for (const auto& row : v) m += apply_normalizer(norm, row)[j];
    m /= 50.0;
    for (const auto& row : v) s += std::pow(apply_normalizer(norm, row)[j] - m, 2);
    CHECK(std::abs(m) <= 1e-9);
    CHECK(std::abs(s / 50.0 - 1.0) <= 1e-6);
  }
  CHECK(apply_normalizer(norm, v[0])[2] == 5.0);

  const std::vector<FeatureVector> same(3, FeatureVector{1.0, 2.0});
  const Normalizer flat = fit_normalizer(same);
  CHECK(flat.degenerate == std::vector<bool>{true, true});
  CHECK(apply_normalizer(flat, same[0]) == same[0]);

  CHECK_THROWS_AS(fit_normalizer(std::vector<FeatureVector>{}), ValidationError);

  const auto text = normalizer_to_json(norm).dump();
  const Normalizer back = normalizer_from_json(nlohmann::json::parse(text));
  CHECK(back == norm);
  for (const auto& row : v) CHECK(apply_normalizer(back, row) == apply_normalizer(norm, row));
}
