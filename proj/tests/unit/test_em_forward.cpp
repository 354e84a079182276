#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "support/oracles.hpp"
#include "tackscan/em_forward.hpp"
#include "tackscan/error.hpp"
#include "tackscan/scene.hpp"

using namespace tackscan;
using cd = std::complex<double>;

namespace {

AcquisitionSpec quiet_acq() {
  AcquisitionSpec acq;
  acq.direct_wave_amplitude = 0.0;
  return acq;
}

// Incident medium and layer share eps, so the only echo comes from the base.
LayerStack buried_interface(double depth, double eps, double eps_below = 12.0) {
  return {Layer{"top", 0.0, eps, 0.0, false}, Layer{"layer", depth, eps, 0.0, false},
          Layer{"base", 0.0, eps_below, 0.0, true}};
}

std::size_t abs_peak(const std::vector<double>& s) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < s.size(); ++i)
    if (std::abs(s[i]) > std::abs(s[best])) best = i;
  return best;
}

}  // namespace

TEST_CASE("fresnel coefficient") {
  CHECK(std::abs(fresnel_reflection({4.0, 0.0}, {4.0, 0.0})) == 0.0);
  const cd r = fresnel_reflection({1.0, 0.0}, {4.0, 0.0});
  CHECK(std::abs(r - cd(-1.0 / 3.0, 0.0)) <= 1e-12);

  const auto ref = oracle::fresnel_ld({1.0L, 0.0L}, {4.0L, -0.5L});
  const cd lossy = fresnel_reflection({1.0, 0.0}, {4.0, -0.5});
  CHECK(std::abs(lossy.real() - static_cast<double>(ref.real())) <= 1e-14);
  CHECK(std::abs(lossy.imag() - static_cast<double>(ref.imag())) <= 1e-14);
  CHECK(std::abs(lossy) <= 1.0);
}

TEST_CASE("complex permittivity carries the conductivity loss") {
  const Layer l{"x", 0.1, 5.0, 0.01, false};
  const double f = 1e9;
  const cd e = complex_permittivity(l, f);
  CHECK(e.real() == 5.0);
  CHECK(e.imag() == doctest::Approx(-0.01 / (2 * std::numbers::pi * f * kVacuumPermittivity)));
  CHECK(complex_permittivity(l, 0.0).imag() == 0.0);
}

TEST_CASE("two-layer stack reproduces the fresnel value at every frequency") {
  const LayerStack stack = {air_layer(), Layer{"half", 0.0, 4.0, 0.0, true}};
  const std::vector<double> f = {0.0, 1e8, 1e9, 2.6e9, 7e9};
  for (const cd R : layered_reflection_response(stack, f)) CHECK(std::abs(R - cd(-1.0 / 3.0)) <= 1e-12);
  CHECK_THROWS_AS(layered_reflection_response({Layer{"half", 0.0, 4.0, 0.0, true}}, f), ValidationError);
}

TEST_CASE("zero-thickness layer is elided") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> eps(1.0, 12.0), d(0.001, 0.2), sig(0.0, 0.05);
  const auto f = frequency_grid(AcquisitionSpec{});
  for (int trial = 0; trial < 20; ++trial) {
    LayerStack full = {air_layer(), Layer{"a", d(rng), eps(rng), sig(rng), false},
                       Layer{"ghost", 0.0, eps(rng), sig(rng), false}, Layer{"b", d(rng), eps(rng), sig(rng), false},
                       Layer{"c", 0.0, eps(rng), sig(rng), true}};
    LayerStack trimmed = full;
    trimmed.erase(trimmed.begin() + 2);
    const auto r1 = layered_reflection_response(full, f);
    const auto r2 = layered_reflection_response(trimmed, f);
    double worst = 0.0;
    for (std::size_t k = 0; k < f.size(); ++k) worst = std::max(worst, std::abs(r1[k] - r2[k]));
    CHECK(worst <= 1e-12);
  }
}

TEST_CASE("lossless stacks are passive") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> eps(1.0, 20.0), d(0.0, 0.3);
  const auto f = frequency_grid(AcquisitionSpec{});
  for (int trial = 0; trial < 50; ++trial) {
    LayerStack s = {air_layer()};
    const int layers = 1 + trial % 5;
    for (int i = 0; i < layers; ++i) s.push_back(Layer{"l", d(rng), eps(rng), 0.0, false});
    s.push_back(Layer{"h", 0.0, eps(rng), 0.0, true});
    for (const cd R : layered_reflection_response(s, f)) REQUIRE(std::abs(R) <= 1.0 + 1e-12);
  }
}

TEST_CASE("three-layer magnitude is periodic in frequency") {
  const double d = 0.1, eps = 4.0;
  const LayerStack s = {air_layer(), Layer{"mid", d, eps, 0.0, false}, Layer{"base", 0.0, 9.0, 0.0, true}};
  const double period = kSpeedOfLight / (2.0 * d * std::sqrt(eps));
  std::vector<double> f;
  for (int k = 0; k <= 200000; ++k) f.push_back(k * 5e4);  // 0 .. 10 GHz
  const auto R = layered_reflection_response(s, f);
  std::vector<double> minima;
  for (std::size_t k = 1; k + 1 < R.size(); ++k)
    if (std::abs(R[k]) < std::abs(R[k - 1]) && std::abs(R[k]) <= std::abs(R[k + 1])) minima.push_back(f[k]);
  REQUIRE(minima.size() >= 5);
  for (std::size_t i = 1; i < minima.size(); ++i) CHECK(minima[i] - minima[i - 1] == doctest::Approx(period).epsilon(1e-4));
}

TEST_CASE("synthesis basics") {
  const AcquisitionSpec acq = quiet_acq();
  const PulseSpec pulse;
  const std::vector<cd> zero(acq.samples_per_trace / 2 + 1, cd{});
  const AScan z = synthesize_ascan(zero, pulse, acq);
  CHECK(z.samples.size() == 2048);
  CHECK(std::all_of(z.samples.begin(), z.samples.end(), [](double v) { return v == 0.0; }));
  CHECK(z.dt == doctest::Approx(20e-9 / 2048));

  const std::vector<cd> wrong(100, cd{});
  CHECK_THROWS_AS(synthesize_ascan(wrong, pulse, acq), ValidationError);
}

TEST_CASE("echo under 5 cm of eps 5 arrives after 0.745 ns") {
  const AcquisitionSpec acq = quiet_acq();
  const PulseSpec pulse;
  const auto R = layered_reflection_response(buried_interface(0.05, 5.0), frequency_grid(acq));
  const AScan a = synthesize_ascan(R, pulse, acq);
  const double expected = 2.0 * 0.05 * std::sqrt(5.0) / kSpeedOfLight;
  CHECK(expected == doctest::Approx(0.745e-9).epsilon(1e-3));
  const double t = static_cast<double>(abs_peak(a.samples)) * a.dt - pulse.delay;
  CHECK(std::abs(t - expected) <= a.dt);
}

TEST_CASE("travel time over random single layers") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> depth(0.02, 0.15), eps(4.0, 9.0);
  const AcquisitionSpec acq = quiet_acq();
  const PulseSpec pulse;
  const auto f = frequency_grid(acq);
  for (int trial = 0; trial < 20; ++trial) {
    const double d = depth(rng), e = eps(rng);
    const AScan a = synthesize_ascan(layered_reflection_response(buried_interface(d, e), f), pulse, acq);
    const double t = static_cast<double>(abs_peak(a.samples)) * a.dt - pulse.delay;
    CHECK(std::abs(t - 2.0 * d * std::sqrt(e) / kSpeedOfLight) <= a.dt);
  }
}

TEST_CASE("measured SNR lands within 1 dB of the request") {
  AcquisitionSpec acq;
  const PulseSpec pulse;
  LayerStack stack = default_pavement_stack();
  stack.insert(stack.begin(), air_layer());
  const auto R = layered_reflection_response(stack, frequency_grid(acq));
  for (double snr : {10.0, 20.0, 30.0}) {
    acq.noise_snr_db.reset();
    const AScan clean = synthesize_ascan(R, pulse, acq);
    acq.noise_snr_db = snr;
    acq.seed = 99;
    double ps = 0.0, pn = 0.0;
    for (std::uint64_t stream = 0; stream < 100; ++stream) {
      const AScan noisy = synthesize_ascan(R, pulse, acq, stream);
      for (std::size_t i = 0; i < clean.samples.size(); ++i) {
        ps += clean.samples[i] * clean.samples[i];
        const double n = noisy.samples[i] - clean.samples[i];
        pn += n * n;
      }
    }
    CHECK(std::abs(10.0 * std::log10(ps / pn) - snr) <= 1.0);
  }
}

TEST_CASE("numerical-study survey") {
  const PavementScene scene(scene_preset("numerical-study"));
  AcquisitionSpec acq;
  acq.noise_snr_db = 20.0;
  acq.seed = 5;
  const Survey a = simulate_survey(scene, PulseSpec{}, acq);
  CHECK(a.traces.size() == 4221);
  CHECK(a.profiles.size() == 21);
  const Survey b = simulate_survey(scene, PulseSpec{}, acq);
  bool identical = true;
  for (std::size_t i = 0; i < a.traces.size(); ++i) identical = identical && a.traces[i].samples == b.traces[i].samples;
  CHECK(identical);
  CHECK(a.traces[0].truth_quantity.has_value());
  const BScan first = a.bscan(0);
  for (std::size_t i = 1; i < first.traces.size(); ++i) CHECK(first.traces[i].x > first.traces[i - 1].x);
}

TEST_CASE("noiseless spectra peak near the centre frequency") {
  const PavementScene scene(scene_preset("vendee"));
  const AcquisitionSpec acq;
  const Survey s = simulate_survey(scene, PulseSpec{}, acq);
  const std::size_t n = acq.samples_per_trace;
  for (std::size_t pick : {std::size_t{0}, s.traces.size() / 2, s.traces.size() - 1}) {
    const auto& x = s.traces[pick].samples;
    std::size_t best = 0;
    double best_mag = -1.0;
    for (std::size_t k = 1; k <= n / 2; ++k) {
      std::complex<double> acc{};
      for (std::size_t i = 0; i < n; ++i)
        acc += x[i] * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k * i % n) / static_cast<double>(n));
      if (std::abs(acc) > best_mag) {
        best_mag = std::abs(acc);
        best = k;
      }
    }
    const double f = static_cast<double>(best) / acq.time_window;
    CHECK(std::abs(f - 2.6e9) <= 0.26e9);
  }
}

TEST_CASE("acquisition validation") {
  AcquisitionSpec acq;
  acq.samples_per_trace = 1;
  CHECK_THROWS_AS(validate(acq), ValidationError);
  acq = AcquisitionSpec{};
  acq.time_window = 0.0;
  CHECK_THROWS_AS(validate(acq), ValidationError);
  PulseSpec p;
  p.center_frequency = 0.0;
  CHECK_THROWS_AS(validate(p), ValidationError);
}
