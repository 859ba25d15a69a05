#include <cmath>
#include <vector>

#include "bpv/respiration.hpp"
#include "bpv/rng.hpp"
#include "doctest.h"

using namespace bpv;

namespace {

TimeSeries breathing(double cycle_s, double rate_hz, double dur_s,
                     double amp = 1.0) {
  const std::size_t n = static_cast<std::size_t>(dur_s * rate_hz);
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i)
    s[i] = amp * std::sin(2.0 * M_PI * (static_cast<double>(i) / rate_hz) /
                          cycle_s);
  return TimeSeries(std::move(s), rate_hz);
}

}  // namespace

TEST_CASE("breath onsets of a 4-s cycle are 4 s apart") {
  const BreathCycles c = detect_breath_cycles(breathing(4.0, 32.0, 120.0));
  REQUIRE(c.onsets_s.size() >= 25);
  for (std::size_t i = 1; i < c.onsets_s.size(); ++i)
    CHECK(c.onsets_s[i] - c.onsets_s[i - 1] == doctest::Approx(4.0).epsilon(0.0125));
}

TEST_CASE("breath detection is invariant to power-of-two amplitude scaling") {
  const TimeSeries a = breathing(3.3, 32.0, 90.0);
  TimeSeries b = a;
  for (double& v : b.samples) v *= 8.0;
  const BreathCycles ca = detect_breath_cycles(a);
  const BreathCycles cb = detect_breath_cycles(b);
  REQUIRE(ca.onsets_s.size() == cb.onsets_s.size());
  for (std::size_t i = 0; i < ca.onsets_s.size(); ++i)
    CHECK(ca.onsets_s[i] == cb.onsets_s[i]);
}

TEST_CASE("small high-frequency ripple does not split breaths") {
  TimeSeries x = breathing(4.0, 32.0, 120.0);
  for (std::size_t i = 0; i < x.size(); ++i)
    x.samples[i] += 0.05 * std::sin(2.0 * M_PI * 5.0 *
                                    (static_cast<double>(i) / x.rate_hz));
  const BreathCycles c = detect_breath_cycles(x);
  REQUIRE(c.onsets_s.size() >= 25);
  for (std::size_t i = 1; i < c.onsets_s.size(); ++i)
    CHECK(c.onsets_s[i] - c.onsets_s[i - 1] == doctest::Approx(4.0).epsilon(0.025));
}

TEST_CASE("breath detection failure modes") {
  CHECK_THROWS_AS(detect_breath_cycles(breathing(4.0, 32.0, 5.0)),
                  InvalidInput);
  CHECK_THROWS_AS(
      detect_breath_cycles(TimeSeries(std::vector<double>(640, 1.0), 32.0)),
      InsufficientBreaths);
}

TEST_CASE("uniform onsets give a constant IRR of 15 cycles per minute") {
  BreathCycles c;
  for (int i = 0; i <= 30; ++i) c.onsets_s.push_back(4.0 * i);
  const TimeSeries irr = build_irr(c, 180.0);
  CHECK(irr.rate_hz == 4.0);
  CHECK(irr.size() == 720);
  for (double v : irr.samples) CHECK(v == doctest::Approx(15.0).epsilon(1e-9));
}

TEST_CASE("detected breathing gives an IRR near the true rate") {
  // The detrend / filter front end bends onset spacing by O(1e-3) s, so the
  // end-to-end IRR is checked against the detection contract, not exactly.
  const BreathCycles c = detect_breath_cycles(breathing(4.0, 32.0, 180.0));
  const TimeSeries irr = build_irr(c, 180.0);
  for (double v : irr.samples) CHECK(v == doctest::Approx(15.0).epsilon(0.0125));
}

TEST_CASE("IRR reproduces knot values that land on the sampling grid") {
  BreathCycles c;
  c.onsets_s = {0.0, 2.5, 5.5, 9.75, 12.0};
  const TimeSeries irr = build_irr(c, 16.0);
  // Knots at t_i with value 60/(t_i - t_{i-1}); all chosen on the 4 Hz grid.
  const std::vector<std::pair<double, double>> knots = {
      {2.5, 60.0 / 2.5}, {5.5, 60.0 / 3.0}, {9.75, 60.0 / 4.25},
      {12.0, 60.0 / 2.25}};
  for (const auto& [t, v] : knots) {
    const std::size_t idx = static_cast<std::size_t>(t * 4.0);
    CHECK(irr.samples[idx] == doctest::Approx(v).epsilon(1e-9));
  }
  // Constant extrapolation outside the knot span.
  CHECK(irr.samples[0] == doctest::Approx(60.0 / 2.5).epsilon(1e-9));
  CHECK(irr.samples.back() == doctest::Approx(60.0 / 2.25).epsilon(1e-9));
}

TEST_CASE("monotone interpolation never overshoots monotone knots") {
  BreathCycles c;
  // Intervals 6, 5, 3, 2.4, 2 s: rates 10, 12, 20, 25, 30 (increasing).
  c.onsets_s = {0.0, 6.0, 11.0, 14.0, 16.4, 18.4};
  const TimeSeries irr = build_irr(c, 20.0);
  for (std::size_t i = 0; i < irr.size(); ++i) {
    CHECK(irr.samples[i] >= 10.0 - 1e-12);
    CHECK(irr.samples[i] <= 30.0 + 1e-12);
  }
  // And stays monotone between the first and last knot.
  const std::size_t first = static_cast<std::size_t>(6.0 * 4.0);
  const std::size_t last = static_cast<std::size_t>(18.4 * 4.0);
  for (std::size_t i = first; i < last; ++i)
    CHECK(irr.samples[i + 1] >= irr.samples[i] - 1e-12);
}

TEST_CASE("single-interval IRR is constant") {
  BreathCycles c;
  c.onsets_s = {1.0, 4.0, 7.0};
  const TimeSeries irr = build_irr(c, 10.0);
  for (double v : irr.samples) CHECK(v == doctest::Approx(20.0));
}

TEST_CASE("SQI of an in-band tone is high, of white noise low") {
  const TimeSeries tone = breathing(1.0 / 0.3, 8.0, 180.0);
  const SqiResult st = sqi(tone);
  CHECK_FALSE(st.degenerate);
  CHECK(st.value >= 0.9);
  CHECK(st.value <= 1.0);

  Rng rng(3);
  std::vector<double> noise(8 * 180);
  for (double& v : noise) v = rng.uniform(-1.0, 1.0);
  const SqiResult sn = sqi(TimeSeries(std::move(noise), 8.0));
  CHECK(sn.value < 0.5);
}

TEST_CASE("SQI is exactly invariant under power-of-two scaling") {
  const TimeSeries x = breathing(4.0, 8.0, 180.0);
  TimeSeries y = x;
  for (double& v : y.samples) v *= 4.0;
  CHECK(sqi(x).value == sqi(y).value);
}

TEST_CASE("SQI of an all-zero window is degenerate") {
  const SqiResult s = sqi(TimeSeries(std::vector<double>(1440, 0.0), 8.0));
  CHECK(s.degenerate);
  CHECK(s.value == 0.0);
}
