#include <cmath>
#include <set>
#include <vector>

#include "bpv/features.hpp"
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

std::vector<StageRaw> stages_of(std::size_t n, StageRaw s) {
  return std::vector<StageRaw>(n, s);
}

}  // namespace

TEST_CASE("feature name lists are fixed, unique and composed") {
  const auto& cla = feature_names(FeatureSet::Cla);
  const auto& tda = feature_names(FeatureSet::Tda);
  const auto& all = feature_names(FeatureSet::All);
  CHECK(cla.size() == 16);
  CHECK(tda.size() == 78);
  REQUIRE(all.size() == 94);
  for (std::size_t i = 0; i < cla.size(); ++i) CHECK(all[i] == cla[i]);
  for (std::size_t i = 0; i < tda.size(); ++i)
    CHECK(all[cla.size() + i] == tda[i]);
  CHECK(std::set<std::string>(all.begin(), all.end()).size() == all.size());
  CHECK(cla.front() == "cla_breath_mean");
  CHECK(cla.back() == "cla_sqi");
  CHECK(tda.front() == "tda_sub_irr_mean_mid");
  CHECK(tda.back() == "tda_sub_air_hepc_14");
}

TEST_CASE("feature set parsing accepts the published alias") {
  CHECK(feature_set_from_name("tda") == FeatureSet::Tda);
  CHECK(feature_set_from_name("cla") == FeatureSet::Cla);
  CHECK(feature_set_from_name("ntda") == FeatureSet::Cla);
  CHECK(feature_set_from_name("all") == FeatureSet::All);
  CHECK_THROWS_AS(feature_set_from_name("bogus"), ParseError);
}

TEST_CASE("windows cover epochs six through last") {
  const TimeSeries air = breathing(4.0, 8.0, 300.0);
  std::vector<StageRaw> st = stages_of(10, StageRaw::W);
  st[5] = StageRaw::N1;  // epoch 6
  st[6] = StageRaw::N2;
  st[7] = StageRaw::R;
  const auto windows = build_windows(air, st);
  REQUIRE(windows.size() == 5);
  CHECK(windows[0].epoch_index == 6);
  CHECK(windows[4].epoch_index == 10);
  CHECK(windows[0].stage == Stage::NREM);
  CHECK(windows[1].stage == Stage::NREM);
  CHECK(windows[2].stage == Stage::REM);
  CHECK(windows[3].stage == Stage::Wake);
  for (std::size_t k = 0; k < windows.size(); ++k) {
    CHECK(windows[k].airflow.duration_s() == doctest::Approx(180.0));
    CHECK(windows[k].airflow.start_time_s ==
          doctest::Approx(30.0 * static_cast<double>(k)));
    CHECK(windows[k].irr.size() == 720);
  }
}

TEST_CASE("window construction validates inputs") {
  const TimeSeries air = breathing(4.0, 8.0, 300.0);
  CHECK_THROWS_AS(build_windows(air, stages_of(9, StageRaw::W)),
                  InvalidInput);
  const TimeSeries shorty = breathing(4.0, 8.0, 150.0);
  CHECK_THROWS_AS(build_windows(shorty, stages_of(5, StageRaw::W)),
                  InvalidInput);
}

TEST_CASE("tda block length and sinusoid lifespan scale") {
  const TimeSeries air = breathing(4.0, 8.0, 180.0, 0.7);
  const auto windows = build_windows(air, stages_of(6, StageRaw::N2));
  REQUIRE(windows.size() == 1);
  const FeatureVector v = tda_features(windows[0]);
  REQUIRE(v.values.size() == 78);
  CHECK(v.valid);

  // Sublevel lifespans of a pure sinusoid sit near peak-to-trough.
  const auto& tda = feature_names(FeatureSet::Tda);
  std::size_t idx = 0;
  for (std::size_t i = 0; i < tda.size(); ++i)
    if (tda[i] == "tda_sub_air_mean_life") idx = i;
  CHECK(std::fabs(v.values[idx] - 1.4) / 1.4 < 0.1);

  // Scaling the airflow scales sublevel lifespans linearly and leaves the
  // IRR-derived block untouched.
  TimeSeries scaled = air;
  for (double& s : scaled.samples) s *= 2.0;
  const auto w2 = build_windows(scaled, stages_of(6, StageRaw::N2));
  const FeatureVector v2 = tda_features(w2[0]);
  CHECK(v2.values[idx] == doctest::Approx(2.0 * v.values[idx]).epsilon(1e-6));
  for (std::size_t i = 0; i < tda.size(); ++i)
    if (tda[i].rfind("tda_sub_irr_", 0) == 0)
      CHECK(v2.values[i] == doctest::Approx(v.values[i]).epsilon(1e-9));
}

TEST_CASE("classic features of uniform breathing") {
  const TimeSeries air = breathing(1.0 / 0.3, 8.0, 180.0);
  const auto windows = build_windows(air, stages_of(6, StageRaw::N3));
  const FeatureVector v = classic_features(windows[0]);
  REQUIRE(v.values.size() == 16);
  CHECK(v.valid);
  const auto& names = feature_names(FeatureSet::Cla);
  auto at = [&](const std::string& n) {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == n) return v.values[i];
    REQUIRE(false);
    return 0.0;
  };
  CHECK(at("cla_breath_std") < 0.01);
  CHECK(at("cla_irr_range") < 0.05);
  CHECK(std::fabs(at("cla_spec_peak_hz") - 0.3) <= 1.0 / 180.0 + 1e-12);
  CHECK(at("cla_band_low_frac") + at("cla_band_mid_frac") +
            at("cla_band_high_frac") ==
        doctest::Approx(1.0).epsilon(1e-9));
  CHECK(at("cla_sqi") == doctest::Approx(windows[0].sqi));
}

TEST_CASE("invalid windows carry zeros and the flag") {
  TimeSeries air = breathing(4.0, 8.0, 300.0);
  // Flatten the final window's 180 s so its breath detection fails.
  for (std::size_t i = air.size() - 180 * 8; i < air.size(); ++i)
    air.samples[i] = 0.0;
  const FeatureMatrix m =
      featurize("s1", air, stages_of(10, StageRaw::N2), FeatureSet::All);
  REQUIRE(m.rows.size() == 5);
  CHECK(m.rows[0].valid);
  CHECK_FALSE(m.rows[4].valid);
  for (double x : m.rows[4].values) CHECK(x == 0.0);
}

TEST_CASE("featurize per-set values agree with column selection") {
  const TimeSeries air = breathing(3.5, 8.0, 240.0);
  const auto st = stages_of(8, StageRaw::R);
  const FeatureMatrix all = featurize("s1", air, st, FeatureSet::All);
  const FeatureMatrix cla = featurize("s1", air, st, FeatureSet::Cla);
  const FeatureMatrix sel = select_features(all, FeatureSet::Cla);
  REQUIRE(cla.rows.size() == sel.rows.size());
  CHECK(cla.names == sel.names);
  for (std::size_t r = 0; r < cla.rows.size(); ++r) {
    CHECK(cla.rows[r].valid == sel.rows[r].valid);
    CHECK(cla.rows[r].sqi == sel.rows[r].sqi);
    REQUIRE(cla.rows[r].values.size() == sel.rows[r].values.size());
    for (std::size_t c = 0; c < cla.rows[r].values.size(); ++c)
      CHECK(cla.rows[r].values[c] == sel.rows[r].values[c]);
  }
  CHECK_THROWS_AS(select_features(cla, FeatureSet::Tda), SchemaError);
}

TEST_CASE("featurize is deterministic") {
  const TimeSeries air = breathing(3.8, 8.0, 240.0);
  const auto st = stages_of(8, StageRaw::N2);
  const FeatureMatrix a = featurize("s", air, st, FeatureSet::All);
  const FeatureMatrix b = featurize("s", air, st, FeatureSet::All);
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t r = 0; r < a.rows.size(); ++r)
    for (std::size_t c = 0; c < a.rows[r].values.size(); ++c)
      CHECK(a.rows[r].values[c] == b.rows[r].values[c]);
}

TEST_CASE("rips h1 source switch changes only the dim-1 block") {
  const TimeSeries air = breathing(4.2, 8.0, 180.0);
  const auto windows = build_windows(air, stages_of(6, StageRaw::N2));
  FeatureConfig irr_cfg;
  FeatureConfig air_cfg;
  air_cfg.rips_h1_source = RipsH1Source::Airflow;
  const FeatureVector a = tda_features(windows[0], irr_cfg);
  const FeatureVector b = tda_features(windows[0], air_cfg);
  const auto& names = feature_names(FeatureSet::Tda);
  bool differs = false;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i].rfind("tda_rip1_", 0) == 0)
      differs = differs || a.values[i] != b.values[i];
    else
      CHECK(a.values[i] == b.values[i]);
  }
  CHECK(differs);
}
