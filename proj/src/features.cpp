#include "bpv/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "bpv/persistence.hpp"
#include "bpv/signal.hpp"
#include "bpv/vectorize.hpp"

namespace bpv {

namespace {

constexpr double kEpochSeconds = 30.0;
constexpr int kWindowEpochs = 6;
constexpr double kIrrRate = 4.0;
constexpr double kBandLow = 0.1;
constexpr double kBandSplit1 = 0.2;
constexpr double kBandSplit2 = 0.4;
constexpr double kBandHigh = 0.75;
constexpr int kBandOrder = 3;

const std::vector<std::string>& cla_names() {
  static const std::vector<std::string> names = {
      "cla_breath_mean",    "cla_breath_std",    "cla_breath_skew",
      "cla_breath_kurt",    "cla_irr_mean",      "cla_irr_std",
      "cla_irr_min",        "cla_irr_max",       "cla_irr_range",
      "cla_spec_peak_hz",   "cla_spec_peak_frac", "cla_band_low_frac",
      "cla_band_mid_frac",  "cla_band_high_frac", "cla_sampen_irr",
      "cla_sqi"};
  return names;
}

const std::vector<std::string>& tda_names() {
  static const std::vector<std::string> names = [] {
    const char* ps_parts[] = {"mean_mid", "std_mid",  "skew_mid", "kurt_mid",
                              "epy_mid",  "mean_life", "std_life", "skew_life",
                              "kurt_life", "epy_life", "gpc_l1"};
    std::vector<std::string> v;
    auto add_ps = [&](const std::string& block) {
      for (const char* p : ps_parts) v.push_back("tda_" + block + "_" + p);
    };
    auto add_hepc = [&](const std::string& block) {
      for (int i = 0; i < kHepcDim; ++i) {
        char buf[8];
        std::snprintf(buf, sizeof buf, "%02d", i);
        v.push_back("tda_" + block + "_hepc_" + buf);
      }
    };
    add_ps("sub_irr");
    add_hepc("sub_irr");
    add_hepc("rip_air");
    add_ps("rip1");
    add_ps("sub_air");
    add_hepc("sub_air");
    return v;
  }();
  return names;
}

const std::vector<std::string>& all_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v = cla_names();
    v.insert(v.end(), tda_names().begin(), tda_names().end());
    return v;
  }();
  return names;
}

double window_max(const TimeSeries& x) {
  return *std::max_element(x.samples.begin(), x.samples.end());
}

// Finitized dimension-0 sublevel diagram of a window.
PersistenceDiagram sub0(const TimeSeries& x) {
  PersistenceDiagram pd = sublevel_pd0(x);
  return finitize(pd, window_max(x));
}

struct RipsDiagrams {
  PersistenceDiagram d0;
  PersistenceDiagram d1;
  bool has_d1 = false;
};

RipsDiagrams rips_of(const TimeSeries& x, const FeatureConfig& cfg,
                     bool want_d1) {
  const int tau =
      std::max(1, static_cast<int>(std::llround(cfg.takens_delay_s * x.rate_hz)));
  const PointCloud cloud = takens_embed(x, cfg.takens_dim, tau);
  const PointCloud sub =
      maxmin_subsample(cloud, static_cast<std::size_t>(cfg.n_perm));
  auto pds = rips_pd(sub, want_d1 ? 1 : 0,
                     std::max<std::size_t>(256, static_cast<std::size_t>(cfg.n_perm)));
  RipsDiagrams out;
  out.d0 = finitize(pds[0], pds[0].cap_hint);
  if (want_d1) {
    out.d1 = finitize(pds[1], pds[1].cap_hint);
    out.has_d1 = true;
  }
  return out;
}

void append(std::vector<double>& dst, const PsResult& r) {
  dst.insert(dst.end(), r.values.begin(), r.values.end());
}
void append(std::vector<double>& dst, const HepcResult& r) {
  dst.insert(dst.end(), r.values.begin(), r.values.end());
}

struct BreathStats {
  double mean = 0.0, stddev = 0.0, skew = 0.0, kurt = 0.0;
};

BreathStats interval_stats(const std::vector<double>& onsets) {
  std::vector<double> gaps(onsets.size() - 1);
  for (std::size_t i = 1; i < onsets.size(); ++i)
    gaps[i - 1] = onsets[i] - onsets[i - 1];
  BreathStats s;
  const double n = static_cast<double>(gaps.size());
  for (double g : gaps) s.mean += g;
  s.mean /= n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double g : gaps) {
    const double d = g - s.mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  s.stddev = std::sqrt(m2);
  if (m2 > 0.0) {
    s.skew = m3 / std::pow(m2, 1.5);
    s.kurt = m4 / (m2 * m2);
  }
  return s;
}

double sample_entropy(const TimeSeries& x, int m, double r) {
  const std::size_t n = x.size();
  if (n <= static_cast<std::size_t>(m) + 1) return 0.0;
  const std::size_t nt = n - static_cast<std::size_t>(m);
  std::size_t count_m = 0, count_m1 = 0;
  for (std::size_t i = 0; i + 1 < nt; ++i) {
    for (std::size_t j = i + 1; j < nt; ++j) {
      bool match = true;
      for (int k = 0; k < m; ++k) {
        if (std::abs(x.samples[i + static_cast<std::size_t>(k)] -
                     x.samples[j + static_cast<std::size_t>(k)]) > r) {
          match = false;
          break;
        }
      }
      if (!match) continue;
      ++count_m;
      if (std::abs(x.samples[i + static_cast<std::size_t>(m)] -
                   x.samples[j + static_cast<std::size_t>(m)]) <= r)
        ++count_m1;
    }
  }
  if (count_m == 0 || count_m1 == 0) return 0.0;
  return -std::log(static_cast<double>(count_m1) /
                   static_cast<double>(count_m));
}

}  // namespace

FeatureSet feature_set_from_name(const std::string& name) {
  if (name == "tda") return FeatureSet::Tda;
  if (name == "cla" || name == "ntda") return FeatureSet::Cla;
  if (name == "all") return FeatureSet::All;
  throw ParseError("unknown feature set '" + name + "'");
}

const char* feature_set_name(FeatureSet set) {
  switch (set) {
    case FeatureSet::Tda:
      return "tda";
    case FeatureSet::Cla:
      return "cla";
    default:
      return "all";
  }
}

const std::vector<std::string>& feature_names(FeatureSet set) {
  switch (set) {
    case FeatureSet::Tda:
      return tda_names();
    case FeatureSet::Cla:
      return cla_names();
    default:
      return all_names();
  }
}

std::vector<EpochWindow> build_windows(const TimeSeries& airflow,
                                       const std::vector<StageRaw>& stages,
                                       const BreathDetectConfig& breath) {
  const double duration = airflow.duration_s();
  const std::size_t n_epochs =
      static_cast<std::size_t>(std::floor(duration / kEpochSeconds));
  if (stages.size() != n_epochs)
    throw InvalidInput("stage count does not match record duration");
  if (n_epochs < kWindowEpochs)
    throw InvalidInput("record shorter than six epochs");

  const BreathCycles cycles = detect_breath_cycles(airflow, breath);
  const TimeSeries irr = build_irr(cycles, duration);

  const std::size_t irr_epoch =
      static_cast<std::size_t>(std::llround(kEpochSeconds * kIrrRate));

  std::vector<EpochWindow> windows;
  windows.reserve(n_epochs - kWindowEpochs + 1);
  for (std::size_t i = kWindowEpochs; i <= n_epochs; ++i) {
    const std::size_t a_begin = static_cast<std::size_t>(
        std::llround(kEpochSeconds * static_cast<double>(i - kWindowEpochs) *
                     airflow.rate_hz));
    const std::size_t a_end = static_cast<std::size_t>(std::llround(
        kEpochSeconds * static_cast<double>(i) * airflow.rate_hz));

    EpochWindow w;
    w.epoch_index = static_cast<int>(i);
    w.stage = map_stage(stages[i - 1]);
    w.airflow = airflow.slice(a_begin, a_end - a_begin);
    w.irr = irr.slice((i - kWindowEpochs) * irr_epoch,
                      static_cast<std::size_t>(kWindowEpochs) * irr_epoch);
    const SqiResult q = sqi(w.airflow);
    w.sqi = q.value;
    w.sqi_degenerate = q.degenerate;
    windows.push_back(std::move(w));
  }
  return windows;
}

FeatureVector tda_features(const EpochWindow& w, const FeatureConfig& cfg) {
  FeatureVector out;
  try {
    detect_breath_cycles(w.airflow, cfg.breath);
  } catch (const InsufficientBreaths&) {
    out.values.assign(tda_names().size(), 0.0);
    out.valid = false;
    return out;
  }

  PsOptions ps_opts;
  ps_opts.epy_m_literal = cfg.epy_m_literal;

  const PersistenceDiagram sub_irr = sub0(w.irr);
  const PersistenceDiagram sub_air = sub0(w.airflow);

  const bool h1_from_air = cfg.rips_h1_source == RipsH1Source::Airflow;
  const RipsDiagrams rips_air = rips_of(w.airflow, cfg, h1_from_air);
  const RipsDiagrams rips_irr = rips_of(w.irr, cfg, !h1_from_air);
  const PersistenceDiagram& rip1 = h1_from_air ? rips_air.d1 : rips_irr.d1;

  out.values.reserve(tda_names().size());
  append(out.values, persistence_stats(sub_irr, ps_opts));
  append(out.values, hepc(sub_irr));
  append(out.values, hepc(rips_air.d0));
  append(out.values, persistence_stats(rip1, ps_opts));
  append(out.values, persistence_stats(sub_air, ps_opts));
  append(out.values, hepc(sub_air));
  return out;
}

FeatureVector classic_features(const EpochWindow& w,
                               const FeatureConfig& cfg) {
  FeatureVector out;
  BreathCycles cycles;
  try {
    cycles = detect_breath_cycles(w.airflow, cfg.breath);
  } catch (const InsufficientBreaths&) {
    out.values.assign(cla_names().size(), 0.0);
    out.valid = false;
    return out;
  }

  const BreathStats bs = interval_stats(cycles.onsets_s);

  double irr_mean = 0.0;
  double irr_min = w.irr.samples[0], irr_max = w.irr.samples[0];
  for (double v : w.irr.samples) {
    irr_mean += v;
    irr_min = std::min(irr_min, v);
    irr_max = std::max(irr_max, v);
  }
  irr_mean /= static_cast<double>(w.irr.size());
  double irr_var = 0.0;
  for (double v : w.irr.samples) irr_var += (v - irr_mean) * (v - irr_mean);
  irr_var /= static_cast<double>(w.irr.size());
  const double irr_std = std::sqrt(irr_var);

  const TimeSeries bp =
      butter_bandpass(w.airflow, kBandLow, kBandHigh, kBandOrder);
  const Spectrum spec = power_spectrum(bp);
  double band_total = 0.0, band1 = 0.0, band2 = 0.0, band3 = 0.0;
  std::size_t peak = 0;
  bool found = false;
  for (std::size_t l = 1; l < spec.size(); ++l) {
    const double f = spec.freq_at(l);
    if (f < kBandLow || f >= kBandHigh) continue;
    band_total += spec.power[l];
    if (f < kBandSplit1)
      band1 += spec.power[l];
    else if (f < kBandSplit2)
      band2 += spec.power[l];
    else
      band3 += spec.power[l];
    if (!found || spec.power[l] > spec.power[peak]) {
      peak = l;
      found = true;
    }
  }
  const double peak_hz = found ? spec.freq_at(peak) : 0.0;
  const double peak_frac =
      (found && band_total > 0.0) ? spec.power[peak] / band_total : 0.0;
  const double f1 = band_total > 0.0 ? band1 / band_total : 0.0;
  const double f2 = band_total > 0.0 ? band2 / band_total : 0.0;
  const double f3 = band_total > 0.0 ? band3 / band_total : 0.0;

  const double sampen = sample_entropy(w.irr, 2, 0.2 * irr_std);

  out.values = {bs.mean,  bs.stddev, bs.skew,   bs.kurt, irr_mean, irr_std,
                irr_min,  irr_max,   irr_max - irr_min,  peak_hz,  peak_frac,
                f1,       f2,        f3,        sampen,  w.sqi};
  return out;
}

FeatureMatrix featurize(const std::string& subject_id,
                        const TimeSeries& airflow,
                        const std::vector<StageRaw>& stages, FeatureSet set,
                        const FeatureConfig& cfg) {
  FeatureMatrix m;
  m.names = feature_names(set);
  const std::vector<EpochWindow> windows =
      build_windows(airflow, stages, cfg.breath);
  m.rows.reserve(windows.size());
  for (const EpochWindow& w : windows) {
    FeatureRow row;
    row.subject_id = subject_id;
    row.epoch_index = w.epoch_index;
    row.stage = w.stage;
    row.sqi = w.sqi;

    FeatureVector cla, tda;
    if (set != FeatureSet::Tda) cla = classic_features(w, cfg);
    if (set != FeatureSet::Cla) tda = tda_features(w, cfg);
    row.valid = cla.valid && tda.valid;
    if (!row.valid) {
      row.values.assign(m.names.size(), 0.0);
    } else {
      row.values = std::move(cla.values);
      row.values.insert(row.values.end(), tda.values.begin(),
                        tda.values.end());
    }
    m.rows.push_back(std::move(row));
  }
  return m;
}

FeatureMatrix select_features(const FeatureMatrix& m, FeatureSet set) {
  const std::vector<std::string>& want = feature_names(set);
  std::vector<std::size_t> idx;
  idx.reserve(want.size());
  for (const std::string& name : want) {
    const auto it = std::find(m.names.begin(), m.names.end(), name);
    if (it == m.names.end())
      throw SchemaError("feature '" + name + "' missing from matrix");
    idx.push_back(static_cast<std::size_t>(it - m.names.begin()));
  }
  FeatureMatrix out;
  out.names = want;
  out.rows.reserve(m.rows.size());
  for (const FeatureRow& r : m.rows) {
    FeatureRow nr;
    nr.subject_id = r.subject_id;
    nr.epoch_index = r.epoch_index;
    nr.stage = r.stage;
    nr.sqi = r.sqi;
    nr.valid = r.valid;
    nr.values.reserve(idx.size());
    for (std::size_t i : idx) nr.values.push_back(r.values[i]);
    out.rows.push_back(std::move(nr));
  }
  return out;
}

}  // namespace bpv
