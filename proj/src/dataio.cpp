#include "bpv/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <tuple>

#include "bpv/rng.hpp"

namespace bpv {

namespace {

constexpr double kEpochSeconds = 30.0;
constexpr double kTwoPi = 2.0 * 3.14159265358979323846;

std::string fmt_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double_token(const std::string& tok, const std::string& ctx,
                          std::size_t line_no) {
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0')
    throw ParseError(ctx + ": line " + std::to_string(line_no) +
                     ": bad numeric value '" + tok + "'");
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(s.substr(start));
      break;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::string basename_of(const std::string& path) {
  const std::size_t pos = path.find_last_of('/');
  return pos == std::string::npos ? path : path.substr(pos + 1);
}

}  // namespace

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open file for writing: " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("failed writing file: " + path);
}

SubjectRecord load_record(const std::string& airflow_path,
                          const std::string& stages_path) {
  SubjectRecord rec;
  {
    std::ifstream in(airflow_path);
    if (!in) throw IoError("cannot open airflow file: " + airflow_path);
    std::string line;
    std::size_t line_no = 0;

    if (!std::getline(in, line))
      throw ParseError(airflow_path + ": empty file");
    ++line_no;
    if (line.rfind("rate_hz=", 0) != 0)
      throw ParseError(airflow_path + ": line 1: expected 'rate_hz=<value>'");
    const double rate =
        parse_double_token(line.substr(8), airflow_path, line_no);
    if (!(rate >= 8.0))
      throw ParseError(airflow_path + ": line 1: rate must be >= 8 Hz");

    std::vector<double> samples;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty() && in.eof()) break;
      const double v = parse_double_token(line, airflow_path, line_no);
      if (!std::isfinite(v))
        throw ParseError(airflow_path + ": line " + std::to_string(line_no) +
                         ": non-finite sample");
      samples.push_back(v);
    }
    if (samples.empty())
      throw ParseError(airflow_path + ": no samples after the header");
    rec.airflow = TimeSeries(std::move(samples), rate, 0.0);
  }
  {
    std::ifstream in(stages_path);
    if (!in) throw IoError("cannot open stages file: " + stages_path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty() && in.eof()) break;
      try {
        rec.stages.push_back(stage_raw_from_name(line));
      } catch (const ParseError&) {
        throw ParseError(stages_path + ": line " + std::to_string(line_no) +
                         ": unknown stage label '" + line + "'");
      }
    }
  }

  const std::size_t expected = static_cast<std::size_t>(
      std::floor(rec.airflow.duration_s() / kEpochSeconds));
  if (rec.stages.size() != expected)
    throw SchemaError(stages_path + ": " + std::to_string(rec.stages.size()) +
                      " stage labels for " + std::to_string(expected) +
                      " epochs of airflow");

  std::string base = basename_of(airflow_path);
  const std::string suffix = ".airflow.txt";
  if (base.size() > suffix.size() &&
      base.compare(base.size() - suffix.size(), suffix.size(), suffix) == 0)
    base.resize(base.size() - suffix.size());
  rec.subject_id = base;
  return rec;
}

SubjectRecord load_record_prefix(const std::string& prefix) {
  SubjectRecord rec =
      load_record(prefix + ".airflow.txt", prefix + ".stages.txt");
  rec.subject_id = basename_of(prefix);
  return rec;
}

void save_record(const SubjectRecord& rec, const std::string& dir) {
  {
    std::ostringstream os;
    os << "rate_hz=" << fmt_double(rec.airflow.rate_hz) << '\n';
    for (double v : rec.airflow.samples) os << fmt_double(v) << '\n';
    write_file(dir + "/" + rec.subject_id + ".airflow.txt", os.str());
  }
  {
    std::ostringstream os;
    for (StageRaw s : rec.stages) os << stage_raw_name(s) << '\n';
    write_file(dir + "/" + rec.subject_id + ".stages.txt", os.str());
  }
}

std::array<double, 3> stationary_distribution(
    const std::array<std::array<double, 3>, 3>& transition) {
  std::array<double, 3> pi = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  for (int iter = 0; iter < 10000; ++iter) {
    std::array<double, 3> next{};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        next[static_cast<std::size_t>(j)] +=
            pi[static_cast<std::size_t>(i)] *
            transition[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    double diff = 0.0;
    for (int j = 0; j < 3; ++j)
      diff += std::abs(next[static_cast<std::size_t>(j)] -
                       pi[static_cast<std::size_t>(j)]);
    pi = next;
    if (diff < 1e-14) break;
  }
  return pi;
}

namespace {

// A raw-label spread inside each class keeps stage files realistic: NREM
// epochs cycle through N1/N2/N3 weighted toward N2.
StageRaw raw_label_for(Stage s, Rng& rng) {
  if (s == Stage::Wake) return StageRaw::W;
  if (s == Stage::REM) return StageRaw::R;
  const double u = rng.uniform01();
  if (u < 0.15) return StageRaw::N1;
  if (u < 0.75) return StageRaw::N2;
  return StageRaw::N3;
}

}  // namespace

std::vector<SubjectRecord> generate_synthetic(const SynthConfig& cfg) {
  if (cfg.n_subjects < 1 || cfg.epochs_per_subject < 6)
    throw InvalidInput("synthetic cohort needs >= 1 subject and >= 6 epochs");
  if (!(cfg.rate_hz >= 8.0))
    throw InvalidInput("synthetic rate must be >= 8 Hz");
  for (const auto& row : cfg.transition) {
    double s = 0.0;
    for (double v : row) {
      if (v < 0.0) throw InvalidInput("negative transition probability");
      s += v;
    }
    if (std::abs(s - 1.0) > 1e-9)
      throw InvalidInput("transition matrix rows must sum to 1");
  }

  std::vector<SubjectRecord> cohort;
  cohort.reserve(static_cast<std::size_t>(cfg.n_subjects));

  for (int subj = 0; subj < cfg.n_subjects; ++subj) {
    Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(subj)));

    const double rate_scale =
        std::clamp(1.0 + cfg.subject_rate_scale_std * rng.normal(), 0.75, 1.25);
    const double amp_scale =
        std::clamp(1.0 + cfg.subject_amp_scale_std * rng.normal(), 0.6, 1.4);
    const double wander_freq = rng.uniform(0.008, 0.02);
    const double wander_phase = rng.uniform(0.0, kTwoPi);

    // Stage chain.
    std::vector<Stage> stages(static_cast<std::size_t>(cfg.epochs_per_subject));
    int state = 0;  // recordings start awake
    for (int e = 0; e < cfg.epochs_per_subject; ++e) {
      stages[static_cast<std::size_t>(e)] = static_cast<Stage>(state);
      const double u = rng.uniform01();
      double acc = 0.0;
      int next = 2;
      for (int j = 0; j < 3; ++j) {
        acc += cfg.transition[static_cast<std::size_t>(state)]
                             [static_cast<std::size_t>(j)];
        if (u < acc) {
          next = j;
          break;
        }
      }
      state = next;
    }

    // Artifact spans, decided per epoch up front (spans may overlap or
    // spill into the next epoch). Each burst suppresses breathing and
    // superimposes a few large slow swings at random in-band frequencies,
    // so corrupted stretches look like erratic pseudo-breaths rather than
    // easily ignored white noise.
    const double total_s = cfg.epochs_per_subject * kEpochSeconds;
    const std::size_t n_samples = static_cast<std::size_t>(
        std::llround(total_s * cfg.rate_hz));
    std::vector<char> artifact_mask(n_samples, 0);
    std::vector<double> artifact_swing(n_samples, 0.0);
    for (int e = 0; e < cfg.epochs_per_subject; ++e) {
      const double prob = stages[static_cast<std::size_t>(e)] == Stage::Wake
                              ? cfg.artifact_prob
                              : cfg.artifact_prob_sleep;
      if (rng.uniform01() >= prob) continue;
      const int bursts = 1 + (rng.uniform01() < 0.4 ? 1 : 0);
      for (int bi = 0; bi < bursts; ++bi) {
        const double dur = rng.uniform(cfg.artifact_min_s, cfg.artifact_max_s);
        const double t0 = e * kEpochSeconds +
                          rng.uniform01() * (kEpochSeconds - 1.0);
        const double t1 = std::min(t0 + dur, total_s);
        const std::size_t i0 =
            static_cast<std::size_t>(std::floor(t0 * cfg.rate_hz));
        const std::size_t i1 = std::min(
            n_samples, static_cast<std::size_t>(std::ceil(t1 * cfg.rate_hz)));
        // The oscillator bank is redrawn every few seconds so a long burst
        // stays spectrally wide (a coherent sinusoid would just look like a
        // clean breathing peak to downstream spectral checks).
        struct Osc {
          double freq, phase, amp;
        };
        std::size_t seg0 = i0;
        while (seg0 < i1) {
          const std::size_t seg1 = std::min(
              i1, seg0 + static_cast<std::size_t>(
                             rng.uniform(8.0, 15.0) * cfg.rate_hz));
          std::array<Osc, 3> oscs;
          for (Osc& o : oscs)
            o = {rng.uniform(0.1, 0.7), rng.uniform(0.0, kTwoPi),
                 cfg.artifact_swing * rng.uniform(0.5, 1.0)};
          for (std::size_t i = seg0; i < seg1; ++i) {
            artifact_mask[i] = 1;
            const double t = static_cast<double>(i) / cfg.rate_hz;
            double s = 0.0;
            for (const Osc& o : oscs)
              s += o.amp * std::sin(kTwoPi * o.freq * t + o.phase);
            artifact_swing[i] += s;
          }
          seg0 = seg1;
        }
      }
    }

    // Breath-by-breath airflow synthesis.
    std::vector<double> samples(n_samples);
    const double dt = 1.0 / cfg.rate_hz;

    auto draw_breath = [&](Stage s) {
      const StageSynthParams& p =
          cfg.stage_params[static_cast<std::size_t>(s)];
      const double base_t = 60.0 / (p.base_rate_cpm * rate_scale);
      const double dur =
          std::clamp(base_t * std::exp(p.rate_jitter * rng.normal()), 1.2, 12.0);
      const double amp = p.amplitude * amp_scale *
                         std::max(0.15, 1.0 + p.amp_jitter * rng.normal());
      return std::pair{dur, amp};
    };

    double phase = 0.0;
    auto [breath_t, breath_a] = draw_breath(stages[0]);

    for (std::size_t i = 0; i < n_samples; ++i) {
      const double t = static_cast<double>(i) * dt;
      const int epoch = std::min(cfg.epochs_per_subject - 1,
                                 static_cast<int>(t / kEpochSeconds));
      const Stage st = stages[static_cast<std::size_t>(epoch)];

      phase += kTwoPi * dt / breath_t;
      if (phase >= kTwoPi) {
        phase -= kTwoPi;
        std::tie(breath_t, breath_a) = draw_breath(st);
      }

      double v = breath_a * std::sin(phase);
      if (artifact_mask[i])
        v = 0.02 * v + artifact_swing[i] + cfg.artifact_noise * rng.normal();
      v += cfg.wander_amp * std::sin(kTwoPi * wander_freq * t + wander_phase);
      v += cfg.noise_std * rng.normal();
      samples[i] = v;
    }

    SubjectRecord rec;
    char id[32];
    std::snprintf(id, sizeof id, "subj%02d", subj + 1);
    rec.subject_id = id;
    rec.airflow = TimeSeries(std::move(samples), cfg.rate_hz, 0.0);
    rec.stages.reserve(stages.size());
    for (Stage s : stages) rec.stages.push_back(raw_label_for(s, rng));
    cohort.push_back(std::move(rec));
  }
  return cohort;
}

void export_pd(const std::vector<PersistenceDiagram>& pds,
               const std::string& path) {
  std::ostringstream os;
  os << "dim,birth,death\n";
  for (const auto& pd : pds) {
    std::vector<PdPoint> pts = pd.points;
    std::sort(pts.begin(), pts.end(), [](const PdPoint& a, const PdPoint& b) {
      if (a.birth != b.birth) return a.birth < b.birth;
      return a.death < b.death;
    });
    for (const auto& p : pts)
      os << pd.dim << ',' << fmt_double(p.birth) << ',' << fmt_double(p.death)
         << '\n';
  }
  write_file(path, os.str());
}

std::string serialize_features(const FeatureMatrix& m) {
  std::ostringstream os;
  os << "subject_id,epoch_index,stage,sqi";
  for (const auto& n : m.names) os << ',' << n;
  os << '\n';
  for (const FeatureRow& r : m.rows) {
    if (!r.valid) continue;
    os << r.subject_id << ',' << r.epoch_index << ',' << stage_name(r.stage)
       << ',' << fmt_double(r.sqi);
    for (double v : r.values) os << ',' << fmt_double(v);
    os << '\n';
  }
  return os.str();
}

void export_features(const FeatureMatrix& m, const std::string& path) {
  write_file(path, serialize_features(m));
}

FeatureMatrix parse_features(const std::string& text, const std::string& ctx) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line))
    throw ParseError(ctx + ": empty feature file");

  const std::vector<std::string> header = split(line, ',');
  if (header.size() < 5 || header[0] != "subject_id" ||
      header[1] != "epoch_index" || header[2] != "stage" || header[3] != "sqi")
    throw SchemaError(ctx + ": unexpected feature file header");

  FeatureMatrix m;
  m.names.assign(header.begin() + 4, header.end());

  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() && is.eof()) break;
    const std::vector<std::string> tok = split(line, ',');
    if (tok.size() != header.size())
      throw ParseError(ctx + ": line " + std::to_string(line_no) + ": has " +
                       std::to_string(tok.size()) + " fields, expected " +
                       std::to_string(header.size()));
    FeatureRow r;
    r.subject_id = tok[0];
    r.epoch_index =
        static_cast<int>(parse_double_token(tok[1], ctx, line_no));
    try {
      r.stage = stage_from_name(tok[2]);
    } catch (const ParseError&) {
      throw ParseError(ctx + ": line " + std::to_string(line_no) +
                       ": unknown stage '" + tok[2] + "'");
    }
    r.sqi = parse_double_token(tok[3], ctx, line_no);
    r.values.reserve(m.names.size());
    for (std::size_t i = 4; i < tok.size(); ++i)
      r.values.push_back(parse_double_token(tok[i], ctx, line_no));
    r.valid = true;
    m.rows.push_back(std::move(r));
  }
  return m;
}

FeatureMatrix load_features(const std::string& path) {
  return parse_features(read_file(path), path);
}

namespace {

void append_metric_row(std::ostringstream& os, const std::string& set,
                       const std::string& label, double n_test,
                       const std::array<double, 3>& sens, double acc,
                       double bal, double kappa) {
  os << set << ',' << label << ',' << fmt_double(n_test);
  for (double s : sens) os << ',' << fmt_double(s);
  os << ',' << fmt_double(acc) << ',' << fmt_double(bal) << ','
     << fmt_double(kappa) << '\n';
}

}  // namespace

void export_metrics(
    const std::vector<std::pair<std::string, std::vector<FoldResult>>>& per_set,
    const std::string& path) {
  std::ostringstream os;
  os << "feature_set,subject_id,n_test,sens_wake,sens_rem,sens_nrem,"
        "accuracy,balanced_accuracy,kappa\n";
  for (const auto& [set, folds] : per_set) {
    for (const FoldResult& f : folds)
      append_metric_row(os, set, f.subject_id,
                        static_cast<double>(f.n_test), f.sensitivity,
                        f.accuracy, f.balanced_accuracy, f.kappa);

    // Summaries: mean, population std and sample std across folds. Per-class
    // sensitivities average over folds where the class occurs.
    auto col = [&](auto getter) {
      std::vector<double> v;
      for (const FoldResult& f : folds) {
        const double x = getter(f);
        if (!std::isnan(x)) v.push_back(x);
      }
      return v;
    };
    auto mean_of = [](const std::vector<double>& v) {
      double s = 0.0;
      for (double x : v) s += x;
      return v.empty() ? std::numeric_limits<double>::quiet_NaN()
                       : s / static_cast<double>(v.size());
    };
    auto std_of = [&](const std::vector<double>& v, bool sample) {
      if (v.size() < (sample ? 2u : 1u))
        return std::numeric_limits<double>::quiet_NaN();
      const double m = mean_of(v);
      double s = 0.0;
      for (double x : v) s += (x - m) * (x - m);
      return std::sqrt(s / (static_cast<double>(v.size()) - (sample ? 1 : 0)));
    };

    std::vector<std::vector<double>> cols;
    cols.push_back(col([](const FoldResult& f) {
      return static_cast<double>(f.n_test);
    }));
    for (int c = 0; c < 3; ++c)
      cols.push_back(col([c](const FoldResult& f) {
        return f.sensitivity[static_cast<std::size_t>(c)];
      }));
    cols.push_back(col([](const FoldResult& f) { return f.accuracy; }));
    cols.push_back(
        col([](const FoldResult& f) { return f.balanced_accuracy; }));
    cols.push_back(col([](const FoldResult& f) { return f.kappa; }));

    // One summary data row (the mean); both std flavors follow as comment
    // lines so the file keeps exactly n_folds + 1 data rows per set.
    for (const auto& [label, sample] :
         std::vector<std::pair<std::string, int>>{
             {"mean", -1}, {"std_population", 0}, {"std_sample", 1}}) {
      std::array<double, 8> agg{};
      for (std::size_t i = 0; i < cols.size(); ++i)
        agg[i] = sample < 0 ? mean_of(cols[i]) : std_of(cols[i], sample == 1);
      const std::array<double, 3> sens = {agg[1], agg[2], agg[3]};
      if (sample >= 0) os << "# ";
      append_metric_row(os, set, label, agg[0], sens, agg[4], agg[5], agg[6]);
    }
  }
  write_file(path, os.str());
}

}  // namespace bpv
