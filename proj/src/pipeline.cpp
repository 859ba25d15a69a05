#include "bpv/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "bpv/digest.hpp"

namespace fs = std::filesystem;

namespace bpv {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double_kv(const std::string& v, const std::string& key) {
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (end == v.c_str() || *end != '\0')
    throw ParseError("config: bad numeric value for '" + key + "'");
  return x;
}

long parse_long_kv(const std::string& v, const std::string& key) {
  char* end = nullptr;
  const long x = std::strtol(v.c_str(), &end, 10);
  if (end == v.c_str() || *end != '\0')
    throw ParseError("config: bad integer value for '" + key + "'");
  return x;
}

bool parse_bool_kv(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ParseError("config: bad boolean value for '" + key + "'");
}

const char* kModuleVersions =
    "signal/1 respiration/1 persistence/1 vectorize/1 features/1 learner/1 "
    "eval/1 dataio/1 pipeline/1";

// Digest of the parts of the config that change feature values. Learner and
// filter settings are excluded so cached features survive retraining.
std::uint64_t feature_config_digest(const PipelineConfig& cfg) {
  std::ostringstream os;
  const FeatureConfig& f = cfg.features;
  os << "features/1|takens_dim=" << f.takens_dim
     << "|takens_delay_s=" << fmt_double(f.takens_delay_s)
     << "|n_perm=" << f.n_perm << "|rips_h1_source="
     << (f.rips_h1_source == RipsH1Source::Irr ? "irr" : "airflow")
     << "|epy_m_literal=" << (f.epy_m_literal ? 1 : 0)
     << "|min_cycle_s=" << fmt_double(f.breath.min_cycle_s)
     << "|amp_frac=" << fmt_double(f.breath.amp_frac)
     << "|lowpass_hz=" << fmt_double(f.breath.lowpass_hz)
     << "|lowpass_order=" << f.breath.lowpass_order;
  return fnv1a64(os.str());
}

std::uint64_t record_digest(const SubjectRecord& rec) {
  std::uint64_t h = fnv1a64(rec.subject_id);
  const double rate = rec.airflow.rate_hz;
  h = fnv1a64(std::string_view(reinterpret_cast<const char*>(&rate),
                               sizeof rate),
              h);
  h = fnv1a64(
      std::string_view(
          reinterpret_cast<const char*>(rec.airflow.samples.data()),
          rec.airflow.samples.size() * sizeof(double)),
      h);
  std::string stages;
  for (StageRaw s : rec.stages) {
    stages += stage_raw_name(s);
    stages += '\n';
  }
  return fnv1a64(stages, h);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

}  // namespace

PipelineConfig parse_config_text(const std::string& text) {
  PipelineConfig cfg;
  std::istringstream is(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    while (!line.empty() && (line.back() == ' ' || line.back() == '\r'))
      line.pop_back();
    std::size_t start = line.find_first_not_of(' ');
    if (start == std::string::npos) continue;
    const std::string body = line.substr(start);
    const std::size_t eq = body.find('=');
    if (eq == std::string::npos)
      throw ParseError("config: line " + std::to_string(line_no) +
                       ": expected key=value");
    std::string key = body.substr(0, eq);
    std::string val = body.substr(eq + 1);
    while (!key.empty() && key.back() == ' ') key.pop_back();
    while (!val.empty() && val.front() == ' ') val.erase(val.begin());

    BoostConfig& b = cfg.boost;
    FeatureConfig& f = cfg.features;
    if (key == "learning_rate")
      b.learning_rate = parse_double_kv(val, key);
    else if (key == "max_depth")
      b.max_depth = static_cast<int>(parse_long_kv(val, key));
    else if (key == "subsample")
      b.subsample = parse_double_kv(val, key);
    else if (key == "colsample_bytree")
      b.colsample_bytree = parse_double_kv(val, key);
    else if (key == "n_rounds")
      b.n_rounds = static_cast<int>(parse_long_kv(val, key));
    else if (key == "l2_reg")
      b.l2_reg = parse_double_kv(val, key);
    else if (key == "min_child_weight")
      b.min_child_weight = parse_double_kv(val, key);
    else if (key == "seed")
      b.seed = static_cast<std::uint64_t>(parse_long_kv(val, key));
    else if (key == "class_weight_wake")
      b.class_weights[0] = parse_double_kv(val, key);
    else if (key == "class_weight_rem")
      b.class_weights[1] = parse_double_kv(val, key);
    else if (key == "class_weight_nrem")
      b.class_weights[2] = parse_double_kv(val, key);
    else if (key == "sqi_threshold")
      cfg.sqi_threshold = parse_double_kv(val, key);
    else if (key == "jobs")
      cfg.jobs = static_cast<int>(parse_long_kv(val, key));
    else if (key == "takens_dim")
      f.takens_dim = static_cast<int>(parse_long_kv(val, key));
    else if (key == "takens_delay_s")
      f.takens_delay_s = parse_double_kv(val, key);
    else if (key == "n_perm")
      f.n_perm = static_cast<int>(parse_long_kv(val, key));
    else if (key == "rips_h1_source") {
      if (val == "irr")
        f.rips_h1_source = RipsH1Source::Irr;
      else if (val == "airflow")
        f.rips_h1_source = RipsH1Source::Airflow;
      else
        throw ParseError("config: rips_h1_source must be irr or airflow");
    } else if (key == "epy_m_literal")
      f.epy_m_literal = parse_bool_kv(val, key);
    else if (key == "min_cycle_s")
      f.breath.min_cycle_s = parse_double_kv(val, key);
    else if (key == "amp_frac")
      f.breath.amp_frac = parse_double_kv(val, key);
    else
      throw ParseError("config: line " + std::to_string(line_no) +
                       ": unknown key '" + key + "'");
  }
  return cfg;
}

PipelineConfig load_config(const std::string& path) {
  return parse_config_text(read_file(path));
}

std::string serialize_config(const PipelineConfig& cfg) {
  std::ostringstream os;
  const BoostConfig& b = cfg.boost;
  const FeatureConfig& f = cfg.features;
  os << "learning_rate=" << fmt_double(b.learning_rate) << '\n'
     << "max_depth=" << b.max_depth << '\n'
     << "subsample=" << fmt_double(b.subsample) << '\n'
     << "colsample_bytree=" << fmt_double(b.colsample_bytree) << '\n'
     << "n_rounds=" << b.n_rounds << '\n'
     << "l2_reg=" << fmt_double(b.l2_reg) << '\n'
     << "min_child_weight=" << fmt_double(b.min_child_weight) << '\n'
     << "seed=" << b.seed << '\n'
     << "class_weight_wake=" << fmt_double(b.class_weights[0]) << '\n'
     << "class_weight_rem=" << fmt_double(b.class_weights[1]) << '\n'
     << "class_weight_nrem=" << fmt_double(b.class_weights[2]) << '\n'
     << "sqi_threshold=" << fmt_double(cfg.sqi_threshold) << '\n'
     << "jobs=" << cfg.jobs << '\n'
     << "takens_dim=" << f.takens_dim << '\n'
     << "takens_delay_s=" << fmt_double(f.takens_delay_s) << '\n'
     << "n_perm=" << f.n_perm << '\n'
     << "rips_h1_source="
     << (f.rips_h1_source == RipsH1Source::Irr ? "irr" : "airflow") << '\n'
     << "epy_m_literal=" << (f.epy_m_literal ? "true" : "false") << '\n'
     << "min_cycle_s=" << fmt_double(f.breath.min_cycle_s) << '\n'
     << "amp_frac=" << fmt_double(f.breath.amp_frac) << '\n';
  return os.str();
}

void RunManifest::set(const std::string& key, const std::string& value) {
  entries.emplace_back(key, value);
}

std::string RunManifest::serialize() const {
  std::ostringstream os;
  for (const auto& [k, v] : entries) os << k << '=' << v << '\n';
  return os.str();
}

FeatureMatrix cache_features(const SubjectRecord& rec,
                             const PipelineConfig& cfg,
                             const std::string& cache_dir, bool* cache_hit) {
  if (cache_hit) *cache_hit = false;
  std::string path;
  if (!cache_dir.empty()) {
    path = cache_dir + "/" + rec.subject_id + "_" +
           to_hex(record_digest(rec)) + "_" +
           to_hex(feature_config_digest(cfg)) + ".features.csv";
    if (fs::exists(path)) {
      try {
        const std::string blob = read_file(path);
        const std::size_t nl = blob.find('\n');
        if (nl == std::string::npos || blob.compare(0, 9, "# digest=") != 0)
          throw ParseError(path + ": missing cache digest line");
        const std::string digest = blob.substr(9, nl - 9);
        const std::string body = blob.substr(nl + 1);
        if (digest != to_hex(fnv1a64(body)))
          throw ParseError(path + ": cache digest mismatch");
        FeatureMatrix m = parse_features(body, path);
        if (cache_hit) *cache_hit = true;
        return m;
      } catch (const Error& e) {
        std::cerr << "warning: corrupt cache entry, recomputing ("
                  << e.what() << ")\n";
      }
    }
  }

  FeatureMatrix m = featurize(rec.subject_id, rec.airflow, rec.stages,
                              FeatureSet::All, cfg.features);
  if (!path.empty()) {
    fs::create_directories(cache_dir);
    const std::string body = serialize_features(m);
    write_file(path, "# digest=" + to_hex(fnv1a64(body)) + "\n" + body);
  }
  return m;
}

ExperimentResult run_losocv_experiment(const std::string& data_dir,
                                       const std::vector<FeatureSet>& sets,
                                       const PipelineConfig& cfg,
                                       const std::string& report_path,
                                       const std::string& cache_dir,
                                       const std::string& models_dir) {
  if (sets.empty()) throw InvalidInput("no feature sets requested");

  ExperimentResult result;
  result.manifest.set("config_hash", to_hex(fnv1a64(serialize_config(cfg))));
  result.manifest.set("feature_config_hash",
                      to_hex(feature_config_digest(cfg)));
  result.manifest.set("modules", kModuleVersions);

  // Discover records.
  std::vector<std::string> prefixes;
  for (const auto& entry : fs::directory_iterator(data_dir)) {
    const std::string name = entry.path().filename().string();
    const std::string suffix = ".airflow.txt";
    if (name.size() > suffix.size() &&
        name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0)
      prefixes.push_back(
          (entry.path().parent_path() /
           name.substr(0, name.size() - suffix.size()))
              .string());
  }
  std::sort(prefixes.begin(), prefixes.end());
  if (prefixes.size() < 2)
    throw InvalidInput("need at least 2 records under " + data_dir);

  const std::string cache =
      cache_dir.empty() ? data_dir + "/.bpv_cache" : cache_dir;

  // Featurize in parallel across subjects; assemble in subject order.
  auto t0 = std::chrono::steady_clock::now();
  unsigned jobs = cfg.jobs > 0 ? static_cast<unsigned>(cfg.jobs)
                               : std::thread::hardware_concurrency();
  if (jobs == 0) jobs = 1;

  struct SubjectOutcome {
    FeatureMatrix matrix;
    bool ok = false;
    bool hit = false;
    std::string error;
    std::string digest;
  };
  std::vector<SubjectOutcome> outcomes(prefixes.size());

  std::size_t next = 0;
  std::mutex next_mutex;
  auto worker = [&]() {
    while (true) {
      std::size_t i;
      {
        std::lock_guard<std::mutex> lock(next_mutex);
        if (next >= prefixes.size()) return;
        i = next++;
      }
      SubjectOutcome& out = outcomes[i];
      try {
        const SubjectRecord rec = load_record_prefix(prefixes[i]);
        out.digest = to_hex(record_digest(rec));
        out.matrix = cache_features(rec, cfg, cache, &out.hit);
        out.ok = true;
      } catch (const Error& e) {
        out.error = e.what();
      }
    }
  };
  {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < std::min<std::size_t>(jobs, prefixes.size()); ++t)
      pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  result.manifest.set("stage_seconds_featurize", fmt_double(seconds_since(t0)));

  std::vector<FeatureMatrix> all_matrices;
  for (std::size_t i = 0; i < prefixes.size(); ++i) {
    const std::string subject =
        prefixes[i].substr(prefixes[i].find_last_of('/') + 1);
    if (!outcomes[i].ok) {
      result.excluded_subjects.push_back(subject + ": " + outcomes[i].error);
      std::cerr << "warning: excluding " << subject << ": "
                << outcomes[i].error << "\n";
      continue;
    }
    result.manifest.set("input_digest_" + subject, outcomes[i].digest);
    result.manifest.set("cache_hit_" + subject,
                        outcomes[i].hit ? "true" : "false");
    all_matrices.push_back(std::move(outcomes[i].matrix));
  }
  if (all_matrices.size() < 2)
    throw InvalidInput("fewer than 2 subjects featurized successfully");

  // LOSOCV per feature set.
  t0 = std::chrono::steady_clock::now();
  std::vector<std::vector<BoostedModel>> models_per_set;
  std::vector<std::vector<FoldResult>> folds_per_set;
  for (FeatureSet set : sets) {
    std::vector<FeatureMatrix> selected;
    selected.reserve(all_matrices.size());
    for (const auto& m : all_matrices) selected.push_back(select_features(m, set));
    LosocvResult cv = losocv(selected, cfg.boost, cfg.sqi_threshold);
    for (const std::string& s : cv.skipped)
      result.excluded_subjects.push_back(s + ": no valid test rows (" +
                                         feature_set_name(set) + ")");
    folds_per_set.push_back(std::move(cv.folds));
    models_per_set.push_back(std::move(cv.models));
  }
  result.manifest.set("stage_seconds_losocv", fmt_double(seconds_since(t0)));

  for (std::size_t i = 0; i < sets.size(); ++i)
    result.per_set.emplace_back(feature_set_name(sets[i]), folds_per_set[i]);

  // Write outputs.
  t0 = std::chrono::steady_clock::now();
  export_metrics(result.per_set, report_path);
  result.written_files.push_back(report_path);

  {
    std::ostringstream os;
    os << "feature_set,subject_id,true_stage,pred_wake,pred_rem,pred_nrem\n";
    for (std::size_t s = 0; s < sets.size(); ++s) {
      ConfusionMatrix avg;
      for (const FoldResult& f : folds_per_set[s]) {
        for (int a = 0; a < kNumClasses; ++a)
          for (int p = 0; p < kNumClasses; ++p)
            avg.counts[static_cast<std::size_t>(a)]
                      [static_cast<std::size_t>(p)] +=
                f.confusion.counts[static_cast<std::size_t>(a)]
                                  [static_cast<std::size_t>(p)];
      }
      const double nf = static_cast<double>(folds_per_set[s].size());
      for (const FoldResult& f : folds_per_set[s]) {
        for (int a = 0; a < kNumClasses; ++a) {
          os << feature_set_name(sets[s]) << ',' << f.subject_id << ','
             << stage_name(static_cast<Stage>(a));
          for (int p = 0; p < kNumClasses; ++p)
            os << ','
               << fmt_double(f.confusion.counts[static_cast<std::size_t>(a)]
                                               [static_cast<std::size_t>(p)]);
          os << '\n';
        }
      }
      for (int a = 0; a < kNumClasses; ++a) {
        os << feature_set_name(sets[s]) << ",average,"
           << stage_name(static_cast<Stage>(a));
        for (int p = 0; p < kNumClasses; ++p)
          os << ','
             << fmt_double(avg.counts[static_cast<std::size_t>(a)]
                                     [static_cast<std::size_t>(p)] /
                           (nf > 0 ? nf : 1.0));
        os << '\n';
      }
    }
    const std::string path = report_path + ".confusion.csv";
    write_file(path, os.str());
    result.written_files.push_back(path);
  }

  if (sets.size() >= 2) {
    std::ostringstream os;
    os << "metric,set_a,set_b,alternative,n_effective,statistic,p_value,"
          "degenerate\n";
    for (std::size_t i = 0; i < sets.size(); ++i) {
      for (std::size_t j = i + 1; j < sets.size(); ++j) {
        // Pair folds by subject id present in both sets.
        for (const char* metric : {"kappa", "accuracy"}) {
          std::vector<double> a, b;
          for (const FoldResult& fa : folds_per_set[i]) {
            for (const FoldResult& fb : folds_per_set[j]) {
              if (fa.subject_id != fb.subject_id) continue;
              const bool use_kappa = std::strcmp(metric, "kappa") == 0;
              a.push_back(use_kappa ? fa.kappa : fa.accuracy);
              b.push_back(use_kappa ? fb.kappa : fb.accuracy);
            }
          }
          os << metric << ',' << feature_set_name(sets[i]) << ','
             << feature_set_name(sets[j]) << ",greater,";
          try {
            const WilcoxonResult w = wilcoxon_signed_rank(a, b);
            os << w.n_effective << ',' << fmt_double(w.statistic) << ','
               << fmt_double(w.p_value) << ','
               << (w.degenerate ? "true" : "false") << '\n';
          } catch (const Error&) {
            os << a.size() << ",nan,nan,true\n";
          }
        }
      }
    }
    const std::string path = report_path + ".wilcoxon.csv";
    write_file(path, os.str());
    result.written_files.push_back(path);
  }

  {
    std::ostringstream os;
    os << "feature_set,feature,gain\n";
    for (std::size_t s = 0; s < sets.size(); ++s) {
      if (models_per_set[s].empty()) continue;
      for (const auto& [name, gain] : aggregate_importance(models_per_set[s]))
        os << feature_set_name(sets[s]) << ',' << name << ','
           << fmt_double(gain) << '\n';
    }
    const std::string path = report_path + ".importance.csv";
    write_file(path, os.str());
    result.written_files.push_back(path);
  }

  if (!models_dir.empty()) {
    fs::create_directories(models_dir);
    for (std::size_t s = 0; s < sets.size(); ++s) {
      for (std::size_t f = 0; f < models_per_set[s].size(); ++f) {
        const std::string path = models_dir + "/" +
                                 feature_set_name(sets[s]) + "_" +
                                 folds_per_set[s][f].subject_id + ".model";
        save_model(models_per_set[s][f], path);
        result.written_files.push_back(path);
      }
    }
  }
  result.manifest.set("stage_seconds_export", fmt_double(seconds_since(t0)));

  for (const std::string& f : result.written_files)
    result.manifest.set("output_digest_" + fs::path(f).filename().string(),
                        to_hex(fnv1a64(read_file(f))));
  write_file(report_path + ".manifest", result.manifest.serialize());
  return result;
}

}  // namespace bpv
