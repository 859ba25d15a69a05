#pragma once

#include <string>
#include <vector>

#include "bpv/dataio.hpp"
#include "bpv/eval.hpp"
#include "bpv/features.hpp"
#include "bpv/learner.hpp"

namespace bpv {

struct PipelineConfig {
  BoostConfig boost;
  FeatureConfig features;
  double sqi_threshold = 0.25;  // negative disables the training filter
  int jobs = 0;                 // 0 = hardware concurrency
};

// Flat key=value config file (one pair per line, '#' comments). Unknown keys
// are rejected. serialize/parse round-trip.
PipelineConfig parse_config_text(const std::string& text);
PipelineConfig load_config(const std::string& path);
std::string serialize_config(const PipelineConfig& cfg);

// Manifest written alongside every report: key=value lines with config and
// input digests, module versions, per-stage wall clock and output digests.
struct RunManifest {
  std::vector<std::pair<std::string, std::string>> entries;
  void set(const std::string& key, const std::string& value);
  std::string serialize() const;
};

// Computes (or loads from cache) the full feature matrix of a record. Cache
// entries are keyed by the record content digest and the feature-affecting
// part of the config, and carry a self-check digest; corrupt entries are
// recomputed with a warning. cache_dir may be empty (no caching).
FeatureMatrix cache_features(const SubjectRecord& rec,
                             const PipelineConfig& cfg,
                             const std::string& cache_dir,
                             bool* cache_hit = nullptr);

struct ExperimentResult {
  // Fold results per feature set, in run order.
  std::vector<std::pair<std::string, std::vector<FoldResult>>> per_set;
  std::vector<std::string> excluded_subjects;  // with reasons appended
  RunManifest manifest;
  std::vector<std::string> written_files;
};

// Full experiment: load every record under data_dir, featurize (cached,
// parallel across subjects), run LOSOCV per feature set, compare sets with
// one-sided Wilcoxon tests, aggregate importances, and write the report
// files next to report_path. A featurization failure excludes only that
// subject. Identical inputs and config produce bit-identical reports.
ExperimentResult run_losocv_experiment(const std::string& data_dir,
                                       const std::vector<FeatureSet>& sets,
                                       const PipelineConfig& cfg,
                                       const std::string& report_path,
                                       const std::string& cache_dir = "",
                                       const std::string& models_dir = "");

}  // namespace bpv
