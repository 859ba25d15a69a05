#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "bpv/eval.hpp"
#include "bpv/features.hpp"
#include "bpv/persistence.hpp"
#include "bpv/types.hpp"

namespace bpv {

struct SubjectRecord {
  std::string subject_id;
  TimeSeries airflow;
  std::vector<StageRaw> stages;
};

// Airflow file format: first line "rate_hz=<value>", then one sample per
// line. Stage file: one label per line from {W, R, N1, N2, N3}; the count
// must equal floor(duration / 30 s). Parsers fail closed with the offending
// line number in the message.
SubjectRecord load_record(const std::string& airflow_path,
                          const std::string& stages_path);

// Loads "<prefix>.airflow.txt" + "<prefix>.stages.txt"; the subject id is
// the basename of the prefix.
SubjectRecord load_record_prefix(const std::string& prefix);

void save_record(const SubjectRecord& rec, const std::string& dir);

struct StageSynthParams {
  double base_rate_cpm = 14.0;  // breaths per minute
  double rate_jitter = 0.05;    // per-breath log-duration jitter
  double amp_jitter = 0.1;      // per-breath amplitude jitter
  double amplitude = 1.0;
};

struct SynthConfig {
  int n_subjects = 8;
  int epochs_per_subject = 240;
  std::uint64_t seed = 0;
  double rate_hz = 32.0;

  // Stage transition matrix, rows/cols ordered Wake, REM, NREM.
  std::array<std::array<double, 3>, 3> transition = {{
      {0.93, 0.03, 0.04},
      {0.015, 0.95, 0.035},
      {0.012, 0.018, 0.97},
  }};
  std::array<StageSynthParams, 3> stage_params = {{
      {17.0, 0.18, 0.25, 0.85},  // Wake
      {15.5, 0.10, 0.22, 0.75},  // REM
      {13.5, 0.03, 0.08, 1.00},  // NREM
  }};

  // Movement-artifact model: with artifact_prob per wake epoch (and the
  // smaller artifact_prob_sleep per REM/NREM epoch, since stages are scored
  // from EEG while the airflow sensor is disturbed by any movement), one or
  // two bursts during which breathing is suppressed and large slow baseline
  // swings plus broadband noise take over. The swings land inside the
  // respiratory band, so the burst floods the spectrum the SQI looks at and
  // feeds the breath detector fake, erratic cycles.
  double artifact_prob = 0.05;
  double artifact_prob_sleep = 0.010;
  double artifact_swing = 1.6;
  double artifact_noise = 0.8;
  double artifact_min_s = 40.0;
  double artifact_max_s = 100.0;

  // Per-subject physiology scaling.
  double subject_rate_scale_std = 0.06;
  double subject_amp_scale_std = 0.10;

  double noise_std = 0.03;
  double wander_amp = 0.12;
};

// Deterministic synthetic cohort: a Markov chain over stages, breath-by-
// breath sinusoidal airflow with stage-dependent rate/amplitude jitter, and
// wake movement artifacts. Subject streams are independently seeded from
// (seed, subject index).
std::vector<SubjectRecord> generate_synthetic(const SynthConfig& cfg);

// Stationary distribution of the configured stage chain (power iteration).
std::array<double, 3> stationary_distribution(
    const std::array<std::array<double, 3>, 3>& transition);

// Diagram export: header "dim,birth,death", one row per point, death == inf
// spelled "inf". Accepts several diagrams (e.g. Rips dims 0 and 1).
void export_pd(const std::vector<PersistenceDiagram>& pds,
               const std::string& path);

// Feature matrix export: header row, then one row per valid window with
// subject_id, epoch_index, stage, sqi and the feature values at full
// precision. load_features round-trips bit-exactly.
void export_features(const FeatureMatrix& m, const std::string& path);
std::string serialize_features(const FeatureMatrix& m);
FeatureMatrix load_features(const std::string& path);
FeatureMatrix parse_features(const std::string& text, const std::string& ctx);

// Metrics report: one row per fold per feature set plus mean and standard
// deviation summary rows (population and sample std both reported).
void export_metrics(
    const std::vector<std::pair<std::string, std::vector<FoldResult>>>& per_set,
    const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace bpv
