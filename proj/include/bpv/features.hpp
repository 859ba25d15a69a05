#pragma once

#include <string>
#include <vector>

#include "bpv/respiration.hpp"
#include "bpv/types.hpp"

namespace bpv {

enum class FeatureSet { Tda, Cla, All };

FeatureSet feature_set_from_name(const std::string& name);
const char* feature_set_name(FeatureSet set);

enum class RipsH1Source { Irr, Airflow };

struct FeatureConfig {
  int takens_dim = 3;
  double takens_delay_s = 1.0;
  int n_perm = 125;  // maxmin subsample size for Rips clouds
  RipsH1Source rips_h1_source = RipsH1Source::Irr;
  bool epy_m_literal = false;
  BreathDetectConfig breath;
};

// A 180 s analysis window ending at epoch `epoch_index` (1-based, >= 6):
// the epoch itself plus the five preceding ones. The IRR segment is sliced
// from the record-level IRR series.
struct EpochWindow {
  int epoch_index = 0;
  Stage stage = Stage::Unknown;
  TimeSeries airflow;
  TimeSeries irr;
  double sqi = 0.0;
  bool sqi_degenerate = false;
};

// Builds all windows of a record. Breath detection and IRR construction run
// once over the full record; SQI is computed per window.
std::vector<EpochWindow> build_windows(const TimeSeries& airflow,
                                       const std::vector<StageRaw>& stages,
                                       const BreathDetectConfig& breath = {});

struct FeatureVector {
  std::vector<double> values;
  bool valid = true;
};

// Column names for a feature set; `All` is `Cla` followed by `Tda`.
const std::vector<std::string>& feature_names(FeatureSet set);

// 78 topological features of one window, in fixed block order:
//   PS(D0 sublevel IRR), HEPC(D0 sublevel IRR), HEPC(D0 Rips airflow),
//   PS(D1 Rips), PS(D0 sublevel airflow), HEPC(D0 sublevel airflow).
// Rips clouds are delay embeddings (dim 3, delay 1 s) subsampled to n_perm
// points by maxmin; sublevel diagrams are finitized at the window max and
// Rips diagrams at the enclosing radius. The D1 source is the IRR by default
// (config rips_h1_source). A window in which breath detection fails yields
// an all-zero vector flagged invalid.
FeatureVector tda_features(const EpochWindow& w, const FeatureConfig& cfg = {});

// 16 classical features of one window: breath-interval mean/std/skew/kurt;
// IRR mean/std/min/max/range; spectral peak frequency and peak power
// fraction of the band-passed airflow in [0.1, 0.75) Hz; band power ratios
// [0.1,0.2)/[0.2,0.4)/[0.4,0.75); sample entropy of the IRR (m=2,
// r=0.2*std); and the window SQI.
FeatureVector classic_features(const EpochWindow& w,
                               const FeatureConfig& cfg = {});

struct FeatureRow {
  std::string subject_id;
  int epoch_index = 0;
  Stage stage = Stage::Unknown;
  double sqi = 0.0;
  std::vector<double> values;
  bool valid = true;
};

struct FeatureMatrix {
  std::vector<std::string> names;
  std::vector<FeatureRow> rows;
};

// Features for every window of a record. Rows flagged invalid carry zero
// values and are excluded from training, prediction and export downstream.
FeatureMatrix featurize(const std::string& subject_id,
                        const TimeSeries& airflow,
                        const std::vector<StageRaw>& stages, FeatureSet set,
                        const FeatureConfig& cfg = {});

// Column subset of a matrix by feature set (selects by name).
FeatureMatrix select_features(const FeatureMatrix& m, FeatureSet set);

}  // namespace bpv
