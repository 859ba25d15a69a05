#pragma once

#include <array>
#include <string>
#include <vector>

#include "bpv/learner.hpp"

namespace bpv {

// Real-valued 3x3 confusion matrix, rows = true stage, cols = predicted.
// Real-valued so that averaged matrices go through the same metric code.
struct ConfusionMatrix {
  std::array<std::array<double, kNumClasses>, kNumClasses> counts{};

  double total() const;
  double row_sum(int c) const;
  double col_sum(int c) const;
};

struct FoldResult {
  std::string subject_id;
  std::size_t n_test = 0;
  // Per-class sensitivity; NaN when the class is absent from the fold.
  std::array<double, kNumClasses> sensitivity{};
  double accuracy = 0.0;
  double balanced_accuracy = 0.0;
  double kappa = 0.0;
  ConfusionMatrix confusion;
};

// Metrics from a confusion matrix: per-class sensitivity, overall accuracy,
// balanced accuracy (mean sensitivity over classes that occur), and Cohen's
// kappa (0 when expected agreement is 1).
FoldResult metrics(const ConfusionMatrix& cm);

struct LosocvResult {
  std::vector<FoldResult> folds;
  std::vector<BoostedModel> models;  // one per fold, in fold order
  std::vector<std::string> skipped;  // subjects with no valid test rows
};

// Leave-one-subject-out cross-validation. For each subject: train on all
// other subjects' valid rows after the SQI filter, predict the held-out
// subject's valid rows (unfiltered), score. Every fold uses the same seed
// from the config.
LosocvResult losocv(const std::vector<FeatureMatrix>& per_subject,
                    const BoostConfig& cfg, double sqi_threshold);

struct WilcoxonResult {
  double p_value = 1.0;
  double statistic = 0.0;   // rank sum of positive differences
  std::size_t n_effective = 0;
  bool degenerate = false;  // all differences were zero
};

// One-sided paired Wilcoxon signed-rank test for the alternative
// median(a - b) > 0. Zero differences are dropped; ties get midranks. Exact
// enumeration for up to 12 effective pairs, tie-corrected normal
// approximation with continuity correction beyond that.
WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& a,
                                    const std::vector<double>& b);

// Mean of the per-model normalized gains, renormalized to sum 1 and sorted
// by decreasing gain (ties alphabetically).
std::vector<std::pair<std::string, double>> aggregate_importance(
    const std::vector<BoostedModel>& models);

}  // namespace bpv
