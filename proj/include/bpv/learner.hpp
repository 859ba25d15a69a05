#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "bpv/features.hpp"

namespace bpv {

struct BoostConfig {
  double learning_rate = 0.07;
  int max_depth = 5;
  double subsample = 0.2;         // row fraction per boosting round
  double colsample_bytree = 0.5;  // feature fraction per tree
  int n_rounds = 100;
  double l2_reg = 1.0;
  double min_child_weight = 1.0;
  std::uint64_t seed = 0;
  std::array<double, kNumClasses> class_weights = {4.0, 4.0, 1.0};
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double leaf = 0.0;
};

struct Tree {
  std::vector<TreeNode> nodes;
  double eval(const double* row) const;
};

struct BoostedModel {
  std::vector<std::string> feature_names;
  BoostConfig config;
  // trees[round * kNumClasses + class]
  std::vector<Tree> trees;
  // Cumulative split gain per feature, unnormalized.
  std::vector<double> feature_gain;
};

// Drops rows whose SQI is strictly below the threshold (training-data
// hygiene; never applied to evaluation rows). A negative threshold disables
// the filter. Throws if nothing remains.
FeatureMatrix filter_low_quality(const FeatureMatrix& rows,
                                 double sqi_threshold);

// Second-order gradient boosting with a softmax objective: one regression
// tree per class per round fitted to the class gradients/hessians, exact
// greedy splits over sorted feature values, leaf value -G/(H+l2)*lr. Class
// weights multiply both gradient and hessian. Row subsampling is drawn once
// per round and shared by the round's trees; feature subsampling is drawn
// per tree. Split thresholds are order statistics of the training values
// (rule: x <= threshold goes left), so predictions are invariant under
// strictly increasing transforms of any feature column.
BoostedModel fit(const FeatureMatrix& data, const BoostConfig& cfg);

struct Prediction {
  std::vector<Stage> labels;
  std::vector<std::array<double, kNumClasses>> probs;
};

// Score rows with a trained model. The matrix schema must match the model's
// feature names exactly. Probability ties resolve to the smaller class.
Prediction predict(const BoostedModel& m, const FeatureMatrix& X);

// Per-feature split gains normalized to sum 1, in model schema order.
std::vector<std::pair<std::string, double>> feature_importance(
    const BoostedModel& m);

// Text serialization; round-trips bit-exactly.
void save_model(const BoostedModel& m, const std::string& path);
BoostedModel load_model(const std::string& path);
std::string serialize_model(const BoostedModel& m);
BoostedModel parse_model(const std::string& text);

}  // namespace bpv
