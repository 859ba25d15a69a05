// bpv: breathing pattern variability sleep staging toolkit.
//
// Subcommands: synth, featurize, pd, train, losocv, importance.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bpv/dataio.hpp"
#include "bpv/digest.hpp"
#include "bpv/eval.hpp"
#include "bpv/features.hpp"
#include "bpv/learner.hpp"
#include "bpv/persistence.hpp"
#include "bpv/pipeline.hpp"
#include "bpv/vectorize.hpp"

namespace {

using namespace bpv;

int cmd_synth(int subjects, int epochs, std::uint64_t seed, double rate,
              const std::string& out_dir) {
  SynthConfig cfg;
  cfg.n_subjects = subjects;
  cfg.epochs_per_subject = epochs;
  cfg.seed = seed;
  cfg.rate_hz = rate;
  const std::vector<SubjectRecord> records = generate_synthetic(cfg);
  std::filesystem::create_directories(out_dir);
  for (const SubjectRecord& rec : records) save_record(rec, out_dir);
  std::cout << "wrote " << records.size() << " records to " << out_dir
            << "\n";
  return 0;
}

int cmd_featurize(const std::string& prefix, const std::string& set_name,
                  const std::string& config_path, const std::string& out) {
  PipelineConfig cfg;
  if (!config_path.empty()) cfg = load_config(config_path);
  const FeatureSet set = feature_set_from_name(set_name);
  const SubjectRecord rec = load_record_prefix(prefix);
  const FeatureMatrix m =
      featurize(rec.subject_id, rec.airflow, rec.stages, set, cfg.features);
  export_features(m, out);
  std::size_t valid = 0;
  for (const FeatureRow& r : m.rows) valid += r.valid ? 1 : 0;
  std::cout << "wrote " << valid << " valid rows (" << m.rows.size()
            << " windows) to " << out << "\n";
  return 0;
}

int cmd_pd(const std::string& prefix, int epoch, const std::string& kind,
           const std::string& config_path, const std::string& out) {
  PipelineConfig cfg;
  if (!config_path.empty()) cfg = load_config(config_path);
  const FeatureConfig& fc = cfg.features;
  const SubjectRecord rec = load_record_prefix(prefix);
  const std::vector<EpochWindow> windows =
      build_windows(rec.airflow, rec.stages, fc.breath);
  const EpochWindow* window = nullptr;
  for (const EpochWindow& w : windows)
    if (w.epoch_index == epoch) window = &w;
  if (!window)
    throw InvalidInput("no analysis window ends at epoch " +
                       std::to_string(epoch) + " (valid: 6.." +
                       std::to_string(windows.empty()
                                          ? 0
                                          : windows.back().epoch_index) +
                       ")");

  std::vector<PersistenceDiagram> pds;
  if (kind == "sub-air") {
    pds.push_back(sublevel_pd0(window->airflow));
  } else if (kind == "sub-irr") {
    pds.push_back(sublevel_pd0(window->irr));
  } else if (kind == "rips-air" || kind == "rips-irr") {
    const TimeSeries& src = kind == "rips-air" ? window->airflow : window->irr;
    const int tau = std::max(
        1, static_cast<int>(std::llround(fc.takens_delay_s * src.rate_hz)));
    const PointCloud cloud = maxmin_subsample(
        takens_embed(src, fc.takens_dim, tau),
        static_cast<std::size_t>(fc.n_perm));
    pds = rips_pd(cloud, 1,
                  std::max<std::size_t>(256, static_cast<std::size_t>(
                                                 fc.n_perm)));
  } else {
    throw InvalidInput("unknown diagram kind '" + kind + "'");
  }
  export_pd(pds, out);
  std::size_t n = 0;
  for (const auto& pd : pds) n += pd.points.size();
  std::cout << "wrote " << n << " diagram points to " << out << "\n";
  return 0;
}

int cmd_train(const std::vector<std::string>& feature_files,
              const std::string& config_path, const std::string& out) {
  PipelineConfig cfg;
  if (!config_path.empty()) cfg = load_config(config_path);
  FeatureMatrix all;
  for (const std::string& path : feature_files) {
    FeatureMatrix m = load_features(path);
    if (all.names.empty()) {
      all = std::move(m);
    } else {
      if (m.names != all.names)
        throw SchemaError(path + ": feature names differ from " +
                          feature_files.front());
      for (FeatureRow& r : m.rows) all.rows.push_back(std::move(r));
    }
  }
  const FeatureMatrix kept = filter_low_quality(all, cfg.sqi_threshold);
  BoostedModel model = fit(kept, cfg.boost);
  save_model(model, out);
  std::cout << "trained on " << kept.rows.size() << " rows ("
            << all.rows.size() - kept.rows.size()
            << " removed by SQI filter), wrote " << out << "\n";
  return 0;
}

int cmd_losocv(const std::string& data_dir,
               const std::vector<std::string>& set_names,
               const std::string& config_path, const std::string& out,
               const std::string& cache_dir, const std::string& models_dir,
               int jobs) {
  PipelineConfig cfg;
  if (!config_path.empty()) cfg = load_config(config_path);
  if (jobs > 0) cfg.jobs = jobs;
  std::vector<FeatureSet> sets;
  for (const std::string& name : set_names)
    sets.push_back(feature_set_from_name(name));
  const ExperimentResult res =
      run_losocv_experiment(data_dir, sets, cfg, out, cache_dir, models_dir);
  for (const auto& [set, folds] : res.per_set) {
    double acc = 0, bal = 0, kap = 0;
    for (const FoldResult& f : folds) {
      acc += f.accuracy;
      bal += f.balanced_accuracy;
      kap += f.kappa;
    }
    const double n = folds.empty() ? 1.0 : static_cast<double>(folds.size());
    std::cout << set << ": " << folds.size() << " folds, mean accuracy "
              << acc / n << ", balanced " << bal / n << ", kappa " << kap / n
              << "\n";
  }
  for (const std::string& s : res.excluded_subjects)
    std::cout << "excluded: " << s << "\n";
  for (const std::string& f : res.written_files)
    std::cout << "wrote " << f << "\n";
  return 0;
}

int cmd_importance(const std::string& models_dir, const std::string& out) {
  namespace fs = std::filesystem;
  std::vector<std::string> paths;
  for (const auto& entry : fs::directory_iterator(models_dir)) {
    const std::string name = entry.path().filename().string();
    if (name.size() > 6 && name.compare(name.size() - 6, 6, ".model") == 0)
      paths.push_back(entry.path().string());
  }
  std::sort(paths.begin(), paths.end());
  if (paths.empty())
    throw InvalidInput("no .model files under " + models_dir);
  std::vector<BoostedModel> models;
  models.reserve(paths.size());
  for (const std::string& p : paths) models.push_back(load_model(p));
  std::string text = "feature,gain\n";
  char buf[64];
  for (const auto& [name, gain] : aggregate_importance(models)) {
    std::snprintf(buf, sizeof buf, "%.17g", gain);
    text += name + "," + buf + "\n";
  }
  write_file(out, text);
  std::cout << "aggregated " << models.size() << " models into " << out
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sleep staging from single-channel airflow"};
  app.require_subcommand(1);

  int subjects = 8, epochs = 240, pd_epoch = 6, jobs = 0;
  std::uint64_t seed = 0;
  double rate = 32.0;
  std::string out, record, set_name = "all", kind, config_path, data_dir,
                   cache_dir, models_dir;
  std::vector<std::string> feature_files, set_names;

  CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic cohort");
  synth->add_option("--subjects", subjects, "Number of subjects");
  synth->add_option("--epochs", epochs, "Epochs (30 s) per subject");
  synth->add_option("--seed", seed, "Generator seed");
  synth->add_option("--rate", rate, "Sample rate in Hz");
  synth->add_option("--out", out, "Output directory")->required();

  CLI::App* feat =
      app.add_subcommand("featurize", "Extract window features of a record");
  feat->add_option("--record", record,
                   "Record path prefix (expects <prefix>.airflow.txt and "
                   "<prefix>.stages.txt)")
      ->required();
  feat->add_option("--set", set_name, "Feature set: tda, cla or all");
  feat->add_option("--config", config_path, "key=value config file");
  feat->add_option("--out", out, "Output CSV")->required();

  CLI::App* pd =
      app.add_subcommand("pd", "Export a window's persistence diagram");
  pd->add_option("--record", record, "Record path prefix")->required();
  pd->add_option("--epoch", pd_epoch, "Epoch the window ends at (1-based)")
      ->required();
  pd->add_option("--kind", kind, "sub-air, sub-irr, rips-air or rips-irr")
      ->required();
  pd->add_option("--config", config_path, "key=value config file");
  pd->add_option("--out", out, "Output CSV")->required();

  CLI::App* train = app.add_subcommand("train", "Train one model");
  train->add_option("--features", feature_files, "Feature CSV files")
      ->required();
  train->add_option("--config", config_path, "key=value config file");
  train->add_option("--out", out, "Model output path")->required();

  CLI::App* losocv = app.add_subcommand(
      "losocv", "Leave-one-subject-out experiment over a data directory");
  losocv->add_option("--data", data_dir, "Directory of record pairs")
      ->required();
  losocv->add_option("--set", set_names, "Feature set (repeatable)");
  losocv->add_option("--config", config_path, "key=value config file");
  losocv->add_option("--out", out, "Report output path")->required();
  losocv->add_option("--cache", cache_dir, "Feature cache directory");
  losocv->add_option("--models-out", models_dir, "Per-fold model directory");
  losocv->add_option("--jobs", jobs, "Worker threads (0 = auto)");

  CLI::App* importance = app.add_subcommand(
      "importance", "Aggregate feature importance over saved models");
  importance->add_option("--models", models_dir, "Directory of .model files")
      ->required();
  importance->add_option("--out", out, "Output CSV")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return cmd_synth(subjects, epochs, seed, rate, out);
    if (feat->parsed())
      return cmd_featurize(record, set_name, config_path, out);
    if (pd->parsed())
      return cmd_pd(record, pd_epoch, kind, config_path, out);
    if (train->parsed()) return cmd_train(feature_files, config_path, out);
    if (losocv->parsed()) {
      if (set_names.empty()) set_names.push_back("all");
      return cmd_losocv(data_dir, set_names, config_path, out, cache_dir,
                        models_dir, jobs);
    }
    if (importance->parsed()) return cmd_importance(models_dir, out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
