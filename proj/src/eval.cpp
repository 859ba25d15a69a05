#include "bpv/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bpv/vectorize.hpp"

namespace bpv {

double ConfusionMatrix::total() const {
  double t = 0.0;
  for (const auto& row : counts)
    for (double v : row) t += v;
  return t;
}

double ConfusionMatrix::row_sum(int c) const {
  double t = 0.0;
  for (double v : counts[static_cast<std::size_t>(c)]) t += v;
  return t;
}

double ConfusionMatrix::col_sum(int c) const {
  double t = 0.0;
  for (const auto& row : counts) t += row[static_cast<std::size_t>(c)];
  return t;
}

FoldResult metrics(const ConfusionMatrix& cm) {
  const double total = cm.total();
  if (!(total > 0.0)) throw InvalidInput("metrics: empty confusion matrix");

  FoldResult r;
  r.confusion = cm;
  r.n_test = static_cast<std::size_t>(std::llround(total));

  double trace = 0.0;
  double balanced = 0.0;
  int present = 0;
  for (int c = 0; c < kNumClasses; ++c) {
    const std::size_t ci = static_cast<std::size_t>(c);
    trace += cm.counts[ci][ci];
    const double rs = cm.row_sum(c);
    if (rs > 0.0) {
      r.sensitivity[ci] = cm.counts[ci][ci] / rs;
      balanced += r.sensitivity[ci];
      ++present;
    } else {
      r.sensitivity[ci] = std::numeric_limits<double>::quiet_NaN();
    }
  }
  r.accuracy = trace / total;
  r.balanced_accuracy = present > 0 ? balanced / present : 0.0;

  double pe = 0.0;
  for (int c = 0; c < kNumClasses; ++c)
    pe += cm.row_sum(c) * cm.col_sum(c) / (total * total);
  r.kappa = pe >= 1.0 ? 0.0 : (r.accuracy - pe) / (1.0 - pe);
  return r;
}

LosocvResult losocv(const std::vector<FeatureMatrix>& per_subject,
                    const BoostConfig& cfg, double sqi_threshold) {
  if (per_subject.size() < 2)
    throw InvalidInput("losocv requires at least 2 subjects");
  for (const auto& m : per_subject) {
    if (m.names != per_subject.front().names)
      throw SchemaError("losocv: subjects have mismatched feature schemas");
  }

  LosocvResult out;
  for (std::size_t s = 0; s < per_subject.size(); ++s) {
    FeatureMatrix test;
    test.names = per_subject[s].names;
    for (const FeatureRow& r : per_subject[s].rows)
      if (r.valid) test.rows.push_back(r);

    const std::string subject = per_subject[s].rows.empty()
                                    ? "subject_" + std::to_string(s)
                                    : per_subject[s].rows.front().subject_id;
    if (test.rows.empty()) {
      out.skipped.push_back(subject);
      continue;
    }

    FeatureMatrix train;
    train.names = per_subject[s].names;
    for (std::size_t t = 0; t < per_subject.size(); ++t) {
      if (t == s) continue;
      for (const FeatureRow& r : per_subject[t].rows)
        if (r.valid) train.rows.push_back(r);
    }
    train = filter_low_quality(train, sqi_threshold);

    BoostedModel model = fit(train, cfg);
    const Prediction pred = predict(model, test);

    ConfusionMatrix cm;
    for (std::size_t i = 0; i < test.rows.size(); ++i) {
      const int truth = static_cast<int>(test.rows[i].stage);
      const int guess = static_cast<int>(pred.labels[i]);
      cm.counts[static_cast<std::size_t>(truth)]
               [static_cast<std::size_t>(guess)] += 1.0;
    }

    FoldResult fr = metrics(cm);
    fr.subject_id = subject;
    out.folds.push_back(std::move(fr));
    out.models.push_back(std::move(model));
  }
  return out;
}

WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& a,
                                    const std::vector<double>& b) {
  if (a.size() != b.size())
    throw InvalidInput("wilcoxon: paired samples must have equal length");
  if (a.size() < 5)
    throw InvalidInput("wilcoxon: need at least 5 pairs");

  std::vector<double> diffs;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    if (d != 0.0) diffs.push_back(d);
  }
  WilcoxonResult res;
  if (diffs.empty()) {
    res.degenerate = true;
    res.p_value = 1.0;
    return res;
  }

  const std::size_t n = diffs.size();
  res.n_effective = n;

  // Midranks of |d|.
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return std::abs(diffs[x]) < std::abs(diffs[y]);
  });
  std::vector<double> rank(n, 0.0);
  std::vector<std::size_t> tie_sizes;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n &&
           std::abs(diffs[order[j + 1]]) == std::abs(diffs[order[i]]))
      ++j;
    const double mid = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = mid;
    tie_sizes.push_back(j - i + 1);
    i = j + 1;
  }

  double w_plus = 0.0;
  for (std::size_t k = 0; k < n; ++k)
    if (diffs[k] > 0.0) w_plus += rank[k];
  res.statistic = w_plus;

  if (n <= 12) {
    // Exact null distribution over all sign assignments of the observed
    // ranks. Doubled ranks are integers, so the comparison is exact.
    std::vector<long> r2(n);
    for (std::size_t k = 0; k < n; ++k) r2[k] = std::lround(2.0 * rank[k]);
    const long target = std::lround(2.0 * w_plus);
    const std::size_t total = std::size_t{1} << n;
    std::size_t count = 0;
    for (std::size_t mask = 0; mask < total; ++mask) {
      long s = 0;
      for (std::size_t k = 0; k < n; ++k)
        if (mask & (std::size_t{1} << k)) s += r2[k];
      if (s >= target) ++count;
    }
    res.p_value = static_cast<double>(count) / static_cast<double>(total);
  } else {
    const double nn = static_cast<double>(n);
    const double mu = nn * (nn + 1.0) / 4.0;
    double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0;
    for (std::size_t t : tie_sizes) {
      const double tt = static_cast<double>(t);
      var -= tt * (tt * tt - 1.0) / 48.0;
    }
    const double z = (w_plus - mu - 0.5) / std::sqrt(var);
    res.p_value = 1.0 - normal_cdf(z);
  }
  return res;
}

std::vector<std::pair<std::string, double>> aggregate_importance(
    const std::vector<BoostedModel>& models) {
  if (models.empty())
    throw InvalidInput("aggregate_importance: no models given");
  const std::vector<std::string>& names = models.front().feature_names;
  for (const auto& m : models)
    if (m.feature_names != names)
      throw SchemaError("aggregate_importance: mismatched model schemas");

  std::vector<double> mean(names.size(), 0.0);
  for (const auto& m : models) {
    const auto imp = feature_importance(m);
    for (std::size_t f = 0; f < names.size(); ++f) mean[f] += imp[f].second;
  }
  double total = 0.0;
  for (double& v : mean) {
    v /= static_cast<double>(models.size());
    total += v;
  }
  std::vector<std::pair<std::string, double>> out;
  out.reserve(names.size());
  for (std::size_t f = 0; f < names.size(); ++f)
    out.emplace_back(names[f], total > 0.0 ? mean[f] / total : 0.0);
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
    if (x.second != y.second) return x.second > y.second;
    return x.first < y.first;
  });
  return out;
}

}  // namespace bpv
