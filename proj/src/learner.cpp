#include "bpv/learner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "bpv/rng.hpp"

namespace bpv {

namespace {

constexpr double kMinHessian = 1e-16;
constexpr double kMinGain = 1e-12;

void softmax_row(const double* scores, double* probs) {
  double mx = scores[0];
  for (int c = 1; c < kNumClasses; ++c) mx = std::max(mx, scores[c]);
  double sum = 0.0;
  for (int c = 0; c < kNumClasses; ++c) {
    probs[c] = std::exp(scores[c] - mx);
    sum += probs[c];
  }
  for (int c = 0; c < kNumClasses; ++c) probs[c] /= sum;
}

// Sorted sample without replacement: partial Fisher-Yates, then sort so the
// downstream scan order does not depend on the draw order.
std::vector<std::size_t> sample_indices(std::size_t n, double fraction,
                                        Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  if (fraction >= 1.0) return idx;
  std::size_t m = static_cast<std::size_t>(fraction * static_cast<double>(n));
  if (m < 1) m = 1;
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t j = i + rng.uniform_index(n - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(m);
  std::sort(idx.begin(), idx.end());
  return idx;
}

struct SplitCandidate {
  bool found = false;
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

struct TreeBuilder {
  const std::vector<std::vector<double>>& X;  // row-major
  const std::vector<double>& g;
  const std::vector<double>& h;
  const std::vector<std::size_t>& features;
  const BoostConfig& cfg;
  Tree tree;
  std::vector<double>& feature_gain;

  int build(std::vector<std::size_t> rows, int depth) {
    double G = 0.0, H = 0.0;
    for (std::size_t r : rows) {
      G += g[r];
      H += h[r];
    }

    SplitCandidate best;
    if (depth < cfg.max_depth && rows.size() >= 2) best = find_split(rows, G, H);

    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    if (!best.found) {
      tree.nodes[static_cast<std::size_t>(id)].leaf =
          -G / (H + cfg.l2_reg) * cfg.learning_rate;
      return id;
    }

    feature_gain[static_cast<std::size_t>(best.feature)] += best.gain;
    std::vector<std::size_t> left, right;
    for (std::size_t r : rows) {
      if (X[r][static_cast<std::size_t>(best.feature)] <= best.threshold)
        left.push_back(r);
      else
        right.push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();

    tree.nodes[static_cast<std::size_t>(id)].feature = best.feature;
    tree.nodes[static_cast<std::size_t>(id)].threshold = best.threshold;
    const int l = build(std::move(left), depth + 1);
    const int r = build(std::move(right), depth + 1);
    tree.nodes[static_cast<std::size_t>(id)].left = l;
    tree.nodes[static_cast<std::size_t>(id)].right = r;
    return id;
  }

  SplitCandidate find_split(const std::vector<std::size_t>& rows, double G,
                            double H) {
    SplitCandidate best;
    best.gain = kMinGain;  // a split must clear this; ties keep the first
    const double base = G * G / (H + cfg.l2_reg);
    std::vector<std::pair<double, std::size_t>> vals;
    vals.reserve(rows.size());
    for (std::size_t f : features) {
      vals.clear();
      for (std::size_t r : rows) vals.emplace_back(X[r][f], r);
      std::sort(vals.begin(), vals.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      double GL = 0.0, HL = 0.0;
      for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
        GL += g[vals[i].second];
        HL += h[vals[i].second];
        if (vals[i].first == vals[i + 1].first) continue;
        const double HR = H - HL;
        if (HL < cfg.min_child_weight || HR < cfg.min_child_weight) continue;
        const double GR = G - GL;
        const double gain = 0.5 * (GL * GL / (HL + cfg.l2_reg) +
                                   GR * GR / (HR + cfg.l2_reg) - base);
        if (gain > best.gain) {
          best.found = true;
          best.feature = static_cast<int>(f);
          best.threshold = vals[i].first;
          best.gain = gain;
        }
      }
    }
    return best;
  }
};

}  // namespace

double Tree::eval(const double* row) const {
  int id = 0;
  while (nodes[static_cast<std::size_t>(id)].feature >= 0) {
    const TreeNode& n = nodes[static_cast<std::size_t>(id)];
    id = row[n.feature] <= n.threshold ? n.left : n.right;
  }
  return nodes[static_cast<std::size_t>(id)].leaf;
}

FeatureMatrix filter_low_quality(const FeatureMatrix& rows,
                                 double sqi_threshold) {
  if (sqi_threshold < 0.0) return rows;
  FeatureMatrix out;
  out.names = rows.names;
  for (const FeatureRow& r : rows.rows)
    if (!(r.sqi < sqi_threshold)) out.rows.push_back(r);
  if (out.rows.empty())
    throw EmptyTrainingSet("all rows removed by the SQI filter");
  return out;
}

BoostedModel fit(const FeatureMatrix& data, const BoostConfig& cfg) {
  const std::size_t n = data.rows.size();
  if (n == 0) throw EmptyTrainingSet("no training rows");
  if (data.names.empty()) throw InvalidInput("fit: empty feature schema");
  if (cfg.n_rounds < 1 || cfg.max_depth < 1 ||
      !(cfg.learning_rate > 0.0) || !(cfg.subsample > 0.0) ||
      cfg.subsample > 1.0 || !(cfg.colsample_bytree > 0.0) ||
      cfg.colsample_bytree > 1.0)
    throw InvalidInput("fit: invalid boosting configuration");

  const std::size_t nf = data.names.size();
  std::vector<std::vector<double>> X(n);
  std::vector<int> y(n);
  std::vector<double> w(n);
  std::set<int> classes_seen;
  for (std::size_t i = 0; i < n; ++i) {
    const FeatureRow& r = data.rows[i];
    if (!r.valid) throw InvalidInput("fit: invalid-flagged row in training set");
    if (r.values.size() != nf)
      throw SchemaError("fit: row width does not match schema");
    for (double v : r.values)
      if (!std::isfinite(v))
        throw InvalidInput("fit: non-finite feature value");
    if (r.stage == Stage::Unknown)
      throw InvalidInput("fit: row with unknown stage");
    X[i] = r.values;
    y[i] = static_cast<int>(r.stage);
    w[i] = cfg.class_weights[static_cast<std::size_t>(y[i])];
    classes_seen.insert(y[i]);
  }
  if (classes_seen.size() < 2)
    throw DegenerateModel("fit: training set contains a single class");

  BoostedModel model;
  model.feature_names = data.names;
  model.config = cfg;
  model.feature_gain.assign(nf, 0.0);
  model.trees.reserve(static_cast<std::size_t>(cfg.n_rounds) * kNumClasses);

  std::vector<std::array<double, kNumClasses>> scores(
      n, std::array<double, kNumClasses>{});
  std::vector<double> g(n), h(n);
  Rng rng(cfg.seed);

  for (int round = 0; round < cfg.n_rounds; ++round) {
    const std::vector<std::size_t> row_sample =
        sample_indices(n, cfg.subsample, rng);
    for (int c = 0; c < kNumClasses; ++c) {
      std::array<double, kNumClasses> p{};
      for (std::size_t i = 0; i < n; ++i) {
        softmax_row(scores[i].data(), p.data());
        const double pc = p[static_cast<std::size_t>(c)];
        const double target = y[i] == c ? 1.0 : 0.0;
        g[i] = w[i] * (pc - target);
        h[i] = w[i] * std::max(pc * (1.0 - pc), kMinHessian);
      }
      const std::vector<std::size_t> col_sample =
          sample_indices(nf, cfg.colsample_bytree, rng);

      TreeBuilder builder{X, g, h, col_sample, cfg, {}, model.feature_gain};
      builder.build(row_sample, 0);
      Tree tree = std::move(builder.tree);

      for (std::size_t i = 0; i < n; ++i)
        scores[i][static_cast<std::size_t>(c)] += tree.eval(X[i].data());
      model.trees.push_back(std::move(tree));
    }
  }
  return model;
}

Prediction predict(const BoostedModel& m, const FeatureMatrix& X) {
  if (X.names != m.feature_names)
    throw SchemaError("predict: matrix schema does not match the model");
  Prediction out;
  out.labels.reserve(X.rows.size());
  out.probs.reserve(X.rows.size());
  for (const FeatureRow& r : X.rows) {
    if (r.values.size() != m.feature_names.size())
      throw SchemaError("predict: row width does not match schema");
    std::array<double, kNumClasses> scores{};
    for (std::size_t t = 0; t < m.trees.size(); ++t)
      scores[t % kNumClasses] += m.trees[t].eval(r.values.data());
    std::array<double, kNumClasses> probs{};
    softmax_row(scores.data(), probs.data());
    int best = 0;
    for (int c = 1; c < kNumClasses; ++c)
      if (probs[static_cast<std::size_t>(c)] >
          probs[static_cast<std::size_t>(best)])
        best = c;
    out.labels.push_back(static_cast<Stage>(best));
    out.probs.push_back(probs);
  }
  return out;
}

std::vector<std::pair<std::string, double>> feature_importance(
    const BoostedModel& m) {
  double total = 0.0;
  for (double v : m.feature_gain) total += v;
  std::vector<std::pair<std::string, double>> out;
  out.reserve(m.feature_names.size());
  for (std::size_t i = 0; i < m.feature_names.size(); ++i)
    out.emplace_back(m.feature_names[i],
                     total > 0.0 ? m.feature_gain[i] / total : 0.0);
  return out;
}

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& tok, const char* ctx) {
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0')
    throw ParseError(std::string("model: bad numeric field in ") + ctx);
  return v;
}

long parse_long(const std::string& tok, const char* ctx) {
  char* end = nullptr;
  const long v = std::strtol(tok.c_str(), &end, 10);
  if (end == tok.c_str() || *end != '\0')
    throw ParseError(std::string("model: bad integer field in ") + ctx);
  return v;
}

}  // namespace

std::string serialize_model(const BoostedModel& m) {
  std::ostringstream os;
  os << "bpv_model 1\n";
  os << "features " << m.feature_names.size();
  for (const auto& f : m.feature_names) os << ' ' << f;
  os << '\n';
  const BoostConfig& c = m.config;
  os << "config learning_rate=" << fmt_double(c.learning_rate)
     << " max_depth=" << c.max_depth
     << " subsample=" << fmt_double(c.subsample)
     << " colsample_bytree=" << fmt_double(c.colsample_bytree)
     << " n_rounds=" << c.n_rounds << " l2_reg=" << fmt_double(c.l2_reg)
     << " min_child_weight=" << fmt_double(c.min_child_weight)
     << " seed=" << c.seed
     << " class_weight_wake=" << fmt_double(c.class_weights[0])
     << " class_weight_rem=" << fmt_double(c.class_weights[1])
     << " class_weight_nrem=" << fmt_double(c.class_weights[2]) << '\n';
  os << "gains";
  for (double v : m.feature_gain) os << ' ' << fmt_double(v);
  os << '\n';
  os << "trees " << m.trees.size() << '\n';
  for (const Tree& t : m.trees) {
    os << "tree " << t.nodes.size() << '\n';
    for (const TreeNode& nd : t.nodes) {
      os << nd.feature << ' ' << fmt_double(nd.threshold) << ' ' << nd.left
         << ' ' << nd.right << ' ' << fmt_double(nd.leaf) << '\n';
    }
  }
  return os.str();
}

BoostedModel parse_model(const std::string& text) {
  std::istringstream is(text);
  std::string tok;
  BoostedModel m;

  if (!(is >> tok) || tok != "bpv_model")
    throw ParseError("model: missing magic header");
  long version = 0;
  if (!(is >> version) || version != 1)
    throw ParseError("model: unsupported version");

  if (!(is >> tok) || tok != "features")
    throw ParseError("model: missing features section");
  std::size_t nf = 0;
  if (!(is >> nf) || nf == 0) throw ParseError("model: bad feature count");
  m.feature_names.resize(nf);
  for (auto& f : m.feature_names)
    if (!(is >> f)) throw ParseError("model: truncated feature list");

  if (!(is >> tok) || tok != "config")
    throw ParseError("model: missing config section");
  for (int i = 0; i < 11; ++i) {
    if (!(is >> tok)) throw ParseError("model: truncated config");
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw ParseError("model: malformed config");
    const std::string key = tok.substr(0, eq);
    const std::string val = tok.substr(eq + 1);
    BoostConfig& c = m.config;
    if (key == "learning_rate")
      c.learning_rate = parse_double(val, "config");
    else if (key == "max_depth")
      c.max_depth = static_cast<int>(parse_long(val, "config"));
    else if (key == "subsample")
      c.subsample = parse_double(val, "config");
    else if (key == "colsample_bytree")
      c.colsample_bytree = parse_double(val, "config");
    else if (key == "n_rounds")
      c.n_rounds = static_cast<int>(parse_long(val, "config"));
    else if (key == "l2_reg")
      c.l2_reg = parse_double(val, "config");
    else if (key == "min_child_weight")
      c.min_child_weight = parse_double(val, "config");
    else if (key == "seed")
      c.seed = static_cast<std::uint64_t>(parse_long(val, "config"));
    else if (key == "class_weight_wake")
      c.class_weights[0] = parse_double(val, "config");
    else if (key == "class_weight_rem")
      c.class_weights[1] = parse_double(val, "config");
    else if (key == "class_weight_nrem")
      c.class_weights[2] = parse_double(val, "config");
    else
      throw ParseError("model: unknown config key '" + key + "'");
  }

  if (!(is >> tok) || tok != "gains")
    throw ParseError("model: missing gains section");
  m.feature_gain.resize(nf);
  for (auto& v : m.feature_gain) {
    if (!(is >> tok)) throw ParseError("model: truncated gains");
    v = parse_double(tok, "gains");
  }

  if (!(is >> tok) || tok != "trees")
    throw ParseError("model: missing trees section");
  std::size_t ntrees = 0;
  if (!(is >> ntrees)) throw ParseError("model: bad tree count");
  m.trees.resize(ntrees);
  for (auto& t : m.trees) {
    if (!(is >> tok) || tok != "tree")
      throw ParseError("model: missing tree header");
    std::size_t nn = 0;
    if (!(is >> nn) || nn == 0) throw ParseError("model: bad node count");
    t.nodes.resize(nn);
    for (auto& nd : t.nodes) {
      std::string sthr, sleaf;
      if (!(is >> nd.feature >> sthr >> nd.left >> nd.right >> sleaf))
        throw ParseError("model: truncated node record");
      nd.threshold = parse_double(sthr, "node");
      nd.leaf = parse_double(sleaf, "node");
      if (nd.feature >= static_cast<int>(nf))
        throw ParseError("model: node feature out of range");
      if (nd.feature >= 0 &&
          (nd.left < 0 || nd.right < 0 ||
           nd.left >= static_cast<int>(nn) || nd.right >= static_cast<int>(nn)))
        throw ParseError("model: node child out of range");
    }
  }
  if (is >> tok) throw ParseError("model: trailing content");
  return m;
}

void save_model(const BoostedModel& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open model file for writing: " + path);
  const std::string text = serialize_model(m);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("failed writing model file: " + path);
}

BoostedModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_model(ss.str());
}

}  // namespace bpv
