#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <numeric>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "papc/common.hpp"

namespace papc {

enum class EnvironmentLabel { Indoor = 0, Outdoor = 1, TvMusic = 2 };
enum class MoodLabel { Laugh = 0, Sing = 1, Cry = 2, Arguing = 3, Sigh = 4 };

inline const std::vector<std::string>& environment_label_names() {
  static const std::vector<std::string> n = {"indoor", "outdoor", "tv_music"};
  return n;
}

inline const std::vector<std::string>& mood_label_names() {
  static const std::vector<std::string> n = {"laugh", "sing", "cry", "arguing", "sigh"};
  return n;
}

inline int label_index(const std::vector<std::string>& names, const std::string& s) {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == s) return static_cast<int>(i);
  return -1;
}

// ---------------------------------------------------------------------------
// Decision tree with gain-ratio splits on midpoint thresholds.

struct TreeConfig {
  int max_depth = 12;
  int min_leaf = 5;
};

struct TreeNode {
  int feature = -1;        // -1 marks a leaf
  double threshold = 0.0;  // x[feature] <= threshold goes left
  int left = -1, right = -1;
  int label = -1;
  std::vector<double> dist;

  bool is_leaf() const { return feature < 0; }
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  int n_features = 0;
  int n_classes = 0;
  bool single_class_input = false;
};

namespace detail {

inline double class_entropy(const std::vector<std::size_t>& counts, std::size_t total) {
  double h = 0.0;
  for (std::size_t c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(total);
    h -= p * std::log2(p);
  }
  return h;
}

struct SplitCandidate {
  int feature = -1;
  double threshold = 0.0;
  double gain_ratio = -1.0;
};

// Structure shared by the trainer and by exhaustive-rescan tests.
inline double split_gain_ratio(const std::vector<std::vector<double>>& rows,
                               const std::vector<int>& labels,
                               const std::vector<std::size_t>& idx, int n_classes,
                               int feature, double threshold, int min_leaf) {
  std::vector<std::size_t> left_counts(n_classes, 0), right_counts(n_classes, 0);
  std::size_t nl = 0, nr = 0;
  for (std::size_t i : idx) {
    if (rows[i][feature] <= threshold) {
      ++left_counts[labels[i]];
      ++nl;
    } else {
      ++right_counts[labels[i]];
      ++nr;
    }
  }
  if (nl < static_cast<std::size_t>(min_leaf) || nr < static_cast<std::size_t>(min_leaf))
    return -1.0;
  const std::size_t n = nl + nr;
  std::vector<std::size_t> total_counts(n_classes, 0);
  for (int c = 0; c < n_classes; ++c) total_counts[c] = left_counts[c] + right_counts[c];
  const double h = class_entropy(total_counts, n);
  const double hl = class_entropy(left_counts, nl);
  const double hr = class_entropy(right_counts, nr);
  const double gain = h - (static_cast<double>(nl) / n) * hl - (static_cast<double>(nr) / n) * hr;
  const double pl = static_cast<double>(nl) / n, pr = static_cast<double>(nr) / n;
  const double split_info = -pl * std::log2(pl) - pr * std::log2(pr);
  if (split_info <= 0.0) return -1.0;
  return gain / split_info;
}

}  // namespace detail

// Greedy gain-ratio growth. A node splits while it is impure, within depth,
// and some candidate leaves both children at least min_leaf rows; ties go to
// the lowest feature index, then the lowest threshold.
inline DecisionTree train_tree(const std::vector<std::vector<double>>& rows,
                               const std::vector<int>& labels, int n_classes,
                               const TreeConfig& cfg = {}) {
  if (rows.empty() || rows.size() != labels.size())
    throw Error(ErrorCode::InvalidArgument, "empty or mismatched training data");
  DecisionTree tree;
  tree.n_features = static_cast<int>(rows[0].size());
  tree.n_classes = n_classes;

  std::vector<int> present(n_classes, 0);
  for (int l : labels) {
    if (l < 0 || l >= n_classes)
      throw Error(ErrorCode::InvalidArgument, "label outside [0, n_classes)");
    present[l] = 1;
  }
  const int distinct = std::accumulate(present.begin(), present.end(), 0);
  tree.single_class_input = distinct < 2;

  struct Pending {
    std::vector<std::size_t> idx;
    int depth;
    int node;
  };

  auto make_leaf = [&](TreeNode& node, const std::vector<std::size_t>& idx) {
    std::vector<std::size_t> counts(n_classes, 0);
    for (std::size_t i : idx) ++counts[labels[i]];
    node.feature = -1;
    node.label = static_cast<int>(
        std::max_element(counts.begin(), counts.end()) - counts.begin());
    node.dist.resize(n_classes);
    for (int c = 0; c < n_classes; ++c)
      node.dist[c] = static_cast<double>(counts[c]) / static_cast<double>(idx.size());
  };

  std::vector<Pending> stack;
  tree.nodes.emplace_back();
  {
    std::vector<std::size_t> all(rows.size());
    std::iota(all.begin(), all.end(), 0);
    stack.push_back({std::move(all), 0, 0});
  }

  while (!stack.empty()) {
    Pending cur = std::move(stack.back());
    stack.pop_back();

    bool pure = true;
    for (std::size_t i = 1; i < cur.idx.size(); ++i)
      if (labels[cur.idx[i]] != labels[cur.idx[0]]) {
        pure = false;
        break;
      }
    if (pure || cur.depth >= cfg.max_depth ||
        cur.idx.size() < 2 * static_cast<std::size_t>(cfg.min_leaf)) {
      make_leaf(tree.nodes[cur.node], cur.idx);
      continue;
    }

    detail::SplitCandidate best;
    std::vector<double> values;
    for (int f = 0; f < tree.n_features; ++f) {
      values.clear();
      for (std::size_t i : cur.idx) values.push_back(rows[i][f]);
      std::sort(values.begin(), values.end());
      values.erase(std::unique(values.begin(), values.end()), values.end());
      for (std::size_t v = 0; v + 1 < values.size(); ++v) {
        const double thr = 0.5 * (values[v] + values[v + 1]);
        const double gr = detail::split_gain_ratio(rows, labels, cur.idx, n_classes, f, thr,
                                                   cfg.min_leaf);
        if (gr > best.gain_ratio) best = {f, thr, gr};
      }
    }
    if (best.feature < 0) {
      make_leaf(tree.nodes[cur.node], cur.idx);
      continue;
    }

    std::vector<std::size_t> left_idx, right_idx;
    for (std::size_t i : cur.idx)
      (rows[i][best.feature] <= best.threshold ? left_idx : right_idx).push_back(i);

    const int left = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    const int right = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    TreeNode& node = tree.nodes[cur.node];  // rebind after growth
    node.feature = best.feature;
    node.threshold = best.threshold;
    node.left = left;
    node.right = right;
    stack.push_back({std::move(right_idx), cur.depth + 1, right});
    stack.push_back({std::move(left_idx), cur.depth + 1, left});
  }
  return tree;
}

inline std::pair<int, double> tree_predict(const DecisionTree& tree,
                                           const std::vector<double>& x) {
  if (static_cast<int>(x.size()) != tree.n_features)
    throw Error(ErrorCode::DimensionMismatch,
                "expected " + std::to_string(tree.n_features) + " features, got " +
                    std::to_string(x.size()));
  int node = 0;
  while (!tree.nodes[node].is_leaf())
    node = x[tree.nodes[node].feature] <= tree.nodes[node].threshold ? tree.nodes[node].left
                                                                     : tree.nodes[node].right;
  const TreeNode& leaf = tree.nodes[node];
  return {leaf.label, leaf.dist[leaf.label]};
}

inline std::pair<EnvironmentLabel, double> classify_environment(
    const DecisionTree& tree, const std::vector<double>& features) {
  auto [label, conf] = tree_predict(tree, features);
  return {static_cast<EnvironmentLabel>(label), conf};
}

// ---------------------------------------------------------------------------
// Feed-forward net: log-sigmoid hidden layers, softmax output, SGD with
// momentum, inverted dropout during training.

struct MlpConfig {
  std::vector<int> hidden = {64, 64, 32, 32};  // desk-scale default
  double learning_rate = 0.05;
  int epochs = 500;
  int batch_size = 8;
  double dropout = 0.2;
  double momentum = 0.9;
  unsigned seed = 1234;
};

struct MlpModel {
  std::vector<int> layer_sizes;            // [D, h..., n_classes]
  std::vector<std::vector<double>> weights;  // per layer, row-major out x in
  std::vector<std::vector<double>> biases;
  std::vector<double> norm_mean, norm_std;

  int input_dim() const { return layer_sizes.front(); }
  int n_classes() const { return layer_sizes.back(); }
};

namespace detail {

inline double log_sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline void softmax_inplace(std::vector<double>& v) {
  const double mx = *std::max_element(v.begin(), v.end());
  double sum = 0.0;
  for (double& x : v) {
    x = std::exp(x - mx);
    sum += x;
  }
  for (double& x : v) x /= sum;
}

}  // namespace detail

// Forward pass on an already-normalized input; returns the softmax vector.
inline std::vector<double> mlp_forward_normalized(const MlpModel& m,
                                                  const std::vector<double>& x) {
  std::vector<double> a = x;
  const std::size_t n_layers = m.weights.size();
  for (std::size_t l = 0; l < n_layers; ++l) {
    const int out = m.layer_sizes[l + 1], in = m.layer_sizes[l];
    std::vector<double> z(out);
    for (int o = 0; o < out; ++o) {
      double s = m.biases[l][o];
      const double* wrow = m.weights[l].data() + static_cast<std::size_t>(o) * in;
      for (int i = 0; i < in; ++i) s += wrow[i] * a[i];
      z[o] = s;
    }
    if (l + 1 < n_layers)
      for (double& v : z) v = detail::log_sigmoid(v);
    else
      detail::softmax_inplace(z);
    a = std::move(z);
  }
  return a;
}

inline std::vector<double> mlp_normalize(const MlpModel& m, const std::vector<double>& x) {
  if (static_cast<int>(x.size()) != m.input_dim())
    throw Error(ErrorCode::DimensionMismatch,
                "expected " + std::to_string(m.input_dim()) + " inputs, got " +
                    std::to_string(x.size()));
  std::vector<double> z(x.size());
  for (std::size_t d = 0; d < x.size(); ++d)
    z[d] = (x[d] - m.norm_mean[d]) / m.norm_std[d];
  return z;
}

inline std::vector<double> mlp_predict_proba(const MlpModel& m, const std::vector<double>& x) {
  return mlp_forward_normalized(m, mlp_normalize(m, x));
}

inline std::pair<int, std::vector<double>> mlp_predict(const MlpModel& m,
                                                       const std::vector<double>& x) {
  std::vector<double> p = mlp_predict_proba(m, x);
  int best = 0;
  for (int c = 1; c < m.n_classes(); ++c)
    if (p[c] > p[best]) best = c;  // ties keep the lowest class index
  return {best, std::move(p)};
}

inline std::pair<MoodLabel, std::vector<double>> classify_mood(const MlpModel& m,
                                                               const std::vector<double>& x) {
  if (m.n_classes() != 5)
    throw Error(ErrorCode::DimensionMismatch, "mood model must have 5 outputs");
  auto [label, p] = mlp_predict(m, x);
  return {static_cast<MoodLabel>(label), std::move(p)};
}

// Mean cross-entropy and analytic gradients for one batch of normalized
// inputs. Dropout masks, when given, are per hidden layer with keep
// probability 1-p and inverted scaling already applied by the caller.
inline double mlp_loss_and_gradients(const MlpModel& m,
                                     const std::vector<std::vector<double>>& batch,
                                     const std::vector<int>& targets,
                                     const std::vector<std::vector<double>>* dropout_scale,
                                     std::vector<std::vector<double>>& grad_w,
                                     std::vector<std::vector<double>>& grad_b) {
  const std::size_t n_layers = m.weights.size();
  grad_w.resize(n_layers);
  grad_b.resize(n_layers);
  for (std::size_t l = 0; l < n_layers; ++l) {
    grad_w[l].assign(m.weights[l].size(), 0.0);
    grad_b[l].assign(m.biases[l].size(), 0.0);
  }
  double loss = 0.0;
  const double inv_n = 1.0 / static_cast<double>(batch.size());

  std::vector<std::vector<double>> acts(n_layers + 1);
  for (std::size_t s = 0; s < batch.size(); ++s) {
    acts[0] = batch[s];
    for (std::size_t l = 0; l < n_layers; ++l) {
      const int out = m.layer_sizes[l + 1], in = m.layer_sizes[l];
      std::vector<double> z(out);
      for (int o = 0; o < out; ++o) {
        double acc = m.biases[l][o];
        const double* wrow = m.weights[l].data() + static_cast<std::size_t>(o) * in;
        for (int i = 0; i < in; ++i) acc += wrow[i] * acts[l][i];
        z[o] = acc;
      }
      if (l + 1 < n_layers) {
        for (double& v : z) v = detail::log_sigmoid(v);
        if (dropout_scale)
          for (int o = 0; o < out; ++o) z[o] *= (*dropout_scale)[l][o];
      } else {
        detail::softmax_inplace(z);
      }
      acts[l + 1] = std::move(z);
    }
    loss -= std::log(std::max(acts[n_layers][targets[s]], 1e-300)) * inv_n;

    // Backward: delta starts as softmax - onehot.
    std::vector<double> delta = acts[n_layers];
    delta[targets[s]] -= 1.0;
    for (double& d : delta) d *= inv_n;
    for (std::size_t l = n_layers; l-- > 0;) {
      const int out = m.layer_sizes[l + 1], in = m.layer_sizes[l];
      for (int o = 0; o < out; ++o) {
        grad_b[l][o] += delta[o];
        double* grow = grad_w[l].data() + static_cast<std::size_t>(o) * in;
        for (int i = 0; i < in; ++i) grow[i] += delta[o] * acts[l][i];
      }
      if (l == 0) break;
      std::vector<double> prev(in, 0.0);
      for (int o = 0; o < out; ++o) {
        const double* wrow = m.weights[l].data() + static_cast<std::size_t>(o) * in;
        for (int i = 0; i < in; ++i) prev[i] += wrow[i] * delta[o];
      }
      // d/dz of the (possibly dropout-scaled) sigmoid activation
      for (int i = 0; i < in; ++i) {
        double a = acts[l][i];
        double scale = 1.0;
        if (dropout_scale) {
          scale = (*dropout_scale)[l - 1][i];
          if (scale > 0.0) a /= scale;  // recover pre-dropout activation
        }
        prev[i] *= scale * a * (1.0 - a);
      }
      delta = std::move(prev);
    }
  }
  return loss;
}

inline MlpModel train_mlp(const std::vector<std::vector<double>>& rows,
                          const std::vector<int>& labels, int n_classes,
                          const MlpConfig& cfg = {},
                          std::vector<double>* epoch_loss = nullptr) {
  if (rows.empty() || rows.size() != labels.size())
    throw Error(ErrorCode::InvalidArgument, "empty or mismatched training data");
  std::vector<int> present(n_classes, 0);
  for (int l : labels) present.at(l) = 1;
  if (std::accumulate(present.begin(), present.end(), 0) < 2)
    throw Error(ErrorCode::InvalidArgument, "need at least 2 classes to train");

  const int dim = static_cast<int>(rows[0].size());
  MlpModel m;
  m.layer_sizes.push_back(dim);
  for (int h : cfg.hidden) m.layer_sizes.push_back(h);
  m.layer_sizes.push_back(n_classes);

  // z-normalization parameters from the training set
  m.norm_mean.assign(dim, 0.0);
  m.norm_std.assign(dim, 0.0);
  for (const auto& r : rows)
    for (int d = 0; d < dim; ++d) m.norm_mean[d] += r[d];
  for (int d = 0; d < dim; ++d) m.norm_mean[d] /= static_cast<double>(rows.size());
  for (const auto& r : rows)
    for (int d = 0; d < dim; ++d) {
      const double diff = r[d] - m.norm_mean[d];
      m.norm_std[d] += diff * diff;
    }
  for (int d = 0; d < dim; ++d) {
    m.norm_std[d] = std::sqrt(m.norm_std[d] / static_cast<double>(rows.size()));
    if (m.norm_std[d] < 1e-12) m.norm_std[d] = 1.0;  // constant column
  }

  std::mt19937 rng(cfg.seed);
  const std::size_t n_layers = m.layer_sizes.size() - 1;
  m.weights.resize(n_layers);
  m.biases.resize(n_layers);
  for (std::size_t l = 0; l < n_layers; ++l) {
    const int in = m.layer_sizes[l], out = m.layer_sizes[l + 1];
    const double bound = std::sqrt(6.0 / (in + out));
    std::uniform_real_distribution<double> ud(-bound, bound);
    m.weights[l].resize(static_cast<std::size_t>(out) * in);
    for (double& w : m.weights[l]) w = ud(rng);
    m.biases[l].assign(out, 0.0);
  }

  std::vector<std::vector<double>> normalized(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) normalized[i] = mlp_normalize(m, rows[i]);

  std::vector<std::vector<double>> vel_w(n_layers), vel_b(n_layers);
  for (std::size_t l = 0; l < n_layers; ++l) {
    vel_w[l].assign(m.weights[l].size(), 0.0);
    vel_b[l].assign(m.biases[l].size(), 0.0);
  }

  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), 0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int batch_size = std::max(1, cfg.batch_size);
  std::vector<std::vector<double>> grad_w, grad_b;
  std::vector<std::vector<double>> dropout_scale(n_layers - 1);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_sum = 0.0;
    std::size_t n_batches = 0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(batch_size)) {
      const std::size_t stop = std::min(order.size(), start + batch_size);
      std::vector<std::vector<double>> batch;
      std::vector<int> targets;
      for (std::size_t i = start; i < stop; ++i) {
        batch.push_back(normalized[order[i]]);
        targets.push_back(labels[order[i]]);
      }
      const std::vector<std::vector<double>>* scale_ptr = nullptr;
      if (cfg.dropout > 0.0) {
        for (std::size_t l = 0; l + 1 < n_layers; ++l) {
          dropout_scale[l].assign(m.layer_sizes[l + 1], 0.0);
          for (double& s : dropout_scale[l])
            s = unit(rng) < cfg.dropout ? 0.0 : 1.0 / (1.0 - cfg.dropout);
        }
        scale_ptr = &dropout_scale;
      }
      const double loss =
          mlp_loss_and_gradients(m, batch, targets, scale_ptr, grad_w, grad_b);
      if (!std::isfinite(loss))
        throw Error(ErrorCode::NonfiniteLoss,
                    "loss diverged at epoch " + std::to_string(epoch) + " (lr " +
                        std::to_string(cfg.learning_rate) + ")");
      epoch_sum += loss;
      ++n_batches;
      for (std::size_t l = 0; l < n_layers; ++l) {
        for (std::size_t i = 0; i < m.weights[l].size(); ++i) {
          vel_w[l][i] = cfg.momentum * vel_w[l][i] - cfg.learning_rate * grad_w[l][i];
          m.weights[l][i] += vel_w[l][i];
        }
        for (std::size_t i = 0; i < m.biases[l].size(); ++i) {
          vel_b[l][i] = cfg.momentum * vel_b[l][i] - cfg.learning_rate * grad_b[l][i];
          m.biases[l][i] += vel_b[l][i];
        }
      }
    }
    if (epoch_loss) epoch_loss->push_back(epoch_sum / static_cast<double>(n_batches));
  }
  return m;
}

// ---------------------------------------------------------------------------
// Evaluation

struct Metrics {
  std::size_t n = 0;
  double accuracy = 0.0;
  std::vector<std::vector<int>> confusion;  // [true][predicted]
  std::vector<double> precision, recall;
};

inline Metrics evaluate_predictions(const std::vector<int>& y_true,
                                    const std::vector<int>& y_pred, int n_classes) {
  if (y_true.empty() || y_true.size() != y_pred.size())
    throw Error(ErrorCode::EmptyTestSet, "no test rows");
  Metrics m;
  m.n = y_true.size();
  m.confusion.assign(n_classes, std::vector<int>(n_classes, 0));
  std::size_t correct = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    ++m.confusion[y_true[i]][y_pred[i]];
    if (y_true[i] == y_pred[i]) ++correct;
  }
  m.accuracy = static_cast<double>(correct) / static_cast<double>(m.n);
  m.precision.assign(n_classes, 0.0);
  m.recall.assign(n_classes, 0.0);
  for (int c = 0; c < n_classes; ++c) {
    int col = 0, row = 0;
    for (int r = 0; r < n_classes; ++r) {
      col += m.confusion[r][c];
      row += m.confusion[c][r];
    }
    if (col > 0) m.precision[c] = static_cast<double>(m.confusion[c][c]) / col;
    if (row > 0) m.recall[c] = static_cast<double>(m.confusion[c][c]) / row;
  }
  return m;
}

inline Metrics evaluate_tree(const DecisionTree& tree,
                             const std::vector<std::vector<double>>& rows,
                             const std::vector<int>& labels) {
  std::vector<int> pred;
  pred.reserve(rows.size());
  for (const auto& r : rows) pred.push_back(tree_predict(tree, r).first);
  return evaluate_predictions(labels, pred, tree.n_classes);
}

inline Metrics evaluate_mlp(const MlpModel& model,
                            const std::vector<std::vector<double>>& rows,
                            const std::vector<int>& labels) {
  std::vector<int> pred;
  pred.reserve(rows.size());
  for (const auto& r : rows) pred.push_back(mlp_predict(model, r).first);
  return evaluate_predictions(labels, pred, model.n_classes());
}

// ---------------------------------------------------------------------------
// Model serialization: one JSON document per model.

inline nlohmann::ordered_json tree_to_json(const DecisionTree& tree) {
  nlohmann::ordered_json j;
  j["version"] = 1;
  j["kind"] = "tree";
  j["n_features"] = tree.n_features;
  j["n_classes"] = tree.n_classes;
  j["single_class_input"] = tree.single_class_input;
  nlohmann::ordered_json nodes = nlohmann::ordered_json::array();
  for (const TreeNode& n : tree.nodes) {
    nlohmann::ordered_json node;
    node["feature"] = n.feature;
    node["threshold"] = n.threshold;
    node["left"] = n.left;
    node["right"] = n.right;
    node["label"] = n.label;
    node["dist"] = n.dist;
    nodes.push_back(std::move(node));
  }
  j["nodes"] = std::move(nodes);
  return j;
}

inline DecisionTree tree_from_json(const nlohmann::json& j) {
  if (!j.contains("kind") || j.at("kind") != "tree")
    throw Error(ErrorCode::ModelMissing, "document is not a tree model");
  DecisionTree tree;
  tree.n_features = j.at("n_features").get<int>();
  tree.n_classes = j.at("n_classes").get<int>();
  tree.single_class_input = j.at("single_class_input").get<bool>();
  for (const auto& node : j.at("nodes")) {
    TreeNode n;
    n.feature = node.at("feature").get<int>();
    n.threshold = node.at("threshold").get<double>();
    n.left = node.at("left").get<int>();
    n.right = node.at("right").get<int>();
    n.label = node.at("label").get<int>();
    n.dist = node.at("dist").get<std::vector<double>>();
    tree.nodes.push_back(std::move(n));
  }
  return tree;
}

inline nlohmann::ordered_json mlp_to_json(const MlpModel& m) {
  nlohmann::ordered_json j;
  j["version"] = 1;
  j["kind"] = "mlp";
  j["layer_sizes"] = m.layer_sizes;
  j["weights"] = m.weights;
  j["biases"] = m.biases;
  j["norm_mean"] = m.norm_mean;
  j["norm_std"] = m.norm_std;
  return j;
}

inline MlpModel mlp_from_json(const nlohmann::json& j) {
  if (!j.contains("kind") || j.at("kind") != "mlp")
    throw Error(ErrorCode::ModelMissing, "document is not an mlp model");
  MlpModel m;
  m.layer_sizes = j.at("layer_sizes").get<std::vector<int>>();
  m.weights = j.at("weights").get<std::vector<std::vector<double>>>();
  m.biases = j.at("biases").get<std::vector<std::vector<double>>>();
  m.norm_mean = j.at("norm_mean").get<std::vector<double>>();
  m.norm_std = j.at("norm_std").get<std::vector<double>>();
  return m;
}

inline void save_json(const std::string& path, const nlohmann::ordered_json& j) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorCode::IoError, "cannot write " + path);
  f << j.dump(2) << '\n';
}

inline nlohmann::json load_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::ModelMissing, "cannot open " + path);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::IoError, std::string("bad JSON in ") + path + ": " + e.what());
  }
  return j;
}

}  // namespace papc
