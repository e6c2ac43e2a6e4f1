#include <algorithm>
#include <cmath>
#include <random>

#include "intent/mlcore.hpp"

namespace intent::ml {

// Grows one CART tree. Candidate splits are compared by weighted Gini
// decrease; exact ties prefer the lower feature index, then the lower
// threshold, so the result does not depend on the order features are drawn.
class TreeBuilder {
 public:
  TreeBuilder(const Matrix& X, std::span<const int> y, std::size_t n_classes, std::span<const double> weights,
              int max_depth, std::size_t min_samples_split, std::size_t max_features, std::uint64_t seed,
              DecisionTree& tree)
      : X_(X),
        y_(y),
        k_(n_classes),
        w_(weights),
        max_depth_(max_depth),
        min_split_(std::max<std::size_t>(min_samples_split, 2)),
        max_features_(max_features == 0 || max_features >= X.cols() ? X.cols() : max_features),
        rng_(seed),
        tree_(tree) {
    features_.resize(X.cols());
    for (std::size_t f = 0; f < features_.size(); ++f) features_[f] = f;
  }

  void build() {
    std::vector<std::size_t> idx;
    idx.reserve(X_.rows());
    for (std::size_t i = 0; i < X_.rows(); ++i) {
      if (weight(i) > 0.0) idx.push_back(i);
    }
    if (idx.empty()) throw MlError("decision tree: no sample has positive weight");
    grow(idx, 0, idx.size(), 0);
  }

 private:
  struct Split {
    bool valid = false;
    std::size_t feature = 0;
    double threshold = 0.0;
    double score = -1.0;  // sum over children of sum_k c_k^2 / w
  };

  double weight(std::size_t i) const { return w_.empty() ? 1.0 : w_[i]; }

  int grow(std::vector<std::size_t>& idx, std::size_t begin, std::size_t end, int depth) {
    std::vector<double> counts(k_, 0.0);
    double total = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      counts[static_cast<std::size_t>(y_[idx[i]])] += weight(idx[i]);
      total += weight(idx[i]);
    }
    double sq = 0.0;
    std::size_t nonzero = 0;
    for (double c : counts) {
      sq += c * c;
      if (c > 0.0) ++nonzero;
    }

    const int node_id = static_cast<int>(tree_.nodes_.size());
    DecisionTree::Node node;
    node.weight = total;
    node.impurity = 1.0 - sq / (total * total);
    tree_.nodes_.push_back(node);
    for (double c : counts) tree_.values_.push_back(c / total);

    const bool can_split =
        nonzero > 1 && (end - begin) >= min_split_ && (max_depth_ <= 0 || depth < max_depth_);
    if (!can_split) return node_id;

    const Split best = find_split(idx, begin, end, total);
    if (!best.valid) return node_id;

    auto mid_it = std::stable_partition(idx.begin() + static_cast<std::ptrdiff_t>(begin),
                                        idx.begin() + static_cast<std::ptrdiff_t>(end), [&](std::size_t i) {
                                          return X_.at(i, best.feature) <= best.threshold;
                                        });
    const auto mid = static_cast<std::size_t>(mid_it - idx.begin());

    tree_.nodes_[static_cast<std::size_t>(node_id)].feature = static_cast<int>(best.feature);
    tree_.nodes_[static_cast<std::size_t>(node_id)].threshold = best.threshold;
    const int left = grow(idx, begin, mid, depth + 1);
    const int right = grow(idx, mid, end, depth + 1);
    tree_.nodes_[static_cast<std::size_t>(node_id)].left = left;
    tree_.nodes_[static_cast<std::size_t>(node_id)].right = right;
    return node_id;
  }

  Split find_split(const std::vector<std::size_t>& idx, std::size_t begin, std::size_t end, double total) {
    Split best;
    std::size_t evaluated = 0;
    if (max_features_ < features_.size()) {
      for (std::size_t i = features_.size(); i > 1; --i) {
        std::swap(features_[i - 1], features_[uniform_index(rng_, i)]);
      }
    }
    for (std::size_t f : (max_features_ < features_.size() ? features_ : all_features())) {
      if (evaluated >= max_features_ && best.valid) break;
      if (scan_feature(f, idx, begin, end, total, best)) ++evaluated;
    }
    return best;
  }

  const std::vector<std::size_t>& all_features() {
    if (ordered_.empty()) {
      ordered_.resize(X_.cols());
      for (std::size_t f = 0; f < ordered_.size(); ++f) ordered_[f] = f;
    }
    return ordered_;
  }

  // Returns false when the feature is constant within the node.
  bool scan_feature(std::size_t f, const std::vector<std::size_t>& idx, std::size_t begin, std::size_t end,
                    double total, Split& best) {
    buf_.clear();
    for (std::size_t i = begin; i < end; ++i) buf_.emplace_back(X_.at(idx[i], f), idx[i]);
    std::sort(buf_.begin(), buf_.end());
    if (buf_.front().first == buf_.back().first) return false;

    std::vector<double> left(k_, 0.0);
    std::vector<double> right(k_, 0.0);
    for (const auto& [x, i] : buf_) right[static_cast<std::size_t>(y_[i])] += weight(i);
    double wl = 0.0;
    for (std::size_t p = 0; p + 1 < buf_.size(); ++p) {
      const std::size_t i = buf_[p].second;
      const double wi = weight(i);
      left[static_cast<std::size_t>(y_[i])] += wi;
      right[static_cast<std::size_t>(y_[i])] -= wi;
      wl += wi;
      const double a = buf_[p].first;
      const double b = buf_[p + 1].first;
      if (!(a < b)) continue;
      const double wr = total - wl;
      if (wl <= 0.0 || wr <= 0.0) continue;
      double sl = 0.0;
      double sr = 0.0;
      for (std::size_t c = 0; c < k_; ++c) {
        sl += left[c] * left[c];
        sr += right[c] * right[c];
      }
      const double score = sl / wl + sr / wr;
      double thr = a + (b - a) / 2.0;
      if (!(thr < b)) thr = a;
      const bool better = !best.valid || score > best.score ||
                          (score == best.score && (f < best.feature || (f == best.feature && thr < best.threshold)));
      if (better) best = Split{true, f, thr, score};
    }
    return true;
  }

  const Matrix& X_;
  std::span<const int> y_;
  std::size_t k_;
  std::span<const double> w_;
  int max_depth_;
  std::size_t min_split_;
  std::size_t max_features_;
  std::mt19937_64 rng_;
  DecisionTree& tree_;
  std::vector<std::size_t> features_;
  std::vector<std::size_t> ordered_;
  std::vector<std::pair<double, std::size_t>> buf_;
};

DecisionTree DecisionTree::fit(const Matrix& X, std::span<const int> y, std::size_t n_classes,
                               std::span<const double> weights, int max_depth, std::size_t min_samples_split,
                               std::size_t max_features, std::uint64_t seed) {
  if (X.rows() != y.size()) throw MlError("decision tree: X and y differ in length");
  if (!weights.empty() && weights.size() != y.size()) throw MlError("decision tree: weights differ in length");
  for (int c : y) {
    if (c < 0 || static_cast<std::size_t>(c) >= n_classes) throw MlError("decision tree: class out of range");
  }
  DecisionTree tree;
  tree.n_classes_ = n_classes;
  tree.n_features_ = X.cols();
  TreeBuilder(X, y, n_classes, weights, max_depth, min_samples_split, max_features, seed, tree).build();
  return tree;
}

std::size_t DecisionTree::leaf_of(std::span<const double> x) const {
  std::size_t n = 0;
  while (nodes_[n].feature >= 0) {
    const auto& node = nodes_[n];
    n = static_cast<std::size_t>(x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left
                                                                                               : node.right);
  }
  return n;
}

void DecisionTree::predict_proba(std::span<const double> x, std::span<double> out) const {
  if (x.size() != n_features_) throw MlError("decision tree: wrong feature count");
  auto dist = leaf_distribution(leaf_of(x));
  std::copy(dist.begin(), dist.end(), out.begin());
}

std::vector<double> DecisionTree::impurity_decrease() const {
  std::vector<double> imp(n_features_, 0.0);
  if (nodes_.empty()) return imp;
  for (const auto& node : nodes_) {
    if (node.feature < 0) continue;
    const auto& l = nodes_[static_cast<std::size_t>(node.left)];
    const auto& r = nodes_[static_cast<std::size_t>(node.right)];
    imp[static_cast<std::size_t>(node.feature)] +=
        node.weight * node.impurity - l.weight * l.impurity - r.weight * r.impurity;
  }
  const double root = nodes_.front().weight;
  for (auto& v : imp) v = std::max(0.0, v / root);
  return imp;
}

std::size_t DecisionTree::depth() const {
  std::size_t best = 0;
  std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
  while (!stack.empty()) {
    auto [n, d] = stack.back();
    stack.pop_back();
    best = std::max(best, d);
    if (nodes_[n].feature >= 0) {
      stack.emplace_back(static_cast<std::size_t>(nodes_[n].left), d + 1);
      stack.emplace_back(static_cast<std::size_t>(nodes_[n].right), d + 1);
    }
  }
  return best;
}

nlohmann::json DecisionTree::to_json() const {
  nlohmann::json j;
  j["kind"] = "decision_tree";
  j["n_classes"] = n_classes_;
  j["n_features"] = n_features_;
  std::vector<int> feature, left, right;
  std::vector<double> threshold, weight, impurity;
  for (const auto& n : nodes_) {
    feature.push_back(n.feature);
    left.push_back(n.left);
    right.push_back(n.right);
    threshold.push_back(n.threshold);
    weight.push_back(n.weight);
    impurity.push_back(n.impurity);
  }
  j["feature"] = feature;
  j["threshold"] = threshold;
  j["left"] = left;
  j["right"] = right;
  j["weight"] = weight;
  j["impurity"] = impurity;
  j["value"] = values_;
  return j;
}

DecisionTree DecisionTree::from_json(const nlohmann::json& j) {
  DecisionTree t;
  t.n_classes_ = j.at("n_classes").get<std::size_t>();
  t.n_features_ = j.at("n_features").get<std::size_t>();
  const auto feature = j.at("feature").get<std::vector<int>>();
  const auto left = j.at("left").get<std::vector<int>>();
  const auto right = j.at("right").get<std::vector<int>>();
  const auto threshold = j.at("threshold").get<std::vector<double>>();
  const auto weight = j.at("weight").get<std::vector<double>>();
  const auto impurity = j.at("impurity").get<std::vector<double>>();
  t.values_ = j.at("value").get<std::vector<double>>();
  const std::size_t n = feature.size();
  if (left.size() != n || right.size() != n || threshold.size() != n || weight.size() != n ||
      impurity.size() != n || t.values_.size() != n * t.n_classes_ || n == 0) {
    throw MlError("decision tree: inconsistent node arrays");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (feature[i] >= 0 && (static_cast<std::size_t>(feature[i]) >= t.n_features_ || left[i] <= 0 ||
                            right[i] <= 0 || static_cast<std::size_t>(left[i]) >= n ||
                            static_cast<std::size_t>(right[i]) >= n)) {
      throw MlError("decision tree: bad node reference");
    }
    t.nodes_.push_back({feature[i], threshold[i], left[i], right[i], weight[i], impurity[i]});
  }
  return t;
}

std::vector<double> bootstrap_weights(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<double> w(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) w[uniform_index(rng, n)] += 1.0;
  return w;
}

std::uint64_t RandomForest::tree_seed(std::uint64_t forest_seed, std::size_t t) {
  return derive_seed(forest_seed, 0x7ee50000ULL + t);
}

RandomForest RandomForest::fit(const Matrix& X, std::span<const int> y, std::size_t n_classes,
                               const LearnerSpec& spec) {
  if (spec.n_trees == 0) throw MlError("random forest: n_trees must be positive");
  RandomForest forest;
  forest.n_classes_ = n_classes;
  forest.n_features_ = X.cols();
  const std::size_t mtry =
      spec.max_features > 0 ? static_cast<std::size_t>(spec.max_features)
                            : static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(X.cols()))));
  forest.trees_.reserve(spec.n_trees);
  for (std::size_t t = 0; t < spec.n_trees; ++t) {
    const auto seed = tree_seed(spec.seed, t);
    const auto w = bootstrap_weights(X.rows(), seed);
    forest.trees_.push_back(DecisionTree::fit(X, y, n_classes, w, spec.max_depth, spec.min_samples_split, mtry,
                                              derive_seed(seed, 1)));
  }
  return forest;
}

void RandomForest::predict_proba(std::span<const double> x, std::span<double> out) const {
  if (x.size() != n_features_) throw MlError("random forest: wrong feature count");
  std::fill(out.begin(), out.end(), 0.0);
  for (const auto& t : trees_) {
    auto dist = t.leaf_distribution(t.leaf_of(x));
    const auto vote = static_cast<std::size_t>(std::max_element(dist.begin(), dist.end()) - dist.begin());
    out[vote] += 1.0;
  }
  for (auto& v : out) v /= static_cast<double>(trees_.size());
}

std::vector<double> RandomForest::feature_importances() const {
  std::vector<double> imp(n_features_, 0.0);
  for (const auto& t : trees_) {
    const auto ti = t.impurity_decrease();
    for (std::size_t f = 0; f < n_features_; ++f) imp[f] += ti[f];
  }
  for (auto& v : imp) v /= static_cast<double>(trees_.size());
  return imp;
}

nlohmann::json RandomForest::to_json() const {
  nlohmann::json j;
  j["kind"] = "random_forest";
  j["n_classes"] = n_classes_;
  j["n_features"] = n_features_;
  auto arr = nlohmann::json::array();
  for (const auto& t : trees_) arr.push_back(t.to_json());
  j["trees"] = std::move(arr);
  return j;
}

RandomForest RandomForest::from_json(const nlohmann::json& j) {
  RandomForest f;
  f.n_classes_ = j.at("n_classes").get<std::size_t>();
  f.n_features_ = j.at("n_features").get<std::size_t>();
  for (const auto& t : j.at("trees")) f.trees_.push_back(DecisionTree::from_json(t));
  if (f.trees_.empty()) throw MlError("random forest: no trees");
  return f;
}

}  // namespace intent::ml
