#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "intent/mlcore.hpp"

namespace intent::ml {

namespace {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void check_xy(const Matrix& X, std::span<const int> y, std::size_t n_classes, const char* who) {
  if (X.rows() == 0) throw MlError(std::string(who) + ": no training rows");
  if (X.rows() != y.size()) throw MlError(std::string(who) + ": X and y differ in length");
  for (int c : y) {
    if (c < 0 || static_cast<std::size_t>(c) >= n_classes) throw MlError(std::string(who) + ": class out of range");
  }
}

void check_width(std::span<const double> x, std::size_t n, const char* who) {
  if (x.size() != n) {
    throw MlError(std::string(who) + ": expected " + std::to_string(n) + " features, got " +
                  std::to_string(x.size()));
  }
}

}  // namespace

void Matrix::append_row(std::span<const double> values) {
  if (rows_ == 0 && cols_ == 0) cols_ = values.size();
  if (values.size() != cols_) throw MlError("matrix: row width mismatch");
  data_.insert(data_.end(), values.begin(), values.end());
  ++rows_;
}

Matrix Matrix::select_columns(std::span<const std::size_t> cols) const {
  Matrix m(rows_, cols.size());
  for (std::size_t c : cols) {
    if (c >= cols_) throw MlError("matrix: column index out of range");
  }
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t j = 0; j < cols.size(); ++j) m.at(r, j) = at(r, cols[j]);
  }
  return m;
}

Matrix Matrix::select_rows(std::span<const std::size_t> rows) const {
  Matrix m(rows.size(), cols_);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= rows_) throw MlError("matrix: row index out of range");
    std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(rows[i] * cols_), cols_, m.row(i).begin());
  }
  return m;
}

std::string_view learner_name(LearnerKind k) {
  switch (k) {
    case LearnerKind::decision_tree: return "decision_tree";
    case LearnerKind::random_forest: return "random_forest";
    case LearnerKind::adaboost: return "adaboost";
    case LearnerKind::linear_svm: return "linear_svm";
    case LearnerKind::gaussian_nb: return "gaussian_nb";
  }
  return "?";
}

std::optional<LearnerKind> learner_from_name(std::string_view name) {
  for (auto k : {LearnerKind::decision_tree, LearnerKind::random_forest, LearnerKind::adaboost,
                 LearnerKind::linear_svm, LearnerKind::gaussian_nb}) {
    if (learner_name(k) == name) return k;
  }
  if (name == "rf") return LearnerKind::random_forest;
  if (name == "svm") return LearnerKind::linear_svm;
  if (name == "nb" || name == "naive_bayes") return LearnerKind::gaussian_nb;
  if (name == "tree" || name == "dt") return LearnerKind::decision_tree;
  return std::nullopt;
}

nlohmann::json LearnerSpec::to_json() const {
  return {{"kind", learner_name(kind)},
          {"max_depth", max_depth},
          {"min_samples_split", min_samples_split},
          {"n_trees", n_trees},
          {"max_features", max_features},
          {"n_rounds", n_rounds},
          {"lambda", lambda},
          {"epochs", epochs},
          {"var_floor", var_floor},
          {"seed", seed}};
}

LearnerSpec LearnerSpec::from_json(const nlohmann::json& j) {
  LearnerSpec s;
  const auto kind = learner_from_name(j.at("kind").get<std::string>());
  if (!kind) throw MlError("unknown learner " + j.at("kind").get<std::string>());
  s.kind = *kind;
  s.max_depth = j.value("max_depth", s.max_depth);
  s.min_samples_split = j.value("min_samples_split", s.min_samples_split);
  s.n_trees = j.value("n_trees", s.n_trees);
  s.max_features = j.value("max_features", s.max_features);
  s.n_rounds = j.value("n_rounds", s.n_rounds);
  s.lambda = j.value("lambda", s.lambda);
  s.epochs = j.value("epochs", s.epochs);
  s.var_floor = j.value("var_floor", s.var_floor);
  s.seed = j.value("seed", s.seed);
  return s;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::vector<double> Classifier::predict_proba(std::span<const double> x) const {
  std::vector<double> out(num_classes());
  predict_proba(x, out);
  return out;
}

std::size_t Classifier::predict(std::span<const double> x) const {
  const auto p = predict_proba(x);
  return static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
}

void ConstantClassifier::predict_proba(std::span<const double> x, std::span<double> out) const {
  check_width(x, n_features_, "constant classifier");
  std::fill(out.begin(), out.end(), 0.0);
  out[cls_] = 1.0;
}

nlohmann::json ConstantClassifier::to_json() const {
  return {{"kind", "constant"}, {"n_classes", n_classes_}, {"n_features", n_features_}, {"class", cls_}};
}

// ---- AdaBoost ---------------------------------------------------------------

AdaBoost AdaBoost::fit(const Matrix& X, std::span<const int> y, const LearnerSpec& spec) {
  check_xy(X, y, 2, "adaboost");
  const std::size_t n = X.rows();
  const std::size_t p = X.cols();
  AdaBoost model;
  model.n_features_ = p;
  model.prior_positive_ =
      static_cast<double>(std::count(y.begin(), y.end(), 1)) / static_cast<double>(n);

  std::vector<std::vector<std::size_t>> order(p);
  for (std::size_t f = 0; f < p; ++f) {
    order[f].resize(n);
    std::iota(order[f].begin(), order[f].end(), 0);
    std::stable_sort(order[f].begin(), order[f].end(),
                     [&](std::size_t a, std::size_t b) { return X.at(a, f) < X.at(b, f); });
  }

  std::vector<double> w(n, 1.0 / static_cast<double>(n));
  for (std::size_t round = 0; round < spec.n_rounds; ++round) {
    double total_pos = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (y[i] == 1) total_pos += w[i];
    }
    bool found = false;
    Stump best;
    double best_err = std::numeric_limits<double>::infinity();
    for (std::size_t f = 0; f < p; ++f) {
      // err_plus = positives at or below the threshold + negatives above it.
      double pos_below = 0.0;
      double neg_below = 0.0;
      const double total_neg = 1.0 - total_pos;
      for (std::size_t k = 0; k + 1 < n; ++k) {
        const std::size_t i = order[f][k];
        (y[i] == 1 ? pos_below : neg_below) += w[i];
        const double a = X.at(i, f);
        const double b = X.at(order[f][k + 1], f);
        if (!(a < b)) continue;
        double thr = a + (b - a) / 2.0;
        if (!(thr < b)) thr = a;
        const double err_plus = pos_below + (total_neg - neg_below);
        const double err_minus = 1.0 - err_plus;
        if (err_plus < best_err) {
          best_err = err_plus;
          best = Stump{f, thr, 1, 0.0};
          found = true;
        }
        if (err_minus < best_err) {
          best_err = err_minus;
          best = Stump{f, thr, -1, 0.0};
          found = true;
        }
      }
    }
    if (!found || best_err >= 0.5) break;
    const double eps = std::max(best_err, 1e-10);
    best.alpha = 0.5 * std::log((1.0 - eps) / eps);
    model.stumps_.push_back(best);
    model.errors_.push_back(best_err);
    if (best_err <= 0.0) break;

    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double h = (X.at(i, best.feature) > best.threshold ? 1.0 : -1.0) * best.polarity;
      const double yi = y[i] == 1 ? 1.0 : -1.0;
      w[i] *= std::exp(-best.alpha * yi * h);
      z += w[i];
    }
    for (auto& v : w) v /= z;
  }
  return model;
}

double AdaBoost::margin(std::span<const double> x) const {
  double m = 0.0;
  for (const auto& s : stumps_) m += s.alpha * s.polarity * (x[s.feature] > s.threshold ? 1.0 : -1.0);
  return m;
}

void AdaBoost::predict_proba(std::span<const double> x, std::span<double> out) const {
  check_width(x, n_features_, "adaboost");
  const double pos = stumps_.empty() ? prior_positive_ : sigmoid(margin(x));
  out[0] = 1.0 - pos;
  out[1] = pos;
}

nlohmann::json AdaBoost::to_json() const {
  nlohmann::json j;
  j["kind"] = "adaboost";
  j["n_features"] = n_features_;
  j["prior_positive"] = prior_positive_;
  j["round_errors"] = errors_;
  auto arr = nlohmann::json::array();
  for (const auto& s : stumps_) arr.push_back({s.feature, s.threshold, s.polarity, s.alpha});
  j["stumps"] = std::move(arr);
  return j;
}

AdaBoost AdaBoost::from_json(const nlohmann::json& j) {
  AdaBoost m;
  m.n_features_ = j.at("n_features").get<std::size_t>();
  m.prior_positive_ = j.at("prior_positive").get<double>();
  m.errors_ = j.at("round_errors").get<std::vector<double>>();
  for (const auto& s : j.at("stumps")) {
    Stump st{s.at(0).get<std::size_t>(), s.at(1).get<double>(), s.at(2).get<int>(), s.at(3).get<double>()};
    if (st.feature >= m.n_features_) throw MlError("adaboost: stump feature out of range");
    m.stumps_.push_back(st);
  }
  return m;
}

// ---- Linear SVM ------------------------------------------------------------

LinearSvm LinearSvm::fit(const Matrix& X, std::span<const int> y, const LearnerSpec& spec) {
  check_xy(X, y, 2, "linear svm");
  if (!(spec.lambda > 0.0)) throw MlError("linear svm: lambda must be positive");
  const std::size_t n = X.rows();
  const std::size_t p = X.cols();
  LinearSvm m;
  m.mean_.assign(p, 0.0);
  m.scale_.assign(p, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t f = 0; f < p; ++f) m.mean_[f] += X.at(i, f);
  }
  for (auto& v : m.mean_) v /= static_cast<double>(n);
  std::vector<double> var(p, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t f = 0; f < p; ++f) {
      const double d = X.at(i, f) - m.mean_[f];
      var[f] += d * d;
    }
  }
  for (std::size_t f = 0; f < p; ++f) {
    const double sd = std::sqrt(var[f] / static_cast<double>(n));
    m.scale_[f] = sd > 1e-12 ? sd : 1.0;
  }

  m.w_.assign(p + 1, 0.0);
  std::vector<double> xs(p + 1, 1.0);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(spec.seed);
  const double radius = 1.0 / std::sqrt(spec.lambda);
  std::size_t t = 0;
  for (std::size_t epoch = 0; epoch < spec.epochs; ++epoch) {
    for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[uniform_index(rng, i)]);
    for (std::size_t i : idx) {
      ++t;
      for (std::size_t f = 0; f < p; ++f) xs[f] = (X.at(i, f) - m.mean_[f]) / m.scale_[f];
      const double yi = y[i] == 1 ? 1.0 : -1.0;
      double dot = 0.0;
      for (std::size_t f = 0; f <= p; ++f) dot += m.w_[f] * xs[f];
      const double eta = 1.0 / (spec.lambda * static_cast<double>(t));
      const double shrink = 1.0 - eta * spec.lambda;
      for (auto& v : m.w_) v *= shrink;
      if (yi * dot < 1.0) {
        for (std::size_t f = 0; f <= p; ++f) m.w_[f] += eta * yi * xs[f];
      }
      double norm = 0.0;
      for (double v : m.w_) norm += v * v;
      norm = std::sqrt(norm);
      if (norm > radius) {
        for (auto& v : m.w_) v *= radius / norm;
      }
    }
  }
  return m;
}

double LinearSvm::margin(std::span<const double> x) const {
  double m = w_.back();
  for (std::size_t f = 0; f < mean_.size(); ++f) m += w_[f] * (x[f] - mean_[f]) / scale_[f];
  return m;
}

void LinearSvm::predict_proba(std::span<const double> x, std::span<double> out) const {
  check_width(x, mean_.size(), "linear svm");
  const double pos = sigmoid(margin(x));
  out[0] = 1.0 - pos;
  out[1] = pos;
}

nlohmann::json LinearSvm::to_json() const {
  return {{"kind", "linear_svm"}, {"mean", mean_}, {"scale", scale_}, {"w", w_}};
}

LinearSvm LinearSvm::from_json(const nlohmann::json& j) {
  LinearSvm m;
  m.mean_ = j.at("mean").get<std::vector<double>>();
  m.scale_ = j.at("scale").get<std::vector<double>>();
  m.w_ = j.at("w").get<std::vector<double>>();
  if (m.scale_.size() != m.mean_.size() || m.w_.size() != m.mean_.size() + 1) {
    throw MlError("linear svm: inconsistent parameter sizes");
  }
  return m;
}

// ---- Gaussian naive Bayes --------------------------------------------------

GaussianNb GaussianNb::fit(const Matrix& X, std::span<const int> y, std::size_t n_classes, double var_floor) {
  check_xy(X, y, n_classes, "naive bayes");
  const std::size_t p = X.cols();
  GaussianNb m;
  m.n_features_ = p;
  m.prior_.assign(n_classes, 0.0);
  m.mean_.assign(n_classes * p, 0.0);
  m.var_.assign(n_classes * p, 0.0);
  for (std::size_t i = 0; i < X.rows(); ++i) {
    const auto c = static_cast<std::size_t>(y[i]);
    m.prior_[c] += 1.0;
    for (std::size_t f = 0; f < p; ++f) m.mean_[c * p + f] += X.at(i, f);
  }
  for (std::size_t c = 0; c < n_classes; ++c) {
    if (m.prior_[c] == 0.0) continue;
    for (std::size_t f = 0; f < p; ++f) m.mean_[c * p + f] /= m.prior_[c];
  }
  for (std::size_t i = 0; i < X.rows(); ++i) {
    const auto c = static_cast<std::size_t>(y[i]);
    for (std::size_t f = 0; f < p; ++f) {
      const double d = X.at(i, f) - m.mean_[c * p + f];
      m.var_[c * p + f] += d * d;
    }
  }
  for (std::size_t c = 0; c < n_classes; ++c) {
    for (std::size_t f = 0; f < p; ++f) {
      auto& v = m.var_[c * p + f];
      v = std::max(m.prior_[c] > 0.0 ? v / m.prior_[c] : 0.0, var_floor);
    }
  }
  for (auto& v : m.prior_) v /= static_cast<double>(X.rows());
  return m;
}

void GaussianNb::predict_proba(std::span<const double> x, std::span<double> out) const {
  check_width(x, n_features_, "naive bayes");
  const std::size_t k = prior_.size();
  const std::size_t p = n_features_;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < k; ++c) {
    if (prior_[c] <= 0.0) {
      out[c] = -std::numeric_limits<double>::infinity();
      continue;
    }
    double lp = std::log(prior_[c]);
    for (std::size_t f = 0; f < p; ++f) {
      const double v = var_[c * p + f];
      const double d = x[f] - mean_[c * p + f];
      lp -= 0.5 * (std::log(2.0 * M_PI * v) + d * d / v);
    }
    out[c] = lp;
    best = std::max(best, lp);
  }
  double z = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    out[c] = std::isinf(out[c]) ? 0.0 : std::exp(out[c] - best);
    z += out[c];
  }
  for (std::size_t c = 0; c < k; ++c) out[c] /= z;
}

nlohmann::json GaussianNb::to_json() const {
  return {{"kind", "gaussian_nb"}, {"n_features", n_features_}, {"prior", prior_}, {"mean", mean_}, {"var", var_}};
}

GaussianNb GaussianNb::from_json(const nlohmann::json& j) {
  GaussianNb m;
  m.n_features_ = j.at("n_features").get<std::size_t>();
  m.prior_ = j.at("prior").get<std::vector<double>>();
  m.mean_ = j.at("mean").get<std::vector<double>>();
  m.var_ = j.at("var").get<std::vector<double>>();
  const std::size_t want = m.prior_.size() * m.n_features_;
  if (m.mean_.size() != want || m.var_.size() != want) throw MlError("naive bayes: inconsistent parameter sizes");
  return m;
}

// ---- One-vs-rest -----------------------------------------------------------

OneVsRest OneVsRest::fit(const Matrix& X, std::span<const int> y, std::size_t n_classes, const LearnerSpec& spec) {
  check_xy(X, y, n_classes, "one-vs-rest");
  OneVsRest m;
  m.n_features_ = X.cols();
  std::vector<int> yb(y.size());
  for (std::size_t c = 0; c < n_classes; ++c) {
    for (std::size_t i = 0; i < y.size(); ++i) yb[i] = static_cast<std::size_t>(y[i]) == c ? 1 : 0;
    LearnerSpec s = spec;
    s.seed = derive_seed(spec.seed, c);
    m.models_.push_back(train_classifier(s, X, yb, 2));
  }
  return m;
}

void OneVsRest::predict_proba(std::span<const double> x, std::span<double> out) const {
  check_width(x, n_features_, "one-vs-rest");
  double z = 0.0;
  std::array<double, 2> buf{};
  for (std::size_t c = 0; c < models_.size(); ++c) {
    models_[c]->predict_proba(x, buf);
    out[c] = buf[1];
    z += buf[1];
  }
  for (std::size_t c = 0; c < models_.size(); ++c) {
    out[c] = z > 0.0 ? out[c] / z : 1.0 / static_cast<double>(models_.size());
  }
}

nlohmann::json OneVsRest::to_json() const {
  nlohmann::json j;
  j["kind"] = "one_vs_rest";
  j["n_features"] = n_features_;
  auto arr = nlohmann::json::array();
  for (const auto& m : models_) arr.push_back(m->to_json());
  j["models"] = std::move(arr);
  return j;
}

OneVsRest OneVsRest::from_json(const nlohmann::json& j) {
  OneVsRest m;
  m.n_features_ = j.at("n_features").get<std::size_t>();
  for (const auto& sub : j.at("models")) m.models_.push_back(classifier_from_json(sub));
  return m;
}

// ---- dispatch --------------------------------------------------------------

std::unique_ptr<Classifier> train_classifier(const LearnerSpec& spec, const Matrix& X, std::span<const int> y,
                                             std::size_t n_classes) {
  if (n_classes < 2) throw MlError("classifier needs at least two classes");
  check_xy(X, y, n_classes, learner_name(spec.kind).data());
  if (std::all_of(y.begin(), y.end(), [&](int c) { return c == y.front(); })) {
    return std::make_unique<ConstantClassifier>(n_classes, X.cols(), static_cast<std::size_t>(y.front()));
  }
  const bool binary_only = spec.kind == LearnerKind::adaboost || spec.kind == LearnerKind::linear_svm;
  if (binary_only && n_classes > 2) return std::make_unique<OneVsRest>(OneVsRest::fit(X, y, n_classes, spec));
  switch (spec.kind) {
    case LearnerKind::decision_tree:
      return std::make_unique<DecisionTree>(DecisionTree::fit(
          X, y, n_classes, {}, spec.max_depth, spec.min_samples_split,
          static_cast<std::size_t>(std::max(spec.max_features, 0)), spec.seed));
    case LearnerKind::random_forest:
      return std::make_unique<RandomForest>(RandomForest::fit(X, y, n_classes, spec));
    case LearnerKind::adaboost:
      return std::make_unique<AdaBoost>(AdaBoost::fit(X, y, spec));
    case LearnerKind::linear_svm:
      return std::make_unique<LinearSvm>(LinearSvm::fit(X, y, spec));
    case LearnerKind::gaussian_nb:
      return std::make_unique<GaussianNb>(GaussianNb::fit(X, y, n_classes, spec.var_floor));
  }
  throw MlError("unknown learner");
}

std::unique_ptr<Classifier> classifier_from_json(const nlohmann::json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "constant") {
    return std::make_unique<ConstantClassifier>(j.at("n_classes").get<std::size_t>(),
                                                j.at("n_features").get<std::size_t>(),
                                                j.at("class").get<std::size_t>());
  }
  if (kind == "decision_tree") return std::make_unique<DecisionTree>(DecisionTree::from_json(j));
  if (kind == "random_forest") return std::make_unique<RandomForest>(RandomForest::from_json(j));
  if (kind == "adaboost") return std::make_unique<AdaBoost>(AdaBoost::from_json(j));
  if (kind == "linear_svm") return std::make_unique<LinearSvm>(LinearSvm::from_json(j));
  if (kind == "gaussian_nb") return std::make_unique<GaussianNb>(GaussianNb::from_json(j));
  if (kind == "one_vs_rest") return std::make_unique<OneVsRest>(OneVsRest::from_json(j));
  throw MlError("unknown classifier kind '" + kind + "'");
}

}  // namespace intent::ml
