#include <algorithm>
#include <cmath>
#include <map>

#include "intent/mlcore.hpp"

namespace intent::ml {

namespace {

constexpr int kFormatVersion = 1;

void check_version(const nlohmann::json& j, std::string_view format) {
  if (j.value("format", "") != format) throw MlError("not a " + std::string(format) + " document");
  if (j.value("version", 0) != kFormatVersion) {
    throw MlError(std::string(format) + ": unsupported version " + std::to_string(j.value("version", 0)));
  }
}

void check_labels(const Matrix& X, const LabelMatrix& Y) {
  if (X.rows() == 0) throw MlError("multi-label training needs at least one row");
  if (X.rows() != Y.size()) throw MlError("multi-label training: X and Y differ in length");
}

}  // namespace

LabelSet non_empty_or_best(LabelSet s, std::span<const double> confidence) {
  if (!s.empty()) return s;
  const auto best = static_cast<std::size_t>(std::max_element(confidence.begin(), confidence.end()) -
                                             confidence.begin());
  return LabelSet::from_bits(static_cast<std::uint16_t>(1U << best));
}

// ---- classifier chain ------------------------------------------------------

ChainModel::Order ChainModel::identity_order() {
  Order o{};
  for (std::size_t i = 0; i < kNumIntents; ++i) o[i] = i;
  return o;
}

ChainModel ChainModel::train(const LearnerSpec& spec, const Matrix& X, const LabelMatrix& Y, const Order& order,
                             bool chained) {
  check_labels(X, Y);
  {
    auto sorted = order;
    std::sort(sorted.begin(), sorted.end());
    if (sorted != identity_order()) throw MlError("chain order must be a permutation of the 12 labels");
  }
  const std::size_t p = X.cols();
  const std::size_t n = X.rows();
  ChainModel m;
  m.spec_ = spec;
  m.order_ = order;
  m.chained_ = chained;
  m.n_features_ = p;

  Matrix augmented(n, p + kNumIntents);
  for (std::size_t r = 0; r < n; ++r) {
    std::copy(X.row(r).begin(), X.row(r).end(), augmented.row(r).begin());
    for (std::size_t i = 0; i < kNumIntents; ++i) augmented.at(r, p + i) = Y[r][order[i]];
  }
  std::vector<std::size_t> cols(p);
  for (std::size_t c = 0; c < p; ++c) cols[c] = c;
  std::vector<int> y(n);
  for (std::size_t i = 0; i < kNumIntents; ++i) {
    const std::size_t label = order[i];
    for (std::size_t r = 0; r < n; ++r) y[r] = Y[r][label];
    LearnerSpec s = spec;
    s.seed = derive_seed(spec.seed, label);
    const Matrix Xi = chained ? augmented.select_columns(cols) : X;
    m.models_.push_back(train_classifier(s, Xi, y, 2));
    if (chained) cols.push_back(p + i);
  }
  return m;
}

LabelPrediction ChainModel::predict(std::span<const double> x) const {
  if (x.size() != n_features_) throw MlError("chain: wrong feature count");
  LabelPrediction out;
  std::vector<double> input(x.begin(), x.end());
  std::array<double, 2> proba{};
  for (std::size_t i = 0; i < kNumIntents; ++i) {
    models_[i]->predict_proba(input, proba);
    const std::size_t label = order_[i];
    out.confidence[label] = proba[1];
    const bool on = proba[1] > proba[0];
    if (on) out.labels.insert(static_cast<IntentCode>(label));
    if (chained_) input.push_back(on ? 1.0 : 0.0);
  }
  out.labels = non_empty_or_best(out.labels, out.confidence);
  return out;
}

nlohmann::json ChainModel::to_json() const {
  nlohmann::json j;
  j["format"] = "chain-model";
  j["version"] = kFormatVersion;
  j["spec"] = spec_.to_json();
  j["order"] = order_;
  j["chained"] = chained_;
  j["n_features"] = n_features_;
  auto arr = nlohmann::json::array();
  for (const auto& m : models_) arr.push_back(m->to_json());
  j["models"] = std::move(arr);
  return j;
}

ChainModel ChainModel::from_json(const nlohmann::json& j) {
  check_version(j, "chain-model");
  ChainModel m;
  m.spec_ = LearnerSpec::from_json(j.at("spec"));
  m.order_ = j.at("order").get<Order>();
  m.chained_ = j.at("chained").get<bool>();
  m.n_features_ = j.at("n_features").get<std::size_t>();
  for (const auto& sub : j.at("models")) m.models_.push_back(classifier_from_json(sub));
  if (m.models_.size() != kNumIntents) throw MlError("chain-model: expected 12 models");
  for (std::size_t i = 0; i < kNumIntents; ++i) {
    const std::size_t want = m.n_features_ + (m.chained_ ? i : 0);
    if (m.models_[i]->num_features() != want || m.models_[i]->num_classes() != 2) {
      throw MlError("chain-model: model " + std::to_string(i) + " has the wrong shape");
    }
  }
  return m;
}

ChainModel chain_train(const LearnerSpec& spec, const Matrix& X, const LabelMatrix& Y,
                       const ChainModel::Order& order) {
  return ChainModel::train(spec, X, Y, order, true);
}

ChainModel binary_relevance_train(const LearnerSpec& spec, const Matrix& X, const LabelMatrix& Y) {
  return ChainModel::train(spec, X, Y, ChainModel::identity_order(), false);
}

// ---- label powerset --------------------------------------------------------

PowersetModel PowersetModel::train(const LearnerSpec& spec, const Matrix& X, std::span<const LabelSet> labelsets) {
  if (X.rows() == 0) throw MlError("powerset: no training rows");
  if (X.rows() != labelsets.size()) throw MlError("powerset: X and labels differ in length");
  std::map<std::uint16_t, int> index;
  for (auto s : labelsets) {
    if (s.empty()) throw MlError("powerset: empty label set in training data");
    index.emplace(s.bits(), 0);
  }
  PowersetModel m;
  m.spec_ = spec;
  for (auto& [bits, id] : index) {
    id = static_cast<int>(m.classes_.size());
    m.classes_.push_back(LabelSet::from_bits(bits));
  }
  std::vector<int> y;
  y.reserve(labelsets.size());
  for (auto s : labelsets) y.push_back(index.at(s.bits()));
  // A single combination still needs two classes for the learner interface.
  const std::size_t k = std::max<std::size_t>(m.classes_.size(), 2);
  m.model_ = train_classifier(spec, X, y, k);
  return m;
}

LabelPrediction PowersetModel::predict(std::span<const double> x) const {
  const auto proba = model_->predict_proba(x);
  LabelPrediction out;
  std::size_t best = 0;
  for (std::size_t c = 0; c < classes_.size(); ++c) {
    if (proba[c] > proba[best]) best = c;
    for (std::size_t l = 0; l < kNumIntents; ++l) {
      if (classes_[c].contains(l)) out.confidence[l] += proba[c];
    }
  }
  out.labels = classes_[best];
  return out;
}

nlohmann::json PowersetModel::to_json() const {
  nlohmann::json j;
  j["format"] = "powerset-model";
  j["version"] = kFormatVersion;
  j["spec"] = spec_.to_json();
  std::vector<std::uint16_t> bits;
  for (auto s : classes_) bits.push_back(s.bits());
  j["classes"] = bits;
  j["model"] = model_->to_json();
  return j;
}

PowersetModel PowersetModel::from_json(const nlohmann::json& j) {
  check_version(j, "powerset-model");
  PowersetModel m;
  m.spec_ = LearnerSpec::from_json(j.at("spec"));
  for (auto b : j.at("classes").get<std::vector<std::uint16_t>>()) {
    const auto s = LabelSet::from_bits(b);
    if (s.empty() || s.bits() != b) throw MlError("powerset-model: invalid class label set");
    m.classes_.push_back(s);
  }
  if (m.classes_.empty()) throw MlError("powerset-model: no classes");
  m.model_ = classifier_from_json(j.at("model"));
  if (m.model_->num_classes() < m.classes_.size()) throw MlError("powerset-model: class count mismatch");
  return m;
}

std::vector<double> feature_importance(const PowersetModel& model) {
  const auto* forest = dynamic_cast<const RandomForest*>(&model.classifier());
  if (forest == nullptr) throw MlError("feature importance needs a random forest model");
  auto imp = forest->feature_importances();
  const double top = *std::max_element(imp.begin(), imp.end());
  for (auto& v : imp) v = top > 0.0 ? v / top : 0.0;
  return imp;
}

// ---- ML-kNN ----------------------------------------------------------------

std::vector<std::size_t> MlKnnModel::neighbors(std::span<const double> x, std::optional<std::size_t> skip) const {
  if (x.size() != X_.cols()) throw MlError("ml-knn: wrong feature count");
  std::vector<std::pair<double, std::size_t>> d;
  d.reserve(X_.rows());
  for (std::size_t r = 0; r < X_.rows(); ++r) {
    if (skip && *skip == r) continue;
    const auto row = X_.row(r);
    double s = 0.0;
    for (std::size_t c = 0; c < row.size(); ++c) {
      const double t = row[c] - x[c];
      s += t * t;
    }
    d.emplace_back(s, r);
  }
  const std::size_t k = std::min(k_, d.size());
  std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
  std::vector<std::size_t> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back(d[i].second);
  return out;
}

MlKnnModel MlKnnModel::train(const Matrix& X, const LabelMatrix& Y, std::size_t k, double s) {
  check_labels(X, Y);
  if (k == 0) throw MlError("ml-knn: k must be positive");
  if (k >= X.rows()) throw MlError("ml-knn: k must be smaller than the number of training rows");
  if (!(s > 0.0)) throw MlError("ml-knn: smoothing must be positive");
  MlKnnModel m;
  m.X_ = X;
  m.Y_ = Y;
  m.k_ = k;
  m.s_ = s;
  const double n = static_cast<double>(X.rows());
  for (std::size_t l = 0; l < kNumIntents; ++l) {
    double c = 0.0;
    for (const auto& y : Y) c += y[l];
    m.prior_[l] = (s + c) / (2.0 * s + n);
  }
  m.counts_.assign(kNumIntents * 2 * (k + 1), 0.0);
  for (std::size_t r = 0; r < X.rows(); ++r) {
    const auto nb = m.neighbors(X.row(r), r);
    for (std::size_t l = 0; l < kNumIntents; ++l) {
      std::size_t c = 0;
      for (auto i : nb) c += Y[i][l];
      m.counts_[(l * 2 + Y[r][l]) * (k + 1) + c] += 1.0;
    }
  }
  return m;
}

double MlKnnModel::count(std::size_t label, int has_label, std::size_t j) const {
  return counts_[(label * 2 + static_cast<std::size_t>(has_label)) * (k_ + 1) + j];
}

LabelPrediction MlKnnModel::predict(std::span<const double> x) const {
  const auto nb = neighbors(x);
  LabelPrediction out;
  for (std::size_t l = 0; l < kNumIntents; ++l) {
    std::size_t c = 0;
    for (auto i : nb) c += Y_[i][l];
    double sum1 = 0.0;
    double sum0 = 0.0;
    for (std::size_t j = 0; j <= k_; ++j) {
      sum1 += count(l, 1, j);
      sum0 += count(l, 0, j);
    }
    const double kk = static_cast<double>(k_ + 1);
    const double p1 = prior_[l] * (s_ + count(l, 1, c)) / (s_ * kk + sum1);
    const double p0 = (1.0 - prior_[l]) * (s_ + count(l, 0, c)) / (s_ * kk + sum0);
    out.confidence[l] = p1 / (p1 + p0);
    if (p1 >= p0) out.labels.insert(static_cast<IntentCode>(l));
  }
  out.labels = non_empty_or_best(out.labels, out.confidence);
  return out;
}

nlohmann::json MlKnnModel::to_json() const {
  nlohmann::json j;
  j["format"] = "mlknn-model";
  j["version"] = kFormatVersion;
  j["k"] = k_;
  j["s"] = s_;
  j["n_features"] = X_.cols();
  std::vector<double> flat;
  flat.reserve(X_.rows() * X_.cols());
  for (std::size_t r = 0; r < X_.rows(); ++r) flat.insert(flat.end(), X_.row(r).begin(), X_.row(r).end());
  j["x"] = flat;
  std::vector<std::uint16_t> bits;
  for (const auto& y : Y_) {
    std::uint16_t b = 0;
    for (std::size_t l = 0; l < kNumIntents; ++l) b = static_cast<std::uint16_t>(b | (y[l] << l));
    bits.push_back(b);
  }
  j["y"] = bits;
  j["prior"] = prior_;
  j["counts"] = counts_;
  return j;
}

MlKnnModel MlKnnModel::from_json(const nlohmann::json& j) {
  check_version(j, "mlknn-model");
  MlKnnModel m;
  m.k_ = j.at("k").get<std::size_t>();
  m.s_ = j.at("s").get<double>();
  const auto p = j.at("n_features").get<std::size_t>();
  const auto flat = j.at("x").get<std::vector<double>>();
  const auto bits = j.at("y").get<std::vector<std::uint16_t>>();
  if (p == 0 || flat.size() != bits.size() * p) throw MlError("mlknn-model: inconsistent training data");
  for (std::size_t r = 0; r < bits.size(); ++r) {
    m.X_.append_row(std::span<const double>(flat.data() + r * p, p));
    BinaryLabels y{};
    for (std::size_t l = 0; l < kNumIntents; ++l) y[l] = static_cast<std::uint8_t>((bits[r] >> l) & 1U);
    m.Y_.push_back(y);
  }
  m.prior_ = j.at("prior").get<std::array<double, kNumIntents>>();
  m.counts_ = j.at("counts").get<std::vector<double>>();
  if (m.counts_.size() != kNumIntents * 2 * (m.k_ + 1)) throw MlError("mlknn-model: bad count table");
  return m;
}

}  // namespace intent::ml
