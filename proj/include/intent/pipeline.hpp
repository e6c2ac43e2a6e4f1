#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "intent/corpus.hpp"
#include "intent/eval.hpp"
#include "intent/features.hpp"
#include "intent/labels.hpp"
#include "intent/mlcore.hpp"
#include "intent/neuralnet.hpp"

namespace intent {

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Flat key=value run configuration. Every key has a default; unknown keys
/// are rejected.
class RunConfig {
 public:
  RunConfig();
  /// Reads "key = value" lines; '#' starts a comment.
  static RunConfig load(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value);
  /// "key=value".
  void apply_override(const std::string& assignment);

  const std::string& get(const std::string& key) const;
  double number(const std::string& key) const;
  std::size_t count(const std::string& key) const;
  std::uint64_t seed() const;
  bool flag(const std::string& key) const;
  const std::map<std::string, std::string>& values() const { return values_; }

  /// Hash of the resolved key=value pairs.
  std::string fingerprint() const;
  /// Resolved config as sorted key=value lines under a version comment.
  std::string dump() const;

 private:
  std::map<std::string, std::string> values_;
};

/// Directory holding the bundled lexicons: $INTENT_LEXICONS, else the data
/// directory compiled into the library.
std::filesystem::path default_lexicon_dir();
/// $INTENT_DATA_ROOT if set.
std::optional<std::filesystem::path> data_root();

// ---- label preparation ----------------------------------------------------------

struct LabelPrepStats {
  std::size_t utterances = 0;
  std::size_t raw_distinct = 0;
  std::size_t stripped_distinct = 0;
  std::size_t kept = 0;
  double coverage = 0.0;
};

struct PreparedLabels {
  Corpus corpus;  // raw_tags replaced by the final label set
  TruncationPlan plan;
  LabelPrepStats stats;
};

/// Parse → strip GG/JK/O → truncate to the plan's combinations (rare ones
/// become a uniformly drawn singleton). A frozen plan is applied as is;
/// otherwise one is built from this corpus.
PreparedLabels prepare_labels(const Corpus& raw, const TruncationPolicy& policy, std::uint64_t seed,
                              const TruncationPlan* frozen = nullptr);

/// Final label set of a prepared utterance (throws on an empty set).
LabelSet gold_labels(const Utterance& u);

/// A prepared data directory: all/train/val/test.jsonl, plan.json, prep.json.
struct PreparedData {
  std::filesystem::path dir;
  TruncationPlan plan;
  nlohmann::json info;
  Corpus load_split(const std::string& split) const;
  std::string plan_fingerprint() const { return plan.fingerprint(); }
};

PreparedData open_prepared(const std::filesystem::path& dir);

// ---- models -----------------------------------------------------------------------

enum class ModelKind {
  tree_chain, rf_chain, ada_chain, svm_chain, nb_chain, rf_br, rf_lp, mlknn,
  cnn, cnn_mfs, cnn_context, cnn_context_rep, cnn_feature
};

std::string_view model_kind_name(ModelKind k);
std::optional<ModelKind> model_kind_from_name(std::string_view name);
bool is_neural(ModelKind k);
std::vector<ModelKind> all_model_kinds();

/// Feature columns selected by the config's "features" key.
std::vector<std::size_t> feature_columns(const RunConfig& cfg);
ml::LearnerSpec learner_spec(const RunConfig& cfg, ModelKind kind);
nn::NetConfig net_config(const RunConfig& cfg, ModelKind kind);
nn::TrainConfig train_config(const RunConfig& cfg);

using ModelVariant = std::variant<std::monostate, ml::ChainModel, ml::PowersetModel, ml::MlKnnModel, nn::NeuralModel>;

struct Prediction {
  std::string id;
  LabelSet labels;
  std::array<double, kNumIntents> confidence{};
};

class TrainedModel {
 public:
  ModelKind kind = ModelKind::rf_chain;
  RunConfig config;
  std::string plan_fingerprint;
  TfIdfModel tfidf;
  std::vector<std::size_t> columns;
  ModelVariant model;
  nlohmann::json history = nlohmann::json::object();

  /// One prediction per utterance in corpus order; never empty.
  std::vector<Prediction> predict(const Corpus& corpus, const Lexicons& lex, std::ostream* warn = nullptr) const;

  void save(const std::filesystem::path& dir) const;
  static TrainedModel load(const std::filesystem::path& dir);
};

/// Trains the model named by cfg["model"]. The TF-IDF model is fit on train.
TrainedModel train_model(const RunConfig& cfg, const Corpus& train, const Corpus& val,
                         const std::string& plan_fingerprint, const Lexicons& lex, std::ostream* log = nullptr);

struct Evaluation {
  eval::EvalReport report;
  std::vector<eval::PredictionRecord> records;
};

/// Predicts a prepared split and scores it. Throws eval::EvalError when the
/// split was prepared with a different truncation plan than the model.
Evaluation evaluate(const TrainedModel& model, const Corpus& split, const std::string& split_plan_fingerprint,
                    const std::string& split_name, const Lexicons& lex);

/// evaluate() on a corpus from another source; the split must have been
/// prepared with the model's frozen plan.
Evaluation cross_evaluate(const TrainedModel& model, const Corpus& split, const std::string& split_plan_fingerprint,
                          const std::string& split_name, const Lexicons& lex);

struct ImportanceRow {
  std::size_t feature;
  double score;
};

/// Label-powerset random forest over all 24 features; rows sorted by score
/// (descending, ties by feature index).
std::vector<ImportanceRow> importance_ranking(const RunConfig& cfg, const Corpus& train, const Lexicons& lex);

}  // namespace intent
