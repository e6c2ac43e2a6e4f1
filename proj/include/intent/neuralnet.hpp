#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "intent/corpus.hpp"
#include "intent/features.hpp"
#include "intent/labels.hpp"

namespace intent::nn {

class NeuralError : public Error {
 public:
  using Error::Error;
};

template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// ---- vocabulary and embeddings ----------------------------------------------

/// Token index: 0 is padding, 1 is the unknown token.
class Vocabulary {
 public:
  static constexpr std::int32_t kPad = 0;
  static constexpr std::int32_t kUnk = 1;
  static constexpr std::string_view kPadToken = "<pad>";
  static constexpr std::string_view kUnkToken = "<unk>";

  Vocabulary();
  /// Tokens seen at least min_count times, by descending count then text.
  static Vocabulary build(std::span<const TokenList> docs, std::size_t min_count = 1);
  static Vocabulary from_tokens(std::span<const std::string> tokens);  // tokens after pad/unk

  std::size_t size() const { return tokens_.size(); }
  std::int32_t index(std::string_view token) const;
  const std::string& token(std::size_t i) const { return tokens_.at(i); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  /// Index sequence, truncated to max_len (0 = no limit).
  std::vector<std::int32_t> encode(const TokenList& tokens, std::size_t max_len = 0) const;
  std::string fingerprint() const;

 private:
  void add(std::string token);
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::int32_t> index_;
};

struct EmbeddingMatrix {
  Vocabulary vocab;
  Mat<float> vectors;  // vocab.size() x dim; row 0 is zero
  bool trainable = true;

  std::size_t dim() const { return static_cast<std::size_t>(vectors.cols()); }
};

struct CbowConfig {
  std::size_t dim = 100;
  std::size_t window = 5;
  std::size_t negatives = 5;
  std::size_t epochs = 5;
  double lr = 0.025;
  std::size_t min_count = 1;
  std::uint64_t seed = 0;
};

struct CbowResult {
  EmbeddingMatrix embeddings;
  std::vector<double> epoch_loss;  // mean logistic loss per target
};

/// CBOW with negative sampling over tokenized documents (stopwords kept).
CbowResult train_cbow(std::span<const TokenList> docs, const CbowConfig& cfg);

/// word2vec text format; an optional "V d" header line is checked against the
/// body. The unknown row is the mean of the loaded vectors unless the file
/// carries an explicit <unk> entry.
EmbeddingMatrix load_embeddings(const std::filesystem::path& path);
void save_embeddings(const EmbeddingMatrix& emb, const std::filesystem::path& path);

// ---- network ----------------------------------------------------------------

enum class Architecture { cnn, cnn_mfs, cnn_context, cnn_context_rep, cnn_feature, linear };

std::string_view architecture_name(Architecture a);
std::optional<Architecture> architecture_from_name(std::string_view name);

struct NetConfig {
  Architecture arch = Architecture::cnn;
  std::size_t embed_dim = 100;
  std::size_t filters = 1024;
  std::size_t filter_size = 3;
  std::size_t pool_size = 3;
  std::size_t conv_layers = 3;
  std::vector<std::size_t> mfs_sizes{3, 4, 5};
  double dropout = 0.6;
  std::size_t dense = 256;
  std::size_t max_len = 800;
  std::size_t context_filters = 128;
  std::size_t context_dense = 128;

  /// (1024, 0.6, 256, 800, 128, 128) with filter/pool (3, 3).
  static NetConfig paper(Architecture a);
  /// CPU budget profile: 256 filters, max length 400.
  static NetConfig desk(Architecture a);

  /// Sequence length fed to the current-utterance input.
  std::size_t input_length() const;
  void validate() const;
  nlohmann::json to_json() const;
  static NetConfig from_json(const nlohmann::json& j);
};

/// Token indices (unpadded) for one utterance and its neighbours, plus the
/// standardized feature vector for cnn_feature.
struct NetInput {
  std::vector<std::int32_t> cur, prev, next;
  std::vector<double> features;
};

struct Sample {
  NetInput input;
  BinaryLabels labels{};
};

template <class S>
struct Param {
  std::string name;
  Mat<S> value;
  Mat<S> grad;
};

/// Valid 1-D convolution of X (L x d) with W (f*d x F) and bias b (1 x F):
/// row i of the result is X[i..i+f-1] flattened times W plus b.
template <class S>
Mat<S> conv1d_valid(const Mat<S>& X, const Mat<S>& W, const Mat<S>& b, std::size_t f);

template <class S>
class Network {
 public:
  Network(const NetConfig& cfg, std::size_t vocab_size, std::uint64_t seed);

  const NetConfig& config() const { return cfg_; }
  std::size_t vocab_size() const { return vocab_size_; }
  std::vector<Param<S>>& params() { return params_; }
  const std::vector<Param<S>>& params() const { return params_; }
  Param<S>& param(std::string_view name);
  std::size_t parameter_count() const;
  bool embedding_trainable = true;

  /// Sigmoid confidences with dropout off.
  std::array<S, kNumIntents> forward(const NetInput& x) const;
  /// Summed binary cross-entropy over the 12 labels with dropout off.
  S loss(const NetInput& x, const BinaryLabels& y) const;
  /// Adds d(loss)/d(params) for one sample to the grad buffers and returns the
  /// loss (summed binary cross-entropy over the 12 labels). A non-null rng
  /// enables dropout.
  S accumulate(const NetInput& x, const BinaryLabels& y, std::mt19937_64* dropout_rng, S weight = S(1));
  void zero_grad();
  void zero_params();
  void set_embeddings(const Mat<float>& vectors);
  /// Copies every parameter whose name and shape match; returns the count.
  template <class T>
  std::size_t copy_params_from(const Network<T>& other);

 private:
  struct Block {
    std::size_t W = 0, b = 0, f = 1, pool = 1;
  };
  struct Tower {
    std::string prefix;
    int slot = 0;  // 0 current (or expanded), 1 previous, 2 next
    std::vector<Block> blocks;
    std::size_t filters = 0;
    std::optional<std::size_t> dW, db;  // context towers: dense after pooling
    std::size_t out_dim = 0;
  };
  struct Trace;

  std::size_t add_param(std::string name, std::size_t rows, std::size_t cols);
  void init_uniform(std::size_t p, double limit, std::mt19937_64& rng);
  Tower make_tower(const std::string& prefix, int slot, std::size_t filters, std::vector<std::size_t> sizes,
                   std::size_t pool, std::size_t ctx_dense, std::mt19937_64& rng);
  std::vector<std::int32_t> tower_tokens(const Tower& t, const NetInput& x) const;
  void run(const NetInput& x, Trace& tr, std::mt19937_64* rng) const;
  void backward(const NetInput& x, Trace& tr, const Mat<S>& dlogits);

  NetConfig cfg_;
  std::size_t vocab_size_;
  std::vector<Param<S>> params_;
  std::size_t emb_ = 0;
  std::vector<Tower> towers_;
  std::optional<std::size_t> w1_, b1_;
  std::size_t wo_ = 0, bo_ = 0;
};

extern template class Network<float>;
extern template class Network<double>;

// ---- optimizer ----------------------------------------------------------------

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-7;
  bool bias_correction = true;
};

template <class S>
class Adam {
 public:
  explicit Adam(const AdamConfig& cfg) : cfg_(cfg) {}
  void step(std::vector<Param<S>>& params);
  std::size_t steps() const { return t_; }

 private:
  AdamConfig cfg_;
  std::size_t t_ = 0;
  std::vector<Mat<S>> m_, v_;
};

extern template class Adam<float>;
extern template class Adam<double>;

// ---- thresholds -----------------------------------------------------------------

/// {l : conf_l > theta}; when empty, the arg-max label (ties to the lowest ordinal).
LabelSet predict_labels(std::span<const double> confidences, double theta);

/// Best theta on the grid 0.05, 0.10, ..., 0.95 by mean sample accuracy; ties
/// go to the smaller theta.
double tune_threshold(std::span<const std::array<double, kNumIntents>> confidences,
                      std::span<const LabelSet> gold);

// ---- model --------------------------------------------------------------------

/// Per-column standardization of the 24 utterance features.
struct FeatureScaler {
  std::vector<double> mean, scale;
  static FeatureScaler fit(std::span<const FeatureVector> rows);
  std::vector<double> apply(const FeatureVector& v) const;
  bool empty() const { return mean.empty(); }
};

class NeuralModel {
 public:
  NeuralModel(const NetConfig& cfg, Vocabulary vocab, std::uint64_t seed);
  NeuralModel(const NetConfig& cfg, const EmbeddingMatrix& emb, std::uint64_t seed);

  const NetConfig& config() const { return net_.config(); }
  const Vocabulary& vocab() const { return vocab_; }
  Network<float>& network() { return net_; }
  const Network<float>& network() const { return net_; }
  double threshold() const { return threshold_; }
  void set_threshold(double t) { threshold_ = t; }
  const FeatureScaler& scaler() const { return scaler_; }
  void set_scaler(FeatureScaler s) { scaler_ = std::move(s); }

  /// Inputs for dialog.utterances[index]; neighbours outside the dialog are
  /// empty (all padding). features must be non-null for cnn_feature.
  NetInput encode(const Dialog& dialog, std::size_t index, const FeatureVector* features) const;
  std::array<double, kNumIntents> confidences(const NetInput& x) const;
  LabelSet predict(const NetInput& x) const { return predict_labels(confidences(x), threshold_); }

  /// Free-form metadata stored in the checkpoint header (plan and TF-IDF
  /// fingerprints, training config).
  nlohmann::json meta = nlohmann::json::object();

  void save(const std::filesystem::path& path) const;
  static NeuralModel load(const std::filesystem::path& path);

 private:
  Vocabulary vocab_;
  Network<float> net_;
  double threshold_ = 0.5;
  FeatureScaler scaler_;
};

// ---- training -----------------------------------------------------------------

struct TrainConfig {
  AdamConfig adam;
  std::size_t batch_size = 128;
  std::size_t max_epochs = 50;
  std::size_t patience = 5;
  std::uint64_t seed = 0;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;  // mean per-sample loss
  double val_accuracy = 0.0;
  double threshold = 0.5;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  nlohmann::json to_json() const;
};

/// Mini-batch Adam; after each epoch the threshold is tuned on val and the
/// weights of the best validation epoch are kept. Throws NeuralError if the
/// loss becomes non-finite.
TrainHistory train(NeuralModel& model, std::span<const Sample> train_set, std::span<const Sample> val_set,
                   const TrainConfig& cfg);

/// Mean loss over samples with dropout off.
double mean_loss(const Network<float>& net, std::span<const Sample> samples);

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::vector<std::string> tensors;  // names of the tensors sampled
};

/// Central-difference check of `samples_per_tensor` entries per tensor (at
/// least 200 in total). Relative error = |a - n| / max(|a|, |n|, 1e-8).
GradCheckResult grad_check(Network<double>& net, const NetInput& x, const BinaryLabels& y, double eps = 1e-4,
                           std::size_t min_checked = 200, std::uint64_t seed = 0);

}  // namespace intent::nn
