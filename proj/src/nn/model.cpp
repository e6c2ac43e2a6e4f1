#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "intent/neuralnet.hpp"

namespace intent::nn {

namespace {

constexpr char kMagic[4] = {'I', 'P', 'N', 'N'};
constexpr std::uint32_t kCheckpointVersion = 1;

double iou(LabelSet a, LabelSet b) {
  const auto u = (a | b).size();
  return u == 0 ? 0.0 : static_cast<double>((a & b).size()) / static_cast<double>(u);
}

void put_u32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v), static_cast<char>(v >> 8), static_cast<char>(v >> 16),
                     static_cast<char>(v >> 24)};
  out.write(b, 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw NeuralError("checkpoint: unexpected end of file");
  return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
         static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
}

void put_f32(std::ostream& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }
float get_f32(std::istream& in) { return std::bit_cast<float>(get_u32(in)); }

}  // namespace

// ---- thresholds -------------------------------------------------------------------

LabelSet predict_labels(std::span<const double> confidences, double theta) {
  if (confidences.size() != kNumIntents) throw NeuralError("expected 12 confidences");
  LabelSet s;
  std::size_t best = 0;
  for (std::size_t l = 0; l < kNumIntents; ++l) {
    if (confidences[l] > theta) s.insert(static_cast<IntentCode>(l));
    if (confidences[l] > confidences[best]) best = l;
  }
  if (s.empty()) s.insert(static_cast<IntentCode>(best));
  return s;
}

double tune_threshold(std::span<const std::array<double, kNumIntents>> confidences, std::span<const LabelSet> gold) {
  if (confidences.size() != gold.size()) throw NeuralError("tune_threshold: confidences and gold differ in length");
  if (confidences.empty()) throw NeuralError("tune_threshold: empty validation set");
  double best_theta = 0.05;
  double best_acc = -1.0;
  for (int k = 1; k <= 19; ++k) {
    const double theta = k / 20.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < gold.size(); ++i) acc += iou(predict_labels(confidences[i], theta), gold[i]);
    acc /= static_cast<double>(gold.size());
    if (acc > best_acc) {
      best_acc = acc;
      best_theta = theta;
    }
  }
  return best_theta;
}

// ---- feature scaling ----------------------------------------------------------------

FeatureScaler FeatureScaler::fit(std::span<const FeatureVector> rows) {
  if (rows.empty()) throw NeuralError("feature scaler: no rows");
  FeatureScaler s;
  s.mean.assign(kNumFeatures, 0.0);
  s.scale.assign(kNumFeatures, 0.0);
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < kNumFeatures; ++i) s.mean[i] += r[i];
  }
  for (auto& m : s.mean) m /= static_cast<double>(rows.size());
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < kNumFeatures; ++i) s.scale[i] += (r[i] - s.mean[i]) * (r[i] - s.mean[i]);
  }
  for (auto& v : s.scale) {
    v = std::sqrt(v / static_cast<double>(rows.size()));
    if (v < 1e-12) v = 1.0;
  }
  return s;
}

std::vector<double> FeatureScaler::apply(const FeatureVector& v) const {
  std::vector<double> out(kNumFeatures);
  for (std::size_t i = 0; i < kNumFeatures; ++i) out[i] = empty() ? v[i] : (v[i] - mean[i]) / scale[i];
  return out;
}

// ---- model ------------------------------------------------------------------------

NeuralModel::NeuralModel(const NetConfig& cfg, Vocabulary vocab, std::uint64_t seed)
    : vocab_(std::move(vocab)), net_(cfg, vocab_.size(), seed) {}

NeuralModel::NeuralModel(const NetConfig& cfg, const EmbeddingMatrix& emb, std::uint64_t seed)
    : vocab_(emb.vocab), net_(cfg, emb.vocab.size(), seed) {
  net_.set_embeddings(emb.vectors);
  net_.embedding_trainable = emb.trainable;
}

NetInput NeuralModel::encode(const Dialog& dialog, std::size_t index, const FeatureVector* features) const {
  if (index >= dialog.utterances.size()) throw NeuralError("utterance index outside the dialog");
  const auto& cfg = config();
  const std::size_t n = cfg.max_len;
  NetInput x;
  x.cur = vocab_.encode(tokenize(dialog.utterances[index].text), n);
  if (cfg.arch == Architecture::cnn_context || cfg.arch == Architecture::cnn_context_rep) {
    if (index > 0) x.prev = vocab_.encode(tokenize(dialog.utterances[index - 1].text), n);
    if (index + 1 < dialog.utterances.size()) x.next = vocab_.encode(tokenize(dialog.utterances[index + 1].text), n);
  }
  if (cfg.arch == Architecture::cnn_feature) {
    if (features == nullptr) throw NeuralError("cnn_feature needs the utterance feature vector");
    x.features = scaler_.apply(*features);
  }
  return x;
}

std::array<double, kNumIntents> NeuralModel::confidences(const NetInput& x) const {
  const auto c = net_.forward(x);
  std::array<double, kNumIntents> out{};
  for (std::size_t l = 0; l < kNumIntents; ++l) out[l] = static_cast<double>(c[l]);
  return out;
}

void NeuralModel::save(const std::filesystem::path& path) const {
  nlohmann::ordered_json header;
  header["format"] = "neural-model";
  header["version"] = kCheckpointVersion;
  header["generator"] = kVersion;
  header["config"] = config().to_json();
  header["threshold"] = threshold_;
  header["embedding_trainable"] = net_.embedding_trainable;
  header["vocab"] = std::vector<std::string>(vocab_.tokens().begin() + 2, vocab_.tokens().end());
  header["vocab_fingerprint"] = vocab_.fingerprint();
  header["scaler"] = {{"mean", scaler_.mean}, {"scale", scaler_.scale}};
  header["meta"] = meta;
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw NeuralError("cannot write checkpoint " + path.string());
  out.write(kMagic, 4);
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  const auto& params = net_.params();
  put_u32(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) {
    put_u32(out, static_cast<std::uint32_t>(p.name.size()));
    out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    put_u32(out, 2);
    put_u32(out, static_cast<std::uint32_t>(p.value.rows()));
    put_u32(out, static_cast<std::uint32_t>(p.value.cols()));
    for (Eigen::Index i = 0; i < p.value.size(); ++i) put_f32(out, p.value.data()[i]);
  }
  if (!out) throw NeuralError("failed writing checkpoint " + path.string());
}

NeuralModel NeuralModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NeuralError("cannot open checkpoint " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw NeuralError(path.string() + " is not a neural model checkpoint");
  }
  const auto version = get_u32(in);
  if (version != kCheckpointVersion) {
    throw NeuralError("checkpoint version " + std::to_string(version) + " is not supported");
  }
  const auto len = get_u32(in);
  std::string text(len, '\0');
  if (!in.read(text.data(), len)) throw NeuralError("checkpoint: truncated header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw NeuralError(std::string("checkpoint header: ") + e.what());
  }
  const auto cfg = NetConfig::from_json(header.at("config"));
  const auto words = header.at("vocab").get<std::vector<std::string>>();
  NeuralModel model(cfg, Vocabulary::from_tokens(words), 0);
  if (model.vocab_.fingerprint() != header.at("vocab_fingerprint").get<std::string>()) {
    throw NeuralError("checkpoint: vocabulary fingerprint mismatch");
  }
  model.threshold_ = header.at("threshold").get<double>();
  model.net_.embedding_trainable = header.at("embedding_trainable").get<bool>();
  model.scaler_.mean = header.at("scaler").at("mean").get<std::vector<double>>();
  model.scaler_.scale = header.at("scaler").at("scale").get<std::vector<double>>();
  model.meta = header.at("meta");

  const auto count = get_u32(in);
  auto& params = model.net_.params();
  if (count != params.size()) throw NeuralError("checkpoint: tensor count does not match the architecture");
  for (std::uint32_t t = 0; t < count; ++t) {
    const auto nlen = get_u32(in);
    std::string name(nlen, '\0');
    if (!in.read(name.data(), nlen)) throw NeuralError("checkpoint: truncated tensor name");
    if (get_u32(in) != 2) throw NeuralError("checkpoint: tensor " + name + " is not 2-D");
    const auto rows = get_u32(in);
    const auto cols = get_u32(in);
    auto& p = model.net_.param(name);
    if (static_cast<Eigen::Index>(rows) != p.value.rows() || static_cast<Eigen::Index>(cols) != p.value.cols()) {
      throw NeuralError("checkpoint: tensor " + name + " has the wrong shape");
    }
    for (Eigen::Index i = 0; i < p.value.size(); ++i) p.value.data()[i] = get_f32(in);
  }
  return model;
}

// ---- training -----------------------------------------------------------------------

nlohmann::json TrainHistory::to_json() const {
  auto arr = nlohmann::json::array();
  for (const auto& e : epochs) {
    arr.push_back({{"epoch", e.epoch},
                   {"train_loss", e.train_loss},
                   {"val_accuracy", e.val_accuracy},
                   {"threshold", e.threshold}});
  }
  return {{"epochs", arr}, {"best_epoch", best_epoch}};
}

double mean_loss(const Network<float>& net, std::span<const Sample> samples) {
  if (samples.empty()) throw NeuralError("mean_loss: no samples");
  double total = 0.0;
  for (const auto& s : samples) total += static_cast<double>(net.loss(s.input, s.labels));
  return total / static_cast<double>(samples.size());
}

TrainHistory train(NeuralModel& model, std::span<const Sample> train_set, std::span<const Sample> val_set,
                   const TrainConfig& cfg) {
  if (train_set.empty()) throw NeuralError("train: empty training set");
  if (val_set.empty()) throw NeuralError("train: empty validation set");
  if (cfg.batch_size == 0 || cfg.max_epochs == 0) throw NeuralError("train: batch size and epochs must be positive");
  if (!(cfg.adam.lr > 0.0) || cfg.adam.beta1 < 0.0 || cfg.adam.beta1 >= 1.0 || cfg.adam.beta2 < 0.0 ||
      cfg.adam.beta2 >= 1.0) {
    throw NeuralError("train: invalid Adam settings");
  }
  auto& net = model.network();
  Adam<float> adam(cfg.adam);
  std::mt19937_64 shuffle_rng(cfg.seed);
  std::mt19937_64 dropout_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  std::vector<LabelSet> gold;
  for (const auto& s : val_set) gold.push_back(decode_binary(s.labels));

  TrainHistory history;
  double best_acc = -1.0;
  std::vector<Mat<float>> best_params;
  double best_theta = 0.5;
  std::size_t stale = 0;
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_index(shuffle_rng, i)]);
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const float w = 1.0f / static_cast<float>(end - start);
      net.zero_grad();
      double batch_loss = 0.0;
      for (std::size_t i = start; i < end; ++i) {
        const auto& s = train_set[order[i]];
        batch_loss += static_cast<double>(net.accumulate(s.input, s.labels, &dropout_rng, w));
      }
      if (!std::isfinite(batch_loss)) {
        throw NeuralError("training diverged: non-finite loss in epoch " + std::to_string(epoch) + ", batch " +
                          std::to_string(start / cfg.batch_size + 1) + " (lr " + std::to_string(cfg.adam.lr) +
                          ")");
      }
      total += batch_loss;
      adam.step(net.params());
    }

    std::vector<std::array<double, kNumIntents>> conf;
    conf.reserve(val_set.size());
    for (const auto& s : val_set) conf.push_back(model.confidences(s.input));
    const double theta = tune_threshold(conf, gold);
    double acc = 0.0;
    for (std::size_t i = 0; i < gold.size(); ++i) acc += iou(predict_labels(conf[i], theta), gold[i]);
    acc /= static_cast<double>(gold.size());
    history.epochs.push_back({epoch, total / static_cast<double>(train_set.size()), acc, theta});

    if (acc > best_acc) {
      best_acc = acc;
      best_theta = theta;
      history.best_epoch = epoch;
      best_params.clear();
      for (const auto& p : net.params()) best_params.push_back(p.value);
      stale = 0;
    } else if (++stale >= cfg.patience) {
      break;
    }
  }
  for (std::size_t i = 0; i < best_params.size(); ++i) net.params()[i].value = best_params[i];
  model.set_threshold(best_theta);
  return history;
}

// ---- gradient check -------------------------------------------------------------------

GradCheckResult grad_check(Network<double>& net, const NetInput& x, const BinaryLabels& y, double eps,
                           std::size_t min_checked, std::uint64_t seed) {
  net.zero_grad();
  net.accumulate(x, y, nullptr, 1.0);
  auto& params = net.params();

  std::vector<std::int32_t> used;
  for (const auto* seq : {&x.cur, &x.prev, &x.next}) {
    for (auto t : *seq) {
      if (t != Vocabulary::kPad) used.push_back(t);
    }
  }
  std::sort(used.begin(), used.end());
  used.erase(std::unique(used.begin(), used.end()), used.end());

  std::mt19937_64 rng(seed);
  std::vector<std::vector<Eigen::Index>> candidates(params.size());
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto& c = candidates[p];
    const auto cols = params[p].value.cols();
    if (p == 0 && params[p].name == "embedding") {
      if (!net.embedding_trainable) continue;
      for (auto r : used) {
        for (Eigen::Index j = 0; j < cols; ++j) c.push_back(r * cols + j);
      }
    } else {
      c.resize(static_cast<std::size_t>(params[p].value.size()));
      std::iota(c.begin(), c.end(), 0);
    }
    for (std::size_t i = c.size(); i > 1; --i) std::swap(c[i - 1], c[uniform_index(rng, i)]);
  }

  GradCheckResult res;
  std::vector<std::size_t> taken(params.size(), 0);
  bool progress = true;
  while (res.checked < min_checked && progress) {
    progress = false;
    for (std::size_t p = 0; p < params.size(); ++p) {
      if (taken[p] >= candidates[p].size()) continue;
      const Eigen::Index idx = candidates[p][taken[p]++];
      progress = true;
      double& v = params[p].value.data()[idx];
      const double analytic = params[p].grad.data()[idx];
      const double orig = v;
      v = orig + eps;
      const double up = net.loss(x, y);
      v = orig - eps;
      const double down = net.loss(x, y);
      v = orig;
      const double numeric = (up - down) / (2.0 * eps);
      const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
      res.max_rel_error = std::max(res.max_rel_error, std::abs(analytic - numeric) / denom);
      ++res.checked;
      if (taken[p] == 1) res.tensors.push_back(params[p].name);
    }
  }
  return res;
}

}  // namespace intent::nn
