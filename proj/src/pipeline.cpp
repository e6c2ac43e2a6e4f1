#include "intent/pipeline.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#ifndef INTENT_DATA_DIR
#define INTENT_DATA_DIR "data"
#endif

namespace intent {

namespace {

enum class KeyType { text, integer, real, boolean };

struct KeyDef {
  const char* key;
  const char* value;
  KeyType type;
  bool may_be_empty = false;
};

// Neural sizes left empty take the value of the selected profile.
const std::vector<KeyDef>& key_defs() {
  static const std::vector<KeyDef> defs = {
      {"model", "rf-chain", KeyType::text},
      {"seed", "0", KeyType::integer},
      {"features", "content,structural,sentiment", KeyType::text},
      {"chain_order", "OQ,RQ,CQ,FD,FQ,IR,PA,PF,NF,GG,JK,O", KeyType::text},
      {"lexicons", "", KeyType::text, true},
      {"n_trees", "200", KeyType::integer},
      {"max_depth", "0", KeyType::integer},
      {"min_samples_split", "2", KeyType::integer},
      {"max_features", "0", KeyType::integer},
      {"n_rounds", "200", KeyType::integer},
      {"svm_lambda", "0.0001", KeyType::real},
      {"svm_epochs", "50", KeyType::integer},
      {"nb_var_floor", "1e-9", KeyType::real},
      {"knn_k", "10", KeyType::integer},
      {"knn_s", "1", KeyType::real},
      {"profile", "desk", KeyType::text},
      {"embed_dim", "100", KeyType::integer},
      {"filters", "", KeyType::integer, true},
      {"filter_size", "", KeyType::integer, true},
      {"pool_size", "", KeyType::integer, true},
      {"conv_layers", "", KeyType::integer, true},
      {"dropout", "", KeyType::real, true},
      {"dense", "", KeyType::integer, true},
      {"max_len", "", KeyType::integer, true},
      {"context_filters", "", KeyType::integer, true},
      {"context_dense", "", KeyType::integer, true},
      {"lr", "0.001", KeyType::real},
      {"beta1", "0.9", KeyType::real},
      {"beta2", "0.999", KeyType::real},
      {"adam_eps", "1e-7", KeyType::real},
      {"adam_bias_correction", "true", KeyType::boolean},
      {"batch_size", "128", KeyType::integer},
      {"max_epochs", "50", KeyType::integer},
      {"patience", "5", KeyType::integer},
      {"embeddings", "cbow", KeyType::text},
      {"cbow_window", "5", KeyType::integer},
      {"cbow_negatives", "5", KeyType::integer},
      {"cbow_epochs", "5", KeyType::integer},
      {"cbow_min_count", "1", KeyType::integer},
      {"cbow_lr", "0.025", KeyType::real},
  };
  return defs;
}

const KeyDef& key_def(const std::string& key) {
  for (const auto& d : key_defs()) {
    if (key == d.key) return d;
  }
  throw ConfigError("unknown config key '" + key + "'");
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool parse_bool(const std::string& v, bool& out) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") {
    out = true;
    return true;
  }
  if (v == "0" || v == "false" || v == "no" || v == "off") {
    out = false;
    return true;
  }
  return false;
}

std::vector<std::string> split_list(const std::string& s, char sep = ',') {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, sep);) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  out << text;
  if (!out) throw Error("failed writing " + p.string());
}

ml::Matrix to_matrix(const FeatureMatrix& fm, const std::vector<std::size_t>& cols) {
  ml::Matrix X(fm.rows.size(), cols.size());
  for (std::size_t r = 0; r < fm.rows.size(); ++r) {
    for (std::size_t j = 0; j < cols.size(); ++j) X.at(r, j) = fm.rows[r][cols[j]];
  }
  return X;
}

std::vector<LabelSet> corpus_labels(const Corpus& c) {
  std::vector<LabelSet> out;
  for (const auto& d : c.dialogs) {
    for (const auto& u : d.utterances) out.push_back(gold_labels(u));
  }
  return out;
}

ml::ChainModel::Order chain_order(const RunConfig& cfg) {
  const auto names = split_list(cfg.get("chain_order"));
  if (names.size() != kNumIntents) throw ConfigError("chain_order must list all 12 intent codes");
  ml::ChainModel::Order order{};
  std::set<std::size_t> seen;
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto c = code_from_name(names[i]);
    if (!c) throw ConfigError("chain_order: unknown code '" + names[i] + "'");
    order[i] = static_cast<std::size_t>(*c);
    seen.insert(order[i]);
  }
  if (seen.size() != kNumIntents) throw ConfigError("chain_order repeats a code");
  return order;
}

nn::Architecture arch_of(ModelKind k) {
  switch (k) {
    case ModelKind::cnn: return nn::Architecture::cnn;
    case ModelKind::cnn_mfs: return nn::Architecture::cnn_mfs;
    case ModelKind::cnn_context: return nn::Architecture::cnn_context;
    case ModelKind::cnn_context_rep: return nn::Architecture::cnn_context_rep;
    case ModelKind::cnn_feature: return nn::Architecture::cnn_feature;
    default: throw ConfigError("not a neural model kind");
  }
}

std::vector<nn::Sample> neural_samples(const nn::NeuralModel& m, const Corpus& c, const TfIdfModel& tfidf,
                                       const Lexicons& lex) {
  const bool need_features = m.config().arch == nn::Architecture::cnn_feature;
  std::vector<nn::Sample> out;
  for (const auto& d : c.dialogs) {
    for (std::size_t i = 0; i < d.utterances.size(); ++i) {
      std::optional<FeatureVector> fv;
      if (need_features) fv = extract_features(d, i, tfidf, lex);
      nn::Sample s;
      s.input = m.encode(d, i, fv ? &*fv : nullptr);
      s.labels = encode_binary(gold_labels(d.utterances[i]));
      out.push_back(std::move(s));
    }
  }
  return out;
}

}  // namespace

// ---- config -----------------------------------------------------------------------

RunConfig::RunConfig() {
  for (const auto& d : key_defs()) values_[d.key] = d.value;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  RunConfig cfg;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    }
    try {
      cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return cfg;
}

void RunConfig::set(const std::string& key, const std::string& raw) {
  const auto& def = key_def(key);
  const std::string value = trim(raw);
  if (value.empty()) {
    if (!def.may_be_empty) throw ConfigError("config key '" + key + "' needs a value");
    values_[key] = value;
    return;
  }
  try {
    std::size_t used = 0;
    switch (def.type) {
      case KeyType::integer: {
        if (value.front() == '-') throw std::invalid_argument(value);
        (void)std::stoull(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        break;
      }
      case KeyType::real: {
        (void)std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        break;
      }
      case KeyType::boolean: {
        bool b = false;
        if (!parse_bool(value, b)) throw std::invalid_argument(value);
        break;
      }
      case KeyType::text: break;
    }
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': bad value '" + value + "'");
  }
  values_[key] = value;
}

void RunConfig::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not key=value");
  set(trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

const std::string& RunConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second;
}

double RunConfig::number(const std::string& key) const {
  const auto& v = get(key);
  if (v.empty()) throw ConfigError("config key '" + key + "' is empty");
  return std::stod(v);
}

std::size_t RunConfig::count(const std::string& key) const {
  const auto& v = get(key);
  if (v.empty()) throw ConfigError("config key '" + key + "' is empty");
  return static_cast<std::size_t>(std::stoull(v));
}

std::uint64_t RunConfig::seed() const { return std::stoull(get("seed")); }

bool RunConfig::flag(const std::string& key) const {
  bool b = false;
  if (!parse_bool(get(key), b)) throw ConfigError("config key '" + key + "' is not a boolean");
  return b;
}

std::string RunConfig::fingerprint() const {
  Fnv1a h;
  for (const auto& [k, v] : values_) {
    h.update(k);
    h.update(std::string_view("=", 1));
    h.update(v);
    h.update(std::string_view("\n", 1));
  }
  return h.hex();
}

std::string RunConfig::dump() const {
  std::string out = "# " + std::string(kVersion) + " config fingerprint=" + fingerprint() + "\n";
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

std::filesystem::path default_lexicon_dir() {
  if (const char* env = std::getenv("INTENT_LEXICONS"); env != nullptr && *env != '\0') return env;
  return std::filesystem::path(INTENT_DATA_DIR) / "lexicons";
}

std::optional<std::filesystem::path> data_root() {
  if (const char* env = std::getenv("INTENT_DATA_ROOT"); env != nullptr && *env != '\0') {
    return std::filesystem::path(env);
  }
  return std::nullopt;
}

// ---- labels -----------------------------------------------------------------------

LabelSet gold_labels(const Utterance& u) {
  const auto s = parse_tags(u.raw_tags);
  if (s.empty()) throw LabelError("utterance " + u.id() + " has no labels");
  return s;
}

PreparedLabels prepare_labels(const Corpus& raw, const TruncationPolicy& policy, std::uint64_t seed,
                              const TruncationPlan* frozen) {
  PreparedLabels out;
  out.corpus = raw;
  std::vector<LabelSet> stripped;
  std::set<std::uint16_t> raw_sets;
  std::set<std::uint16_t> stripped_sets;
  for (const auto& d : raw.dialogs) {
    for (const auto& u : d.utterances) {
      const auto s = parse_tags(u.raw_tags);
      if (s.empty()) throw LabelError("utterance " + u.id() + " has no labels");
      raw_sets.insert(s.bits());
      stripped.push_back(strip_non_qa(s));
      stripped_sets.insert(stripped.back().bits());
    }
  }
  if (stripped.empty()) throw LabelError("corpus has no utterances");
  out.plan = frozen ? *frozen : build_truncation_plan(stripped, policy, seed);
  LabelSampler sampler(out.plan);
  std::size_t i = 0;
  std::size_t covered = 0;
  for (auto& d : out.corpus.dialogs) {
    for (auto& u : d.utterances) {
      if (out.plan.keeps(stripped[i])) ++covered;
      u.raw_tags = format_tags(sampler.apply(stripped[i]));
      ++i;
    }
  }
  out.stats.utterances = stripped.size();
  out.stats.raw_distinct = raw_sets.size();
  out.stats.stripped_distinct = stripped_sets.size();
  out.stats.kept = out.plan.kept.size();
  out.stats.coverage = static_cast<double>(covered) / static_cast<double>(stripped.size());
  return out;
}

Corpus PreparedData::load_split(const std::string& split) const {
  const auto path = dir / (split + ".jsonl");
  auto c = load_corpus(path, CorpusFormat::canonical_jsonl);
  c.name = split;
  return c;
}

PreparedData open_prepared(const std::filesystem::path& dir) {
  PreparedData p;
  p.dir = dir;
  p.plan = TruncationPlan::from_json(read_file(dir / "plan.json"));
  try {
    p.info = nlohmann::json::parse(read_file(dir / "prep.json"));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error((dir / "prep.json").string() + ": " + e.what());
  }
  if (p.info.value("plan_fingerprint", "") != p.plan.fingerprint()) {
    throw Error(dir.string() + ": plan.json does not match the fingerprint recorded in prep.json");
  }
  return p;
}

// ---- model kinds ------------------------------------------------------------------

std::string_view model_kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::tree_chain: return "tree-chain";
    case ModelKind::rf_chain: return "rf-chain";
    case ModelKind::ada_chain: return "ada-chain";
    case ModelKind::svm_chain: return "svm-chain";
    case ModelKind::nb_chain: return "nb-chain";
    case ModelKind::rf_br: return "rf-br";
    case ModelKind::rf_lp: return "rf-lp";
    case ModelKind::mlknn: return "mlknn";
    case ModelKind::cnn: return "cnn";
    case ModelKind::cnn_mfs: return "cnn-mfs";
    case ModelKind::cnn_context: return "cnn-context";
    case ModelKind::cnn_context_rep: return "cnn-context-rep";
    case ModelKind::cnn_feature: return "cnn-feature";
  }
  return "?";
}

std::vector<ModelKind> all_model_kinds() {
  return {ModelKind::tree_chain, ModelKind::rf_chain,    ModelKind::ada_chain,   ModelKind::svm_chain,
          ModelKind::nb_chain,   ModelKind::rf_br,       ModelKind::rf_lp,       ModelKind::mlknn,
          ModelKind::cnn,        ModelKind::cnn_mfs,     ModelKind::cnn_context, ModelKind::cnn_context_rep,
          ModelKind::cnn_feature};
}

std::optional<ModelKind> model_kind_from_name(std::string_view name) {
  for (auto k : all_model_kinds()) {
    if (model_kind_name(k) == name) return k;
  }
  return std::nullopt;
}

bool is_neural(ModelKind k) {
  return k == ModelKind::cnn || k == ModelKind::cnn_mfs || k == ModelKind::cnn_context ||
         k == ModelKind::cnn_context_rep || k == ModelKind::cnn_feature;
}

std::vector<std::size_t> feature_columns(const RunConfig& cfg) {
  std::vector<FeatureGroup> groups;
  for (const auto& g : split_list(cfg.get("features"))) {
    if (g == "content") {
      groups.push_back(FeatureGroup::content);
    } else if (g == "structural") {
      groups.push_back(FeatureGroup::structural);
    } else if (g == "sentiment") {
      groups.push_back(FeatureGroup::sentiment);
    } else {
      throw ConfigError("features: unknown group '" + g + "'");
    }
  }
  if (groups.empty()) throw ConfigError("features: at least one group is required");
  return group_columns(groups);
}

ml::LearnerSpec learner_spec(const RunConfig& cfg, ModelKind kind) {
  ml::LearnerSpec s;
  switch (kind) {
    case ModelKind::tree_chain: s.kind = ml::LearnerKind::decision_tree; break;
    case ModelKind::rf_chain:
    case ModelKind::rf_br:
    case ModelKind::rf_lp: s.kind = ml::LearnerKind::random_forest; break;
    case ModelKind::ada_chain: s.kind = ml::LearnerKind::adaboost; break;
    case ModelKind::svm_chain: s.kind = ml::LearnerKind::linear_svm; break;
    case ModelKind::nb_chain: s.kind = ml::LearnerKind::gaussian_nb; break;
    default: break;
  }
  s.max_depth = static_cast<int>(cfg.count("max_depth"));
  s.min_samples_split = cfg.count("min_samples_split");
  s.n_trees = cfg.count("n_trees");
  s.max_features = static_cast<int>(cfg.count("max_features"));
  s.n_rounds = cfg.count("n_rounds");
  s.lambda = cfg.number("svm_lambda");
  s.epochs = cfg.count("svm_epochs");
  s.var_floor = cfg.number("nb_var_floor");
  s.seed = cfg.seed();
  return s;
}

nn::NetConfig net_config(const RunConfig& cfg, ModelKind kind) {
  const auto& profile = cfg.get("profile");
  nn::NetConfig c;
  if (profile == "desk") {
    c = nn::NetConfig::desk(arch_of(kind));
  } else if (profile == "paper") {
    c = nn::NetConfig::paper(arch_of(kind));
  } else {
    throw ConfigError("profile must be desk or paper");
  }
  c.embed_dim = cfg.count("embed_dim");
  auto opt = [&](const char* key, std::size_t& field) {
    if (!cfg.get(key).empty()) field = cfg.count(key);
  };
  opt("filters", c.filters);
  opt("filter_size", c.filter_size);
  opt("pool_size", c.pool_size);
  opt("conv_layers", c.conv_layers);
  opt("dense", c.dense);
  opt("max_len", c.max_len);
  opt("context_filters", c.context_filters);
  opt("context_dense", c.context_dense);
  if (!cfg.get("dropout").empty()) c.dropout = cfg.number("dropout");
  c.validate();
  return c;
}

nn::TrainConfig train_config(const RunConfig& cfg) {
  nn::TrainConfig t;
  t.adam.lr = cfg.number("lr");
  t.adam.beta1 = cfg.number("beta1");
  t.adam.beta2 = cfg.number("beta2");
  t.adam.eps = cfg.number("adam_eps");
  t.adam.bias_correction = cfg.flag("adam_bias_correction");
  t.batch_size = cfg.count("batch_size");
  t.max_epochs = cfg.count("max_epochs");
  t.patience = cfg.count("patience");
  t.seed = cfg.seed();
  return t;
}

// ---- training -----------------------------------------------------------------------

TrainedModel train_model(const RunConfig& cfg, const Corpus& train, const Corpus& val,
                         const std::string& plan_fingerprint, const Lexicons& lex, std::ostream* log) {
  const auto kind = model_kind_from_name(cfg.get("model"));
  if (!kind) throw ConfigError("unknown model '" + cfg.get("model") + "'");
  if (train.utterance_count() == 0) throw Error("training split is empty");
  TrainedModel tm;
  tm.kind = *kind;
  tm.config = cfg;
  tm.plan_fingerprint = plan_fingerprint;
  tm.tfidf = fit_tfidf_on(train);
  tm.columns = feature_columns(cfg);

  if (!is_neural(*kind)) {
    const auto fm = featurize_corpus(train, tm.tfidf, lex);
    const auto X = to_matrix(fm, tm.columns);
    const auto sets = corpus_labels(train);
    ml::LabelMatrix Y;
    for (auto s : sets) Y.push_back(encode_binary(s));
    const auto spec = learner_spec(cfg, *kind);
    switch (*kind) {
      case ModelKind::rf_br: tm.model = ml::binary_relevance_train(spec, X, Y); break;
      case ModelKind::rf_lp: tm.model = ml::PowersetModel::train(spec, X, sets); break;
      case ModelKind::mlknn: tm.model = ml::MlKnnModel::train(X, Y, cfg.count("knn_k"), cfg.number("knn_s")); break;
      default: tm.model = ml::chain_train(spec, X, Y, chain_order(cfg)); break;
    }
    if (log) *log << "trained " << model_kind_name(*kind) << " on " << X.rows() << " utterances\n";
    return tm;
  }

  const auto net = net_config(cfg, *kind);
  std::vector<TokenList> docs;
  for (const auto& d : train.dialogs) {
    for (const auto& u : d.utterances) docs.push_back(tokenize(u.text));
  }
  const auto& source = cfg.get("embeddings");
  std::optional<nn::NeuralModel> model;
  if (source == "random") {
    model.emplace(net, nn::Vocabulary::build(docs, cfg.count("cbow_min_count")), cfg.seed());
  } else {
    nn::EmbeddingMatrix emb;
    if (source == "cbow") {
      nn::CbowConfig cc;
      cc.dim = net.embed_dim;
      cc.window = cfg.count("cbow_window");
      cc.negatives = cfg.count("cbow_negatives");
      cc.epochs = cfg.count("cbow_epochs");
      cc.min_count = cfg.count("cbow_min_count");
      cc.lr = cfg.number("cbow_lr");
      cc.seed = cfg.seed();
      auto res = nn::train_cbow(docs, cc);
      if (log) *log << "cbow: " << res.embeddings.vocab.size() << " rows, final loss " << res.epoch_loss.back() << "\n";
      emb = std::move(res.embeddings);
    } else {
      emb = nn::load_embeddings(source);
    }
    if (emb.dim() != net.embed_dim) {
      throw ConfigError("embeddings have dimension " + std::to_string(emb.dim()) + " but embed_dim is " +
                        std::to_string(net.embed_dim));
    }
    model.emplace(net, emb, cfg.seed());
  }
  if (net.arch == nn::Architecture::cnn_feature) {
    model->set_scaler(nn::FeatureScaler::fit(featurize_corpus(train, tm.tfidf, lex).rows));
  }
  const auto train_set = neural_samples(*model, train, tm.tfidf, lex);
  const auto val_set = neural_samples(*model, val, tm.tfidf, lex);
  if (log) {
    *log << model_kind_name(*kind) << ": " << model->network().parameter_count() << " parameters, "
         << train_set.size() << " train / " << val_set.size() << " val utterances\n";
  }
  const auto history = nn::train(*model, train_set, val_set, train_config(cfg));
  if (log) {
    for (const auto& e : history.epochs) {
      *log << "epoch " << e.epoch << " loss " << e.train_loss << " val_acc " << e.val_accuracy << " theta "
           << e.threshold << "\n";
    }
  }
  tm.history = history.to_json();
  tm.model = std::move(*model);
  return tm;
}

// ---- prediction ---------------------------------------------------------------------

std::vector<Prediction> TrainedModel::predict(const Corpus& corpus, const Lexicons& lex, std::ostream* warn) const {
  std::vector<Prediction> out;
  if (const auto* nm = std::get_if<nn::NeuralModel>(&model)) {
    const auto arch = nm->config().arch;
    const bool context = arch == nn::Architecture::cnn_context || arch == nn::Architecture::cnn_context_rep;
    for (const auto& d : corpus.dialogs) {
      if (context && d.utterances.size() == 1 && warn) {
        *warn << "warning: dialog " << d.dialog_id << " has a single utterance; context inputs are empty\n";
      }
      for (std::size_t i = 0; i < d.utterances.size(); ++i) {
        std::optional<FeatureVector> fv;
        if (arch == nn::Architecture::cnn_feature) fv = extract_features(d, i, tfidf, lex);
        const auto x = nm->encode(d, i, fv ? &*fv : nullptr);
        Prediction p;
        p.id = d.utterances[i].id();
        p.confidence = nm->confidences(x);
        p.labels = nn::predict_labels(p.confidence, nm->threshold());
        out.push_back(std::move(p));
      }
    }
    return out;
  }

  const auto fm = featurize_corpus(corpus, tfidf, lex);
  const auto X = to_matrix(fm, columns);
  for (std::size_t r = 0; r < X.rows(); ++r) {
    ml::LabelPrediction lp;
    if (const auto* cm = std::get_if<ml::ChainModel>(&model)) {
      lp = cm->predict(X.row(r));
    } else if (const auto* pm = std::get_if<ml::PowersetModel>(&model)) {
      lp = pm->predict(X.row(r));
    } else if (const auto* km = std::get_if<ml::MlKnnModel>(&model)) {
      lp = km->predict(X.row(r));
    } else {
      throw Error("model is not trained");
    }
    Prediction p;
    p.id = fm.ids[r].id();
    p.labels = ml::non_empty_or_best(lp.labels, lp.confidence);
    p.confidence = lp.confidence;
    out.push_back(std::move(p));
  }
  return out;
}

// ---- persistence --------------------------------------------------------------------

void TrainedModel::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  nlohmann::ordered_json manifest;
  manifest["format"] = "intent-model";
  manifest["version"] = 1;
  manifest["generator"] = kVersion;
  manifest["kind"] = model_kind_name(kind);
  manifest["plan_fingerprint"] = plan_fingerprint;
  manifest["tfidf_fingerprint"] = tfidf.fingerprint();
  manifest["config_fingerprint"] = config.fingerprint();
  manifest["columns"] = columns;
  write_file(dir / "config.txt", config.dump());
  write_file(dir / "tfidf.json", tfidf.to_json());
  if (const auto* nm = std::get_if<nn::NeuralModel>(&model)) {
    manifest["vocab_fingerprint"] = nm->vocab().fingerprint();
    auto copy_meta = *nm;
    copy_meta.meta = {{"plan_fingerprint", plan_fingerprint}, {"tfidf_fingerprint", tfidf.fingerprint()}};
    copy_meta.save(dir / "network.ipnn");
    write_file(dir / "history.json", history.dump(1) + "\n");
  } else {
    nlohmann::json j;
    if (const auto* cm = std::get_if<ml::ChainModel>(&model)) {
      j = cm->to_json();
    } else if (const auto* pm = std::get_if<ml::PowersetModel>(&model)) {
      j = pm->to_json();
    } else if (const auto* km = std::get_if<ml::MlKnnModel>(&model)) {
      j = km->to_json();
    } else {
      throw Error("cannot save an untrained model");
    }
    write_file(dir / "model.json", j.dump() + "\n");
  }
  write_file(dir / "manifest.json", manifest.dump(1) + "\n");
}

TrainedModel TrainedModel::load(const std::filesystem::path& dir) {
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(read_file(dir / "manifest.json"));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error((dir / "manifest.json").string() + ": " + e.what());
  }
  if (manifest.value("format", "") != "intent-model" || manifest.value("version", 0) != 1) {
    throw Error(dir.string() + " is not a supported model directory");
  }
  TrainedModel tm;
  const auto kind = model_kind_from_name(manifest.at("kind").get<std::string>());
  if (!kind) throw Error("unknown model kind in " + dir.string());
  tm.kind = *kind;
  tm.config = RunConfig::load(dir / "config.txt");
  if (tm.config.fingerprint() != manifest.at("config_fingerprint").get<std::string>()) {
    throw Error(dir.string() + ": config.txt does not match the manifest fingerprint");
  }
  tm.plan_fingerprint = manifest.at("plan_fingerprint").get<std::string>();
  tm.tfidf = TfIdfModel::from_json(read_file(dir / "tfidf.json"));
  if (tm.tfidf.fingerprint() != manifest.at("tfidf_fingerprint").get<std::string>()) {
    throw Error(dir.string() + ": TF-IDF model fingerprint mismatch");
  }
  tm.columns = manifest.at("columns").get<std::vector<std::size_t>>();
  if (is_neural(tm.kind)) {
    auto nm = nn::NeuralModel::load(dir / "network.ipnn");
    if (nm.vocab().fingerprint() != manifest.at("vocab_fingerprint").get<std::string>()) {
      throw Error(dir.string() + ": vocabulary fingerprint mismatch");
    }
    if (nm.meta.value("plan_fingerprint", "") != tm.plan_fingerprint) {
      throw Error(dir.string() + ": network was trained under a different truncation plan");
    }
    if (std::filesystem::exists(dir / "history.json")) tm.history = nlohmann::json::parse(read_file(dir / "history.json"));
    tm.model = std::move(nm);
  } else {
    const auto j = nlohmann::json::parse(read_file(dir / "model.json"));
    const auto format = j.value("format", "");
    if (format == "chain-model") {
      tm.model = ml::ChainModel::from_json(j);
    } else if (format == "powerset-model") {
      tm.model = ml::PowersetModel::from_json(j);
    } else if (format == "mlknn-model") {
      tm.model = ml::MlKnnModel::from_json(j);
    } else {
      throw Error(dir.string() + ": unknown classic model format '" + format + "'");
    }
  }
  return tm;
}

// ---- evaluation -----------------------------------------------------------------------

Evaluation evaluate(const TrainedModel& model, const Corpus& split, const std::string& split_plan_fingerprint,
                    const std::string& split_name, const Lexicons& lex) {
  if (split_plan_fingerprint != model.plan_fingerprint) {
    throw eval::EvalError("truncation plan fingerprint mismatch: split prepared with " + split_plan_fingerprint +
                          ", model trained with " + model.plan_fingerprint);
  }
  const auto preds = model.predict(split, lex);
  Evaluation ev;
  std::size_t i = 0;
  for (const auto& d : split.dialogs) {
    for (const auto& u : d.utterances) {
      const auto& p = preds[i++];
      eval::PredictionRecord r;
      r.id = p.id;
      r.predicted = p.labels;
      r.confidences = p.confidence;
      r.gold = gold_labels(u);
      ev.records.push_back(std::move(r));
    }
  }
  ev.report = eval::make_report(ev.records, std::string(model_kind_name(model.kind)), split_name,
                                model.config.fingerprint());
  ev.report.meta["plan_fingerprint"] = model.plan_fingerprint;
  ev.report.meta["tfidf_fingerprint"] = model.tfidf.fingerprint();
  if (const auto* nm = std::get_if<nn::NeuralModel>(&model.model)) {
    ev.report.meta["vocab_fingerprint"] = nm->vocab().fingerprint();
    ev.report.meta["threshold"] = nm->threshold();
  }
  return ev;
}

Evaluation cross_evaluate(const TrainedModel& model, const Corpus& split, const std::string& split_plan_fingerprint,
                          const std::string& split_name, const Lexicons& lex) {
  auto ev = evaluate(model, split, split_plan_fingerprint, split_name, lex);
  ev.report.meta["cross_corpus"] = split.name;
  return ev;
}

std::vector<ImportanceRow> importance_ranking(const RunConfig& cfg, const Corpus& train, const Lexicons& lex) {
  const auto tfidf = fit_tfidf_on(train);
  const auto fm = featurize_corpus(train, tfidf, lex);
  std::vector<std::size_t> all(kNumFeatures);
  for (std::size_t i = 0; i < kNumFeatures; ++i) all[i] = i;
  const auto X = to_matrix(fm, all);
  const auto model = ml::PowersetModel::train(learner_spec(cfg, ModelKind::rf_lp), X, corpus_labels(train));
  const auto scores = ml::feature_importance(model);
  std::vector<ImportanceRow> rows;
  for (std::size_t i = 0; i < scores.size(); ++i) rows.push_back({i, scores[i]});
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.score > b.score; });
  return rows;
}

}  // namespace intent
