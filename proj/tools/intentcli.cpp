// intentcli: command-line front end for the intent prediction pipeline.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "intent/eval.hpp"
#include "intent/pipeline.hpp"
#include "intent/synth.hpp"

namespace fs = std::filesystem;
using namespace intent;

namespace {

// Removes everything it tracks unless commit() is reached.
class OutputGuard {
 public:
  void track(const fs::path& p) {
    if (p.empty() || fs::is_directory(p)) return;  // never delete a directory we did not create
    paths_.push_back(p);
  }
  void commit() { paths_.clear(); }
  ~OutputGuard() {
    std::error_code ec;
    for (auto it = paths_.rbegin(); it != paths_.rend(); ++it) fs::remove_all(*it, ec);
  }

 private:
  std::vector<fs::path> paths_;
};

struct Common {
  std::string config_file;
  std::vector<std::string> overrides;
  std::string lexicons;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_file, "key=value configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--set", c.overrides, "config override key=value (repeatable)");
  cmd->add_option("--lexicons", c.lexicons, "directory with the sentiment lexicons");
}

RunConfig resolve_config(const Common& c) {
  RunConfig cfg = c.config_file.empty() ? RunConfig() : RunConfig::load(c.config_file);
  for (const auto& o : c.overrides) cfg.apply_override(o);
  return cfg;
}

Lexicons load_lexicons(const Common& c, const RunConfig& cfg) {
  fs::path dir = c.lexicons;
  if (dir.empty()) dir = cfg.get("lexicons");
  if (dir.empty()) dir = default_lexicon_dir();
  return Lexicons::load_dir(dir);
}

fs::path resolve_data_path(const std::string& p) {
  fs::path path(p);
  if (path.is_relative() && !fs::exists(path)) {
    if (auto root = data_root(); root && fs::exists(*root / path)) return *root / path;
  }
  return path;
}

void write_text(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  out << text;
  if (!out) throw Error("failed writing " + p.string());
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path sibling(const fs::path& p, const std::string& suffix) {
  auto q = p;
  q.replace_extension();
  return q.string() + suffix;
}

std::string fmt4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

nlohmann::json labels_json(LabelSet s) {
  auto arr = nlohmann::json::array();
  for (auto c : s.codes()) arr.push_back(code_name(c));
  return arr;
}

// ---- prep --------------------------------------------------------------------------

struct PrepArgs {
  std::string in, format = "msdialog", out, plan;
  std::size_t topk = 32;
  std::uint64_t seed = 0;
  std::string category;
  bool exclude = false;
};

int cmd_prep(const PrepArgs& a) {
  const auto format = corpus_format_from_name(a.format);
  if (!format) throw Error("unknown corpus format '" + a.format + "'");
  auto raw = load_corpus(resolve_data_path(a.in), *format);
  if (!a.category.empty()) raw = filter_by_category(raw, a.category, a.exclude);
  if (raw.dialogs.empty()) throw Error("no dialogs left after category filtering");

  std::optional<TruncationPlan> frozen;
  if (!a.plan.empty()) frozen = TruncationPlan::from_json(read_text(a.plan));
  TruncationPolicy policy;
  policy.top_k = a.topk;
  const auto prepared = prepare_labels(raw, policy, a.seed, frozen ? &*frozen : nullptr);
  const auto split = split_corpus(prepared.corpus, reference_ratio_split(a.seed));

  OutputGuard guard;
  const fs::path out(a.out);
  guard.track(out);
  fs::create_directories(out);
  save_canonical_jsonl(out / "all.jsonl", prepared.corpus);
  save_canonical_jsonl(out / "train.jsonl", split.train);
  save_canonical_jsonl(out / "val.jsonl", split.val);
  save_canonical_jsonl(out / "test.jsonl", split.test);
  write_text(out / "plan.json", prepared.plan.to_json());

  const auto& s = prepared.stats;
  nlohmann::ordered_json info;
  info["generator"] = kVersion;
  info["input"] = fs::path(a.in).filename().string();
  info["format"] = a.format;
  info["seed"] = a.seed;
  info["topk"] = a.topk;
  info["category"] = a.category;
  info["exclude_category"] = a.exclude;
  info["frozen_plan"] = frozen.has_value();
  info["utterances"] = s.utterances;
  info["raw_distinct"] = s.raw_distinct;
  info["stripped_distinct"] = s.stripped_distinct;
  info["kept"] = s.kept;
  info["coverage"] = s.coverage;
  info["plan_fingerprint"] = prepared.plan.fingerprint();
  info["split"] = {{"train", split.train.utterance_count()},
                   {"val", split.val.utterance_count()},
                   {"test", split.test.utterance_count()}};
  write_text(out / "prep.json", info.dump(1) + "\n");
  guard.commit();

  std::cout << "# " << kVersion << "\n"
            << "utterances          " << s.utterances << "\n"
            << "distinct raw        " << s.raw_distinct << "\n"
            << "distinct stripped   " << s.stripped_distinct << "\n"
            << "kept combinations   " << s.kept << "\n"
            << "plan coverage       " << fmt4(s.coverage) << "\n"
            << "split utterances    " << split.train.utterance_count() << " / " << split.val.utterance_count()
            << " / " << split.test.utterance_count() << "\n"
            << "plan fingerprint    " << prepared.plan.fingerprint() << "\n";
  return 0;
}

// ---- featurize ------------------------------------------------------------------------

int cmd_featurize(const Common& c, const std::string& data, const std::string& split, const std::string& fit_split,
                  const std::string& out) {
  const auto cfg = resolve_config(c);
  const auto prepared = open_prepared(resolve_data_path(data));
  const auto lex = load_lexicons(c, cfg);
  const auto tfidf = fit_tfidf_on(prepared.load_split(fit_split));
  const auto fm = featurize_corpus(prepared.load_split(split), tfidf, lex);
  OutputGuard guard;
  guard.track(out);
  std::ostringstream ss;
  write_feature_csv(ss, fm);
  write_text(out, ss.str());
  guard.commit();
  std::cerr << "wrote " << fm.rows.size() << " feature rows to " << out << "\n";
  return 0;
}

// ---- train ----------------------------------------------------------------------------

int cmd_train(const Common& c, const std::string& data, const std::string& model, const std::string& out) {
  auto cfg = resolve_config(c);
  if (!model.empty()) cfg.set("model", model);
  const auto prepared = open_prepared(resolve_data_path(data));
  const auto lex = load_lexicons(c, cfg);
  OutputGuard guard;
  guard.track(out);
  const auto tm =
      train_model(cfg, prepared.load_split("train"), prepared.load_split("val"), prepared.plan_fingerprint(), lex,
                  &std::cerr);
  tm.save(out);
  guard.commit();
  std::cout << "# " << kVersion << "\nmodel " << model_kind_name(tm.kind) << " saved to " << out
            << " (config " << cfg.fingerprint() << ")\n";
  return 0;
}

// ---- eval -------------------------------------------------------------------------------

int cmd_eval(const Common& c, const std::string& model_dir, const std::string& data, const std::string& split,
             const std::string& out, std::string predictions, bool cross) {
  const auto tm = TrainedModel::load(model_dir);
  const auto prepared = open_prepared(resolve_data_path(data));
  const auto lex = load_lexicons(c, tm.config);
  auto corpus = prepared.load_split(split);
  corpus.name = prepared.dir.filename().string() + "/" + split;
  const auto ev = cross ? cross_evaluate(tm, corpus, prepared.plan_fingerprint(), split, lex)
                        : evaluate(tm, corpus, prepared.plan_fingerprint(), split, lex);
  const std::vector<eval::EvalReport> rows{ev.report};
  if (!out.empty()) {
    if (predictions.empty()) predictions = sibling(out, ".predictions.jsonl").string();
    OutputGuard guard;
    guard.track(out);
    guard.track(predictions);
    guard.track(sibling(out, ".config.txt"));
    write_text(out, ev.report.to_json().dump(1) + "\n");
    std::ostringstream ps;
    eval::write_predictions(ps, ev.records);
    write_text(predictions, ps.str());
    write_text(sibling(out, ".config.txt"), tm.config.dump());
    guard.commit();
  }
  std::cout << "# " << kVersion << " split=" << split << " samples=" << ev.report.samples << "\n"
            << eval::format_table(rows);
  return 0;
}

// ---- compare ----------------------------------------------------------------------------

int cmd_compare(const std::string& a, const std::string& b) {
  const auto ra = eval::EvalReport::from_json(nlohmann::json::parse(read_text(a)));
  const auto rb = eval::EvalReport::from_json(nlohmann::json::parse(read_text(b)));
  const auto t = eval::compare_reports(ra, rb);
  const std::vector<eval::EvalReport> rows{ra, rb};
  char buf[160];
  std::snprintf(buf, sizeof buf, "paired t-test: t = %.6g, p = %.6g, n = %zu, %s at 0.01\n", t.t, t.p, t.n,
                t.p < 0.01 ? "significant" : "not significant");
  std::cout << "# " << kVersion << "\n" << eval::format_table(rows) << buf;
  return 0;
}

// ---- importance -------------------------------------------------------------------------

int cmd_importance(const Common& c, const std::string& data, const std::string& split, const std::string& out) {
  const auto cfg = resolve_config(c);
  const auto prepared = open_prepared(resolve_data_path(data));
  const auto lex = load_lexicons(c, cfg);
  const auto rows = importance_ranking(cfg, prepared.load_split(split), lex);
  std::ostringstream table;
  table << "# " << kVersion << " feature importance (max-normalized)\n";
  nlohmann::ordered_json j;
  j["generator"] = kVersion;
  j["config_fingerprint"] = cfg.fingerprint();
  j["split"] = split;
  auto arr = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto name = std::string(feature_name(rows[i].feature));
    char buf[96];
    std::snprintf(buf, sizeof buf, "%2zu  %-16s %-10s %.4f\n", i + 1, name.c_str(),
                  std::string(group_name(feature_group(rows[i].feature))).c_str(), rows[i].score);
    table << buf;
    arr.push_back({{"rank", i + 1}, {"feature", name}, {"score", rows[i].score}});
  }
  j["ranking"] = arr;
  if (!out.empty()) {
    OutputGuard guard;
    guard.track(out);
    guard.track(sibling(out, ".config.txt"));
    write_text(out, j.dump(1) + "\n");
    write_text(sibling(out, ".config.txt"), cfg.dump());
    guard.commit();
  }
  std::cout << table.str();
  return 0;
}

// ---- ablate -------------------------------------------------------------------------------

int cmd_ablate(const Common& c, const std::string& data, const std::string& groups_arg, const std::string& model,
               const std::string& out) {
  auto cfg = resolve_config(c);
  if (!model.empty()) cfg.set("model", model);
  const auto prepared = open_prepared(resolve_data_path(data));
  const auto lex = load_lexicons(c, cfg);
  std::vector<std::string> groups;
  std::stringstream ss(groups_arg);
  for (std::string g; std::getline(ss, g, ',');) {
    if (!g.empty()) groups.push_back(g);
  }
  if (groups.empty()) throw Error("--groups needs at least one group");
  const auto train = prepared.load_split("train");
  const auto val = prepared.load_split("val");
  const auto test = prepared.load_split("test");

  std::vector<eval::EvalReport> reports;
  // Subsets by size, then in the order given.
  for (std::size_t size = 1; size <= groups.size(); ++size) {
    for (std::size_t mask = 1; mask < (1U << groups.size()); ++mask) {
      if (static_cast<std::size_t>(std::popcount(mask)) != size) continue;
      std::string features;
      for (std::size_t g = 0; g < groups.size(); ++g) {
        if (mask & (1U << g)) features += (features.empty() ? "" : ",") + groups[g];
      }
      auto run = cfg;
      run.set("features", features);
      const auto tm = train_model(run, train, val, prepared.plan_fingerprint(), lex);
      auto ev = evaluate(tm, test, prepared.plan_fingerprint(), "test", lex);
      ev.report.system = features;
      reports.push_back(ev.report);
      std::cerr << "ablation " << features << ": " << fmt4(ev.report.accuracy) << "\n";
    }
  }
  if (!out.empty()) {
    OutputGuard guard;
    guard.track(out);
    guard.track(sibling(out, ".config.txt"));
    nlohmann::ordered_json j;
    j["generator"] = kVersion;
    j["model"] = cfg.get("model");
    j["config_fingerprint"] = cfg.fingerprint();
    auto arr = nlohmann::ordered_json::array();
    for (const auto& r : reports) {
      arr.push_back({{"features", r.system},
                     {"accuracy", r.accuracy},
                     {"precision", r.prf.precision},
                     {"recall", r.prf.recall},
                     {"f1", r.prf.f1}});
    }
    j["runs"] = arr;
    write_text(out, j.dump(1) + "\n");
    write_text(sibling(out, ".config.txt"), cfg.dump());
    guard.commit();
  }
  std::cout << "# " << kVersion << " ablation with " << cfg.get("model") << "\n" << eval::format_table(reports);
  return 0;
}

// ---- embed ----------------------------------------------------------------------------------

int cmd_embed(const Common& c, const std::string& data, bool train_cbow, std::size_t dim, const std::string& load,
              const std::string& out) {
  const auto cfg = resolve_config(c);
  if (train_cbow == !load.empty()) throw Error("give exactly one of --train-cbow or --load");
  nn::EmbeddingMatrix emb;
  if (train_cbow) {
    if (data.empty()) throw Error("--train-cbow needs --data");
    const auto prepared = open_prepared(resolve_data_path(data));
    const auto corpus = prepared.load_split("train");
    std::vector<TokenList> docs;
    for (const auto& d : corpus.dialogs) {
      for (const auto& u : d.utterances) docs.push_back(tokenize(u.text));
    }
    nn::CbowConfig cc;
    cc.dim = dim;
    cc.window = cfg.count("cbow_window");
    cc.negatives = cfg.count("cbow_negatives");
    cc.epochs = cfg.count("cbow_epochs");
    cc.min_count = cfg.count("cbow_min_count");
    cc.lr = cfg.number("cbow_lr");
    cc.seed = cfg.seed();
    auto res = nn::train_cbow(docs, cc);
    for (std::size_t e = 0; e < res.epoch_loss.size(); ++e) {
      std::cerr << "cbow epoch " << e + 1 << " loss " << res.epoch_loss[e] << "\n";
    }
    emb = std::move(res.embeddings);
  } else {
    emb = nn::load_embeddings(load);
  }
  if (!out.empty()) {
    OutputGuard guard;
    guard.track(out);
    nn::save_embeddings(emb, out);
    guard.commit();
  }
  std::cout << "# " << kVersion << "\nembeddings: " << emb.vocab.size() << " rows x " << emb.dim()
            << " dims, vocabulary " << emb.vocab.fingerprint() << "\n";
  return 0;
}

// ---- sweep ---------------------------------------------------------------------------------

std::pair<std::string, std::vector<std::size_t>> parse_sweep(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) throw Error("--param must look like name:values");
  std::string name = spec.substr(0, colon);
  if (name == "maxlen") name = "max_len";
  const std::string values = spec.substr(colon + 1);
  std::vector<std::size_t> out;
  const auto parse = [&](const std::string& s) -> std::size_t {
    std::size_t used = 0;
    const auto v = std::stoull(s, &used);
    if (used != s.size()) throw Error("bad sweep value '" + s + "'");
    return v;
  };
  try {
    if (const auto dots = values.find(".."); dots != std::string::npos) {
      const auto slash = values.find('/');
      const auto lo = parse(values.substr(0, dots));
      const auto hi = parse(values.substr(dots + 2, slash == std::string::npos ? std::string::npos : slash - dots - 2));
      const std::size_t step = slash == std::string::npos ? 50 : parse(values.substr(slash + 1));
      if (step == 0 || hi < lo) throw Error("bad sweep range '" + values + "'");
      for (auto v = lo; v <= hi; v += step) out.push_back(v);
    } else {
      std::stringstream ss(values);
      for (std::string v; std::getline(ss, v, ',');) out.push_back(parse(v));
    }
  } catch (const std::logic_error&) {
    throw Error("bad sweep values '" + values + "'");
  }
  if (out.empty()) throw Error("sweep has no values");
  return {name, out};
}

int cmd_sweep(const Common& c, const std::string& data, const std::string& model, const std::string& param,
              const std::string& out) {
  auto cfg = resolve_config(c);
  if (!model.empty()) cfg.set("model", model);
  const auto [name, values] = parse_sweep(param);
  const auto prepared = open_prepared(resolve_data_path(data));
  const auto lex = load_lexicons(c, cfg);
  const auto train = prepared.load_split("train");
  const auto val = prepared.load_split("val");
  const auto test = prepared.load_split("test");
  std::ostringstream table;
  table << "# " << kVersion << " sweep " << name << " model=" << cfg.get("model") << "\n"
        << name << "\taccuracy\tf1\n";
  auto arr = nlohmann::ordered_json::array();
  for (auto v : values) {
    auto run = cfg;
    run.set(name, std::to_string(v));
    const auto tm = train_model(run, train, val, prepared.plan_fingerprint(), lex);
    const auto ev = evaluate(tm, test, prepared.plan_fingerprint(), "test", lex);
    table << v << "\t" << fmt4(ev.report.accuracy) << "\t" << fmt4(ev.report.prf.f1) << "\n";
    std::cerr << name << "=" << v << " accuracy " << fmt4(ev.report.accuracy) << "\n";
    arr.push_back({{"value", v}, {"accuracy", ev.report.accuracy}, {"f1", ev.report.prf.f1}});
  }
  if (!out.empty()) {
    OutputGuard guard;
    guard.track(out);
    guard.track(sibling(out, ".config.txt"));
    nlohmann::ordered_json j;
    j["generator"] = kVersion;
    j["param"] = name;
    j["model"] = cfg.get("model");
    j["config_fingerprint"] = cfg.fingerprint();
    j["points"] = arr;
    write_text(out, j.dump(1) + "\n");
    write_text(sibling(out, ".config.txt"), cfg.dump());
    guard.commit();
  }
  std::cout << table.str();
  return 0;
}

// ---- tag -------------------------------------------------------------------------------------

int cmd_tag(const Common& c, const std::string& model_dir) {
  const auto tm = TrainedModel::load(model_dir);
  const auto lex = load_lexicons(c, tm.config);
  const auto corpus = read_canonical_jsonl(std::cin, "stdin", false);
  const auto preds = tm.predict(corpus, lex, &std::cerr);
  for (const auto& p : preds) {
    nlohmann::ordered_json j;
    j["id"] = p.id;
    j["predicted"] = labels_json(p.labels);
    j["confidences"] = p.confidence;
    std::cout << j.dump() << "\n";
  }
  return 0;
}

// ---- synth / stats -----------------------------------------------------------------------------

int cmd_synth(std::size_t dialogs, std::uint64_t seed, const std::string& out) {
  SynthConfig sc;
  sc.dialogs = dialogs;
  sc.seed = seed;
  const auto corpus = synth_corpus(sc);
  std::ostringstream ss;
  write_msdialog_json(ss, corpus);
  OutputGuard guard;
  guard.track(out);
  write_text(out, ss.str());
  guard.commit();
  std::cerr << "wrote " << corpus.dialogs.size() << " dialogs (" << corpus.utterance_count() << " utterances) to "
            << out << "\n";
  return 0;
}

int cmd_stats(const std::string& in, const std::string& format_name) {
  const auto format = corpus_format_from_name(format_name);
  if (!format) throw Error("unknown corpus format '" + format_name + "'");
  const auto corpus = load_corpus(resolve_data_path(in), *format);
  const auto s = corpus_stats(corpus);
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "dialogs      %zu\nutterances   %zu\nwords        %zu\nturns        %zu..%zu\n"
                "avg turns    %.2f\navg words    %.2f\n",
                s.dialogs, s.utterances, s.words, s.min_turns, s.max_turns, s.avg_turns, s.avg_words);
  std::cout << "# " << kVersion << "\n" << buf;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"User intent prediction for information-seeking conversations"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  int status = 0;

  Common common;

  PrepArgs prep;
  auto* c_prep = app.add_subcommand("prep", "Label preprocessing and train/val/test split");
  c_prep->add_option("--in", prep.in, "corpus file")->required();
  c_prep->add_option("--format", prep.format, "msdialog or jsonl")->capture_default_str();
  c_prep->add_option("--out", prep.out, "output directory")->required();
  c_prep->add_option("--topk", prep.topk, "label combinations to keep")->capture_default_str();
  c_prep->add_option("--seed", prep.seed, "seed for the split and the rare-label sampler")->capture_default_str();
  c_prep->add_option("--plan", prep.plan, "apply this frozen plan.json instead of building one")
      ->check(CLI::ExistingFile);
  c_prep->add_option("--category", prep.category, "keep only dialogs of this category");
  c_prep->add_flag("--exclude-category", prep.exclude, "drop the --category dialogs instead of keeping them");
  c_prep->callback([&] { status = cmd_prep(prep); });

  std::string data, split = "test", fit_split = "train", out, model, model_dir, predictions;
  auto* c_feat = app.add_subcommand("featurize", "Write utterance features as CSV");
  add_common(c_feat, common);
  c_feat->add_option("--in", data, "prepared data directory")->required();
  c_feat->add_option("--split", split, "split to featurize")->capture_default_str();
  c_feat->add_option("--tfidf-fit-split", fit_split, "split the TF-IDF model is fit on")->capture_default_str();
  c_feat->add_option("--out", out, "CSV file")->required();
  c_feat->callback([&] { status = cmd_featurize(common, data, split, fit_split, out); });

  auto* c_train = app.add_subcommand("train", "Train a model on a prepared directory");
  add_common(c_train, common);
  c_train->add_option("--data", data, "prepared data directory")->required();
  c_train->add_option("--model", model, "model kind (overrides the config)");
  c_train->add_option("--out", out, "model directory")->required();
  c_train->callback([&] { status = cmd_train(common, data, model, out); });

  bool cross = false;
  auto* c_eval = app.add_subcommand("eval", "Evaluate a trained model on a split");
  add_common(c_eval, common);
  c_eval->add_option("--model", model_dir, "model directory")->required()->check(CLI::ExistingDirectory);
  c_eval->add_option("--data", data, "prepared data directory")->required();
  c_eval->add_option("--split", split, "split name")->capture_default_str();
  c_eval->add_option("--out", out, "report JSON");
  c_eval->add_option("--predictions", predictions, "prediction JSON-lines (default: next to the report)");
  c_eval->add_flag("--cross", cross, "the split comes from another corpus prepared with the model's plan");
  c_eval->callback([&] { status = cmd_eval(common, model_dir, data, split, out, predictions, cross); });

  std::string report_a, report_b;
  auto* c_cmp = app.add_subcommand("compare", "Paired t-test between two reports");
  c_cmp->add_option("--report-a", report_a)->required()->check(CLI::ExistingFile);
  c_cmp->add_option("--report-b", report_b)->required()->check(CLI::ExistingFile);
  c_cmp->callback([&] { status = cmd_compare(report_a, report_b); });

  std::string imp_split = "train";
  auto* c_imp = app.add_subcommand("importance", "Random-forest feature importance ranking");
  add_common(c_imp, common);
  c_imp->add_option("--data", data, "prepared data directory")->required();
  c_imp->add_option("--split", imp_split, "split to fit on")->capture_default_str();
  c_imp->add_option("--out", out, "ranking JSON");
  c_imp->callback([&] { status = cmd_importance(common, data, imp_split, out); });

  std::string groups = "content,structural,sentiment";
  auto* c_abl = app.add_subcommand("ablate", "Train and test on every combination of feature groups");
  add_common(c_abl, common);
  c_abl->add_option("--data", data, "prepared data directory")->required();
  c_abl->add_option("--groups", groups, "comma-separated groups")->capture_default_str();
  c_abl->add_option("--model", model, "classic model kind");
  c_abl->add_option("--out", out, "results JSON");
  c_abl->callback([&] { status = cmd_ablate(common, data, groups, model, out); });

  bool train_cbow = false;
  std::size_t dim = 100;
  std::string load;
  auto* c_emb = app.add_subcommand("embed", "Train CBOW embeddings or inspect an embedding file");
  add_common(c_emb, common);
  c_emb->add_flag("--train-cbow", train_cbow, "train on the prepared train split");
  c_emb->add_option("--data", data, "prepared data directory");
  c_emb->add_option("--dim", dim, "embedding dimension")->capture_default_str();
  c_emb->add_option("--load", load, "word2vec text file")->check(CLI::ExistingFile);
  c_emb->add_option("--out", out, "write embeddings here");
  c_emb->callback([&] { status = cmd_embed(common, data, train_cbow, dim, load, out); });

  std::string param;
  auto* c_sweep = app.add_subcommand("sweep", "Test accuracy as one hyper-parameter varies");
  add_common(c_sweep, common);
  c_sweep->add_option("--data", data, "prepared data directory")->required();
  c_sweep->add_option("--model", model, "model kind");
  c_sweep->add_option("--param", param, "filters:64,128,256 or maxlen:50..1000/50")->required();
  c_sweep->add_option("--out", out, "curve JSON");
  c_sweep->callback([&] { status = cmd_sweep(common, data, model, param, out); });

  auto* c_tag = app.add_subcommand("tag", "Tag canonical JSON-lines dialogs from stdin");
  add_common(c_tag, common);
  c_tag->add_option("--model", model_dir, "model directory")->required()->check(CLI::ExistingDirectory);
  c_tag->callback([&] { status = cmd_tag(common, model_dir); });

  std::size_t dialogs = 200;
  std::uint64_t seed = 0;
  auto* c_synth = app.add_subcommand("synth", "Generate a synthetic forum corpus");
  c_synth->add_option("--dialogs", dialogs)->capture_default_str();
  c_synth->add_option("--seed", seed)->capture_default_str();
  c_synth->add_option("--out", out, "JSON file")->required();
  c_synth->callback([&] { status = cmd_synth(dialogs, seed, out); });

  std::string stats_in, stats_format = "msdialog";
  auto* c_stats = app.add_subcommand("stats", "Corpus statistics");
  c_stats->add_option("--in", stats_in)->required();
  c_stats->add_option("--format", stats_format)->capture_default_str();
  c_stats->callback([&] { status = cmd_stats(stats_in, stats_format); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return status;
}
