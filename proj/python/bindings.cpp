#include <pybind11/pybind11.h>
#include <pybind11/numpy.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <fstream>
#include <sstream>

#include "intent/eval.hpp"
#include "intent/pipeline.hpp"
#include "intent/synth.hpp"

namespace py = pybind11;
using namespace intent;

namespace {

py::object to_py(const nlohmann::ordered_json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

std::vector<std::string> names(LabelSet s) {
  std::vector<std::string> out;
  for (auto c : s.codes()) out.emplace_back(code_name(c));
  return out;
}

LabelSet from_names(const std::vector<std::string>& codes) {
  LabelSet s;
  for (const auto& n : codes) {
    const auto c = code_from_name(n);
    if (!c) throw LabelError("unknown intent code '" + n + "'");
    s.insert(*c);
  }
  return s;
}

RunConfig make_config(const std::map<std::string, std::string>& values) {
  RunConfig cfg;
  for (const auto& [k, v] : values) cfg.set(k, v);
  return cfg;
}

// Lexicons are reloaded per call only when the directory changes.
const Lexicons& lexicons(const std::string& dir) {
  static std::string loaded;
  static Lexicons lex;
  if (loaded != dir) {
    lex = Lexicons::load_dir(dir);
    loaded = dir;
  }
  return lex;
}

struct Prepared {
  Corpus corpus;
  std::string plan_json;
  std::string fingerprint;
  LabelPrepStats stats;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Utterance intent prediction for information-seeking dialogs";

  py::register_exception<Error>(m, "IntentError", PyExc_RuntimeError);

  py::class_<Corpus>(m, "Corpus")
      .def_readonly("name", &Corpus::name)
      .def_property_readonly("dialog_count", [](const Corpus& c) { return c.dialogs.size(); })
      .def_property_readonly("utterance_count", &Corpus::utterance_count)
      .def("utterance_ids",
           [](const Corpus& c) {
             std::vector<std::string> ids;
             for (const auto& d : c.dialogs)
               for (const auto& u : d.utterances) ids.push_back(u.id());
             return ids;
           })
      .def("texts",
           [](const Corpus& c) {
             std::vector<std::string> t;
             for (const auto& d : c.dialogs)
               for (const auto& u : d.utterances) t.push_back(u.text);
             return t;
           })
      .def("gold",
           [](const Corpus& c) {
             std::vector<std::vector<std::string>> g;
             for (const auto& d : c.dialogs)
               for (const auto& u : d.utterances) g.push_back(names(gold_labels(u)));
             return g;
           },
           "Final label sets of a prepared corpus")
      .def("filter_category", [](const Corpus& c, const std::string& cat, bool exclude) {
        return filter_by_category(c, cat, exclude);
      }, py::arg("category"), py::arg("exclude") = false)
      .def("save_jsonl", [](const Corpus& c, const std::filesystem::path& p) { save_canonical_jsonl(p, c); })
      .def("__len__", &Corpus::utterance_count);

  m.def("load_corpus", [](const std::filesystem::path& path, const std::string& format) {
    const auto f = corpus_format_from_name(format);
    if (!f) throw CorpusError(CorpusError::Kind::format, "unknown corpus format '" + format + "'");
    return load_corpus(path, *f);
  }, py::arg("path"), py::arg("format") = "msdialog");

  m.def("synth_corpus", [](std::size_t dialogs, std::uint64_t seed) {
    SynthConfig sc;
    sc.dialogs = dialogs;
    sc.seed = seed;
    return synth_corpus(sc);
  }, py::arg("dialogs") = 200, py::arg("seed") = 0);

  py::class_<Prepared>(m, "Prepared")
      .def_readonly("corpus", &Prepared::corpus)
      .def_readonly("plan_json", &Prepared::plan_json)
      .def_readonly("fingerprint", &Prepared::fingerprint)
      .def_property_readonly("stats", [](const Prepared& p) {
        py::dict d;
        d["utterances"] = p.stats.utterances;
        d["raw_distinct"] = p.stats.raw_distinct;
        d["stripped_distinct"] = p.stats.stripped_distinct;
        d["kept"] = p.stats.kept;
        d["coverage"] = p.stats.coverage;
        return d;
      });

  m.def("prepare_labels",
        [](const Corpus& raw, std::size_t top_k, std::uint64_t seed, const std::optional<std::string>& plan_json) {
          TruncationPolicy policy;
          policy.top_k = top_k;
          std::optional<TruncationPlan> frozen;
          if (plan_json) frozen = TruncationPlan::from_json(*plan_json);
          auto p = prepare_labels(raw, policy, seed, frozen ? &*frozen : nullptr);
          return Prepared{std::move(p.corpus), p.plan.to_json(), p.plan.fingerprint(), p.stats};
        },
        py::arg("corpus"), py::arg("top_k") = 32, py::arg("seed") = 0, py::arg("plan_json") = py::none(),
        "Strip non-QA tags and truncate to the top label combinations (or a frozen plan)");

  m.def("split", [](const Corpus& c, std::uint64_t seed) {
    auto s = split_corpus(c, reference_ratio_split(seed));
    return py::make_tuple(std::move(s.train), std::move(s.val), std::move(s.test));
  }, py::arg("corpus"), py::arg("seed") = 0, "80/10/10 dialog-level split");

  m.def("default_lexicon_dir", [] { return default_lexicon_dir().string(); });
  m.def("tokenize", &tokenize);
  m.def("stem", &stem);

  m.def("feature_names", [] {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < kNumFeatures; ++i) out.emplace_back(feature_name(i));
    return out;
  });

  m.def("features", [](const Corpus& c, const std::string& lex_dir, const Corpus* tfidf_corpus) {
    const auto tfidf = fit_tfidf_on(tfidf_corpus ? *tfidf_corpus : c);
    const auto fm = featurize_corpus(c, tfidf, lexicons(lex_dir));
    py::array_t<double> out({fm.rows.size(), kNumFeatures});
    auto v = out.mutable_unchecked<2>();
    for (std::size_t r = 0; r < fm.rows.size(); ++r)
      for (std::size_t k = 0; k < kNumFeatures; ++k) v(r, k) = fm.rows[r][k];
    return out;
  }, py::arg("corpus"), py::arg("lexicons"), py::arg("tfidf_corpus") = nullptr,
     "Utterance features; the TF-IDF model is fit on tfidf_corpus (default: corpus itself)");

  m.def("model_kinds", [] {
    std::vector<std::string> out;
    for (auto k : all_model_kinds()) out.emplace_back(model_kind_name(k));
    return out;
  });

  py::class_<TrainedModel>(m, "Model")
      .def_property_readonly("kind", [](const TrainedModel& t) { return std::string(model_kind_name(t.kind)); })
      .def_readonly("plan_fingerprint", &TrainedModel::plan_fingerprint)
      .def_property_readonly("config", [](const TrainedModel& t) { return t.config.values(); })
      .def("predict", [](const TrainedModel& t, const Corpus& c, const std::string& lex_dir) {
        py::list out;
        for (const auto& p : t.predict(c, lexicons(lex_dir))) {
          py::dict d;
          d["id"] = p.id;
          d["labels"] = names(p.labels);
          d["confidence"] = std::vector<double>(p.confidence.begin(), p.confidence.end());
          out.append(d);
        }
        return out;
      }, py::arg("corpus"), py::arg("lexicons"))
      .def("save", &TrainedModel::save)
      .def_static("load", &TrainedModel::load);

  m.def("train",
        [](const std::map<std::string, std::string>& config, const Corpus& train, const Corpus& val,
           const std::string& plan_fingerprint, const std::string& lex_dir) {
          const auto cfg = make_config(config);
          const auto& lex = lexicons(lex_dir);
          py::gil_scoped_release release;
          return train_model(cfg, train, val, plan_fingerprint, lex);
        },
        py::arg("config"), py::arg("train"), py::arg("val"), py::arg("plan_fingerprint"), py::arg("lexicons"));

  m.def("evaluate",
        [](const TrainedModel& model, const Corpus& split, const std::string& fingerprint, const std::string& name,
           const std::string& lex_dir) {
          return to_py(evaluate(model, split, fingerprint, name, lexicons(lex_dir)).report.to_json());
        },
        py::arg("model"), py::arg("split"), py::arg("plan_fingerprint"), py::arg("split_name") = "test",
        py::arg("lexicons"));

  m.def("importance",
        [](const std::map<std::string, std::string>& config, const Corpus& train, const std::string& lex_dir) {
          py::list out;
          for (const auto& r : importance_ranking(make_config(config), train, lexicons(lex_dir)))
            out.append(py::make_tuple(std::string(feature_name(r.feature)), r.score));
          return out;
        },
        py::arg("config"), py::arg("train"), py::arg("lexicons"));

  m.def("sample_accuracy", [](const std::vector<std::string>& pred, const std::vector<std::string>& gold) {
    return eval::sample_accuracy(from_names(pred), from_names(gold));
  });

  m.def("micro_prf", [](const std::vector<std::vector<std::string>>& pred,
                        const std::vector<std::vector<std::string>>& gold) {
    if (pred.size() != gold.size()) throw eval::EvalError("prediction and gold lists differ in length");
    std::vector<eval::PredictionRecord> rs;
    for (std::size_t i = 0; i < pred.size(); ++i)
      rs.push_back({std::to_string(i), from_names(pred[i]), std::nullopt, from_names(gold[i])});
    const auto prf = eval::micro_prf(rs);
    return py::make_tuple(prf.precision, prf.recall, prf.f1);
  });

  m.def("paired_ttest", [](const std::vector<double>& a, const std::vector<double>& b) {
    const auto r = eval::paired_ttest(a, b);
    return py::make_tuple(r.t, r.p);
  });

  m.attr("__version__") = "0.3.0";
}
