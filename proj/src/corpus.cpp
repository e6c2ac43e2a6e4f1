#include "intent/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

namespace intent {

namespace {

using ojson = nlohmann::ordered_json;

bool is_ws(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

std::string lower_ascii(std::string_view s) {
  std::string out(s);
  for (auto& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

[[noreturn]] void schema_error(const std::string& where, const std::string& field) {
  throw CorpusError(CorpusError::Kind::schema, where + ": missing or invalid field '" + field + "'");
}

template <class Json>
const Json& require(const Json& obj, const char* field, const std::string& where) {
  auto it = obj.find(field);
  if (it == obj.end() || it->is_null()) schema_error(where, field);
  return *it;
}

std::string as_string(const auto& v, const char* field, const std::string& where) {
  if (v.is_string()) return v.template get<std::string>();
  schema_error(where, field);
}

int as_pos(const auto& v, const char* field, const std::string& where) {
  if (v.is_number_integer()) return v.template get<int>();
  if (v.is_string()) {
    try {
      std::size_t used = 0;
      int p = std::stoi(v.template get<std::string>(), &used);
      if (used == v.template get<std::string>().size()) return p;
    } catch (const std::exception&) {
    }
  }
  schema_error(where, field);
}

std::string tags_string(const auto& v, const std::string& where) {
  if (v.is_string()) return v.template get<std::string>();
  if (v.is_array()) {
    std::string out;
    for (const auto& t : v) {
      if (!t.is_string()) schema_error(where, "tags");
      if (!out.empty()) out += ' ';
      out += t.template get<std::string>();
    }
    return out;
  }
  schema_error(where, "tags");
}

void validate_tags(const Utterance& u, const std::string& where) {
  try {
    (void)parse_tags(u.raw_tags);
  } catch (const LabelError& e) {
    throw CorpusError(CorpusError::Kind::schema, where + ": " + e.what());
  }
}

void finish_dialog(Dialog& d) {
  std::sort(d.utterances.begin(), d.utterances.end(),
            [](const Utterance& a, const Utterance& b) { return a.pos < b.pos; });
  for (std::size_t i = 1; i < d.utterances.size(); ++i) {
    if (d.utterances[i].pos == d.utterances[i - 1].pos) {
      throw CorpusError(CorpusError::Kind::schema, "dialog " + d.dialog_id + ": duplicate utterance_pos " +
                                                       std::to_string(d.utterances[i].pos));
    }
  }
  for (const auto& u : d.utterances) {
    if (u.pos < 1) {
      throw CorpusError(CorpusError::Kind::schema, "dialog " + d.dialog_id + ": utterance_pos must be >= 1");
    }
  }
}

}  // namespace

std::string_view actor_name(Actor a) { return a == Actor::seeker ? "seeker" : "agent"; }

bool Utterance::degenerate() const {
  return std::all_of(text.begin(), text.end(), [](char c) { return is_ws(static_cast<unsigned char>(c)); });
}

std::string Utterance::id() const { return dialog_id + ":" + std::to_string(pos); }

std::size_t Corpus::utterance_count() const {
  std::size_t n = 0;
  for (const auto& d : dialogs) n += d.utterances.size();
  return n;
}

const Dialog* Corpus::find(std::string_view dialog_id) const {
  for (const auto& d : dialogs) {
    if (d.dialog_id == dialog_id) return &d;
  }
  return nullptr;
}

std::optional<CorpusFormat> corpus_format_from_name(std::string_view name) {
  if (name == "msdialog_json" || name == "msdialog") return CorpusFormat::msdialog_json;
  if (name == "canonical_jsonl" || name == "jsonl") return CorpusFormat::canonical_jsonl;
  return std::nullopt;
}

Corpus read_msdialog_json(std::istream& in, std::string name) {
  ojson root;
  try {
    root = ojson::parse(in);
  } catch (const ojson::parse_error& e) {
    throw CorpusError(CorpusError::Kind::format,
                      "msdialog json parse error at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  if (!root.is_object()) throw CorpusError(CorpusError::Kind::format, "msdialog json: top level must be an object");

  Corpus corpus;
  corpus.name = std::move(name);
  for (const auto& [key, obj] : root.items()) {
    const std::string where = "dialog " + key;
    if (!obj.is_object()) schema_error(where, "utterances");
    Dialog d;
    d.dialog_id = key;
    if (auto it = obj.find("title"); it != obj.end() && it->is_string()) d.title = it->template get<std::string>();
    if (auto it = obj.find("category"); it != obj.end() && it->is_string()) {
      d.category = it->template get<std::string>();
    }
    const auto& utts = require(obj, "utterances", where);
    if (!utts.is_array() || utts.empty()) schema_error(where, "utterances");

    std::vector<std::string> actor_types;
    std::vector<std::optional<std::string>> authors;
    for (std::size_t i = 0; i < utts.size(); ++i) {
      const auto& uo = utts[i];
      const std::string uwhere = where + " utterance " + std::to_string(i);
      if (!uo.is_object()) schema_error(uwhere, "utterance");
      Utterance u;
      u.dialog_id = key;
      u.text = as_string(require(uo, "utterance", uwhere), "utterance", uwhere);
      actor_types.push_back(lower_ascii(as_string(require(uo, "actor_type", uwhere), "actor_type", uwhere)));
      u.pos = as_pos(require(uo, "utterance_pos", uwhere), "utterance_pos", uwhere);
      u.raw_tags = tags_string(require(uo, "tags", uwhere), uwhere);
      validate_tags(u, uwhere);
      std::optional<std::string> author;
      if (auto it = uo.find("user_id"); it != uo.end() && !it->is_null()) {
        author = it->is_string() ? it->template get<std::string>() : it->dump();
      }
      authors.push_back(author);
      u.actor = actor_types.back() == "user" ? Actor::seeker : Actor::agent;
      d.utterances.push_back(std::move(u));
    }

    // The starter is whoever wrote pos 1: compare author ids when every
    // utterance carries one, otherwise fall back to the actor type.
    std::size_t first = 0;
    for (std::size_t i = 1; i < d.utterances.size(); ++i) {
      if (d.utterances[i].pos < d.utterances[first].pos) first = i;
    }
    const bool have_authors =
        std::all_of(authors.begin(), authors.end(), [](const auto& a) { return a.has_value(); });
    for (std::size_t i = 0; i < d.utterances.size(); ++i) {
      d.utterances[i].is_starter =
          have_authors ? (*authors[i] == *authors[first]) : (actor_types[i] == actor_types[first]);
    }
    finish_dialog(d);
    corpus.dialogs.push_back(std::move(d));
  }
  return corpus;
}

Corpus read_canonical_jsonl(std::istream& in, std::string name, bool require_tags) {
  Corpus corpus;
  corpus.name = std::move(name);
  std::unordered_map<std::string, std::size_t> index;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (std::all_of(line.begin(), line.end(), [](char c) { return is_ws(static_cast<unsigned char>(c)); })) {
      continue;
    }
    const std::string where = "line " + std::to_string(lineno);
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw CorpusError(CorpusError::Kind::format,
                        where + ", offset " + std::to_string(e.byte) + ": " + e.what());
    }
    if (!obj.is_object()) throw CorpusError(CorpusError::Kind::format, where + ": expected a JSON object");

    Utterance u;
    u.dialog_id = as_string(require(obj, "dialog_id", where), "dialog_id", where);
    u.pos = as_pos(require(obj, "pos", where), "pos", where);
    const std::string actor = as_string(require(obj, "actor", where), "actor", where);
    if (actor == "seeker") {
      u.actor = Actor::seeker;
    } else if (actor == "agent") {
      u.actor = Actor::agent;
    } else {
      schema_error(where, "actor");
    }
    const auto& starter = require(obj, "is_starter", where);
    if (!starter.is_boolean()) schema_error(where, "is_starter");
    u.is_starter = starter.get<bool>();
    u.text = as_string(require(obj, "text", where), "text", where);
    if (require_tags || obj.contains("tags")) u.raw_tags = tags_string(require(obj, "tags", where), where);
    validate_tags(u, where);

    auto [it, inserted] = index.try_emplace(u.dialog_id, corpus.dialogs.size());
    if (inserted) {
      Dialog d;
      d.dialog_id = u.dialog_id;
      corpus.dialogs.push_back(std::move(d));
    }
    Dialog& d = corpus.dialogs[it->second];
    if (auto t = obj.find("title"); t != obj.end() && t->is_string() && d.title.empty()) {
      d.title = t->get<std::string>();
    }
    if (auto c = obj.find("category"); c != obj.end() && c->is_string() && d.category.empty()) {
      d.category = c->get<std::string>();
    }
    d.utterances.push_back(std::move(u));
  }
  if (in.bad()) throw CorpusError(CorpusError::Kind::io, "read error");
  for (auto& d : corpus.dialogs) finish_dialog(d);
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorpusError(CorpusError::Kind::io, "cannot open " + path.string());
  auto name = path.stem().string();
  try {
    return format == CorpusFormat::msdialog_json ? read_msdialog_json(in, name) : read_canonical_jsonl(in, name);
  } catch (const CorpusError& e) {
    throw CorpusError(e.kind(), path.string() + ": " + e.what());
  }
}

void write_canonical_jsonl(std::ostream& out, const Corpus& corpus) {
  for (const auto& d : corpus.dialogs) {
    for (const auto& u : d.utterances) {
      ojson j;
      j["dialog_id"] = u.dialog_id;
      j["pos"] = u.pos;
      j["actor"] = actor_name(u.actor);
      j["is_starter"] = u.is_starter;
      j["text"] = u.text;
      j["tags"] = u.raw_tags;
      if (!d.title.empty()) j["title"] = d.title;
      if (!d.category.empty()) j["category"] = d.category;
      out << j.dump() << '\n';
    }
  }
}

void save_canonical_jsonl(const std::filesystem::path& path, const Corpus& corpus) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CorpusError(CorpusError::Kind::io, "cannot write " + path.string());
  write_canonical_jsonl(out, corpus);
  if (!out) throw CorpusError(CorpusError::Kind::io, "write failed: " + path.string());
}

RatioSplit reference_ratio_split(std::uint64_t seed) {
  constexpr double total = 10020.0;
  return RatioSplit{8064.0 / total, 986.0 / total, 970.0 / total, seed};
}

SplitCorpus split_corpus(const Corpus& corpus, const SplitSpec& spec) {
  SplitCorpus out;
  out.train.name = corpus.name + "/train";
  out.val.name = corpus.name + "/val";
  out.test.name = corpus.name + "/test";

  if (const auto* ids = std::get_if<IdListSplit>(&spec)) {
    std::unordered_map<std::string, int> where;
    auto assign = [&](const std::vector<std::string>& list, int which) {
      for (const auto& id : list) {
        if (!where.try_emplace(id, which).second) {
          throw CorpusError(CorpusError::Kind::split, "dialog " + id + " listed in more than one split");
        }
      }
    };
    assign(ids->train, 0);
    assign(ids->val, 1);
    assign(ids->test, 2);
    std::size_t matched = 0;
    for (const auto& d : corpus.dialogs) {
      auto it = where.find(d.dialog_id);
      if (it == where.end()) {
        throw CorpusError(CorpusError::Kind::split, "dialog " + d.dialog_id + " is not in any split list");
      }
      ++matched;
      (it->second == 0 ? out.train : it->second == 1 ? out.val : out.test).dialogs.push_back(d);
    }
    if (matched != where.size()) {
      throw CorpusError(CorpusError::Kind::split, "split lists name dialogs that are not in the corpus");
    }
    return out;
  }

  const auto& r = std::get<RatioSplit>(spec);
  if (r.train < 0 || r.val < 0 || r.test < 0 || std::abs(r.train + r.val + r.test - 1.0) > 1e-9) {
    throw CorpusError(CorpusError::Kind::split, "split ratios must be non-negative and sum to 1");
  }
  std::vector<std::size_t> order(corpus.dialogs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(r.seed);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);

  const double total = static_cast<double>(corpus.utterance_count());
  const double train_target = r.train * total;
  const double val_target = (r.train + r.val) * total;
  std::size_t assigned = 0;
  for (auto idx : order) {
    const auto& d = corpus.dialogs[idx];
    const double before = static_cast<double>(assigned);
    Corpus& dst = before < train_target ? out.train : before < val_target ? out.val : out.test;
    dst.dialogs.push_back(d);
    assigned += d.utterances.size();
  }
  // Keep each split in source order so outputs do not depend on the shuffle.
  std::unordered_map<std::string, std::size_t> rank;
  for (std::size_t i = 0; i < corpus.dialogs.size(); ++i) rank[corpus.dialogs[i].dialog_id] = i;
  for (Corpus* c : {&out.train, &out.val, &out.test}) {
    std::sort(c->dialogs.begin(), c->dialogs.end(),
              [&](const Dialog& a, const Dialog& b) { return rank[a.dialog_id] < rank[b.dialog_id]; });
  }
  return out;
}

CorpusStats corpus_stats(const Corpus& corpus) {
  if (corpus.dialogs.empty()) throw CorpusError(CorpusError::Kind::empty, "corpus has no dialogs");
  CorpusStats s;
  s.dialogs = corpus.dialogs.size();
  s.min_turns = corpus.dialogs.front().utterances.size();
  for (const auto& d : corpus.dialogs) {
    s.utterances += d.utterances.size();
    s.min_turns = std::min(s.min_turns, d.utterances.size());
    s.max_turns = std::max(s.max_turns, d.utterances.size());
    for (const auto& u : d.utterances) {
      bool in_word = false;
      for (unsigned char c : u.text) {
        if (is_ws(c)) {
          in_word = false;
        } else if (!in_word) {
          in_word = true;
          ++s.words;
        }
      }
    }
  }
  s.avg_turns = static_cast<double>(s.utterances) / static_cast<double>(s.dialogs);
  s.avg_words = s.utterances ? static_cast<double>(s.words) / static_cast<double>(s.utterances) : 0.0;
  return s;
}

Corpus filter_by_category(const Corpus& corpus, std::string_view category, bool exclude) {
  Corpus out;
  out.name = corpus.name + (exclude ? "/not-" : "/") + std::string(category);
  for (const auto& d : corpus.dialogs) {
    if ((d.category == category) != exclude) out.dialogs.push_back(d);
  }
  return out;
}

}  // namespace intent
