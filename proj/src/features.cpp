#include "intent/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

namespace intent {

namespace {

constexpr std::array<std::string_view, kNumFeatures> kFeatureNames = {
    "init_sim", "dlg_sim",  "question_mark", "duplicate", "what",       "where",
    "when",     "why",      "who",           "how",       "abs_pos",    "norm_pos",
    "len",      "len_unique", "len_stem_unique", "is_starter", "thank", "exclam_mark",
    "feedback", "sent_pos", "sent_neu",      "sent_neg",  "lex_pos_count", "lex_neg_count"};

constexpr std::array<std::string_view, 6> kWh = {"what", "where", "when", "why", "who", "how"};

std::string lower_ascii(std::string_view s) {
  std::string out(s);
  for (auto& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

bool contains_any(std::string_view haystack, std::initializer_list<std::string_view> needles) {
  return std::any_of(needles.begin(), needles.end(),
                     [&](std::string_view n) { return haystack.find(n) != std::string_view::npos; });
}

double flag(bool b) { return b ? 1.0 : 0.0; }

void set(FeatureVector& v, Feature f, double x) { v[static_cast<std::size_t>(f)] = x; }

std::string dialog_text(const Dialog& d) {
  std::string all;
  for (const auto& u : d.utterances) {
    if (!all.empty()) all += '\n';
    all += u.text;
  }
  return all;
}

// Everything about one utterance that does not depend on the rest of the dialog.
FeatureVector local_features(const Utterance& u, const Lexicons& lex) {
  FeatureVector v{};
  const TokenList tokens = tokenize(u.text);
  const std::string lower = lower_ascii(u.text);

  set(v, Feature::question_mark, flag(u.text.find('?') != std::string::npos));
  set(v, Feature::exclam_mark, flag(u.text.find('!') != std::string::npos));
  set(v, Feature::duplicate, flag(contains_any(lower, {"same", "similar"})));
  set(v, Feature::feedback, flag(contains_any(lower, {"did not", "didn't", "does not", "doesn't"})));
  for (std::size_t i = 0; i < kWh.size(); ++i) {
    const bool present = std::find(tokens.begin(), tokens.end(), kWh[i]) != tokens.end();
    v[static_cast<std::size_t>(Feature::what) + i] = flag(present);
  }
  set(v, Feature::thank,
      flag(std::any_of(tokens.begin(), tokens.end(), [](const std::string& t) { return t.starts_with("thank"); })));

  const TokenList content = remove_stopwords(tokens);
  std::set<std::string> unique(content.begin(), content.end());
  std::set<std::string> stems;
  for (const auto& t : unique) stems.insert(stem(t));
  set(v, Feature::len, static_cast<double>(content.size()));
  set(v, Feature::len_unique, static_cast<double>(unique.size()));
  set(v, Feature::len_stem_unique, static_cast<double>(stems.size()));
  set(v, Feature::is_starter, flag(u.is_starter));

  const auto sent = sentiment_scores(tokens, lex.valence);
  set(v, Feature::sent_pos, sent.pos);
  set(v, Feature::sent_neu, sent.neu);
  set(v, Feature::sent_neg, sent.neg);
  const auto op = opinion_counts(tokens, lex.opinion);
  set(v, Feature::lex_pos_count, static_cast<double>(op.positive));
  set(v, Feature::lex_neg_count, static_cast<double>(op.negative));
  return v;
}

void structural(FeatureVector& v, const Utterance& u, const Dialog& d) {
  set(v, Feature::abs_pos, static_cast<double>(u.pos));
  set(v, Feature::norm_pos, static_cast<double>(u.pos) / static_cast<double>(d.utterances.size()));
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  cells.push_back(std::move(cur));
  return cells;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string_view feature_name(std::size_t dim) { return kFeatureNames.at(dim); }

std::string_view group_name(FeatureGroup g) {
  switch (g) {
    case FeatureGroup::content: return "content";
    case FeatureGroup::structural: return "structural";
    case FeatureGroup::sentiment: return "sentiment";
  }
  return "";
}

FeatureGroup feature_group(std::size_t dim) {
  if (dim >= kNumFeatures) throw FeatureError("feature dimension out of range");
  if (dim <= static_cast<std::size_t>(Feature::how)) return FeatureGroup::content;
  if (dim <= static_cast<std::size_t>(Feature::is_starter)) return FeatureGroup::structural;
  return FeatureGroup::sentiment;
}

std::vector<std::size_t> group_columns(std::span<const FeatureGroup> groups) {
  std::vector<std::size_t> cols;
  for (std::size_t d = 0; d < kNumFeatures; ++d) {
    if (std::find(groups.begin(), groups.end(), feature_group(d)) != groups.end()) cols.push_back(d);
  }
  return cols;
}

FeatureVector extract_features(const Dialog& dialog, std::size_t index, const TfIdfModel& tfidf,
                               const Lexicons& lexicons) {
  if (index >= dialog.utterances.size()) throw FeatureError("utterance index out of range");
  const Utterance& u = dialog.utterances[index];
  FeatureVector v = local_features(u, lexicons);
  structural(v, u, dialog);
  const auto uv = tfidf.vectorize(u.text);
  set(v, Feature::init_sim, cosine(uv, tfidf.vectorize(dialog.utterances.front().text)));
  set(v, Feature::dlg_sim, cosine(uv, tfidf.vectorize(dialog_text(dialog))));
  return v;
}

FeatureVector extract_features(const Utterance& u, const Dialog& dialog, const TfIdfModel& tfidf,
                               const Lexicons& lexicons) {
  for (std::size_t i = 0; i < dialog.utterances.size(); ++i) {
    const auto& candidate = dialog.utterances[i];
    if (candidate.pos == u.pos && candidate.dialog_id == u.dialog_id && u.dialog_id == dialog.dialog_id) {
      return extract_features(dialog, i, tfidf, lexicons);
    }
  }
  throw FeatureError("utterance " + u.id() + " is not part of dialog " + dialog.dialog_id);
}

FeatureMatrix featurize_corpus(const Corpus& corpus, const TfIdfModel& tfidf, const Lexicons& lexicons) {
  FeatureMatrix m;
  m.tfidf_fingerprint = tfidf.fingerprint();
  m.rows.reserve(corpus.utterance_count());
  for (const auto& d : corpus.dialogs) {
    std::vector<SparseVector> vecs;
    vecs.reserve(d.utterances.size());
    for (const auto& u : d.utterances) vecs.push_back(tfidf.vectorize(u.text));
    const auto whole = tfidf.vectorize(dialog_text(d));
    for (std::size_t i = 0; i < d.utterances.size(); ++i) {
      const auto& u = d.utterances[i];
      FeatureVector v = local_features(u, lexicons);
      structural(v, u, d);
      set(v, Feature::init_sim, cosine(vecs[i], vecs.front()));
      set(v, Feature::dlg_sim, cosine(vecs[i], whole));
      m.rows.push_back(v);
      m.ids.push_back({u.dialog_id, u.pos});
    }
  }
  return m;
}

TfIdfModel fit_tfidf_on(const Corpus& corpus) {
  std::vector<std::string> texts;
  texts.reserve(corpus.utterance_count());
  for (const auto& d : corpus.dialogs) {
    for (const auto& u : d.utterances) texts.push_back(u.text);
  }
  return TfIdfModel::fit_texts(texts);
}

void check_feature_invariants(const FeatureVector& v) {
  auto fail = [](std::size_t d, const char* what) {
    throw FeatureError(std::string(feature_name(d)) + ": " + what);
  };
  for (std::size_t d = 0; d < kNumFeatures; ++d) {
    if (!std::isfinite(v[d])) fail(d, "not finite");
  }
  for (auto f : {Feature::question_mark, Feature::duplicate, Feature::what, Feature::where, Feature::when,
                 Feature::why, Feature::who, Feature::how, Feature::is_starter, Feature::thank,
                 Feature::exclam_mark, Feature::feedback}) {
    const double x = v[static_cast<std::size_t>(f)];
    if (x != 0.0 && x != 1.0) fail(static_cast<std::size_t>(f), "not binary");
  }
  for (auto f : {Feature::init_sim, Feature::dlg_sim, Feature::sent_pos, Feature::sent_neu, Feature::sent_neg}) {
    const double x = v[static_cast<std::size_t>(f)];
    if (x < 0.0 || x > 1.0) fail(static_cast<std::size_t>(f), "outside [0,1]");
  }
  const double np = v[static_cast<std::size_t>(Feature::norm_pos)];
  if (!(np > 0.0 && np <= 1.0)) fail(static_cast<std::size_t>(Feature::norm_pos), "outside (0,1]");
  for (auto f : {Feature::abs_pos, Feature::len, Feature::len_unique, Feature::len_stem_unique,
                 Feature::lex_pos_count, Feature::lex_neg_count}) {
    const double x = v[static_cast<std::size_t>(f)];
    if (x < 0.0 || x != std::floor(x)) fail(static_cast<std::size_t>(f), "not a non-negative integer");
  }
}

void write_feature_csv(std::ostream& out, const FeatureMatrix& m) {
  out << "# " << kVersion << " tfidf=" << m.tfidf_fingerprint << '\n';
  out << "dialog_id,pos";
  for (auto n : kFeatureNames) out << ',' << n;
  out << '\n';
  char buf[32];
  for (std::size_t r = 0; r < m.rows.size(); ++r) {
    out << csv_escape(m.ids[r].dialog_id) << ',' << m.ids[r].pos;
    for (double x : m.rows[r]) {
      std::snprintf(buf, sizeof buf, "%.6g", x);
      out << ',' << buf;
    }
    out << '\n';
  }
}

FeatureMatrix read_feature_csv(std::istream& in) {
  FeatureMatrix m;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (auto at = line.find("tfidf="); at != std::string::npos) {
        auto end = line.find(' ', at);
        m.tfidf_fingerprint = line.substr(at + 6, end == std::string::npos ? std::string::npos : end - at - 6);
      }
      continue;
    }
    auto cells = split_csv_line(line);
    if (!header_seen) {
      if (cells.size() != kNumFeatures + 2 || cells[0] != "dialog_id" || cells[1] != "pos") {
        throw FeatureError("feature csv: unexpected header");
      }
      for (std::size_t d = 0; d < kNumFeatures; ++d) {
        if (cells[d + 2] != kFeatureNames[d]) throw FeatureError("feature csv: unexpected column " + cells[d + 2]);
      }
      header_seen = true;
      continue;
    }
    if (cells.size() != kNumFeatures + 2) {
      throw FeatureError("feature csv line " + std::to_string(lineno) + ": expected 26 cells");
    }
    FeatureVector v{};
    try {
      for (std::size_t d = 0; d < kNumFeatures; ++d) v[d] = std::stod(cells[d + 2]);
      m.ids.push_back({cells[0], std::stoi(cells[1])});
    } catch (const std::exception&) {
      throw FeatureError("feature csv line " + std::to_string(lineno) + ": bad number");
    }
    m.rows.push_back(v);
  }
  if (!header_seen) throw FeatureError("feature csv: missing header");
  return m;
}

}  // namespace intent
