#include "intent/textproc.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

namespace intent {

namespace {

// NLTK's English list with contraction fragments that the tokenizer can
// never produce ("don't" becomes "don" + "t") left out as whole entries.
constexpr auto kStopwords = std::to_array<std::string_view>({
    "i",          "me",      "my",      "myself",  "we",      "our",     "ours",    "ourselves", "you",
    "your",       "yours",   "yourself", "yourselves", "he",   "him",     "his",     "himself",   "she",
    "her",        "hers",    "herself", "it",      "its",     "itself",  "they",    "them",      "their",
    "theirs",     "themselves", "what",  "which",   "who",     "whom",    "this",    "that",      "these",
    "those",      "am",      "is",      "are",     "was",     "were",    "be",      "been",      "being",
    "have",       "has",     "had",     "having",  "do",      "does",    "did",     "doing",     "a",
    "an",         "the",     "and",     "but",     "if",      "or",      "because", "as",        "until",
    "while",      "of",      "at",      "by",      "for",     "with",    "about",   "against",   "between",
    "into",       "through", "during",  "before",  "after",   "above",   "below",   "to",        "from",
    "up",         "down",    "in",      "out",     "on",      "off",     "over",    "under",     "again",
    "further",    "then",    "once",    "here",    "there",   "when",    "where",   "why",       "how",
    "all",        "any",     "both",    "each",    "few",     "more",    "most",    "other",     "some",
    "such",       "no",      "nor",     "not",     "only",    "own",     "same",    "so",        "than",
    "too",        "very",    "s",       "t",       "can",     "will",    "just",    "don",       "should",
    "now",        "d",       "ll",      "m",       "o",       "re",      "ve",      "y",         "ain",
    "aren",       "couldn",  "didn",    "doesn",   "hadn",    "hasn",    "haven",   "isn",       "ma",
    "mightn",     "mustn",   "needn",   "shan",    "shouldn", "wasn",    "weren",   "won",       "wouldn"});

bool is_token_byte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c >= 0x80;
}

const std::set<std::string_view>& stopword_set() {
  static const std::set<std::string_view> set(kStopwords.begin(), kStopwords.end());
  return set;
}

std::ifstream open_or_throw(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw TextError("cannot open lexicon " + path.string());
  return in;
}

std::unordered_set<std::string> load_word_list(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  std::unordered_set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) line.pop_back();
    if (line.empty() || line.front() == ';') continue;
    words.insert(line);
  }
  return words;
}

}  // namespace

TokenList tokenize(std::string_view text) {
  TokenList tokens;
  std::string current;
  for (unsigned char c : text) {
    if (is_token_byte(c)) {
      current.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

bool is_stopword(std::string_view token) { return stopword_set().contains(token); }

std::span<const std::string_view> stopword_list() { return kStopwords; }

TokenList remove_stopwords(const TokenList& tokens) {
  TokenList out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) {
    if (!is_stopword(t)) out.push_back(t);
  }
  return out;
}

double cosine(const SparseVector& a, const SparseVector& b) {
  double dot = 0.0;
  auto ia = a.entries.begin();
  auto ib = b.entries.begin();
  while (ia != a.entries.end() && ib != b.entries.end()) {
    if (ia->first < ib->first) {
      ++ia;
    } else if (ib->first < ia->first) {
      ++ib;
    } else {
      dot += ia->second * ib->second;
      ++ia;
      ++ib;
    }
  }
  return std::clamp(dot, 0.0, 1.0);
}

TfIdfModel TfIdfModel::fit(std::span<const TokenList> documents) {
  if (documents.empty()) throw TextError("tf-idf needs at least one document");
  std::map<std::string, std::size_t> df;
  for (const auto& doc : documents) {
    std::set<std::string_view> seen(doc.begin(), doc.end());
    for (auto t : seen) ++df[std::string(t)];
  }
  if (df.empty()) throw TextError("tf-idf: every document is empty");

  TfIdfModel model;
  model.documents_ = documents.size();
  const double n = static_cast<double>(documents.size());
  model.terms_.reserve(df.size());
  model.idf_.reserve(df.size());
  for (const auto& [term, count] : df) {
    model.index_.emplace(term, model.terms_.size());
    model.terms_.push_back(term);
    model.idf_.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(count))) + 1.0);
  }
  return model;
}

TfIdfModel TfIdfModel::fit_texts(std::span<const std::string> texts) {
  std::vector<TokenList> docs;
  docs.reserve(texts.size());
  for (const auto& t : texts) docs.push_back(remove_stopwords(tokenize(t)));
  return fit(docs);
}

SparseVector TfIdfModel::vectorize_tokens(const TokenList& tokens) const {
  std::map<std::size_t, double> counts;
  for (const auto& t : tokens) {
    if (auto it = index_.find(t); it != index_.end()) counts[it->second] += 1.0;
  }
  SparseVector v;
  double norm2 = 0.0;
  v.entries.reserve(counts.size());
  for (auto [dim, tf] : counts) {
    const double w = tf * idf_[dim];
    v.entries.emplace_back(dim, w);
    norm2 += w * w;
  }
  if (norm2 > 0.0) {
    const double inv = 1.0 / std::sqrt(norm2);
    for (auto& e : v.entries) e.second *= inv;
  }
  return v;
}

SparseVector TfIdfModel::vectorize(std::string_view text) const {
  return vectorize_tokens(remove_stopwords(tokenize(text)));
}

double TfIdfModel::idf(std::string_view term) const {
  auto it = index_.find(std::string(term));
  return it == index_.end() ? -1.0 : idf_[it->second];
}

std::string TfIdfModel::fingerprint() const {
  Fnv1a h;
  h.update(static_cast<std::uint64_t>(documents_));
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    h.update(terms_[i]);
    h.update(std::string_view("\0", 1));
    std::uint64_t bits;
    static_assert(sizeof bits == sizeof(double));
    std::memcpy(&bits, &idf_[i], sizeof bits);
    h.update(bits);
  }
  return h.hex();
}

std::string TfIdfModel::to_json() const {
  nlohmann::ordered_json j;
  j["format"] = "tfidf-model";
  j["version"] = 1;
  j["generator"] = kVersion;
  j["documents"] = documents_;
  j["fingerprint"] = fingerprint();
  j["terms"] = terms_;
  j["idf"] = idf_;
  return j.dump();
}

TfIdfModel TfIdfModel::from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw TextError(std::string("tf-idf model: ") + e.what());
  }
  if (j.value("format", "") != "tfidf-model" || j.value("version", 0) != 1) {
    throw TextError("tf-idf model: unsupported format or version");
  }
  TfIdfModel m;
  m.documents_ = j.at("documents").get<std::size_t>();
  m.terms_ = j.at("terms").get<std::vector<std::string>>();
  m.idf_ = j.at("idf").get<std::vector<double>>();
  if (m.terms_.size() != m.idf_.size()) throw TextError("tf-idf model: terms and idf differ in length");
  for (std::size_t i = 0; i < m.terms_.size(); ++i) m.index_.emplace(m.terms_[i], i);
  if (j.contains("fingerprint") && j["fingerprint"].get<std::string>() != m.fingerprint()) {
    throw TextError("tf-idf model: fingerprint does not match contents");
  }
  return m;
}

ValenceLexicon ValenceLexicon::load(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  std::unordered_map<std::string, double> entries;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw TextError(path.string() + ":" + std::to_string(lineno) + ": expected a tab");
    const auto end = line.find('\t', tab + 1);
    const std::string value = line.substr(tab + 1, end == std::string::npos ? std::string::npos : end - tab - 1);
    double v = 0.0;
    try {
      std::size_t used = 0;
      v = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
    } catch (const std::exception&) {
      throw TextError(path.string() + ":" + std::to_string(lineno) + ": bad valence '" + value + "'");
    }
    if (!std::isfinite(v)) throw TextError(path.string() + ":" + std::to_string(lineno) + ": non-finite valence");
    entries[line.substr(0, tab)] = v;
  }
  return ValenceLexicon(std::move(entries));
}

double ValenceLexicon::valence(std::string_view token) const {
  auto it = entries_.find(std::string(token));
  return it == entries_.end() ? 0.0 : it->second;
}

OpinionLexicon OpinionLexicon::load(const std::filesystem::path& positive, const std::filesystem::path& negative) {
  return OpinionLexicon(load_word_list(positive), load_word_list(negative));
}

Lexicons Lexicons::load_dir(const std::filesystem::path& dir) {
  Lexicons lex;
  lex.valence = ValenceLexicon::load(dir / "vader_lexicon.txt");
  lex.opinion = OpinionLexicon::load(dir / "positive-words.txt", dir / "negative-words.txt");
  return lex;
}

SentimentScores sentiment_scores(const TokenList& tokens, const ValenceLexicon& lex) {
  if (tokens.empty()) return {};
  double pos = 0.0;
  double neg = 0.0;
  double neu = 0.0;
  for (const auto& t : tokens) {
    const double v = lex.valence(t);
    if (v > 0) {
      pos += v;
    } else if (v < 0) {
      neg -= v;
    } else {
      neu += 1.0;
    }
  }
  const double total = pos + neg + neu;
  return {pos / total, neu / total, neg / total};
}

SentimentScores sentiment_scores(std::string_view text, const ValenceLexicon& lex) {
  return sentiment_scores(tokenize(text), lex);
}

OpinionCounts opinion_counts(const TokenList& tokens, const OpinionLexicon& lex) {
  OpinionCounts c;
  for (const auto& t : tokens) {
    if (lex.is_positive(t)) ++c.positive;
    if (lex.is_negative(t)) ++c.negative;
  }
  return c;
}

}  // namespace intent
