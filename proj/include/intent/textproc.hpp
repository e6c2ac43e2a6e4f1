#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "intent/common.hpp"

namespace intent {

using TokenList = std::vector<std::string>;

/// Lowercases ASCII letters and splits on every character that is not an
/// ASCII letter or digit. Bytes >= 0x80 (UTF-8 sequences) stay inside tokens.
TokenList tokenize(std::string_view text);

bool is_stopword(std::string_view token);
/// The bundled English stopword list, in list order.
std::span<const std::string_view> stopword_list();
TokenList remove_stopwords(const TokenList& tokens);

/// Porter stemmer (the reference C implementation's rule set).
std::string stem(std::string_view token);

class TextError : public Error {
 public:
  using Error::Error;
};

/// Sorted (dimension, weight) pairs; no explicit zeros.
struct SparseVector {
  std::vector<std::pair<std::size_t, double>> entries;
  bool empty() const { return entries.empty(); }
};

/// Dot product of two sparse vectors, clamped to [0, 1]. Inputs are expected
/// L2-normalized; a zero vector yields 0.
double cosine(const SparseVector& a, const SparseVector& b);

/// TF-IDF over stopword-filtered tokens. Frozen after fit.
class TfIdfModel {
 public:
  /// idf(t) = ln((1 + N) / (1 + df(t))) + 1. Throws TextError when there is
  /// no document or every document is empty.
  static TfIdfModel fit(std::span<const TokenList> documents);
  /// Tokenizes, drops stopwords, then fits.
  static TfIdfModel fit_texts(std::span<const std::string> texts);

  /// Raw-count tf times idf, L2-normalized. Unseen terms are dropped.
  SparseVector vectorize_tokens(const TokenList& tokens) const;
  SparseVector vectorize(std::string_view text) const;

  std::size_t vocabulary_size() const { return terms_.size(); }
  std::size_t document_count() const { return documents_; }
  /// Returns -1 for an unknown term.
  double idf(std::string_view term) const;
  std::string fingerprint() const;

  std::string to_json() const;
  static TfIdfModel from_json(std::string_view text);

 private:
  std::vector<std::string> terms_;  // sorted; index is the dimension
  std::vector<double> idf_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t documents_ = 0;
};

/// token -> mean valence (VADER lexicon layout: token TAB valence [TAB ...]).
class ValenceLexicon {
 public:
  ValenceLexicon() = default;
  explicit ValenceLexicon(std::unordered_map<std::string, double> entries) : entries_(std::move(entries)) {}
  static ValenceLexicon load(const std::filesystem::path& path);

  /// Zero when absent.
  double valence(std::string_view token) const;
  std::size_t size() const { return entries_.size(); }

 private:
  std::unordered_map<std::string, double> entries_;
};

/// Positive and negative word lists (Hu-Liu layout, ';' comment lines).
class OpinionLexicon {
 public:
  OpinionLexicon() = default;
  OpinionLexicon(std::unordered_set<std::string> pos, std::unordered_set<std::string> neg)
      : positive_(std::move(pos)), negative_(std::move(neg)) {}
  static OpinionLexicon load(const std::filesystem::path& positive, const std::filesystem::path& negative);

  bool is_positive(const std::string& token) const { return positive_.contains(token); }
  bool is_negative(const std::string& token) const { return negative_.contains(token); }
  std::size_t positive_size() const { return positive_.size(); }
  std::size_t negative_size() const { return negative_.size(); }

 private:
  std::unordered_set<std::string> positive_;
  std::unordered_set<std::string> negative_;
};

struct Lexicons {
  ValenceLexicon valence;
  OpinionLexicon opinion;

  /// Expects vader_lexicon.txt, positive-words.txt and negative-words.txt.
  static Lexicons load_dir(const std::filesystem::path& dir);
};

struct SentimentScores {
  double pos = 0.0;
  double neu = 1.0;
  double neg = 0.0;
};

/// Proportion of valence mass: positive mass, negative mass and the count of
/// zero-valence tokens, each divided by their sum. Empty text gives (0, 1, 0).
SentimentScores sentiment_scores(std::string_view text, const ValenceLexicon& lex);
SentimentScores sentiment_scores(const TokenList& tokens, const ValenceLexicon& lex);

struct OpinionCounts {
  std::size_t positive = 0;
  std::size_t negative = 0;
};

OpinionCounts opinion_counts(const TokenList& tokens, const OpinionLexicon& lex);

}  // namespace intent
