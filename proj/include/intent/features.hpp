#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "intent/corpus.hpp"
#include "intent/textproc.hpp"

namespace intent {

inline constexpr std::size_t kNumFeatures = 24;

/// Column layout of the utterance feature vector.
enum class Feature : std::size_t {
  init_sim,
  dlg_sim,
  question_mark,
  duplicate,
  what,
  where,
  when,
  why,
  who,
  how,
  abs_pos,
  norm_pos,
  len,
  len_unique,
  len_stem_unique,
  is_starter,
  thank,
  exclam_mark,
  feedback,
  sent_pos,
  sent_neu,
  sent_neg,
  lex_pos_count,
  lex_neg_count,
};

using FeatureVector = std::array<double, kNumFeatures>;

std::string_view feature_name(std::size_t dim);
inline std::string_view feature_name(Feature f) { return feature_name(static_cast<std::size_t>(f)); }

enum class FeatureGroup { content, structural, sentiment };

std::string_view group_name(FeatureGroup g);
FeatureGroup feature_group(std::size_t dim);
/// Column indices belonging to any of the given groups, ascending.
std::vector<std::size_t> group_columns(std::span<const FeatureGroup> groups);

class FeatureError : public Error {
 public:
  using Error::Error;
};

/// Features of dialog.utterances[index].
FeatureVector extract_features(const Dialog& dialog, std::size_t index, const TfIdfModel& tfidf,
                               const Lexicons& lexicons);
/// Throws FeatureError when the utterance is not part of the dialog.
FeatureVector extract_features(const Utterance& u, const Dialog& dialog, const TfIdfModel& tfidf,
                               const Lexicons& lexicons);

struct UtteranceRef {
  std::string dialog_id;
  int pos = 0;
  std::string id() const { return dialog_id + ":" + std::to_string(pos); }
};

/// Rows in (dialog order, pos order) with an aligned id index.
struct FeatureMatrix {
  std::vector<FeatureVector> rows;
  std::vector<UtteranceRef> ids;
  std::string tfidf_fingerprint;
};

FeatureMatrix featurize_corpus(const Corpus& corpus, const TfIdfModel& tfidf, const Lexicons& lexicons);

/// Fits TF-IDF on every utterance text of the corpus.
TfIdfModel fit_tfidf_on(const Corpus& corpus);

/// Throws FeatureError naming the first violated invariant.
void check_feature_invariants(const FeatureVector& v);

/// CSV with a leading "# <version> tfidf=<fingerprint>" comment, a header row
/// (dialog_id, pos, 24 feature names) and values at 6 significant digits.
void write_feature_csv(std::ostream& out, const FeatureMatrix& m);
FeatureMatrix read_feature_csv(std::istream& in);

}  // namespace intent
