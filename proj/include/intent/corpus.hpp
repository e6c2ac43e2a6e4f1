#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "intent/common.hpp"
#include "intent/labels.hpp"

namespace intent {

enum class Actor : std::uint8_t { seeker, agent };

std::string_view actor_name(Actor a);

struct Utterance {
  std::string dialog_id;
  int pos = 1;  // 1-indexed turn position
  Actor actor = Actor::agent;
  bool is_starter = false;
  std::string text;
  std::string raw_tags;

  /// True when the text is empty after whitespace trimming.
  bool degenerate() const;
  /// "<dialog_id>:<pos>"
  std::string id() const;
  /// raw_tags parsed into a label set.
  LabelSet labels() const { return parse_tags(raw_tags); }

  friend bool operator==(const Utterance&, const Utterance&) = default;
};

struct Dialog {
  std::string dialog_id;
  std::string title;
  std::string category;
  std::vector<Utterance> utterances;  // sorted by pos

  friend bool operator==(const Dialog&, const Dialog&) = default;
};

struct Corpus {
  std::string name;
  std::vector<Dialog> dialogs;

  std::size_t utterance_count() const;
  const Dialog* find(std::string_view dialog_id) const;

  friend bool operator==(const Corpus&, const Corpus&) = default;
};

struct SplitCorpus {
  Corpus train;
  Corpus val;
  Corpus test;
};

enum class CorpusFormat { msdialog_json, canonical_jsonl };

std::optional<CorpusFormat> corpus_format_from_name(std::string_view name);

class CorpusError : public Error {
 public:
  enum class Kind { io, format, schema, split, empty };
  CorpusError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Loads a whole corpus. Either the full corpus is returned or a CorpusError
/// is thrown; nothing partial escapes.
Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format);
Corpus read_msdialog_json(std::istream& in, std::string name);
/// With require_tags unset, a missing "tags" key reads as no labels.
Corpus read_canonical_jsonl(std::istream& in, std::string name, bool require_tags = true);

/// One utterance per line, dialogs in corpus order, utterances in pos order.
void write_canonical_jsonl(std::ostream& out, const Corpus& corpus);
void save_canonical_jsonl(const std::filesystem::path& path, const Corpus& corpus);

struct IdListSplit {
  std::vector<std::string> train, val, test;
};

/// Fractions of utterances routed to each split. Dialogs are shuffled with
/// the seed and assigned whole, filling train first, then validation.
struct RatioSplit {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
  std::uint64_t seed = 0;
};

/// Utterance fractions matching the 8,064 / 986 / 970 partition of the
/// 10,020-utterance labeled subset.
RatioSplit reference_ratio_split(std::uint64_t seed);

using SplitSpec = std::variant<IdListSplit, RatioSplit>;

SplitCorpus split_corpus(const Corpus& corpus, const SplitSpec& spec);

struct CorpusStats {
  std::size_t dialogs = 0;
  std::size_t utterances = 0;
  std::size_t words = 0;
  std::size_t min_turns = 0;
  std::size_t max_turns = 0;
  double avg_turns = 0.0;
  double avg_words = 0.0;
};

/// Words are whitespace-separated runs. Throws CorpusError for an empty corpus.
CorpusStats corpus_stats(const Corpus& corpus);

/// Keeps only dialogs whose category matches (or does not match, when
/// exclude is set).
Corpus filter_by_category(const Corpus& corpus, std::string_view category, bool exclude);

}  // namespace intent
