#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "intent/corpus.hpp"

namespace intent {

/// Generator for small forum-style corpora with MSDialog-shaped annotations.
/// Texts come from per-intent templates, so the labels are learnable from the
/// same cues the utterance features measure. Used by tests and demos.
struct SynthConfig {
  std::size_t dialogs = 200;
  std::uint64_t seed = 0;
  std::vector<std::string> categories{"Windows", "Office", "Outlook", "Skype", "Xbox", "Bing"};
  std::size_t min_turns = 3;
  std::size_t max_turns = 8;
};

Corpus synth_corpus(const SynthConfig& cfg);

/// Writes the corpus in the forum JSON layout read by read_msdialog_json
/// (dialog id -> {title, category, utterances[...]}), with author ids that
/// reproduce each utterance's starter flag.
void write_msdialog_json(std::ostream& out, const Corpus& corpus);

}  // namespace intent
