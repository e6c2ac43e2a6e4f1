#include <doctest.h>

#include <set>
#include <sstream>

#include "intent/corpus.hpp"
#include "intent/synth.hpp"

using namespace intent;

namespace {

const char* kThree = R"({
  "77": {"title": "Cannot sign in", "category": "Outlook", "utterances": [
    {"utterance_pos": 2, "actor_type": "Agent", "user_id": "mod", "utterance": "Which version?", "tags": "IR", "votes": 3},
    {"utterance_pos": 1, "actor_type": "User", "user_id": "alice", "utterance": "Outlook will not sign in.", "tags": "OQ"},
    {"utterance_pos": 3, "actor_type": "user", "user_id": "alice", "utterance": "2016, thanks", "tags": "PF FD"}
  ]}
})";

Corpus parse(const std::string& text) {
  std::istringstream in(text);
  return read_msdialog_json(in, "t");
}

}  // namespace

TEST_SUITE("corpus") {

TEST_CASE("msdialog json loads and orders utterances") {
  const auto c = parse(kThree);
  REQUIRE(c.dialogs.size() == 1);
  const auto& d = c.dialogs[0];
  CHECK(d.title == "Cannot sign in");
  CHECK(d.category == "Outlook");
  REQUIRE(d.utterances.size() == 3);
  CHECK(d.utterances[0].pos == 1);
  CHECK(d.utterances[0].actor == Actor::seeker);
  CHECK(d.utterances[0].is_starter);
  CHECK(d.utterances[1].actor == Actor::agent);
  CHECK_FALSE(d.utterances[1].is_starter);
  CHECK(d.utterances[2].actor == Actor::seeker);  // case-insensitive actor type
  CHECK(d.utterances[2].is_starter);
  CHECK(d.utterances[2].raw_tags == "PF FD");
  CHECK(d.utterances[2].id() == "77:3");
}

TEST_CASE("starter flag follows the author of the first turn") {
  const auto c = parse(R"({"1": {"utterances": [
    {"utterance_pos": 1, "actor_type": "User", "user_id": "a", "utterance": "q", "tags": "OQ"},
    {"utterance_pos": 2, "actor_type": "User", "user_id": "b", "utterance": "me too", "tags": "RQ"}]}})");
  CHECK(c.dialogs[0].utterances[0].is_starter);
  CHECK_FALSE(c.dialogs[0].utterances[1].is_starter);
}

TEST_CASE("load errors") {
  SUBCASE("truncated file is a format error") {
    std::string text = kThree;
    text.resize(text.size() / 2);
    try {
      parse(text);
      FAIL("expected an error");
    } catch (const CorpusError& e) {
      CHECK(e.kind() == CorpusError::Kind::format);
    }
  }
  SUBCASE("missing field names the field") {
    try {
      parse(R"({"1": {"utterances": [{"utterance_pos": 1, "actor_type": "User", "tags": "OQ"}]}})");
      FAIL("expected an error");
    } catch (const CorpusError& e) {
      CHECK(e.kind() == CorpusError::Kind::schema);
      CHECK(std::string(e.what()).find("utterance") != std::string::npos);
    }
  }
  SUBCASE("duplicate position") {
    CHECK_THROWS_AS(parse(R"({"1": {"utterances": [
      {"utterance_pos": 1, "actor_type": "User", "utterance": "a", "tags": "OQ"},
      {"utterance_pos": 1, "actor_type": "Agent", "utterance": "b", "tags": "PA"}]}})"),
                    CorpusError);
  }
  SUBCASE("unknown tag") {
    CHECK_THROWS(parse(R"({"1": {"utterances": [
      {"utterance_pos": 1, "actor_type": "User", "utterance": "a", "tags": "ZZ"}]}})"));
  }
  SUBCASE("jsonl parse error reports the line") {
    std::istringstream in("{\"dialog_id\":\"1\",\"pos\":1,\"actor\":\"seeker\",\"is_starter\":true,\"text\":\"a\",\"tags\":\"OQ\"}\n{oops\n");
    try {
      read_canonical_jsonl(in, "x");
      FAIL("expected an error");
    } catch (const CorpusError& e) {
      CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
  }
  SUBCASE("missing file") { CHECK_THROWS_AS(load_corpus("/nonexistent/x.json", CorpusFormat::msdialog_json), CorpusError); }
}

TEST_CASE("canonical jsonl round trip is exact") {
  SynthConfig sc;
  sc.dialogs = 40;
  sc.seed = 4;
  auto c = synth_corpus(sc);
  c.dialogs[0].utterances[1].text = "  ";  // degenerate text survives
  c.dialogs[1].utterances[0].text = "caf\xc3\xa9 \"quoted\"\nnewline";
  std::stringstream ss;
  write_canonical_jsonl(ss, c);
  const auto back = read_canonical_jsonl(ss, c.name);
  CHECK(back == c);
  CHECK(back.dialogs[0].utterances[1].degenerate());
}

TEST_CASE("synthetic msdialog output reads back identically") {
  SynthConfig sc;
  sc.dialogs = 30;
  sc.seed = 8;
  auto c = synth_corpus(sc);
  std::stringstream ss;
  write_msdialog_json(ss, c);
  const auto back = read_msdialog_json(ss, c.name);
  CHECK(back == c);
}

TEST_CASE("ratio split partitions dialogs deterministically") {
  SynthConfig sc;
  sc.dialogs = 300;
  sc.seed = 1;
  const auto c = synth_corpus(sc);
  const auto a = split_corpus(c, reference_ratio_split(7));
  const auto b = split_corpus(c, reference_ratio_split(7));
  CHECK(a.train == b.train);
  CHECK(a.test == b.test);
  CHECK(a.train.dialogs.size() + a.val.dialogs.size() + a.test.dialogs.size() == c.dialogs.size());
  std::set<std::string> seen;
  for (const auto* part : {&a.train, &a.val, &a.test}) {
    for (const auto& d : part->dialogs) CHECK(seen.insert(d.dialog_id).second);
  }
  const double n = static_cast<double>(c.utterance_count());
  CHECK(std::abs(a.train.utterance_count() / n - 8064.0 / 10020.0) < 0.02);
  CHECK(std::abs(a.test.utterance_count() / n - 970.0 / 10020.0) < 0.02);

  const auto all = split_corpus(c, RatioSplit{1.0, 0.0, 0.0, 3});
  CHECK(all.train.dialogs.size() == c.dialogs.size());
  CHECK(all.val.dialogs.empty());
  CHECK_THROWS_AS(split_corpus(c, RatioSplit{0.5, 0.2, 0.2, 0}), CorpusError);
}

TEST_CASE("id-list split") {
  const auto c = parse(kThree);
  CHECK(split_corpus(c, IdListSplit{{"77"}, {}, {}}).train.dialogs.size() == 1);
  CHECK_THROWS_AS(split_corpus(c, IdListSplit{{"77"}, {"77"}, {}}), CorpusError);
  CHECK_THROWS_AS(split_corpus(c, IdListSplit{{}, {}, {}}), CorpusError);
}

TEST_CASE("corpus stats") {
  Corpus c;
  Dialog d;
  d.dialog_id = "x";
  for (int i = 1; i <= 3; ++i) {
    Utterance u;
    u.dialog_id = "x";
    u.pos = i;
    u.text = "word";
    u.raw_tags = "PA";
    d.utterances.push_back(u);
  }
  c.dialogs.push_back(d);
  const auto s = corpus_stats(c);
  CHECK(s.avg_turns == doctest::Approx(3.0));
  CHECK(s.avg_words == doctest::Approx(1.0));
  CHECK(s.min_turns == 3);
  CHECK_THROWS_AS(corpus_stats(Corpus{}), CorpusError);
}

TEST_CASE("category filter") {
  SynthConfig sc;
  sc.dialogs = 12;
  const auto c = synth_corpus(sc);
  const auto xbox = filter_by_category(c, "Xbox", false);
  const auto rest = filter_by_category(c, "Xbox", true);
  CHECK(xbox.dialogs.size() == 2);
  CHECK(rest.dialogs.size() == 10);
}

}  // TEST_SUITE
