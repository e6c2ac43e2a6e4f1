#include <doctest.h>

#include <sstream>

#include "intent/features.hpp"
#include "intent/synth.hpp"

using namespace intent;

namespace {

const std::filesystem::path kLexicons = INTENT_TEST_LEXICONS;

const Lexicons& lexicons() {
  static const Lexicons lex = Lexicons::load_dir(kLexicons);
  return lex;
}

Dialog make_dialog(const std::vector<std::string>& texts) {
  Dialog d;
  d.dialog_id = "d1";
  for (std::size_t i = 0; i < texts.size(); ++i) {
    Utterance u;
    u.dialog_id = "d1";
    u.pos = static_cast<int>(i + 1);
    u.actor = i % 2 == 0 ? Actor::seeker : Actor::agent;
    u.is_starter = i % 2 == 0;
    u.text = texts[i];
    u.raw_tags = "PA";
    d.utterances.push_back(u);
  }
  return d;
}

double at(const FeatureVector& v, Feature f) { return v[static_cast<std::size_t>(f)]; }

}  // namespace

TEST_SUITE("features") {

TEST_CASE("layout and groups") {
  CHECK(feature_name(0) == "init_sim");
  CHECK(feature_name(Feature::abs_pos) == "abs_pos");
  CHECK(feature_name(23) == "lex_neg_count");
  const std::vector<FeatureGroup> content{FeatureGroup::content};
  CHECK(group_columns(content) == std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
  const std::vector<FeatureGroup> structural{FeatureGroup::structural};
  CHECK(group_columns(structural) == std::vector<std::size_t>{10, 11, 12, 13, 14, 15});
  const std::vector<FeatureGroup> all{FeatureGroup::sentiment, FeatureGroup::content, FeatureGroup::structural};
  CHECK(group_columns(all).size() == kNumFeatures);
}

TEST_CASE("keyword and position features") {
  const auto d = make_dialog({"How do I reset my printer driver?", "Did you try restarting? Thanks!",
                              "I have the same issue, it didn't work", "Where is the setting"});
  Corpus c;
  c.dialogs.push_back(d);
  const auto tfidf = fit_tfidf_on(c);

  const auto first = extract_features(d, 0, tfidf, lexicons());
  CHECK(at(first, Feature::abs_pos) == 1.0);
  CHECK(at(first, Feature::init_sim) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(at(first, Feature::is_starter) == 1.0);
  CHECK(at(first, Feature::how) == 1.0);
  CHECK(at(first, Feature::what) == 0.0);

  const auto second = extract_features(d, 1, tfidf, lexicons());
  CHECK(at(second, Feature::question_mark) == 1.0);
  CHECK(at(second, Feature::exclam_mark) == 1.0);
  CHECK(at(second, Feature::thank) == 1.0);
  CHECK(at(second, Feature::feedback) == 0.0);
  CHECK(at(second, Feature::norm_pos) == 0.5);
  CHECK(at(second, Feature::is_starter) == 0.0);

  const auto third = extract_features(d, 2, tfidf, lexicons());
  CHECK(at(third, Feature::duplicate) == 1.0);
  CHECK(at(third, Feature::feedback) == 1.0);
  CHECK(at(third, Feature::norm_pos) == 0.75);

  const auto fourth = extract_features(d, 3, tfidf, lexicons());
  CHECK(at(fourth, Feature::where) == 1.0);
  CHECK(at(fourth, Feature::question_mark) == 0.0);
}

TEST_CASE("lengths after stopword removal and stemming") {
  const auto d = make_dialog({"connect connected connecting the printer printer"});
  Corpus c;
  c.dialogs.push_back(d);
  const auto v = extract_features(d, 0, fit_tfidf_on(c), lexicons());
  CHECK(at(v, Feature::len) == 5.0);
  CHECK(at(v, Feature::len_unique) == 4.0);
  CHECK(at(v, Feature::len_stem_unique) == 2.0);
}

TEST_CASE("empty text gives zero lengths and neutral sentiment") {
  const auto d = make_dialog({"Printer is broken", "   "});
  Corpus c;
  c.dialogs.push_back(d);
  const auto v = extract_features(d, 1, fit_tfidf_on(c), lexicons());
  CHECK(at(v, Feature::len) == 0.0);
  CHECK(at(v, Feature::len_unique) == 0.0);
  CHECK(at(v, Feature::len_stem_unique) == 0.0);
  CHECK(at(v, Feature::sent_neu) == 1.0);
  CHECK(at(v, Feature::init_sim) == 0.0);
  CHECK_NOTHROW(check_feature_invariants(v));
}

TEST_CASE("utterance must belong to the dialog") {
  const auto d = make_dialog({"a question?"});
  auto other = make_dialog({"x", "y"});
  other.dialog_id = "zz";
  for (auto& u : other.utterances) u.dialog_id = "zz";
  Corpus c;
  c.dialogs.push_back(d);
  const auto tfidf = fit_tfidf_on(c);
  CHECK_THROWS_AS(extract_features(other.utterances[1], d, tfidf, lexicons()), FeatureError);
  CHECK_NOTHROW(extract_features(d.utterances[0], d, tfidf, lexicons()));
}

TEST_CASE("corpus properties") {
  SynthConfig sc;
  sc.dialogs = 60;
  sc.seed = 3;
  const auto c = synth_corpus(sc);
  const auto tfidf = fit_tfidf_on(c);
  const auto m = featurize_corpus(c, tfidf, lexicons());
  REQUIRE(m.rows.size() == c.utterance_count());
  CHECK(m.tfidf_fingerprint == tfidf.fingerprint());
  std::size_t r = 0;
  for (const auto& d : c.dialogs) {
    const double T = static_cast<double>(d.utterances.size());
    for (std::size_t i = 0; i < d.utterances.size(); ++i, ++r) {
      const auto& v = m.rows[r];
      CHECK_NOTHROW(check_feature_invariants(v));
      CHECK(m.ids[r].dialog_id == d.dialog_id);
      CHECK(at(v, Feature::abs_pos) == static_cast<double>(i + 1));
      CHECK(at(v, Feature::norm_pos) == doctest::Approx((i + 1) / T).epsilon(1e-15));
      CHECK(at(v, Feature::len) >= at(v, Feature::len_unique));
      CHECK(at(v, Feature::len_unique) >= at(v, Feature::len_stem_unique));
      if (i == 0) CHECK(at(v, Feature::init_sim) == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
  const auto again = featurize_corpus(c, tfidf, lexicons());
  CHECK(again.rows == m.rows);
}

TEST_CASE("invariant checker rejects bad vectors") {
  FeatureVector v{};
  v[static_cast<std::size_t>(Feature::norm_pos)] = 1.0;
  v[static_cast<std::size_t>(Feature::sent_neu)] = 1.0;
  CHECK_NOTHROW(check_feature_invariants(v));
  auto bad = v;
  bad[static_cast<std::size_t>(Feature::thank)] = 0.5;
  CHECK_THROWS_AS(check_feature_invariants(bad), FeatureError);
  bad = v;
  bad[static_cast<std::size_t>(Feature::norm_pos)] = 0.0;
  CHECK_THROWS_AS(check_feature_invariants(bad), FeatureError);
  bad = v;
  bad[static_cast<std::size_t>(Feature::len)] = 2.5;
  CHECK_THROWS_AS(check_feature_invariants(bad), FeatureError);
}

TEST_CASE("feature csv round trip at six significant digits") {
  SynthConfig sc;
  sc.dialogs = 10;
  const auto c = synth_corpus(sc);
  const auto m = featurize_corpus(c, fit_tfidf_on(c), lexicons());
  std::stringstream ss;
  write_feature_csv(ss, m);
  CHECK(ss.str().rfind("# intent-pred", 0) == 0);
  const auto back = read_feature_csv(ss);
  REQUIRE(back.rows.size() == m.rows.size());
  CHECK(back.tfidf_fingerprint == m.tfidf_fingerprint);
  for (std::size_t r = 0; r < m.rows.size(); ++r) {
    CHECK(back.ids[r].id() == m.ids[r].id());
    for (std::size_t j = 0; j < kNumFeatures; ++j) {
      CHECK(back.rows[r][j] == doctest::Approx(m.rows[r][j]).epsilon(1e-5));
    }
  }
}

}  // TEST_SUITE
