#include <doctest.h>

#include <map>
#include <random>

#include "intent/labels.hpp"

using namespace intent;
using C = IntentCode;

TEST_SUITE("labels") {

TEST_CASE("codes keep their listed ordinals") {
  const char* names[] = {"OQ", "RQ", "CQ", "FD", "FQ", "IR", "PA", "PF", "NF", "GG", "JK", "O"};
  for (std::size_t i = 0; i < kNumIntents; ++i) {
    const auto c = code_from_name(names[i]);
    REQUIRE(c);
    CHECK(static_cast<std::size_t>(*c) == i);
    CHECK(code_name(*c) == names[i]);
  }
  CHECK_FALSE(code_from_name("oq"));
}

TEST_CASE("parse_tags") {
  CHECK(parse_tags("GG OQ") == LabelSet{C::GG, C::OQ});
  CHECK(parse_tags("PA PA") == LabelSet{C::PA});
  CHECK(parse_tags("  FD\tIR ") == LabelSet{C::FD, C::IR});
  CHECK(parse_tags("").empty());
  CHECK_THROWS_AS(parse_tags("XX"), LabelError);
  try {
    parse_tags("PA XX");
  } catch (const LabelError& e) {
    CHECK(std::string(e.what()).find("XX") != std::string::npos);
  }
}

TEST_CASE("format_tags writes ordinal order") {
  CHECK(format_tags(LabelSet{C::PA, C::CQ, C::O}) == "CQ PA O");
  CHECK(LabelSet{C::PA, C::CQ}.to_string() == "CQ+PA");
}

TEST_CASE("strip_non_qa") {
  CHECK(strip_non_qa({C::GG, C::OQ}) == LabelSet{C::OQ});
  CHECK(strip_non_qa({C::GG}) == LabelSet{C::GG});
  CHECK(strip_non_qa({C::GG, C::JK}) == LabelSet{C::GG, C::JK});
  CHECK(strip_non_qa({C::O, C::JK, C::PF, C::NF}) == LabelSet{C::PF, C::NF});

  std::mt19937_64 rng(5);
  for (int i = 0; i < 2000; ++i) {
    const auto s = LabelSet::from_bits(static_cast<std::uint16_t>(1 + uniform_index(rng, 4095)));
    const auto once = strip_non_qa(s);
    CHECK_FALSE(once.empty());
    CHECK(strip_non_qa(once) == once);
  }
}

TEST_CASE("binary encoding round trip") {
  const auto oq = encode_binary({C::OQ});
  CHECK(oq[0] == 1);
  for (std::size_t i = 1; i < kNumIntents; ++i) CHECK(oq[i] == 0);
  const auto pair = encode_binary({C::PA, C::IR});
  CHECK(pair[static_cast<int>(C::PA)] == 1);
  CHECK(pair[static_cast<int>(C::IR)] == 1);
  CHECK(std::count(pair.begin(), pair.end(), 1) == 2);

  std::mt19937_64 rng(11);
  for (int i = 0; i < 1000; ++i) {
    const auto s = LabelSet::from_bits(static_cast<std::uint16_t>(1 + uniform_index(rng, 4095)));
    const auto v = encode_binary(s);
    CHECK(decode_binary(v) == s);
  }
  BinaryLabels zero{};
  CHECK_THROWS_AS(decode_binary(zero), LabelError);
  BinaryLabels bad{};
  bad[3] = 2;
  CHECK_THROWS_AS(decode_binary(bad), LabelError);
}

TEST_CASE("ranking breaks frequency ties by sorted names") {
  // {FD} and {CQ+PA} both occur twice: "CQ" < "FD".
  std::vector<LabelSet> sets = {{C::PA}, {C::PA}, {C::PA}, {C::FD}, {C::PA, C::CQ}, {C::FD}, {C::CQ, C::PA}};
  const auto ranked = rank_combinations(sets);
  REQUIRE(ranked.size() == 3);
  CHECK(ranked[0].first == LabelSet{C::PA});
  CHECK(ranked[0].second == 3);
  CHECK(ranked[1].first == LabelSet{C::CQ, C::PA});
  CHECK(ranked[2].first == LabelSet{C::FD});
}

TEST_CASE("truncation plan") {
  std::vector<LabelSet> sets = {{C::PA}, {C::PA}, {C::OQ}, {C::FD, C::IR}};
  SUBCASE("fewer combinations than k keeps all") {
    const auto plan = build_truncation_plan(sets, {}, 1);
    CHECK(plan.kept.size() == 3);
    CHECK(plan.coverage == doctest::Approx(1.0));
    CHECK(plan.distinct_combinations == 3);
  }
  SUBCASE("top-k coverage") {
    TruncationPolicy p;
    p.top_k = 2;
    const auto plan = build_truncation_plan(sets, p, 1);
    REQUIRE(plan.kept.size() == 2);
    CHECK(plan.kept[0] == LabelSet{C::PA});
    // {OQ} and {FD+IR} tie on count; "FD" sorts before "OQ".
    CHECK(plan.kept[1] == LabelSet{C::FD, C::IR});
    CHECK(plan.coverage == doctest::Approx(0.75));
    CHECK_FALSE(plan.keeps({C::OQ}));
  }
  SUBCASE("coverage policy") {
    TruncationPolicy p;
    p.top_k.reset();
    p.min_coverage = 0.5;
    const auto plan = build_truncation_plan(sets, p, 1);
    CHECK(plan.kept.size() == 1);
  }
  SUBCASE("json round trip keeps the fingerprint") {
    const auto plan = build_truncation_plan(sets, {}, 42);
    const auto back = TruncationPlan::from_json(plan.to_json());
    CHECK(back.kept == plan.kept);
    CHECK(back.seed == 42);
    CHECK(back.fingerprint() == plan.fingerprint());
    auto other = plan;
    other.seed = 43;
    CHECK(other.fingerprint() != plan.fingerprint());
  }
}

TEST_CASE("sampler keeps frequent sets and draws rare members uniformly") {
  TruncationPlan plan;
  plan.kept = {LabelSet{C::PA}};
  plan.seed = 3;
  LabelSampler sampler(plan);
  CHECK(sampler.apply({C::PA}) == LabelSet{C::PA});
  CHECK(sampler.apply({C::RQ}) == LabelSet{C::RQ});

  const LabelSet rare{C::CQ, C::FD, C::IR, C::RQ};
  std::map<std::uint16_t, int> counts;
  constexpr int n = 40000;
  for (int i = 0; i < n; ++i) {
    const auto out = sampler.apply(rare);
    REQUIRE(out.size() == 1);
    REQUIRE((out & rare) == out);
    ++counts[out.bits()];
  }
  CHECK(counts.size() == 4);
  for (const auto& [bits, c] : counts) CHECK(std::abs(c / double(n) - 0.25) < 0.01);

  LabelSampler a(plan), b(plan);
  for (int i = 0; i < 100; ++i) CHECK(a.apply(rare) == b.apply(rare));
}

TEST_CASE("uniform_index stays in range and is reproducible") {
  std::mt19937_64 a(9), b(9);
  for (std::size_t n : {1, 2, 3, 7, 1000, 12345}) {
    for (int i = 0; i < 200; ++i) {
      const auto x = uniform_index(a, n);
      CHECK(x < n);
      CHECK(x == uniform_index(b, n));
    }
  }
}

}  // TEST_SUITE
