#include "intent/labels.hpp"

#include <algorithm>
#include <unordered_map>

#include <json.hpp>

namespace intent {

namespace {

constexpr std::array<std::string_view, kNumIntents> kNames = {"OQ", "RQ", "CQ", "FD", "FQ", "IR",
                                                              "PA", "PF", "NF", "GG", "JK", "O"};

constexpr LabelSet kNonQa{IntentCode::GG, IntentCode::JK, IntentCode::O};

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

}  // namespace

std::string_view code_name(IntentCode code) { return kNames.at(static_cast<std::size_t>(code)); }

std::optional<IntentCode> code_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (kNames[i] == name) return static_cast<IntentCode>(i);
  }
  return std::nullopt;
}

std::vector<IntentCode> LabelSet::codes() const {
  std::vector<IntentCode> out;
  for (std::size_t i = 0; i < kNumIntents; ++i) {
    if (contains(i)) out.push_back(static_cast<IntentCode>(i));
  }
  return out;
}

std::vector<std::string> LabelSet::sorted_names() const {
  std::vector<std::string> names;
  for (auto c : codes()) names.emplace_back(code_name(c));
  std::sort(names.begin(), names.end());
  return names;
}

std::string LabelSet::to_string() const {
  std::string out;
  for (const auto& n : sorted_names()) {
    if (!out.empty()) out += '+';
    out += n;
  }
  return out;
}

bool name_order_less(LabelSet a, LabelSet b) { return a.sorted_names() < b.sorted_names(); }

LabelSet parse_tags(std::string_view raw) {
  LabelSet s;
  std::size_t i = 0;
  while (i < raw.size()) {
    while (i < raw.size() && is_space(raw[i])) ++i;
    std::size_t j = i;
    while (j < raw.size() && !is_space(raw[j])) ++j;
    if (j > i) {
      auto token = raw.substr(i, j - i);
      auto code = code_from_name(token);
      if (!code) throw LabelError("unknown intent code '" + std::string(token) + "'");
      s.insert(*code);
    }
    i = j;
  }
  return s;
}

std::string format_tags(LabelSet s) {
  std::string out;
  for (auto c : s.codes()) {
    if (!out.empty()) out += ' ';
    out += code_name(c);
  }
  return out;
}

LabelSet strip_non_qa(LabelSet s) {
  if (s.size() <= 1) return s;
  LabelSet stripped = LabelSet::from_bits(s.bits() & static_cast<std::uint16_t>(~kNonQa.bits()));
  return stripped.empty() ? s : stripped;
}

BinaryLabels encode_binary(LabelSet s) {
  BinaryLabels v{};
  for (std::size_t i = 0; i < kNumIntents; ++i) v[i] = s.contains(i) ? 1 : 0;
  return v;
}

LabelSet decode_binary(std::span<const std::uint8_t> v) {
  if (v.size() != kNumIntents) throw LabelError("binary label vector must have 12 entries");
  LabelSet s;
  for (std::size_t i = 0; i < kNumIntents; ++i) {
    if (v[i] > 1) throw LabelError("binary label vector entries must be 0 or 1");
    if (v[i]) s.insert(static_cast<IntentCode>(i));
  }
  if (s.empty()) throw LabelError("cannot decode an all-zero label vector");
  return s;
}

bool TruncationPlan::keeps(LabelSet s) const { return std::find(kept.begin(), kept.end(), s) != kept.end(); }

std::string TruncationPlan::to_json() const {
  nlohmann::ordered_json j;
  j["format"] = "truncation-plan";
  j["version"] = 1;
  j["generator"] = kVersion;
  j["seed"] = seed;
  j["coverage"] = coverage;
  j["distinct_combinations"] = distinct_combinations;
  j["sample_count"] = sample_count;
  auto arr = nlohmann::ordered_json::array();
  for (auto s : kept) arr.push_back(s.sorted_names());
  j["kept"] = std::move(arr);
  return j.dump(2) + "\n";
}

TruncationPlan TruncationPlan::from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw LabelError(std::string("truncation plan: ") + e.what());
  }
  if (j.value("format", "") != "truncation-plan" || j.value("version", 0) != 1) {
    throw LabelError("truncation plan: unsupported format or version");
  }
  TruncationPlan plan;
  try {
    plan.seed = j.at("seed").get<std::uint64_t>();
    plan.coverage = j.at("coverage").get<double>();
    plan.distinct_combinations = j.value("distinct_combinations", std::size_t{0});
    plan.sample_count = j.value("sample_count", std::size_t{0});
    for (const auto& combo : j.at("kept")) {
      LabelSet s;
      for (const auto& name : combo) {
        auto code = code_from_name(name.get<std::string>());
        if (!code) throw LabelError("truncation plan: unknown code " + name.get<std::string>());
        s.insert(*code);
      }
      plan.kept.push_back(s);
    }
  } catch (const nlohmann::json::exception& e) {
    throw LabelError(std::string("truncation plan: ") + e.what());
  }
  return plan;
}

std::string TruncationPlan::fingerprint() const {
  Fnv1a h;
  h.update(seed);
  for (auto s : kept) h.update(static_cast<std::uint64_t>(s.bits()));
  return h.hex();
}

std::vector<std::pair<LabelSet, std::size_t>> rank_combinations(std::span<const LabelSet> labelsets) {
  std::unordered_map<std::uint16_t, std::size_t> counts;
  for (auto s : labelsets) ++counts[s.bits()];
  std::vector<std::pair<LabelSet, std::size_t>> ranked;
  ranked.reserve(counts.size());
  for (auto [bits, n] : counts) ranked.emplace_back(LabelSet::from_bits(bits), n);
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return name_order_less(a.first, b.first);
  });
  return ranked;
}

TruncationPlan build_truncation_plan(std::span<const LabelSet> labelsets, const TruncationPolicy& policy,
                                     std::uint64_t seed) {
  if (!policy.top_k && !policy.min_coverage) throw LabelError("truncation policy needs top_k or min_coverage");
  auto ranked = rank_combinations(labelsets);
  const double total = static_cast<double>(labelsets.size());

  TruncationPlan plan;
  plan.seed = seed;
  plan.distinct_combinations = ranked.size();
  plan.sample_count = labelsets.size();

  std::size_t covered = 0;
  for (const auto& [combo, n] : ranked) {
    if (policy.top_k && plan.kept.size() >= *policy.top_k) break;
    if (!policy.top_k && policy.min_coverage && total > 0 &&
        static_cast<double>(covered) / total >= *policy.min_coverage) {
      break;
    }
    plan.kept.push_back(combo);
    covered += n;
  }
  plan.coverage = total > 0 ? static_cast<double>(covered) / total : 1.0;
  return plan;
}

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  if (n <= 1) return 0;
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = std::mt19937_64::max() - (std::mt19937_64::max() % bound + 1) % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x > limit);
  return static_cast<std::size_t>(x % bound);
}

LabelSet LabelSampler::apply(LabelSet s) {
  if (s.empty() || plan_->keeps(s)) return s;
  auto members = s.codes();
  return LabelSet{members[uniform_index(rng_, members.size())]};
}

}  // namespace intent
