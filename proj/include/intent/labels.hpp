#pragma once

#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "intent/common.hpp"

namespace intent {

/// The 12 user intent codes. The enumerator value is the ordinal used for
/// binary encoding and chain order.
enum class IntentCode : std::uint8_t { OQ, RQ, CQ, FD, FQ, IR, PA, PF, NF, GG, JK, O };

inline constexpr std::size_t kNumIntents = 12;

std::string_view code_name(IntentCode code);
std::optional<IntentCode> code_from_name(std::string_view name);

class LabelError : public Error {
 public:
  using Error::Error;
};

/// A set of intent codes stored as a 12-bit mask.
class LabelSet {
 public:
  constexpr LabelSet() = default;
  constexpr LabelSet(std::initializer_list<IntentCode> codes) {
    for (auto c : codes) insert(c);
  }
  static constexpr LabelSet from_bits(std::uint16_t bits) {
    LabelSet s;
    s.bits_ = bits & kMask;
    return s;
  }

  constexpr void insert(IntentCode c) { bits_ |= bit(c); }
  constexpr void erase(IntentCode c) { bits_ &= static_cast<std::uint16_t>(~bit(c)); }
  constexpr bool contains(IntentCode c) const { return (bits_ & bit(c)) != 0; }
  constexpr bool contains(std::size_t ordinal) const { return (bits_ >> ordinal) & 1U; }
  constexpr std::size_t size() const { return static_cast<std::size_t>(std::popcount(bits_)); }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr std::uint16_t bits() const { return bits_; }

  /// Members in ordinal order.
  std::vector<IntentCode> codes() const;
  /// Member code names sorted alphabetically; the ranking tie-break key.
  std::vector<std::string> sorted_names() const;
  /// Alphabetical names joined by '+', e.g. "FD+PA".
  std::string to_string() const;

  friend constexpr LabelSet operator&(LabelSet a, LabelSet b) { return from_bits(a.bits_ & b.bits_); }
  friend constexpr LabelSet operator|(LabelSet a, LabelSet b) { return from_bits(a.bits_ | b.bits_); }
  friend constexpr bool operator==(LabelSet, LabelSet) = default;

 private:
  static constexpr std::uint16_t kMask = (1U << kNumIntents) - 1;
  static constexpr std::uint16_t bit(IntentCode c) {
    return static_cast<std::uint16_t>(1U << static_cast<unsigned>(c));
  }
  std::uint16_t bits_ = 0;
};

/// Orders label sets by their sorted code names (lexicographic).
bool name_order_less(LabelSet a, LabelSet b);

/// Parses whitespace-separated codes. Throws LabelError on an unknown token.
LabelSet parse_tags(std::string_view raw);
/// Space-separated codes in ordinal order (canonical file form).
std::string format_tags(LabelSet s);

/// Removes GG, JK and O when the set has other members. Never returns an
/// empty set: a set made only of those codes comes back unchanged.
LabelSet strip_non_qa(LabelSet s);

using BinaryLabels = std::array<std::uint8_t, kNumIntents>;

BinaryLabels encode_binary(LabelSet s);
/// Throws LabelError for an all-zero vector or entries other than 0/1.
LabelSet decode_binary(std::span<const std::uint8_t> v);

struct TruncationPolicy {
  /// Keep exactly this many combinations (or all, if fewer exist).
  std::optional<std::size_t> top_k = 32;
  /// Alternatively keep the smallest prefix reaching this coverage.
  std::optional<double> min_coverage;
};

/// The frozen set of frequent label combinations.
struct TruncationPlan {
  std::vector<LabelSet> kept;  // by descending frequency
  double coverage = 0.0;
  std::uint64_t seed = 0;
  std::size_t distinct_combinations = 0;  // in the data the plan was built from
  std::size_t sample_count = 0;

  bool keeps(LabelSet s) const;
  std::string to_json() const;
  static TruncationPlan from_json(std::string_view text);
  /// Hash over kept combinations and seed.
  std::string fingerprint() const;
};

/// Frequency ranking of label combinations: descending count, ties by name order.
std::vector<std::pair<LabelSet, std::size_t>> rank_combinations(std::span<const LabelSet> labelsets);

TruncationPlan build_truncation_plan(std::span<const LabelSet> labelsets, const TruncationPolicy& policy,
                                     std::uint64_t seed);

/// Applies a plan to a stream of label sets. Rare combinations collapse to a
/// uniformly drawn singleton; draws come from one generator seeded by the
/// plan, consumed in call order.
class LabelSampler {
 public:
  explicit LabelSampler(const TruncationPlan& plan) : plan_(&plan), rng_(plan.seed) {}
  LabelSet apply(LabelSet s);

 private:
  const TruncationPlan* plan_;
  std::mt19937_64 rng_;
};

/// Unbiased index in [0, n) from a 64-bit engine; identical on every platform.
std::size_t uniform_index(std::mt19937_64& rng, std::size_t n);

}  // namespace intent
