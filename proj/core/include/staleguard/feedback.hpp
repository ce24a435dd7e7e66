#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "staleguard/value.hpp"

namespace staleguard {

enum class FeedbackState : std::uint8_t { Bottom, Partial, Top };

// Element of the type-feedback lattice: a set of primitive kinds, whether
// every observed value was a scalar, and whether any carried a class tag.
// Bottom means "nothing observed", Top absorbs everything.
class FeedbackType {
 public:
  static constexpr std::uint8_t kLogicalBit = 1u << static_cast<int>(Kind::Logical);
  static constexpr std::uint8_t kIntegerBit = 1u << static_cast<int>(Kind::Integer);
  static constexpr std::uint8_t kDoubleBit = 1u << static_cast<int>(Kind::Double);
  static constexpr std::uint8_t kAllKinds = kLogicalBit | kIntegerBit | kDoubleBit;

  constexpr FeedbackType() = default;

  static constexpr FeedbackType bottom() { return FeedbackType(); }
  static constexpr FeedbackType top() {
    FeedbackType t;
    t.kinds_ = kAllKinds;
    t.scalar_only_ = false;
    t.attr_seen_ = true;
    t.state_ = FeedbackState::Top;
    return t;
  }
  // Partial element; throws std::invalid_argument if kinds is empty or has
  // bits outside the three primitive kinds.
  static FeedbackType partial(std::uint8_t kinds, bool scalar_only, bool attr_seen);
  static FeedbackType of_kind(Kind k, bool scalar_only, bool attr_seen = false) {
    return partial(static_cast<std::uint8_t>(1u << static_cast<int>(k)), scalar_only, attr_seen);
  }

  FeedbackState state() const { return state_; }
  bool is_bottom() const { return state_ == FeedbackState::Bottom; }
  bool is_top() const { return state_ == FeedbackState::Top; }
  bool is_partial() const { return state_ == FeedbackState::Partial; }
  std::uint8_t kinds() const { return kinds_; }
  bool has_kind(Kind k) const { return (kinds_ >> static_cast<int>(k)) & 1u; }
  bool scalar_only() const { return scalar_only_; }
  bool attr_seen() const { return attr_seen_; }

  bool is_monomorphic() const;
  // Single kind, Integer or Double, scalar, no attribute: lowerable to an
  // unboxed machine register.
  bool is_unboxable_scalar() const;
  // The single kind of a monomorphic element.
  Kind sole_kind() const;

  friend bool operator==(const FeedbackType&, const FeedbackType&) = default;

 private:
  std::uint8_t kinds_ = 0;
  bool scalar_only_ = true;
  bool attr_seen_ = false;
  FeedbackState state_ = FeedbackState::Bottom;
};

enum class Verdict : std::uint8_t { Equal, Narrower, Changed };

struct Comparison {
  Verdict verdict = Verdict::Equal;
  bool optimizable = false;
  friend bool operator==(const Comparison&, const Comparison&) = default;
};

FeedbackType type_of(const Value& v);
FeedbackType merge(const FeedbackType& a, const FeedbackType& b);

// Classifies a sampled type against the type code was compiled for.
// Throws std::logic_error unless sampled is Partial.
Comparison compare(const FeedbackType& sampled, const FeedbackType& compiled);

// Would speculating on `sampled` instead of `compiled` enable unboxing or
// rule out class dispatch.
bool is_optimizable(const FeedbackType& sampled, const FeedbackType& compiled);

// "[int(s)]", "[dbl(s), int(s)]", "[dbl(v)]", "[dbl(s)+attr]", "[<?>]".
std::string render(const FeedbackType& t);
std::string_view render(Verdict v);

// Baseline feedback of one function, indexed by record-site number.
struct FeedbackTable {
  std::vector<FeedbackType> observed;
  std::vector<std::uint64_t> hits;

  FeedbackTable() = default;
  explicit FeedbackTable(std::size_t sites) : observed(sites), hits(sites, 0) {}

  void record(std::size_t site, const Value& v) {
    observed[site] = merge(observed[site], type_of(v));
    ++hits[site];
  }
  std::size_t size() const { return observed.size(); }
};

}  // namespace staleguard
