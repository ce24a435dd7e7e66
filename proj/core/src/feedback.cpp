#include "staleguard/feedback.hpp"

#include <bit>
#include <stdexcept>

namespace staleguard {

FeedbackType FeedbackType::partial(std::uint8_t kinds, bool scalar_only, bool attr_seen) {
  if (kinds == 0 || (kinds & ~kAllKinds) != 0)
    throw std::invalid_argument("partial feedback needs a nonempty kind set");
  FeedbackType t;
  t.kinds_ = kinds;
  t.scalar_only_ = scalar_only;
  t.attr_seen_ = attr_seen;
  t.state_ = FeedbackState::Partial;
  return t;
}

bool FeedbackType::is_monomorphic() const {
  return state_ == FeedbackState::Partial && std::popcount(kinds_) == 1;
}

bool FeedbackType::is_unboxable_scalar() const {
  return is_monomorphic() && scalar_only_ && !attr_seen_ &&
         (kinds_ == kIntegerBit || kinds_ == kDoubleBit);
}

Kind FeedbackType::sole_kind() const {
  if (!is_monomorphic()) throw std::logic_error("sole_kind on polymorphic feedback");
  return static_cast<Kind>(std::countr_zero(kinds_));
}

FeedbackType type_of(const Value& v) {
  return FeedbackType::of_kind(v.kind(), v.is_scalar(), v.has_class());
}

FeedbackType merge(const FeedbackType& a, const FeedbackType& b) {
  if (a.is_top() || b.is_top()) return FeedbackType::top();
  if (a.is_bottom()) return b;
  if (b.is_bottom()) return a;
  return FeedbackType::partial(a.kinds() | b.kinds(), a.scalar_only() && b.scalar_only(),
                               a.attr_seen() || b.attr_seen());
}

bool is_optimizable(const FeedbackType& sampled, const FeedbackType& compiled) {
  if (sampled == compiled) return false;
  bool unboxing = sampled.is_unboxable_scalar() && !compiled.is_unboxable_scalar();
  bool dispatch = !sampled.attr_seen() && compiled.attr_seen();
  return unboxing || dispatch;
}

Comparison compare(const FeedbackType& sampled, const FeedbackType& compiled) {
  if (!sampled.is_partial())
    throw std::logic_error("compare: sampled feedback must be Partial (no samples, no verdict)");
  Comparison c;
  if (sampled == compiled) {
    c.verdict = Verdict::Equal;
    return c;
  }
  c.verdict = merge(sampled, compiled) == compiled ? Verdict::Narrower : Verdict::Changed;
  c.optimizable = is_optimizable(sampled, compiled);
  return c;
}

std::string render(const FeedbackType& t) {
  if (t.is_bottom()) return "[<?>]";
  if (t.is_top()) return "[*]";
  const char* shape = t.scalar_only() ? "(s)" : "(v)";
  std::string out = "[";
  bool first = true;
  // Alphabetical, as in "[dbl(s), int(s)]".
  for (Kind k : {Kind::Double, Kind::Integer, Kind::Logical}) {
    if (!t.has_kind(k)) continue;
    if (!first) out += ", ";
    first = false;
    out += k == Kind::Double ? "dbl" : k == Kind::Integer ? "int" : "lgl";
    out += shape;
  }
  if (t.attr_seen()) out += "+attr";
  out += "]";
  return out;
}

std::string_view render(Verdict v) {
  switch (v) {
    case Verdict::Equal: return "equal";
    case Verdict::Narrower: return "narrower";
    case Verdict::Changed: return "changed";
  }
  return "?";
}

}  // namespace staleguard
