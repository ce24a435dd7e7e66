#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace staleguard {

enum class Kind : std::uint8_t { Logical = 0, Integer = 1, Double = 2 };

std::string_view kind_name(Kind k);

// Boxed, vectorized runtime value. A scalar is a vector of length one.
// Handles are cheap to copy; the payload is shared and treated as immutable
// unless the handle is the only owner (see Value::mutate).
class Value {
 public:
  Value() = default;

  static Value integer(std::int32_t v);
  static Value dbl(double v);
  static Value logical(bool v);
  static Value integers(std::vector<std::int32_t> v);
  static Value doubles(std::vector<double> v);
  static Value logicals(std::vector<std::int32_t> v);
  // R's NULL is modelled as a zero-length logical.
  static Value null();

  // Copy of this value carrying the given class tag. Throws on empty tag.
  Value with_class(std::string tag) const;
  Value without_class() const;

  bool is_unbound() const { return box_ == nullptr; }
  explicit operator bool() const { return box_ != nullptr; }

  Kind kind() const { return box_->kind; }
  std::size_t size() const { return box_->size; }
  bool is_scalar() const { return box_->size == 1; }
  bool has_class() const { return !box_->tag.empty(); }
  const std::string& class_tag() const { return box_->tag; }

  // Element access; Integer and Logical share the int32 representation.
  std::int32_t int_at(std::size_t i) const;
  double dbl_at(std::size_t i) const;
  std::span<const std::int32_t> ints() const;
  std::span<const double> dbls() const;

  // Scalar fast paths; caller guarantees is_scalar() and the kind.
  std::int32_t scalar_int() const { return box_->si; }
  double scalar_dbl() const { return box_->sd; }

  // True when this handle exclusively owns its payload, so in-place
  // element updates are unobservable.
  bool unique() const { return box_.use_count() == 1; }
  bool same_box(const Value& o) const { return box_ == o.box_; }
  std::int32_t* mutable_ints();
  double* mutable_dbls();

  // Bit-for-bit equality of kind, class tag and payload.
  bool identical(const Value& other) const;

  std::string repr() const;

 private:
  struct Box {
    Kind kind = Kind::Logical;
    std::uint32_t size = 0;
    std::string tag;
    std::int32_t si = 0;
    double sd = 0.0;
    std::vector<std::int32_t> iv;
    std::vector<double> dv;
  };
  explicit Value(std::shared_ptr<Box> b) : box_(std::move(b)) {}
  static std::shared_ptr<Box> make(Kind k, std::size_t n);

  std::shared_ptr<Box> box_;
};

}  // namespace staleguard
