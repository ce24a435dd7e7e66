#include "staleguard/value.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <stdexcept>

namespace staleguard {

std::string_view kind_name(Kind k) {
  switch (k) {
    case Kind::Logical: return "logical";
    case Kind::Integer: return "integer";
    case Kind::Double: return "double";
  }
  return "?";
}

std::shared_ptr<Value::Box> Value::make(Kind k, std::size_t n) {
  auto b = std::make_shared<Box>();
  b->kind = k;
  b->size = static_cast<std::uint32_t>(n);
  return b;
}

Value Value::integer(std::int32_t v) {
  auto b = make(Kind::Integer, 1);
  b->si = v;
  return Value(std::move(b));
}

Value Value::dbl(double v) {
  auto b = make(Kind::Double, 1);
  b->sd = v;
  return Value(std::move(b));
}

Value Value::logical(bool v) {
  auto b = make(Kind::Logical, 1);
  b->si = v ? 1 : 0;
  return Value(std::move(b));
}

Value Value::integers(std::vector<std::int32_t> v) {
  if (v.size() == 1) return integer(v[0]);
  auto b = make(Kind::Integer, v.size());
  b->iv = std::move(v);
  return Value(std::move(b));
}

Value Value::doubles(std::vector<double> v) {
  if (v.size() == 1) return dbl(v[0]);
  auto b = make(Kind::Double, v.size());
  b->dv = std::move(v);
  return Value(std::move(b));
}

Value Value::logicals(std::vector<std::int32_t> v) {
  if (v.size() == 1) return logical(v[0] != 0);
  auto b = make(Kind::Logical, v.size());
  b->iv = std::move(v);
  return Value(std::move(b));
}

Value Value::null() { return Value(make(Kind::Logical, 0)); }

Value Value::with_class(std::string tag) const {
  if (tag.empty()) throw std::invalid_argument("class tag must be nonempty");
  auto b = std::make_shared<Box>(*box_);
  b->tag = std::move(tag);
  return Value(std::move(b));
}

Value Value::without_class() const {
  if (!has_class()) return *this;
  auto b = std::make_shared<Box>(*box_);
  b->tag.clear();
  return Value(std::move(b));
}

std::int32_t Value::int_at(std::size_t i) const {
  if (box_->kind == Kind::Double) {
    double d = box_->size == 1 ? box_->sd : box_->dv[i];
    return static_cast<std::int32_t>(d);
  }
  return box_->size == 1 ? box_->si : box_->iv[i];
}

double Value::dbl_at(std::size_t i) const {
  if (box_->kind == Kind::Double) return box_->size == 1 ? box_->sd : box_->dv[i];
  return box_->size == 1 ? box_->si : box_->iv[i];
}

std::span<const std::int32_t> Value::ints() const {
  if (box_->size == 1) return {&box_->si, 1};
  return box_->iv;
}

std::span<const double> Value::dbls() const {
  if (box_->size == 1) return {&box_->sd, 1};
  return box_->dv;
}

std::int32_t* Value::mutable_ints() { return box_->size == 1 ? &box_->si : box_->iv.data(); }
double* Value::mutable_dbls() { return box_->size == 1 ? &box_->sd : box_->dv.data(); }

bool Value::identical(const Value& other) const {
  if (is_unbound() || other.is_unbound()) return is_unbound() == other.is_unbound();
  if (kind() != other.kind() || size() != other.size() || class_tag() != other.class_tag())
    return false;
  if (kind() == Kind::Double) {
    auto a = dbls();
    auto b = other.dbls();
    return a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
  }
  auto a = ints();
  auto b = other.ints();
  return a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(std::int32_t)) == 0;
}

namespace {

std::string format_double(double d) {
  if (std::isnan(d)) return "NaN";
  if (std::isinf(d)) return d > 0 ? "Inf" : "-Inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.7g", d);
  return buf;
}

}  // namespace

std::string Value::repr() const {
  if (is_unbound()) return "<unbound>";
  if (size() == 0) {
    switch (kind()) {
      case Kind::Logical: return "NULL";
      case Kind::Integer: return "integer(0)";
      case Kind::Double: return "numeric(0)";
    }
  }
  std::string out = "[1]";
  for (std::size_t i = 0; i < size(); ++i) {
    out += ' ';
    switch (kind()) {
      case Kind::Logical: out += int_at(i) ? "TRUE" : "FALSE"; break;
      case Kind::Integer: out += std::to_string(int_at(i)); break;
      case Kind::Double: out += format_double(dbl_at(i)); break;
    }
  }
  if (has_class()) out += "\nattr(,\"class\")\n[1] \"" + class_tag() + "\"";
  return out;
}

}  // namespace staleguard
