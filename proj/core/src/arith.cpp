#include <algorithm>
#include <atomic>
#include <unordered_map>

#include "staleguard/runtime.hpp"

namespace staleguard {

std::string_view binop_symbol(BinOp op) {
  switch (op) {
    case BinOp::Add: return "+";
    case BinOp::Sub: return "-";
    case BinOp::Mul: return "*";
    case BinOp::Div: return "/";
    case BinOp::Mod: return "%%";
    case BinOp::Pow: return "^";
    case BinOp::Lt: return "<";
    case BinOp::Le: return "<=";
    case BinOp::Gt: return ">";
    case BinOp::Ge: return ">=";
    case BinOp::Eq: return "==";
    case BinOp::Ne: return "!=";
  }
  return "?";
}

namespace {

constexpr std::pair<std::string_view, Builtin> kBuiltins[] = {
    {"c", Builtin::Combine},       {"structure", Builtin::Structure},
    {"length", Builtin::Length},   {"sum", Builtin::Sum},
    {"numeric", Builtin::Numeric}, {"integer", Builtin::Integer},
    {"logical", Builtin::Logical}, {"sqrt", Builtin::Sqrt},
    {"abs", Builtin::Abs},         {"floor", Builtin::Floor},
    {"print", Builtin::Print},
};

std::atomic<std::uint64_t> g_dispatch_lookups{0};

const std::string& tag_of(const Value& a, const Value& b) {
  return a.has_class() ? a.class_tag() : b.class_tag();
}

Value tagged(Value v, const std::string& tag) {
  return tag.empty() ? v : v.with_class(tag);
}

std::size_t result_length(const Value& a, const Value& b) {
  std::size_t na = a.size(), nb = b.size();
  if (na == 0 || nb == 0) return 0;
  if (na == nb || nb == 1) return na;
  if (na == 1) return nb;
  throw LengthMismatch(na, nb);
}

}  // namespace

std::string_view builtin_name(Builtin b) {
  for (auto& [name, id] : kBuiltins)
    if (id == b) return name;
  if (b == Builtin::Index) return "[";
  if (b == Builtin::SetIndex) return "[<-";
  return "?";
}

std::optional<Builtin> lookup_builtin(std::string_view name) {
  for (auto& [n, id] : kBuiltins)
    if (n == name) return id;
  return std::nullopt;
}

Value vector_binop(BinOp op, const Value& a, const Value& b) {
  const std::size_t n = result_length(a, b);
  const std::size_t na = a.size(), nb = b.size();
  const std::string& tag = tag_of(a, b);
  const bool any_double = a.kind() == Kind::Double || b.kind() == Kind::Double;

  if (is_comparison(op)) {
    std::vector<std::int32_t> out(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t ia = na == 1 ? 0 : i, ib = nb == 1 ? 0 : i;
      out[i] = any_double ? kernel::compare(op, a.dbl_at(ia), b.dbl_at(ib))
                          : kernel::compare(op, a.int_at(ia), b.int_at(ib));
    }
    return tagged(Value::logicals(std::move(out)), tag);
  }

  if (any_double) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i)
      out[i] = kernel::darith(op, a.dbl_at(na == 1 ? 0 : i), b.dbl_at(nb == 1 ? 0 : i));
    return tagged(Value::doubles(std::move(out)), tag);
  }

  std::vector<std::int32_t> iout(n);
  std::vector<double> dout;
  bool promoted = false;
  for (std::size_t i = 0; i < n; ++i) {
    std::int64_t r = 0;
    double d = 0.0;
    bool ok = kernel::iarith(op, a.int_at(na == 1 ? 0 : i), b.int_at(nb == 1 ? 0 : i), r, d);
    if (!ok && !promoted) {
      promoted = true;
      dout.resize(n);
      for (std::size_t j = 0; j < i; ++j) dout[j] = iout[j];
    }
    if (promoted)
      dout[i] = ok ? static_cast<double>(r) : d;
    else
      iout[i] = static_cast<std::int32_t>(r);
  }
  if (promoted) return tagged(Value::doubles(std::move(dout)), tag);
  return tagged(Value::integers(std::move(iout)), tag);
}

namespace {

// Class-based method table. MiniDyn cannot define methods, so lookups always
// miss and re-dispatch to the internal default, but they are real lookups.
struct MethodTable {
  std::unordered_map<std::string, int> methods;
  MethodTable() {
    for (const char* cls : {"integer", "numeric", "logical"}) methods.emplace(std::string("Ops.") + cls, 0);
  }
};

const MethodTable& method_table() {
  static const MethodTable t;
  return t;
}

Value dispatch_slow(BinOp op, const Value& a, const Value& b) {
  const auto& table = method_table();
  for (const Value* v : {&a, &b}) {
    if (!v->has_class()) continue;
    g_dispatch_lookups.fetch_add(1, std::memory_order_relaxed);
    std::string specific = std::string(binop_symbol(op)) + "." + v->class_tag();
    std::string group = "Ops." + v->class_tag();
    if (table.methods.count(specific) || table.methods.count(group)) break;
  }
  return vector_binop(op, a, b);
}

}  // namespace

Value dispatch_binop(BinOp op, const Value& a, const Value& b) {
  if (a.has_class() || b.has_class()) [[unlikely]]
    return dispatch_slow(op, a, b);
  return vector_binop(op, a, b);
}

std::uint64_t dispatch_lookups() { return g_dispatch_lookups.load(std::memory_order_relaxed); }

Value negate(const Value& v) {
  const std::size_t n = v.size();
  Value r;
  if (v.kind() == Kind::Double) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = -v.dbl_at(i);
    r = Value::doubles(std::move(out));
  } else {
    std::vector<std::int32_t> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = -v.int_at(i);
    r = Value::integers(std::move(out));
  }
  return v.has_class() ? r.with_class(v.class_tag()) : r;
}

bool truthy(const Value& v) {
  if (v.size() == 0) throw RuntimeError("argument is of length zero");
  if (v.kind() == Kind::Double) {
    double d = v.dbl_at(0);
    if (std::isnan(d)) throw RuntimeError("missing value where TRUE/FALSE needed");
    return d != 0.0;
  }
  return v.int_at(0) != 0;
}

namespace {

void expect_args(Builtin b, std::span<const Value> args, std::size_t n) {
  if (args.size() != n)
    throw RuntimeError(std::string(builtin_name(b)) + "() takes " + std::to_string(n) +
                       " argument(s), got " + std::to_string(args.size()));
}

std::size_t count_arg(Builtin b, const Value& v) {
  if (v.size() != 1) throw RuntimeError(std::string(builtin_name(b)) + "(): invalid length argument");
  double d = v.dbl_at(0);
  if (!(d >= 0) || d > 1e9) throw RuntimeError(std::string(builtin_name(b)) + "(): invalid length argument");
  return static_cast<std::size_t>(d);
}

std::size_t subscript(const Value& idx, std::size_t limit) {
  if (idx.size() != 1) throw RuntimeError("subscript must be a scalar");
  double d = idx.dbl_at(0);
  if (!(d >= 1) || d > static_cast<double>(limit)) throw RuntimeError("subscript out of bounds");
  return static_cast<std::size_t>(d) - 1;
}

Value combine(std::span<const Value> args) {
  Kind k = Kind::Logical;
  std::size_t n = 0;
  for (const Value& v : args) {
    k = std::max(k, v.kind());
    n += v.size();
  }
  if (k == Kind::Double) {
    std::vector<double> out;
    out.reserve(n);
    for (const Value& v : args)
      for (std::size_t i = 0; i < v.size(); ++i) out.push_back(v.dbl_at(i));
    return Value::doubles(std::move(out));
  }
  std::vector<std::int32_t> out;
  out.reserve(n);
  for (const Value& v : args)
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(v.int_at(i));
  return k == Kind::Integer ? Value::integers(std::move(out)) : Value::logicals(std::move(out));
}

Value set_index(const Value& x, const Value& idx, const Value& v) {
  if (v.size() != 1) throw RuntimeError("replacement has length " + std::to_string(v.size()));
  const std::size_t n = x.size();
  const std::size_t i = subscript(idx, n + 1);
  const Kind k = std::max(x.kind(), v.kind());
  if (i < n && k == x.kind() && x.unique()) {
    // Sole owner: update in place.
    Value out = x;
    if (k == Kind::Double)
      out.mutable_dbls()[i] = v.dbl_at(0);
    else
      out.mutable_ints()[i] = v.int_at(0);
    return out;
  }
  Value out;
  if (k == Kind::Double) {
    std::vector<double> d(std::max(n, i + 1));
    for (std::size_t j = 0; j < n; ++j) d[j] = x.dbl_at(j);
    d[i] = v.dbl_at(0);
    out = Value::doubles(std::move(d));
  } else {
    std::vector<std::int32_t> d(std::max(n, i + 1));
    for (std::size_t j = 0; j < n; ++j) d[j] = x.int_at(j);
    d[i] = v.int_at(0);
    out = k == Kind::Integer ? Value::integers(std::move(d)) : Value::logicals(std::move(d));
  }
  return x.has_class() ? out.with_class(x.class_tag()) : out;
}

template <typename F>
Value map_double(const Value& v, F f) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = f(v.dbl_at(i));
  return Value::doubles(std::move(out));
}

}  // namespace

Value call_builtin(Builtin b, std::span<const Value> args, const std::string& str_arg,
                   std::vector<std::string>* out) {
  switch (b) {
    case Builtin::Combine:
      return combine(args);
    case Builtin::Structure:
      expect_args(b, args, 1);
      return args[0].with_class(str_arg);
    case Builtin::Length:
      expect_args(b, args, 1);
      return Value::integer(static_cast<std::int32_t>(args[0].size()));
    case Builtin::Sum: {
      expect_args(b, args, 1);
      const Value& v = args[0];
      if (v.kind() == Kind::Double) {
        double s = 0;
        for (double d : v.dbls()) s += d;
        return Value::dbl(s);
      }
      std::int64_t s = 0;
      for (std::int32_t i : v.ints()) s += i;
      if (!kernel::fits_int(s)) return Value::dbl(static_cast<double>(s));
      return Value::integer(static_cast<std::int32_t>(s));
    }
    case Builtin::Numeric:
      expect_args(b, args, 1);
      return Value::doubles(std::vector<double>(count_arg(b, args[0]), 0.0));
    case Builtin::Integer:
      expect_args(b, args, 1);
      return Value::integers(std::vector<std::int32_t>(count_arg(b, args[0]), 0));
    case Builtin::Logical:
      expect_args(b, args, 1);
      return Value::logicals(std::vector<std::int32_t>(count_arg(b, args[0]), 0));
    case Builtin::Sqrt:
      expect_args(b, args, 1);
      return map_double(args[0], [](double d) { return std::sqrt(d); });
    case Builtin::Floor:
      expect_args(b, args, 1);
      return map_double(args[0], [](double d) { return std::floor(d); });
    case Builtin::Abs: {
      expect_args(b, args, 1);
      const Value& v = args[0];
      if (v.kind() == Kind::Double) return map_double(v, [](double d) { return std::fabs(d); });
      std::vector<std::int32_t> o(v.size());
      for (std::size_t i = 0; i < v.size(); ++i) o[i] = std::abs(v.int_at(i));
      return Value::integers(std::move(o));
    }
    case Builtin::Print:
      expect_args(b, args, 1);
      if (out) out->push_back(args[0].repr());
      return args[0];
    case Builtin::Index: {
      expect_args(b, args, 2);
      const Value& x = args[0];
      std::size_t i = subscript(args[1], x.size());
      switch (x.kind()) {
        case Kind::Double: return Value::dbl(x.dbl_at(i));
        case Kind::Integer: return Value::integer(x.int_at(i));
        case Kind::Logical: return Value::logical(x.int_at(i) != 0);
      }
      break;
    }
    case Builtin::SetIndex:
      expect_args(b, args, 3);
      return set_index(args[0], args[1], args[2]);
  }
  throw RuntimeError("unknown builtin");
}

}  // namespace staleguard
