#include <gtest/gtest.h>

#include <random>

#include "staleguard/harness.hpp"
#include "staleguard/runtime.hpp"

using namespace staleguard;

namespace {

const FeedbackType kIntS = FeedbackType::of_kind(Kind::Integer, true);
const FeedbackType kDblIntS =
    FeedbackType::partial(FeedbackType::kDoubleBit | FeedbackType::kIntegerBit, true, false);

struct Prog {
  LoadedProgram p;
  std::unique_ptr<Vm> vm;
  explicit Prog(const std::string& src, VmOptions o = {}) : p(load_source("t", src)) {
    vm = std::make_unique<Vm>(p.module, o);
    vm->run();
  }
  FunctionId fn(const std::string& name) const { return *p.module->find_function(name); }
  const BaselineFunction& base(const std::string& name) const { return p.module->functions[fn(name)]; }
};

TEST(Interpret, ListingOneWithIntegerX) {
  Prog t("x <- 1L\nf <- function() x+x+x+x+1L");
  Value v = t.vm->call("f", {});
  EXPECT_TRUE(v.identical(Value::integer(5)));
  EXPECT_EQ(t.vm->feedback(t.fn("f")).observed[0], kIntS);
}

TEST(Interpret, Identity) {
  Prog t("id <- function(a) a");
  for (const Value& v : {Value::integer(3), Value::dbl(2.5), Value::logicals({1, 0}),
                         Value::doubles({1, 2}).with_class("foo")})
    EXPECT_TRUE(t.vm->call("id", {v}).identical(v));
}

TEST(Interpret, LcgStepOnVector) {
  Prog t("state <- c(1, 2, 3)\nstep <- function() state <<- (state * 48271) %% (2^31 - 1)");
  t.vm->call("step", {});
  // Oracle: exact 64-bit integer arithmetic.
  const std::int64_t m = (std::int64_t{1} << 31) - 1;
  std::vector<double> want;
  for (std::int64_t s : {1, 2, 3}) want.push_back(static_cast<double>((s * 48271) % m));
  EXPECT_EQ(want, (std::vector<double>{48271, 96542, 144813}));
  EXPECT_TRUE(t.vm->global("state").identical(Value::doubles(want)));
}

TEST(Interpret, PollutedFeedbackMatchesListing) {
  Prog t("f <- function() x+x+x+x+1L\nx <- 1\nf(); f()\nx <- 1L\nf()");
  const FeedbackTable& fb = t.vm->feedback(t.fn("f"));
  EXPECT_EQ(fb.observed[0], kDblIntS);
  EXPECT_EQ(fb.hits[0], 3u);
}

TEST(Interpret, UnboundVariable) {
  Prog t("f <- function() g\ng <- 1");
  t.vm->reset_globals();
  try {
    t.vm->call("f", {});
    FAIL();
  } catch (const RuntimeError& e) {
    EXPECT_NE(std::string(e.what()).find("object 'g' not found"), std::string::npos);
  }
}

TEST(Interpret, LengthMismatchPropagates) {
  Prog t("f <- function() c(1, 2) + c(1, 2, 3)");
  EXPECT_THROW(t.vm->call("f", {}), LengthMismatch);
}

TEST(Interpret, DivisionByZeroIsNotAnError) {
  Prog t("f <- function() 1L / 0L");
  Value v = t.vm->call("f", {});
  EXPECT_TRUE(std::isinf(v.dbl_at(0)));
}

TEST(Interpret, CountsInvocations) {
  Prog t("f <- function(a) a");
  EXPECT_EQ(t.vm->state(t.fn("f")).invocations, 0u);
  t.vm->interpret(t.fn("f"), {Value::integer(1)});
  EXPECT_EQ(t.vm->state(t.fn("f")).invocations, 1u);
}

TEST(Interpret, RecursionDepthLimited) {
  VmOptions o;
  o.max_depth = 50;
  Prog t("f <- function(n) f(n + 1)", o);
  EXPECT_THROW(t.vm->call("f", {Value::integer(0)}), RuntimeError);
  EXPECT_TRUE(t.vm->activations().empty());
}

TEST(Interpret, ForLoopNeedsIntegralStart) {
  Prog t("f <- function() { s <- 0\n for (i in 1.5:3) s <- s + i\n s }");
  EXPECT_THROW(t.vm->call("f", {}), RuntimeError);
}

TEST(Interpret, DescendingRange) {
  Prog t("f <- function() { s <- 0L\n for (i in 3:1) s <- s * 10L + i\n s }");
  EXPECT_TRUE(t.vm->call("f", {}).identical(Value::integer(321)));
}

TEST(TierUp, FreshFunction) {
  Prog t("f <- function(a) a + 1L");
  EXPECT_FALSE(t.vm->tier_up_check(t.fn("f")));
  EXPECT_EQ(t.vm->state(t.fn("f")).invocations, 0u);
}

TEST(TierUp, FiresOnceAfterThreshold) {
  Prog t("f <- function(a) a + 1L");
  const FunctionId f = t.fn("f");
  for (int i = 0; i < 10; ++i) t.vm->call(f, {Value::integer(i)});
  EXPECT_EQ(t.vm->state(f).compiles, 0u);
  EXPECT_TRUE(t.vm->tier_up_check(f));
  for (int i = 0; i < 20; ++i) t.vm->call(f, {Value::integer(i)});
  EXPECT_EQ(t.vm->state(f).compiles, 1u);
  EXPECT_EQ(t.vm->events().count(EventKind::TierUp), 1u);
  EXPECT_FALSE(t.vm->tier_up_check(f));
}

TEST(TierUp, TopLevelNeverCompiles) {
  Prog t("x <- 1");
  for (int i = 0; i < 20; ++i) t.vm->run();
  EXPECT_FALSE(t.vm->state(kTopLevel).compiled);
}

TEST(TierUp, DisabledTier2) {
  VmOptions o;
  o.tier2 = false;
  Prog t("f <- function(a) a", o);
  for (int i = 0; i < 20; ++i) t.vm->call("f", {Value::integer(1)});
  EXPECT_FALSE(t.vm->state(t.fn("f")).compiled);
}

// Three deopts in one clearing window blacklist the function in full mode.
TEST(TierUp, BlacklistDominates) {
  VmOptions o;
  o.profiler = ProfilerMode::Full;
  o.config.period = 1'000'000'000;  // no triggers, the window never clears
  Prog t("g <- function(a, b, c) a + b + c", o);
  const FunctionId g = t.fn("g");
  auto I = [](int v) { return Value::integer(v); };
  for (int i = 0; i < 11; ++i) t.vm->call(g, {I(1), I(2), I(3)});
  t.vm->call(g, {Value::dbl(1), I(2), I(3)});
  t.vm->call(g, {I(1), Value::dbl(2), I(3)});
  t.vm->call(g, {I(1), I(2), Value::dbl(3)});
  EXPECT_EQ(t.vm->state(g).deopts, 3u);
  EXPECT_TRUE(t.vm->state(g).blacklisted);
  EXPECT_FALSE(t.vm->tier_up_check(g));
  t.vm->call(g, {I(1), I(2), I(3)});
  EXPECT_FALSE(t.vm->state(g).compiled);
}

TEST(TierUp, NoBlacklistOutsideFullMode) {
  Prog t("g <- function(a, b, c) a + b + c");
  const FunctionId g = t.fn("g");
  auto I = [](int v) { return Value::integer(v); };
  for (int i = 0; i < 11; ++i) t.vm->call(g, {I(1), I(2), I(3)});
  t.vm->call(g, {Value::dbl(1), I(2), I(3)});
  t.vm->call(g, {I(1), Value::dbl(2), I(3)});
  t.vm->call(g, {I(1), I(2), Value::dbl(3)});
  EXPECT_FALSE(t.vm->state(g).blacklisted);
}

TEST(FeedbackMonotone, NeverNarrowsWithoutReset) {
  Prog t("f <- function(a) a");
  const FunctionId f = t.fn("f");
  std::mt19937 rng(11);
  std::vector<Value> pool = {Value::integer(1), Value::dbl(1), Value::logical(false), Value::doubles({1, 2}),
                             Value::dbl(2).with_class("k")};
  FeedbackType prev;
  for (int i = 0; i < 200; ++i) {
    const Value& v = pool[rng() % pool.size()];
    t.vm->interpret(f, {v});
    FeedbackType now = t.vm->feedback(f).observed[0];
    EXPECT_EQ(merge(prev, now), now);
    EXPECT_EQ(now, merge(prev, type_of(v)));
    prev = now;
  }
}

TEST(Units, EveryInstructionCounts) {
  Prog t("f <- function() 1L");
  const auto before = t.vm->units();
  t.vm->call("f", {});
  // push, return
  EXPECT_EQ(t.vm->units() - before, 2u);
}

}  // namespace
