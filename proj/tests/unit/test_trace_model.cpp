#include <gtest/gtest.h>

#include "traceoracle/trace_model.hpp"

using namespace traceoracle;

namespace {

Event at(std::int64_t ts, std::int64_t seq = 0) {
  Event e;
  e.typ = EventType::GoStart;
  e.ts = ts;
  e.seq = seq;
  e.p = 0;
  return e;
}

bool has(const ValidationReport& r, ViolationKind k, std::size_t index) {
  for (const Violation& v : r)
    if (v.kind == k && v.event_index == index) return true;
  return false;
}

}  // namespace

TEST(EventType, ThirtyTwoCodesRoundTripThroughNames) {
  for (int code = 0; code < kNumEventTypes; ++code) {
    const auto t = static_cast<EventType>(code);
    const auto name = event_type_name(t);
    ASSERT_FALSE(name.empty());
    const auto back = event_type_from_name(name);
    ASSERT_TRUE(back.has_value()) << name;
    EXPECT_EQ(static_cast<int>(*back), code);
  }
  EXPECT_THROW(event_type_name(static_cast<EventType>(32)), std::out_of_range);
  EXPECT_FALSE(event_type_from_name("EvGoEnd").has_value());
}

TEST(EventType, KnownCodes) {
  EXPECT_EQ(event_type_name(EventType::GoEnd), "GoEnd");
  EXPECT_EQ(static_cast<int>(EventType::GoEnd), 0x0D);
  EXPECT_EQ(static_cast<int>(EventType::UserEnd), 0x1F);
  EXPECT_TRUE(is_block_event(EventType::GoBlock));
  EXPECT_TRUE(is_block_event(EventType::GoBlockNet));
  EXPECT_FALSE(is_block_event(EventType::GoUnblock));
  EXPECT_FALSE(is_block_event(EventType::GoSleep));
}

TEST(Validate, EmptyTraceIsValid) { EXPECT_TRUE(validate_trace(ParsedTrace{}).empty()); }

TEST(Validate, DecreasingTimestampFlagsSecondEvent) {
  ParsedTrace t;
  t.events = {at(5, 0), at(3, 1)};
  const auto r = validate_trace(t);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].kind, ViolationKind::Unsorted);
  EXPECT_EQ(r[0].event_index, 1u);
}

TEST(Validate, EqualTimestampsOrderedBySeq) {
  ParsedTrace t;
  t.events = {at(5, 1), at(5, 0)};
  EXPECT_TRUE(has(validate_trace(t), ViolationKind::Unsorted, 1));
  t.events = {at(5, 0), at(5, 1)};
  EXPECT_TRUE(validate_trace(t).empty());
}

TEST(Validate, DanglingStackId) {
  ParsedTrace t;
  Event e = at(0);
  e.stk_id = 7;
  t.events = {e};
  const auto r = validate_trace(t);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].kind, ViolationKind::DanglingStackId);
}

TEST(Validate, StackMustMatchTable) {
  ParsedTrace t;
  t.stacks[7] = {Frame{1, "main.main", "main.go", 3}};
  Event e = at(0);
  e.stk_id = 7;
  t.events = {e};
  EXPECT_TRUE(has(validate_trace(t), ViolationKind::StackMismatch, 0));
  t.events[0].stk = t.stacks[7];
  EXPECT_TRUE(validate_trace(t).empty());
}

TEST(Validate, LinksMustPointElsewhereInRange) {
  ParsedTrace t;
  t.events = {at(0, 0), at(1, 1)};
  t.events[0].link = 1;
  EXPECT_TRUE(validate_trace(t).empty());
  t.events[0].link = 2;
  EXPECT_TRUE(has(validate_trace(t), ViolationKind::BadLink, 0));
  t.events[0].link = 0;
  EXPECT_TRUE(has(validate_trace(t), ViolationKind::BadLink, 0));
}

TEST(Validate, NegativeFields) {
  ParsedTrace t;
  Event e = at(-1);
  e.off = -2;
  e.seq = -3;
  e.p = -2;
  e.stk = {Frame{0, "f", "f.go", -1}};
  e.stk_id = 0;
  t.events = {e};
  const auto r = validate_trace(t);
  EXPECT_TRUE(has(r, ViolationKind::NegativeTimestamp, 0));
  EXPECT_TRUE(has(r, ViolationKind::NegativeOffset, 0));
  EXPECT_TRUE(has(r, ViolationKind::NegativeSeq, 0));
  EXPECT_TRUE(has(r, ViolationKind::BadProcessor, 0));
  EXPECT_TRUE(has(r, ViolationKind::NegativeLine, 0));
}

TEST(Validate, ReportsEveryViolationAndLeavesInputAlone) {
  ParsedTrace t;
  t.events = {at(5, 0), at(3, 1), at(1, 2)};
  const ParsedTrace copy = t;
  EXPECT_EQ(validate_trace(t).size(), 2u);
  EXPECT_EQ(t, copy);
}

TEST(SortEvents, StableByTsThenSeqAndRemapsLinks) {
  ParsedTrace t;
  Event a = at(10, 0), b = at(5, 1), c = at(10, 0), d = at(1, 3);
  a.g = 1;
  c.g = 2;
  a.link = 3;  // -> d
  d.link = 0;  // -> a
  t.events = {a, b, c, d};
  sort_events(t);
  ASSERT_EQ(t.events.size(), 4u);
  EXPECT_EQ(t.events[0].ts, 1);
  EXPECT_EQ(t.events[1].ts, 5);
  EXPECT_EQ(t.events[2].g, 1u);
  EXPECT_EQ(t.events[3].g, 2u);
  EXPECT_EQ(t.events[2].link, std::optional<std::size_t>(0));
  EXPECT_EQ(t.events[0].link, std::optional<std::size_t>(2));
  EXPECT_TRUE(validate_trace(t).empty());
}

TEST(Label, Checks) {
  TraceLabel ok;
  ok.project = "etcd";
  EXPECT_EQ(check_label(ok), "");
  TraceLabel no_project;
  EXPECT_NE(check_label(no_project), "");
  TraceLabel pass_with_cause = ok;
  pass_with_cause.cause = "Traditional";
  EXPECT_NE(check_label(pass_with_cause), "");
  TraceLabel fail = ok;
  fail.verdict = Verdict::Fail;
  fail.category = BugCategory::Blocking;
  fail.cause = "Communication Deadlock";
  EXPECT_EQ(check_label(fail), "");
  EXPECT_EQ(verdict_name(Verdict::Fail), "fail");
  EXPECT_EQ(category_name(BugCategory::NonBlocking), "NonBlocking");
}
