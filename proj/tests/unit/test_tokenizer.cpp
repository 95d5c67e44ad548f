#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "traceoracle/dataset.hpp"
#include "traceoracle/rng.hpp"
#include "traceoracle/tokenizer.hpp"

using namespace traceoracle;

namespace {

ParsedTrace one_go_end() {
  Event e;
  e.typ = EventType::GoEnd;
  e.p = 0;
  ParsedTrace t;
  t.events = {e};
  return t;
}

bool is_subsequence(const RawTokens& small, const RawTokens& big) {
  std::size_t j = 0;
  for (const std::string& tok : big)
    if (j < small.size() && small[j] == tok) ++j;
  return j == small.size();
}

}  // namespace

TEST(Serialize, GoEndAllFields) {
  const RawTokens want = {"EvGoEnd", "Off", "0", "Ts", "0", "P", "0", "G", "0", "StkID", "0", "<EOT>"};
  EXPECT_EQ(serialize_trace(one_go_end()), want);
}

TEST(Serialize, TsOnly) {
  EXPECT_EQ(serialize_trace(one_go_end(), FieldSet{TraceField::Ts}), (RawTokens{"Ts", "0", "<EOT>"}));
}

TEST(Serialize, DigitByDigit) {
  ParsedTrace t = one_go_end();
  t.events[0].ts = 203;
  EXPECT_EQ(serialize_trace(t, FieldSet{TraceField::Ts}), (RawTokens{"Ts", "2", "0", "3", "<EOT>"}));
}

TEST(Serialize, UnattributedProcessorIsNegative) {
  ParsedTrace t = one_go_end();
  t.events[0].p = kNoProcessor;
  EXPECT_EQ(serialize_trace(t, FieldSet{TraceField::P}), (RawTokens{"P", "neg", "1", "<EOT>"}));
}

TEST(Serialize, ArgsStringsAndFrames) {
  ParsedTrace t;
  Event e;
  e.typ = EventType::GoCreate;
  e.args = {12, 0, 7};
  e.sargs = {"shared.counter"};
  e.stk = {Frame{1, "main.worker", "main.go", 41}, Frame{2, "main.main", "main.go", 9}};
  t.events = {e};
  EXPECT_EQ(serialize_trace(t, FieldSet{TraceField::Args}), (RawTokens{"Arg0", "1", "2", "Arg2", "7", "<EOT>"}));
  EXPECT_EQ(serialize_trace(t, FieldSet{TraceField::SArgs}), (RawTokens{"S:shared.counter", "<EOT>"}));
  EXPECT_EQ(serialize_trace(t, FieldSet{TraceField::Stk}),
            (RawTokens{"Fn:main.worker", "4", "1", "Fn:main.main", "9", "<EOT>"}));
  EXPECT_EQ(serialize_trace(t, FieldSet{TraceField::Type}), (RawTokens{"EvGoCreate", "<EOT>"}));
}

TEST(Serialize, EventsInOrderEndWithSingleEot) {
  ParsedTrace t = one_go_end();
  t.events.push_back(t.events[0]);
  t.events[1].typ = EventType::GoSleep;
  const RawTokens raw = serialize_trace(t, FieldSet{TraceField::Type});
  EXPECT_EQ(raw, (RawTokens{"EvGoEnd", "EvGoSleep", "<EOT>"}));
}

TEST(Vocab, ReservedLayout) {
  const Vocabulary v;
  EXPECT_EQ(v.size(), kNumReserved);
  EXPECT_EQ(v.id("<PAD>"), kPadId);
  EXPECT_EQ(v.id("<UNK>"), kUnkId);
  EXPECT_EQ(v.id("<EOT>"), kEotId);
  for (int d = 0; d < 10; ++d) EXPECT_EQ(v.id(std::to_string(d)), kFirstDigitId + d);
}

TEST(Vocab, OneKeyword) {
  const Vocabulary v = build_vocab({{"Ts", "0"}});
  EXPECT_EQ(v.size(), 14);
  EXPECT_EQ(v.id("Ts"), 13);
}

TEST(Vocab, SharedKeywordsSameVocabulary) {
  const RawTokens a = {"EvGoEnd", "Ts", "1", "<EOT>"};
  const RawTokens b = {"EvGoEnd", "Ts", "2", "<EOT>"};
  EXPECT_EQ(build_vocab({a, b}), build_vocab({a}));
  EXPECT_EQ(build_vocab({a, b}), build_vocab({b}));
}

TEST(Vocab, FirstSeenOrder) {
  const Vocabulary v = build_vocab({{"b", "a"}, {"c", "a"}});
  EXPECT_EQ(v.token(13), "b");
  EXPECT_EQ(v.token(14), "a");
  EXPECT_EQ(v.token(15), "c");
}

TEST(Vocab, TextRoundTripWithEscapes) {
  const Vocabulary v = build_vocab({{"S:two\nlines", "S:back\\slash", "Fn:x"}});
  const Vocabulary back = Vocabulary::from_text(v.to_text());
  EXPECT_EQ(back, v);
  EXPECT_EQ(back.id("S:two\nlines"), 13);
  EXPECT_THROW(Vocabulary::from_text("x\n"), std::invalid_argument);
  EXPECT_THROW(Vocabulary::from_text(Vocabulary().to_text() + "a\na\n"), std::invalid_argument);
}

TEST(Tokenize, EmptyTrace) {
  const TokenSequence s = tokenize(ParsedTrace{}, Vocabulary(), FieldSet::all(), 8);
  EXPECT_EQ(s.true_len, 1);
  EXPECT_EQ(s.ids, (std::vector<int>{kEotId, 0, 0, 0, 0, 0, 0, 0}));
}

TEST(Tokenize, HeadKeptTruncation) {
  RawTokens raw(10000, "Ts");
  for (std::size_t i = 0; i < raw.size(); i += 3) raw[i] = "7";
  const Vocabulary v = build_vocab({raw});
  const TokenSequence s = encode_tokens(raw, v, 4096);
  EXPECT_EQ(s.ids.size(), 4096u);
  EXPECT_EQ(s.true_len, 4096);
  EXPECT_EQ(std::count(s.ids.begin(), s.ids.end(), kPadId), 0);
  for (std::size_t i = 0; i < 4096; ++i) EXPECT_EQ(s.ids[i], v.id(raw[i]));
}

TEST(Tokenize, UnseenTokenIsUnk) {
  const Vocabulary v = build_vocab({{"Ts"}});
  const TokenSequence s = encode_tokens({"Ts", "EvGoEnd", "<EOT>"}, v, 5);
  EXPECT_EQ(s.ids, (std::vector<int>{13, kUnkId, kEotId, kPadId, kPadId}));
  EXPECT_EQ(s.true_len, 3);
}

TEST(FieldSetTest, ParseAndRemove) {
  EXPECT_EQ(FieldSet::parse("Ts,P"), (FieldSet{TraceField::Ts, TraceField::P}));
  EXPECT_EQ(FieldSet::parse("Ts,P").to_string(), "Ts,P");
  EXPECT_EQ(FieldSet::all().to_string(), "Off,Type,Ts,P,G,StkID,Stk,Args,SArgs");
  EXPECT_THROW(FieldSet::parse("Ts,Nope"), std::invalid_argument);
  EXPECT_THROW(FieldSet::parse(""), std::invalid_argument);
  EXPECT_THROW(FieldSet{TraceField::Ts}.without(TraceField::Ts), std::invalid_argument);
  EXPECT_FALSE(FieldSet::all().without(TraceField::P).contains(TraceField::P));
  EXPECT_EQ(FieldSet::from_bits(FieldSet::all().bits()), FieldSet::all());
  EXPECT_EQ(std::size(kAblationFields), 7u);
}

// Removing fields only deletes tokens: the reduced serialization is a subsequence of
// the full one.
TEST(Serialize, MaskingOnlyRemovesTokens) {
  SynthConfig cfg;
  cfg.num_projects = 2;
  cfg.traces_per_project = 10;
  cfg.seed = 21;
  const Corpus c = synth_corpus(cfg);
  Rng rng(5);
  for (const LabeledTrace& item : c) {
    const RawTokens full = serialize_trace(item.trace);
    for (int k = 0; k < 5; ++k) {
      const auto bits = static_cast<std::uint16_t>(rng.between(1, (1 << kNumTraceFields) - 1));
      const FieldSet fs = FieldSet::from_bits(bits);
      const RawTokens part = serialize_trace(item.trace, fs);
      EXPECT_TRUE(is_subsequence(part, full)) << fs.to_string();
      EXPECT_LE(part.size(), full.size());
      EXPECT_EQ(part.back(), "<EOT>");
    }
  }
}

TEST(Vocab, GeneratedCorpusStaysSmall) {
  SynthConfig cfg;
  cfg.seed = 8;
  std::vector<RawTokens> raws;
  for (const LabeledTrace& item : synth_corpus(cfg)) raws.push_back(serialize_trace(item.trace));
  const Vocabulary v = build_vocab(raws);
  EXPECT_LT(v.size(), 200);
  const Vocabulary reserved;
  std::set<std::string> distinct(reserved.tokens().begin(), reserved.tokens().end());
  for (const auto& r : raws) distinct.insert(r.begin(), r.end());
  EXPECT_EQ(static_cast<std::size_t>(v.size()), distinct.size());
}
