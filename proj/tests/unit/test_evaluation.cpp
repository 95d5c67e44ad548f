#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <json.hpp>

#include "confusion_oracle.hpp"
#include "properties.hpp"
#include "traceoracle/error.hpp"
#include "traceoracle/evaluation.hpp"
#include "traceoracle/rng.hpp"

using namespace traceoracle;

namespace {

std::vector<Verdict> repeat(Verdict v, int n) { return std::vector<Verdict>(static_cast<std::size_t>(n), v); }

std::vector<Verdict> concat(std::vector<Verdict> a, const std::vector<Verdict>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

ModelConfig tiny_model() {
  ModelConfig m;
  m.seq_len = 256;
  m.embed_dim = 8;
  m.num_layers = 1;
  m.num_heads = 2;
  m.ffn_dim = 8;
  m.mlp_hidden = 4;
  return m;
}

TrainConfig tiny_train(std::uint64_t seed) {
  TrainConfig t;
  t.steps = 3;
  t.batch_size = 2;
  t.seed = seed;
  return t;
}

Corpus small_corpus(int projects, int per_project, std::uint64_t seed) {
  SynthConfig c;
  c.num_projects = projects;
  c.traces_per_project = per_project;
  c.seed = seed;
  return synth_corpus(c);
}

}  // namespace

TEST(Metrics, LowPassingAccuracyExample) {
  // 12 passing traces, 4 recognised; 28 failing traces, all recognised.
  const auto labels = concat(repeat(Verdict::Pass, 12), repeat(Verdict::Fail, 28));
  const auto preds = concat(concat(repeat(Verdict::Pass, 4), repeat(Verdict::Fail, 8)), repeat(Verdict::Fail, 28));
  const Metrics m = compute_metrics(preds, labels);
  EXPECT_EQ(m, (Metrics{28, 0, 4, 8}));
  EXPECT_EQ(m.tnr().percent(), "33%");
  EXPECT_EQ(m.tpr().percent(), "100%");
  EXPECT_EQ(m.total().percent(), "80%");
  EXPECT_NEAR(m.total().value(), 0.8, 1e-15);
}

TEST(Metrics, AllCorrect) {
  const auto labels = concat(repeat(Verdict::Pass, 3), repeat(Verdict::Fail, 5));
  const Metrics m = compute_metrics(labels, labels);
  EXPECT_EQ(m.tpr().value(), 1.0);
  EXPECT_EQ(m.tnr().value(), 1.0);
  EXPECT_EQ(m.total().value(), 1.0);
}

TEST(Metrics, MatchesBruteForce) {
  Rng rng(50);
  for (int round = 0; round < 20; ++round) {
    std::vector<Verdict> pred, truth;
    for (int i = 0; i < 50; ++i) {
      pred.push_back(rng.chance(0.5) ? Verdict::Fail : Verdict::Pass);
      truth.push_back(rng.chance(0.4) ? Verdict::Fail : Verdict::Pass);
    }
    const Metrics m = compute_metrics(pred, truth);
    const oracle::Confusion c = oracle::count_confusion(pred, truth);
    EXPECT_EQ(m, (Metrics{c.tp, c.fn, c.tn, c.fp}));
    EXPECT_EQ(m.total().percent(), std::to_string(oracle::whole_percent(c.tp + c.tn, 50)) + "%");
    // Identities between the rates and the counts.
    EXPECT_EQ(m.tp + m.fn + m.tn + m.fp, 50u);
    EXPECT_EQ(m.tpr().den + m.tnr().den, m.total().den);
    EXPECT_EQ(m.tpr().num + m.tnr().num, m.total().num);
  }
}

TEST(Metrics, Errors) {
  const auto one = repeat(Verdict::Pass, 1);
  const auto two = repeat(Verdict::Pass, 2);
  try {
    compute_metrics(one, two);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::LengthMismatch);
  }
  EXPECT_THROW(compute_metrics({}, {}), Error);
}

TEST(Metrics, UndefinedRates) {
  const Metrics m = compute_metrics(repeat(Verdict::Pass, 4), repeat(Verdict::Pass, 4));
  EXPECT_FALSE(m.tpr().defined());
  EXPECT_EQ(m.tpr().percent(), "n/a");
  EXPECT_TRUE(std::isnan(m.tpr().value()));
  EXPECT_EQ(delta_points(m.tpr(), m.tnr()), std::nullopt);
  EXPECT_EQ(delta_points(Rate{1, 2}, Rate{3, 4}), std::optional<double>(-25.0));
}

TEST(Metrics, PercentRoundsHalfUp) {
  EXPECT_EQ((Rate{1, 8}).percent(), "13%");
  EXPECT_EQ((Rate{1, 200}).percent(), "1%");
  EXPECT_EQ((Rate{1, 3}).percent(), "33%");
  EXPECT_EQ((Rate{2, 3}).percent(), "67%");
  EXPECT_EQ((Rate{0, 3}).percent(), "0%");
}

TEST(Crossval, OneResultPerProject) {
  const Corpus c = small_corpus(2, 4, 1);
  const auto folds = run_crossval(c, tiny_model(), tiny_train(1));
  ASSERT_EQ(folds.size(), 2u);
  EXPECT_EQ(folds[0].project, "project-1");
  EXPECT_EQ(folds[1].project, "project-2");
  for (const FoldResult& f : folds) {
    EXPECT_EQ(f.train_size, 4u);
    EXPECT_EQ(f.test_size, 4u);
    EXPECT_EQ(f.metrics.tp + f.metrics.fn + f.metrics.tn + f.metrics.fp, 4u);
    EXPECT_GT(f.vocab_size, kNumReserved);
  }
}

TEST(Crossval, HoldOutSubsetAndErrors) {
  const Corpus c = small_corpus(3, 4, 2);
  CrossvalOptions opt;
  opt.hold_out = {"project-3"};
  const auto folds = run_crossval(c, tiny_model(), tiny_train(1), opt);
  ASSERT_EQ(folds.size(), 1u);
  EXPECT_EQ(folds[0].project, "project-3");
  EXPECT_EQ(folds[0].train_size, 8u);

  opt.hold_out = {"nope"};
  EXPECT_THROW(run_crossval(c, tiny_model(), tiny_train(1), opt), Error);
  try {
    run_crossval(small_corpus(1, 4, 2), tiny_model(), tiny_train(1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidConfig);
  }
}

TEST(Crossval, DeterministicAcrossJobCounts) {
  const Corpus c = small_corpus(3, 4, 3);
  CrossvalOptions serial;
  CrossvalOptions parallel;
  parallel.jobs = 3;
  const auto a = crossval_jsonl(run_crossval(c, tiny_model(), tiny_train(9), serial));
  const auto b = crossval_jsonl(run_crossval(c, tiny_model(), tiny_train(9), parallel));
  EXPECT_EQ(a, b);
  EXPECT_EQ(std::count(a.begin(), a.end(), '\n'), 3);
}

TEST(Crossval, HeldOutProjectNeverReachesVocabulary) {
  const auto r = oracle::check_vocab_leak(5);
  EXPECT_TRUE(r.ok) << r.detail;
  EXPECT_EQ(r.cases, 3);
}

TEST(Reports, JsonlKeysAndNulls) {
  FoldResult f;
  f.project = "p";
  f.metrics = Metrics{0, 0, 2, 1};
  f.train_size = 10;
  f.test_size = 3;
  const auto rec = nlohmann::json::parse(crossval_jsonl({f}));
  EXPECT_EQ(rec["fold"], "p");
  EXPECT_TRUE(rec["tpr"].is_null());
  EXPECT_NEAR(rec["tnr"].get<double>(), 2.0 / 3.0, 1e-15);
  EXPECT_EQ(rec["train"], 10);
  const std::string table = crossval_table({f});
  EXPECT_NE(table.find("n/a"), std::string::npos);
  EXPECT_NE(table.find("67%"), std::string::npos);
}

TEST(Ablation, SevenArmsOnOneSplit) {
  const Corpus c = small_corpus(2, 10, 4);
  const AblationReport r = run_ablation(c, tiny_model(), tiny_train(2), 7);
  ASSERT_EQ(r.arms.size(), 7u);
  std::set<TraceField> fields;
  for (const AblationArm& a : r.arms) {
    fields.insert(a.field);
    EXPECT_EQ(a.metrics.tp + a.metrics.fn + a.metrics.tn + a.metrics.fp, 4u);
    EXPECT_EQ(a.delta_total, delta_points(a.metrics.total(), r.baseline.total()));
  }
  EXPECT_EQ(fields, std::set<TraceField>(std::begin(kAblationFields), std::end(kAblationFields)));
  EXPECT_EQ(r.test_counts, (ProjectCounts{2, 2}));
  EXPECT_EQ(r.train_counts, (ProjectCounts{8, 8}));

  const std::string jsonl = ablation_jsonl(r);
  EXPECT_EQ(std::count(jsonl.begin(), jsonl.end(), '\n'), 8);
  EXPECT_EQ(jsonl.rfind("{\"arm\":\"baseline\"", 0), 0u);
  EXPECT_EQ(jsonl, ablation_jsonl(run_ablation(c, tiny_model(), tiny_train(2), 7)));
  AblationOptions opt;
  opt.jobs = 4;
  EXPECT_EQ(jsonl, ablation_jsonl(run_ablation(c, tiny_model(), tiny_train(2), 7, opt)));
  EXPECT_NE(ablation_table(r).find("split: train 8 pass / 8 fail"), std::string::npos);
}

TEST(Ablation, RemovedFieldIsAbsentFromVocabulary) {
  const Corpus c = small_corpus(2, 6, 8);
  std::vector<std::size_t> all(c.size());
  std::iota(all.begin(), all.end(), 0);
  const FittedModel f = fit(c, all, tiny_model(), tiny_train(1), FieldSet::all().without(TraceField::P));
  EXPECT_FALSE(f.vocab.contains("P"));
  EXPECT_TRUE(f.vocab.contains("Ts"));
  EXPECT_EQ(f.loss_log.size(), 3u);
  const FittedModel back = fitted_from_checkpoint(f.checkpoint());
  EXPECT_EQ(back.vocab, f.vocab);
  EXPECT_EQ(back.fields, f.fields);
  std::vector<ParsedTrace> traces;
  for (const LabeledTrace& t : c) traces.push_back(t.trace);
  const auto p1 = f.predict(std::span<const ParsedTrace>(traces));
  const auto p2 = back.predict(std::span<const ParsedTrace>(traces));
  ASSERT_EQ(p1.size(), p2.size());
  for (std::size_t i = 0; i < p1.size(); ++i) EXPECT_EQ(p1[i].probability, p2[i].probability);
}

TEST(Ablation, Errors) {
  EXPECT_THROW(run_ablation(Corpus{}, tiny_model(), tiny_train(1), 1), Error);
}
