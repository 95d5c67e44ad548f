// Acceptance runner: one PASS/FAIL line per criterion.
//
//   acceptance            run all seven
//   acceptance --only 4   run one

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "confusion_oracle.hpp"
#include "gradient_oracle.hpp"
#include "properties.hpp"
#include "traceoracle/dataset.hpp"
#include "traceoracle/evaluation.hpp"
#include "traceoracle/rng.hpp"
#include "traceoracle/trace_parser.hpp"

using namespace traceoracle;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void progress(std::string_view msg) {
  std::fprintf(stderr, "  %.*s\n", static_cast<int>(msg.size()), msg.data());
}

Outcome round_trip() {
  const auto t0 = Clock::now();
  SynthConfig cfg;
  cfg.num_projects = 10;
  cfg.traces_per_project = 100;
  cfg.events_min = 4;
  cfg.events_max = 60;
  cfg.seed = 1000;
  const Corpus corpus = synth_corpus(cfg);
  std::size_t binary_ok = 0, json_ok = 0, events = 0;
  for (const LabeledTrace& t : corpus) {
    binary_ok += parse_binary(encode_binary(t.trace)) == t.trace ? 1 : 0;
    json_ok += parse_json(emit_json(t.trace)) == t.trace ? 1 : 0;
    events += t.trace.events.size();
  }
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = corpus.size() == 1000 && binary_ok == 1000 && json_ok == 1000 && secs < 30;
  o.detail = std::to_string(corpus.size()) + " traces, " + std::to_string(events) + " events; binary " +
             std::to_string(binary_ok) + "/1000, json " + std::to_string(json_ok) + "/1000, " +
             std::to_string(secs) + " s (limit 30)";
  return o;
}

Outcome gradients() {
  const auto t0 = Clock::now();
  ModelConfig c;
  c.vocab_size = 20;
  c.seq_len = 16;
  c.embed_dim = 8;
  c.num_layers = 1;
  c.num_heads = 1;
  c.ffn_dim = 16;
  c.mlp_hidden = 8;
  c.dropout = 0.0;
  auto params = init_model<double>(c, 2);
  Rng rng(7);
  params.for_each_tensor([&](std::string_view name, Matrix<double>& m) {
    if (!is_fan_initialised(name) && name != "embedding") {
      for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] += rng.uniform(-0.2, 0.2);
    }
  });
  std::vector<TokenSequence> batch;
  for (int b = 0; b < 4; ++b) {
    TokenSequence s;
    s.true_len = static_cast<int>(rng.between(2, c.seq_len));
    s.ids.assign(static_cast<std::size_t>(c.seq_len), kPadId);
    for (int i = 0; i < s.true_len; ++i) s.ids[static_cast<std::size_t>(i)] = static_cast<int>(rng.between(1, c.vocab_size - 1));
    batch.push_back(s);
  }
  const std::vector<int> labels = {1, 0, 0, 1};
  const auto checks = oracle::gradient_check(params, batch, labels, 1e-4);
  double worst = 0;
  std::string worst_name;
  for (const auto& t : checks) {
    if (t.rel_error >= worst) {
      worst = t.rel_error;
      worst_name = t.name;
    }
  }
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = !checks.empty() && worst < 1e-3 && secs < 120;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%zu tensors, max relative error %.3g (%s), %.1f s (limit 120)", checks.size(), worst,
                worst_name.c_str(), secs);
  o.detail = buf;
  return o;
}

Outcome metric_oracle() {
  std::vector<Verdict> truth(12, Verdict::Pass), pred(12, Verdict::Fail);
  for (int i = 0; i < 4; ++i) pred[static_cast<std::size_t>(i)] = Verdict::Pass;
  truth.insert(truth.end(), 28, Verdict::Fail);
  pred.insert(pred.end(), 28, Verdict::Fail);
  const Metrics m = compute_metrics(pred, truth);
  bool ok = m.tnr().percent() == "33%" && m.tpr().percent() == "100%" && m.total().percent() == "80%";
  std::string detail = "TNR " + m.tnr().percent() + ", TPR " + m.tpr().percent() + ", total " + m.total().percent();

  Rng rng(3);
  int agree = 0;
  for (int v = 0; v < 100; ++v) {
    const auto n = static_cast<std::size_t>(rng.between(1, 200));
    std::vector<Verdict> p(n), t(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = rng.chance(0.5) ? Verdict::Fail : Verdict::Pass;
      t[i] = rng.chance(0.5) ? Verdict::Fail : Verdict::Pass;
    }
    const Metrics lib = compute_metrics(p, t);
    const oracle::Confusion ref = oracle::count_confusion(p, t);
    const bool same = lib == Metrics{ref.tp, ref.fn, ref.tn, ref.fp} &&
                      lib.total().percent() == std::to_string(oracle::whole_percent(ref.tp + ref.tn, n)) + "%";
    agree += same ? 1 : 0;
  }
  ok = ok && agree == 100;
  detail += "; brute-force agreement " + std::to_string(agree) + "/100";
  return {ok, detail};
}

ModelConfig reference_model() {
  ModelConfig m;
  m.seq_len = 256;
  m.embed_dim = 128;
  m.num_layers = 2;
  m.num_heads = 2;
  return m;
}

Outcome learnability() {
  const auto t0 = Clock::now();
  SynthConfig cfg;
  cfg.num_projects = 4;
  cfg.traces_per_project = 60;
  cfg.pass_fraction = 0.5;
  cfg.seed = 4;
  const Corpus corpus = synth_corpus(cfg);
  TrainConfig train;
  train.seed = 4;
  CrossvalOptions opt;
  opt.progress = progress;
  const auto folds = run_crossval(corpus, reference_model(), train, opt);
  bool ok = folds.size() == 4;
  std::string detail;
  for (const FoldResult& f : folds) {
    const double tpr = f.metrics.tpr().value();
    const double total = f.metrics.total().value();
    ok = ok && tpr >= 0.90 && total >= 0.85;
    char buf[96];
    std::snprintf(buf, sizeof buf, "%s TPR %.3f total %.3f; ", f.project.c_str(), tpr, total);
    detail += buf;
  }
  const double secs = seconds_since(t0);
  ok = ok && secs < 15 * 60;
  detail += std::to_string(static_cast<int>(secs)) + " s (limit 900)";
  return {ok, detail};
}

Outcome ablation() {
  const auto t0 = Clock::now();
  SynthConfig cfg;
  cfg.num_projects = 4;
  cfg.traces_per_project = 50;
  cfg.mode = LabelMode::ProcessorPlanted;
  cfg.format = TraceFormat::Json;
  cfg.seed = 5;
  const Corpus corpus = synth_corpus(cfg);
  TrainConfig train;
  train.steps = 1500;
  train.seed = 5;
  AblationOptions opt;
  opt.progress = progress;
  const AblationReport r = run_ablation(corpus, reference_model(), train, 5, opt);
  std::optional<double> d_p, d_off;
  for (const AblationArm& a : r.arms) {
    if (a.field == TraceField::P) d_p = a.delta_total;
    if (a.field == TraceField::Off) d_off = a.delta_total;
  }
  const double secs = seconds_since(t0);
  const bool ok = r.arms.size() == 7 && d_p && d_off && *d_p <= -30 && std::abs(*d_off) <= 5 && secs < 25 * 60;
  char buf[200];
  std::snprintf(buf, sizeof buf, "baseline total %s; dtotal(P) %+.1f, dtotal(Off) %+.1f points; %d s (limit 1500)",
                r.baseline.total().percent().c_str(), d_p.value_or(NAN), d_off.value_or(NAN), static_cast<int>(secs));
  return {ok, buf};
}

Outcome determinism() {
  SynthConfig cfg;
  cfg.seed = 6;
  const Corpus corpus = synth_corpus(cfg);
  TrainConfig train;
  train.steps = 150;
  train.seed = 6;
  const std::string a = crossval_jsonl(run_crossval(corpus, reference_model(), train));
  CrossvalOptions opt;
  opt.jobs = 2;
  const std::string b = crossval_jsonl(run_crossval(corpus, reference_model(), train, opt));
  const bool ok = a == b && !a.empty();
  return {ok, std::to_string(a.size()) + " bytes of fold reports, " + (a == b ? "identical" : "different")};
}

Outcome properties() {
  const auto pad = oracle::check_pad_invariance(7, 200);
  const auto leak = oracle::check_vocab_leak(7);
  return {pad.ok && leak.ok, "padding: " + pad.detail + " over " + std::to_string(pad.cases) +
                                 " sequences; vocabulary: " + leak.detail};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"traceoracle acceptance checks"};
  int only = 0;
  app.add_option("--only", only, "Run a single criterion")->check(CLI::Range(1, 7));
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"parser round-trip", round_trip},        {"gradient check", gradients},
      {"metric oracle", metric_oracle},         {"LOPO learnability", learnability},
      {"ablation directionality", ablation},    {"crossval determinism", determinism},
      {"padding and vocabulary properties", properties},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int n = static_cast<int>(i) + 1;
    if (only != 0 && only != n) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& ex) {
      o = {false, std::string("threw: ") + ex.what()};
    }
    std::printf("criterion %d (%s): %s  %s\n", n, criteria[i].first, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
