#include "traceoracle/evaluation.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "traceoracle/checkpoint.hpp"
#include "traceoracle/error.hpp"
#include "traceoracle/rng.hpp"

namespace traceoracle {

double Rate::value() const {
  if (!defined()) return std::numeric_limits<double>::quiet_NaN();
  return static_cast<double>(num) / static_cast<double>(den);
}

std::string Rate::percent() const {
  if (!defined()) return "n/a";
  return std::to_string((200 * num + den) / (2 * den)) + "%";
}

Metrics compute_metrics(std::span<const Verdict> predictions, std::span<const Verdict> labels) {
  if (predictions.size() != labels.size()) {
    throw Error(ErrorCode::LengthMismatch, std::to_string(predictions.size()) + " predictions for " +
                                               std::to_string(labels.size()) + " labels");
  }
  if (labels.empty()) throw Error(ErrorCode::LengthMismatch, "no predictions");
  Metrics m;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool predicted_fail = predictions[i] == Verdict::Fail;
    if (labels[i] == Verdict::Fail) {
      ++(predicted_fail ? m.tp : m.fn);
    } else {
      ++(predicted_fail ? m.fp : m.tn);
    }
  }
  return m;
}

std::optional<double> delta_points(const Rate& a, const Rate& b) {
  if (!a.defined() || !b.defined()) return std::nullopt;
  const long double diff = static_cast<long double>(a.num) * b.den - static_cast<long double>(b.num) * a.den;
  return static_cast<double>(100.0L * diff / (static_cast<long double>(a.den) * b.den));
}

// ---------------------------------------------------------------------------------

const ModelConfig& FittedModel::config() const {
  return std::visit([](const auto& p) -> const ModelConfig& { return p.config; }, params);
}

std::vector<Prediction> FittedModel::predict(std::span<const TokenSequence> seqs) const {
  return std::visit([&](const auto& p) { return predict_batch(p, seqs); }, params);
}

std::vector<Prediction> FittedModel::predict(std::span<const ParsedTrace> traces) const {
  std::vector<TokenSequence> seqs;
  seqs.reserve(traces.size());
  for (const ParsedTrace& t : traces) seqs.push_back(tokenize(t, vocab, fields, config().seq_len));
  return predict(seqs);
}

std::vector<std::uint8_t> FittedModel::checkpoint() const {
  return std::visit([&](const auto& p) { return save_checkpoint(p, vocab, fields); }, params);
}

FittedModel fit(const Corpus& corpus, std::span<const std::size_t> items, ModelConfig model, const TrainConfig& train,
                const FieldSet& fields, const StepCallback& on_step) {
  if (items.empty()) throw Error(ErrorCode::EmptyDataset, "no training traces");
  std::vector<RawTokens> raw;
  raw.reserve(items.size());
  for (std::size_t i : items) raw.push_back(serialize_trace(corpus.at(i).trace, fields));

  FittedModel out;
  out.vocab = build_vocab(raw);
  out.fields = fields;
  model.vocab_size = out.vocab.size();
  model.validate();

  std::vector<Example> data;
  data.reserve(items.size());
  for (std::size_t k = 0; k < items.size(); ++k) {
    data.push_back({encode_tokens(raw[k], out.vocab, model.seq_len), corpus[items[k]].label.verdict});
  }

  const auto run = [&](auto tag) {
    using S = decltype(tag);
    auto result = traceoracle::train(init_model<S>(model, train.seed), data, train, on_step);
    out.loss_log = std::move(result.loss_log);
    out.params = std::move(result.params);
  };
  if (train.precision == Precision::Float32) {
    run(float{});
  } else {
    run(double{});
  }
  return out;
}

FittedModel fitted_from_checkpoint(std::span<const std::uint8_t> bytes) {
  Checkpoint ck = load_checkpoint(bytes);
  FittedModel out;
  if (ck.precision == Precision::Float32) {
    out.params = ck.params_as<float>();
  } else {
    out.params = std::move(ck.params);
  }
  out.vocab = std::move(ck.vocab);
  out.fields = ck.fields;
  return out;
}

namespace {

/// Runs task(k) for k in [0, n) on up to `jobs` threads. The first exception (by task
/// index) is rethrown after all threads finish.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& task) {
  std::vector<std::exception_ptr> errors(n);
  const auto guarded = [&](std::size_t k) {
    try {
      task(k);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  };
  const auto workers = static_cast<std::size_t>(std::max(1, jobs));
  if (workers == 1 || n <= 1) {
    for (std::size_t k = 0; k < n; ++k) {
      guarded(k);
      if (errors[k]) break;
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < std::min(workers, n); ++w) {
      pool.emplace_back([&] {
        for (std::size_t k = next++; k < n; k = next++) guarded(k);
      });
    }
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::vector<Verdict> labels_of(const Corpus& corpus, std::span<const std::size_t> items) {
  std::vector<Verdict> out;
  out.reserve(items.size());
  for (std::size_t i : items) out.push_back(corpus[i].label.verdict);
  return out;
}

Metrics evaluate(const FittedModel& fitted, const Corpus& corpus, std::span<const std::size_t> items) {
  std::vector<TokenSequence> seqs;
  seqs.reserve(items.size());
  for (std::size_t i : items) {
    seqs.push_back(tokenize(corpus[i].trace, fitted.vocab, fitted.fields, fitted.config().seq_len));
  }
  const auto preds = fitted.predict(seqs);
  std::vector<Verdict> verdicts;
  verdicts.reserve(preds.size());
  for (const Prediction& p : preds) verdicts.push_back(p.verdict);
  return compute_metrics(verdicts, labels_of(corpus, items));
}

ProjectCounts count_verdicts(const Corpus& corpus, std::span<const std::size_t> items) {
  ProjectCounts c;
  for (std::size_t i : items) (corpus[i].label.verdict == Verdict::Pass ? c.pass : c.fail) += 1;
  return c;
}

}  // namespace

std::vector<FoldResult> run_crossval(const Corpus& corpus, const ModelConfig& model, const TrainConfig& train,
                                     const CrossvalOptions& options) {
  const std::vector<std::string> projects = project_names(corpus);
  if (projects.size() < 2) throw Error(ErrorCode::InvalidConfig, "cross-validation needs at least two projects");
  std::vector<std::string> folds = options.hold_out.empty() ? projects : options.hold_out;
  std::sort(folds.begin(), folds.end());
  folds.erase(std::unique(folds.begin(), folds.end()), folds.end());

  std::vector<FoldResult> results(folds.size());
  std::mutex progress_mutex;
  parallel_for(folds.size(), options.jobs, [&](std::size_t k) {
    const std::string& project = folds[k];
    try {
      const Split split = split_lopo(corpus, project);
      TrainConfig cfg = train;
      cfg.seed = mix_seed(train.seed, fnv1a(project));
      const FittedModel fitted = fit(corpus, split.train, model, cfg, options.fields);
      FoldResult& r = results[k];
      r.project = project;
      r.metrics = evaluate(fitted, corpus, split.test);
      r.train_size = split.train.size();
      r.test_size = split.test.size();
      r.vocab_size = fitted.vocab.size();
      if (options.on_fold) {
        const std::lock_guard lock(progress_mutex);
        options.on_fold(project, fitted);
      }
      if (options.progress) {
        const std::lock_guard lock(progress_mutex);
        options.progress("fold " + project + ": TPR " + r.metrics.tpr().percent() + ", TNR " +
                         r.metrics.tnr().percent() + ", total " + r.metrics.total().percent());
      }
    } catch (const Error& ex) {
      throw Error(ex.code(), "fold " + project + ": " + ex.what());
    }
  });
  return results;
}

AblationReport run_ablation(const Corpus& corpus, const ModelConfig& model, const TrainConfig& train,
                            std::uint64_t split_seed, const AblationOptions& options) {
  if (corpus.empty()) throw Error(ErrorCode::EmptyDataset, "ablation corpus is empty");
  const Split split = split_stratified(corpus, options.test_fraction, split_seed);
  if (split.train.empty() || split.test.empty()) {
    throw Error(ErrorCode::EmptyDataset, "ablation split leaves an empty train or test set");
  }

  std::vector<FieldSet> arm_fields{FieldSet::all()};
  for (TraceField f : options.fields) arm_fields.push_back(FieldSet::all().without(f));

  std::vector<Metrics> metrics(arm_fields.size());
  std::mutex progress_mutex;
  parallel_for(arm_fields.size(), options.jobs, [&](std::size_t k) {
    const std::string name = k == 0 ? "baseline" : "-" + std::string(field_name(options.fields[k - 1]));
    try {
      const FittedModel fitted = fit(corpus, split.train, model, train, arm_fields[k]);
      metrics[k] = evaluate(fitted, corpus, split.test);
    } catch (const Error& ex) {
      throw Error(ex.code(), "arm " + name + ": " + ex.what());
    }
    if (options.progress) {
      const std::lock_guard lock(progress_mutex);
      options.progress("arm " + name + ": total " + metrics[k].total().percent());
    }
  });

  AblationReport report;
  report.baseline = metrics[0];
  report.train_counts = count_verdicts(corpus, split.train);
  report.test_counts = count_verdicts(corpus, split.test);
  for (std::size_t k = 0; k < options.fields.size(); ++k) {
    AblationArm arm;
    arm.field = options.fields[k];
    arm.metrics = metrics[k + 1];
    arm.delta_tnr = delta_points(arm.metrics.tnr(), report.baseline.tnr());
    arm.delta_tpr = delta_points(arm.metrics.tpr(), report.baseline.tpr());
    arm.delta_total = delta_points(arm.metrics.total(), report.baseline.total());
    report.arms.push_back(arm);
  }
  return report;
}

// ---------------------------------------------------------------------------------
// Reports

namespace {

using nlohmann::ordered_json;

ordered_json rate_json(const Rate& r) { return r.defined() ? ordered_json(r.value()) : ordered_json(nullptr); }

ordered_json opt_json(const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

void put_metrics(ordered_json& rec, const Metrics& m) {
  rec["tp"] = m.tp;
  rec["fn"] = m.fn;
  rec["tn"] = m.tn;
  rec["fp"] = m.fp;
  rec["tpr"] = rate_json(m.tpr());
  rec["tnr"] = rate_json(m.tnr());
  rec["total"] = rate_json(m.total());
}

std::string format_row(const char* fmt, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

std::string signed_points(const std::optional<double>& v) {
  if (!v) return "n/a";
  return format_row("%+.1f", *v);
}

}  // namespace

std::string crossval_jsonl(const std::vector<FoldResult>& folds) {
  std::string out;
  for (const FoldResult& f : folds) {
    ordered_json rec;
    rec["fold"] = f.project;
    put_metrics(rec, f.metrics);
    rec["train"] = f.train_size;
    rec["test"] = f.test_size;
    out += rec.dump() + "\n";
  }
  return out;
}

std::string crossval_table(const std::vector<FoldResult>& folds) {
  std::string out = format_row("%-24s %5s %5s %5s %5s %6s %6s %6s\n", "held-out project", "tp", "fn", "tn", "fp",
                               "TPR", "TNR", "total");
  for (const FoldResult& f : folds) {
    const Metrics& m = f.metrics;
    out += format_row("%-24s %5llu %5llu %5llu %5llu %6s %6s %6s\n", f.project.c_str(),
                      static_cast<unsigned long long>(m.tp), static_cast<unsigned long long>(m.fn),
                      static_cast<unsigned long long>(m.tn), static_cast<unsigned long long>(m.fp),
                      m.tpr().percent().c_str(), m.tnr().percent().c_str(), m.total().percent().c_str());
  }
  return out;
}

std::string ablation_jsonl(const AblationReport& report) {
  std::string out;
  ordered_json base;
  base["arm"] = "baseline";
  put_metrics(base, report.baseline);
  out += base.dump() + "\n";
  for (const AblationArm& a : report.arms) {
    ordered_json rec;
    rec["arm"] = field_name(a.field);
    put_metrics(rec, a.metrics);
    rec["d_tnr"] = opt_json(a.delta_tnr);
    rec["d_tpr"] = opt_json(a.delta_tpr);
    rec["d_total"] = opt_json(a.delta_total);
    out += rec.dump() + "\n";
  }
  return out;
}

std::string ablation_table(const AblationReport& report) {
  std::string out = format_row("split: train %zu pass / %zu fail, test %zu pass / %zu fail\n",
                               report.train_counts.pass, report.train_counts.fail, report.test_counts.pass,
                               report.test_counts.fail);
  out += format_row("%-10s %6s %6s %6s %7s %7s %7s\n", "removed", "TNR", "TPR", "total", "dTNR", "dTPR", "dtotal");
  const Metrics& b = report.baseline;
  out += format_row("%-10s %6s %6s %6s %7s %7s %7s\n", "(none)", b.tnr().percent().c_str(),
                    b.tpr().percent().c_str(), b.total().percent().c_str(), "", "", "");
  for (const AblationArm& a : report.arms) {
    const Metrics& m = a.metrics;
    out += format_row("%-10s %6s %6s %6s %7s %7s %7s\n", std::string(field_name(a.field)).c_str(),
                      m.tnr().percent().c_str(), m.tpr().percent().c_str(), m.total().percent().c_str(),
                      signed_points(a.delta_tnr).c_str(), signed_points(a.delta_tpr).c_str(),
                      signed_points(a.delta_total).c_str());
  }
  return out;
}

}  // namespace traceoracle
