// Metrics, model fitting, leave-one-program-out cross-validation and field ablation.
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "traceoracle/dataset.hpp"
#include "traceoracle/model.hpp"
#include "traceoracle/tokenizer.hpp"

namespace traceoracle {

/// An exact fraction; undefined when the denominator is zero.
struct Rate {
  std::uint64_t num = 0;
  std::uint64_t den = 0;

  bool defined() const { return den != 0; }
  /// NaN when undefined.
  double value() const;
  /// Whole percent, halves rounded up, e.g. "33%"; "n/a" when undefined.
  std::string percent() const;

  friend bool operator==(const Rate&, const Rate&) = default;
};

/// Confusion counts with Fail as the positive class.
struct Metrics {
  std::uint64_t tp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;
  std::uint64_t fp = 0;

  Rate tpr() const { return {tp, tp + fn}; }
  Rate tnr() const { return {tn, tn + fp}; }
  Rate total() const { return {tp + tn, tp + fn + tn + fp}; }

  friend bool operator==(const Metrics&, const Metrics&) = default;
};

/// Throws Error(LengthMismatch) for unequal or empty inputs.
Metrics compute_metrics(std::span<const Verdict> predictions, std::span<const Verdict> labels);

/// (a - b) in percentage points; nullopt when either side is undefined.
std::optional<double> delta_points(const Rate& a, const Rate& b);

using AnyParams = std::variant<ModelParams<float>, ModelParams<double>>;

struct FittedModel {
  AnyParams params;
  Vocabulary vocab;
  FieldSet fields;
  std::vector<double> loss_log;

  const ModelConfig& config() const;
  std::vector<Prediction> predict(std::span<const TokenSequence> seqs) const;
  std::vector<Prediction> predict(std::span<const ParsedTrace> traces) const;
  std::vector<std::uint8_t> checkpoint() const;
};

/// Builds the vocabulary from the selected items, initialises from train.seed and
/// trains at train.precision. model.vocab_size is overwritten.
FittedModel fit(const Corpus& corpus, std::span<const std::size_t> items, ModelConfig model,
                const TrainConfig& train, const FieldSet& fields, const StepCallback& on_step = {});

/// Restores a checkpoint at its training precision.
FittedModel fitted_from_checkpoint(std::span<const std::uint8_t> bytes);

using ProgressFn = std::function<void(std::string_view)>;

struct CrossvalOptions {
  FieldSet fields;
  /// Projects to hold out in turn; empty means every project.
  std::vector<std::string> hold_out;
  int jobs = 1;
  ProgressFn progress;
  /// Called with each fold's trained model before it is discarded.
  std::function<void(const std::string& project, const FittedModel&)> on_fold;
};

struct FoldResult {
  std::string project;
  Metrics metrics;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  int vocab_size = 0;
};

/// Folds in ascending project order. Each fold's seed is derived from train.seed and
/// the project name. Throws Error(InvalidConfig) with fewer than two projects; a failing
/// fold aborts the run with its project named.
std::vector<FoldResult> run_crossval(const Corpus& corpus, const ModelConfig& model, const TrainConfig& train,
                                     const CrossvalOptions& options = {});

struct AblationArm {
  TraceField field = TraceField::Off;
  Metrics metrics;
  std::optional<double> delta_tnr;
  std::optional<double> delta_tpr;
  std::optional<double> delta_total;
};

struct AblationReport {
  Metrics baseline;
  std::vector<AblationArm> arms;
  ProjectCounts train_counts;
  ProjectCounts test_counts;
};

struct AblationOptions {
  /// Fields removed one at a time; defaults to all seven ablatable fields.
  std::vector<TraceField> fields{std::begin(kAblationFields), std::end(kAblationFields)};
  double test_fraction = 0.2;
  int jobs = 1;
  ProgressFn progress;
};

/// Baseline on every field plus one arm per removed field, all on one stratified split
/// drawn from split_seed and trained with identical seeds. Throws Error(EmptyDataset).
AblationReport run_ablation(const Corpus& corpus, const ModelConfig& model, const TrainConfig& train,
                            std::uint64_t split_seed, const AblationOptions& options = {});

std::string crossval_jsonl(const std::vector<FoldResult>& folds);
std::string crossval_table(const std::vector<FoldResult>& folds);
std::string ablation_jsonl(const AblationReport& report);
std::string ablation_table(const AblationReport& report);

}  // namespace traceoracle
