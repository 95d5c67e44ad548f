// traceoracle: parse, convert and synthesise traces; train, classify, cross-validate
// and ablate the trace classifier.
//
// Exit codes: 0 ok, 1 parse or I/O error, 2 validation failure, 3 partial failure,
// 64 usage error.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "traceoracle/checkpoint.hpp"
#include "traceoracle/dataset.hpp"
#include "traceoracle/error.hpp"
#include "traceoracle/evaluation.hpp"
#include "traceoracle/model.hpp"
#include "traceoracle/tokenizer.hpp"
#include "traceoracle/trace_parser.hpp"

namespace fs = std::filesystem;
using namespace traceoracle;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitIo = 1;
constexpr int kExitInvalid = 2;
constexpr int kExitPartial = 3;
constexpr int kExitUsage = 64;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::uint64_t default_seed() {
  const char* env = std::getenv("TRACEORACLE_SEED");
  if (env == nullptr || *env == '\0') return 0;
  try {
    std::size_t used = 0;
    const auto v = std::stoull(env, &used, 10);
    if (used == std::string_view(env).size()) return v;
  } catch (const std::exception&) {
  }
  throw UsageError("TRACEORACLE_SEED is not a non-negative integer");
}

std::optional<TraceFormat> format_from_name(const std::string& name) {
  if (name == "binary") return TraceFormat::Binary;
  if (name == "json") return TraceFormat::Json;
  return std::nullopt;
}

ParsedTrace load_trace(const std::string& path, const std::string& format) {
  if (format == "auto") return read_trace_file(path);
  return read_trace_file(path, *format_from_name(format));
}

FieldSet parse_fields(const std::string& csv) {
  try {
    return csv.empty() ? FieldSet::all() : FieldSet::parse(csv);
  } catch (const std::invalid_argument& ex) {
    throw UsageError(std::string("--fields: ") + ex.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  write_file_bytes(path.string(), std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

// Hyperparameter flags shared by train, crossval and ablate.
struct TrainingFlags {
  std::string manifest;
  std::uint64_t seed = 0;
  ModelConfig model;
  TrainConfig train;
  std::string precision = "f32";
  std::string fields;
  std::vector<double> class_weights;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--manifest", manifest, "Corpus manifest (.manifest.jsonl)")->required();
    cmd->add_option("--seed", seed, "Random seed (default: $TRACEORACLE_SEED or 0)");
    cmd->add_option("--steps", train.steps, "Training steps")->capture_default_str();
    cmd->add_option("--batch-size", train.batch_size, "Examples per step")->capture_default_str();
    cmd->add_option("--lr", train.learning_rate, "Adam learning rate")->capture_default_str();
    cmd->add_option("--seq-len", model.seq_len, "Token sequence length")->capture_default_str();
    cmd->add_option("--embed-dim", model.embed_dim, "Embedding width")->capture_default_str();
    cmd->add_option("--layers", model.num_layers, "Encoder layers")->capture_default_str();
    cmd->add_option("--heads", model.num_heads, "Attention heads")->capture_default_str();
    cmd->add_option("--ffn-dim", model.ffn_dim, "Feed-forward width")->capture_default_str();
    cmd->add_option("--mlp-hidden", model.mlp_hidden, "Classifier head width")->capture_default_str();
    cmd->add_option("--dropout", model.dropout, "Dropout rate")->capture_default_str();
    cmd->add_option("--precision", precision, "Training precision")
        ->check(CLI::IsMember({"f32", "f64"}))
        ->capture_default_str();
    cmd->add_option("--fields", fields, "Comma-separated trace fields to keep (default: all)");
    cmd->add_option("--class-weights", class_weights, "Loss weights for pass,fail")->delimiter(',')->expected(2);
  }

  void finish(std::uint64_t env_seed, bool seed_given) {
    train.seed = seed_given ? seed : env_seed;
    train.precision = precision == "f64" ? Precision::Float64 : Precision::Float32;
    if (!class_weights.empty()) train.class_weights = std::array<double, 2>{class_weights[0], class_weights[1]};
    model.vocab_size = kNumReserved;
    try {
      model.validate();
    } catch (const Error& ex) {
      throw UsageError(ex.what());
    }
    if (train.steps < 1 || train.batch_size < 1) throw UsageError("--steps and --batch-size must be positive");
    if (!(train.learning_rate >= 0.0)) throw UsageError("--lr must be non-negative");
  }
};

Corpus load_manifest_corpus(const std::string& path) { return load_corpus(read_manifest(path)).items; }

void print_violations(const std::string& path, const ValidationReport& report) {
  for (const Violation& v : report) {
    std::cerr << path << ": event " << v.event_index << ": " << violation_name(v.kind);
    if (!v.detail.empty()) std::cerr << " (" << v.detail << ")";
    std::cerr << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Classify concurrent-program execution traces as passing or failing."};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every command");

  int exit_code = kExitOk;

  // parse --------------------------------------------------------------------------
  std::string parse_input;
  std::string parse_format = "auto";
  bool parse_validate = false;
  bool parse_summary = false;
  int parse_indent = 2;
  CLI::App* cmd_parse = app.add_subcommand("parse", "Decode a trace and print it as JSON");
  cmd_parse->add_option("input", parse_input, "Trace file")->required();
  cmd_parse->add_option("--format", parse_format, "Input format")
      ->check(CLI::IsMember({"auto", "binary", "json"}))
      ->capture_default_str();
  cmd_parse->add_flag("--validate", parse_validate, "Check trace invariants; exit 2 on violations");
  cmd_parse->add_flag("--summary", parse_summary, "Print a one-line summary instead of JSON");
  cmd_parse->add_option("--indent", parse_indent, "JSON indentation, -1 for one line")->capture_default_str();
  cmd_parse->callback([&] {
    const ParsedTrace trace = load_trace(parse_input, parse_format);
    if (parse_validate) {
      const ValidationReport report = validate_trace(trace);
      if (!report.empty()) {
        print_violations(parse_input, report);
        exit_code = kExitInvalid;
        return;
      }
    }
    if (parse_summary) {
      std::cout << parse_input << ": " << trace.events.size() << " events, " << trace.stacks.size() << " stacks\n";
    } else {
      std::cout << emit_json(trace, parse_indent) << '\n';
    }
  });

  // convert ------------------------------------------------------------------------
  std::string conv_input;
  std::string conv_output;
  std::string conv_from = "auto";
  std::string conv_to;
  CLI::App* cmd_convert = app.add_subcommand("convert", "Convert a trace between binary and JSON");
  cmd_convert->add_option("input", conv_input, "Trace file")->required();
  cmd_convert->add_option("output", conv_output, "Destination file")->required();
  cmd_convert->add_option("--from", conv_from, "Input format")
      ->check(CLI::IsMember({"auto", "binary", "json"}))
      ->capture_default_str();
  cmd_convert->add_option("--to", conv_to, "Output format (default: json for *.json, else binary)")
      ->check(CLI::IsMember({"binary", "json"}));
  cmd_convert->callback([&] {
    const ParsedTrace trace = load_trace(conv_input, conv_from);
    std::string to = conv_to;
    if (to.empty()) to = fs::path(conv_output).extension() == ".json" ? "json" : "binary";
    write_trace_file(conv_output, trace, *format_from_name(to));
  });

  // synth --------------------------------------------------------------------------
  SynthConfig synth;
  std::string synth_out;
  std::string synth_mode = "signatures";
  std::string synth_format = "binary";
  std::optional<std::uint64_t> synth_seed;
  std::vector<double> synth_mix;
  CLI::App* cmd_synth = app.add_subcommand("synth", "Generate a labelled synthetic corpus");
  cmd_synth->add_option("--out", synth_out, "Output directory")->required();
  cmd_synth->add_option("--projects", synth.num_projects, "Number of projects")->capture_default_str();
  cmd_synth->add_option("--traces-per-project", synth.traces_per_project, "Traces per project")
      ->capture_default_str();
  cmd_synth->add_option("--pass-fraction", synth.pass_fraction, "Fraction of passing traces")->capture_default_str();
  cmd_synth->add_option("--events-min", synth.events_min, "Minimum events per trace")->capture_default_str();
  cmd_synth->add_option("--events-max", synth.events_max, "Maximum events per trace")->capture_default_str();
  cmd_synth->add_option("--inject-window", synth.inject_window, "Leading fraction where bugs are injected")
      ->capture_default_str();
  cmd_synth->add_option("--bug-mix", synth_mix, "Weights for unmatched-block,double-create,race-window")
      ->delimiter(',')
      ->expected(3);
  cmd_synth->add_option("--mode", synth_mode, "Labelling scheme")
      ->check(CLI::IsMember({"signatures", "planted"}))
      ->capture_default_str();
  cmd_synth->add_option("--format", synth_format, "Trace file format")
      ->check(CLI::IsMember({"binary", "json"}))
      ->capture_default_str();
  cmd_synth->add_option("--project-names", synth.project_names, "Comma-separated project names")->delimiter(',');
  cmd_synth->add_option("--seed", synth_seed, "Random seed (default: $TRACEORACLE_SEED or 0)");
  cmd_synth->callback([&] {
    synth.seed = synth_seed.value_or(default_seed());
    synth.mode = synth_mode == "planted" ? LabelMode::ProcessorPlanted : LabelMode::Signatures;
    synth.format = *format_from_name(synth_format);
    if (!synth_mix.empty()) synth.bug_mix = {synth_mix[0], synth_mix[1], synth_mix[2]};
    try {
      synth.validate();
    } catch (const Error& ex) {
      throw UsageError(ex.what());
    }
    fs::create_directories(synth_out);
    const CorpusManifest m = synth_generate(synth, synth_out);
    std::cout << "wrote " << m.entries.size() << " traces and "
              << (fs::path(synth_out) / "corpus.manifest.jsonl").string() << '\n';
  });

  // train --------------------------------------------------------------------------
  TrainingFlags train_flags;
  std::string train_out;
  std::string train_log;
  CLI::App* cmd_train = app.add_subcommand("train", "Train a classifier on a corpus");
  train_flags.add_to(cmd_train);
  cmd_train->add_option("--out", train_out, "Checkpoint path")->required();
  cmd_train->add_option("--loss-log", train_log, "Loss log path (default: <out>.loss.log)");
  bool train_dry_run = false;
  cmd_train->add_flag("--dry-run", train_dry_run, "Print the loss-log header and exit without training");
  cmd_train->callback([&] {
    train_flags.finish(default_seed(), cmd_train->count("--seed") > 0);
    const FieldSet fields = parse_fields(train_flags.fields);
    const Corpus corpus = load_manifest_corpus(train_flags.manifest);
    std::vector<std::size_t> all(corpus.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;

    const TrainConfig& t = train_flags.train;
    const ModelConfig& m = train_flags.model;
    std::string log = "# steps=" + std::to_string(t.steps) + " batch_size=" + std::to_string(t.batch_size);
    char lr[32];
    std::snprintf(lr, sizeof lr, "%g", t.learning_rate);
    log += std::string(" lr=") + lr + " seed=" + std::to_string(t.seed) + " precision=" +
           std::string(precision_name(t.precision)) + " seq_len=" + std::to_string(m.seq_len) +
           " embed_dim=" + std::to_string(m.embed_dim) + " layers=" + std::to_string(m.num_layers) +
           " heads=" + std::to_string(m.num_heads) + " fields=" + fields.to_string() +
           " traces=" + std::to_string(corpus.size()) + "\n";
    if (train_dry_run) {
      std::cout << log;
      return;
    }
    const FittedModel fitted = fit(corpus, all, m, t, fields);
    for (std::size_t s = 0; s < fitted.loss_log.size(); ++s) {
      char line[64];
      std::snprintf(line, sizeof line, "%zu %.9g\n", s + 1, fitted.loss_log[s]);
      log += line;
    }
    const auto bytes = fitted.checkpoint();
    write_file_bytes(train_out, bytes);
    write_text(train_log.empty() ? train_out + ".loss.log" : train_log, log);
    std::cout << "trained on " << corpus.size() << " traces, vocabulary " << fitted.vocab.size()
              << ", final loss " << (fitted.loss_log.empty() ? 0.0 : fitted.loss_log.back()) << '\n';
  });

  // classify -----------------------------------------------------------------------
  std::string cls_checkpoint;
  std::vector<std::string> cls_inputs;
  std::string cls_format = "auto";
  CLI::App* cmd_classify = app.add_subcommand("classify", "Classify traces with a trained checkpoint");
  cmd_classify->add_option("--checkpoint", cls_checkpoint, "Checkpoint path")->required();
  cmd_classify->add_option("--format", cls_format, "Input format")
      ->check(CLI::IsMember({"auto", "binary", "json"}))
      ->capture_default_str();
  cmd_classify->add_option("traces", cls_inputs, "Trace files");
  cmd_classify->callback([&] {
    if (cls_inputs.empty()) throw UsageError("classify needs at least one trace");
    const FittedModel fitted = fitted_from_checkpoint(read_file_bytes(cls_checkpoint));
    bool any_failed = false;
    for (const std::string& path : cls_inputs) {
      ParsedTrace trace;
      try {
        trace = load_trace(path, cls_format);
      } catch (const Error& ex) {
        std::cerr << path << ": " << ex.what() << '\n';
        any_failed = true;
        continue;
      }
      const Prediction p = fitted.predict(std::span(&trace, 1)).front();
      std::printf("%s\t%s\t%.6f\n", path.c_str(), std::string(verdict_name(p.verdict)).c_str(), p.probability[1]);
    }
    std::fflush(stdout);
    if (any_failed) exit_code = kExitPartial;
  });

  // crossval -----------------------------------------------------------------------
  TrainingFlags cv_flags;
  std::string cv_out;
  std::vector<std::string> cv_hold_out;
  int cv_jobs = 1;
  CLI::App* cmd_crossval = app.add_subcommand("crossval", "Leave-one-program-out cross-validation");
  cv_flags.add_to(cmd_crossval);
  cmd_crossval->add_option("--out", cv_out, "Report directory")->required();
  cmd_crossval->add_option("--hold-out", cv_hold_out, "Projects to hold out (default: all)")->delimiter(',');
  cmd_crossval->add_option("--jobs", cv_jobs, "Folds trained in parallel")->check(CLI::PositiveNumber);
  cmd_crossval->callback([&] {
    cv_flags.finish(default_seed(), cmd_crossval->count("--seed") > 0);
    CrossvalOptions opt;
    opt.fields = parse_fields(cv_flags.fields);
    opt.hold_out = cv_hold_out;
    opt.jobs = cv_jobs;
    opt.progress = [](std::string_view msg) { std::cerr << msg << '\n'; };
    const Corpus corpus = load_manifest_corpus(cv_flags.manifest);
    const auto folds = run_crossval(corpus, cv_flags.model, cv_flags.train, opt);
    fs::create_directories(cv_out);
    write_text(fs::path(cv_out) / "crossval.jsonl", crossval_jsonl(folds));
    const std::string table = crossval_table(folds);
    write_text(fs::path(cv_out) / "crossval.txt", table);
    std::cout << table;
  });

  // ablate -------------------------------------------------------------------------
  TrainingFlags ab_flags;
  std::string ab_out;
  std::string ab_fields;
  std::optional<std::uint64_t> ab_split_seed;
  double ab_test_fraction = 0.2;
  int ab_jobs = 1;
  CLI::App* cmd_ablate = app.add_subcommand("ablate", "Retrain with one trace field removed at a time");
  ab_flags.add_to(cmd_ablate);
  cmd_ablate->add_option("--out", ab_out, "Report directory")->required();
  cmd_ablate->add_option("--fields-to-ablate", ab_fields, "Comma-separated fields (default: Off,Type,Ts,P,G,StkID,Stk)");
  cmd_ablate->add_option("--split-seed", ab_split_seed, "Seed of the train/test split (default: --seed)");
  cmd_ablate->add_option("--test-fraction", ab_test_fraction, "Held-out fraction per class")->capture_default_str();
  cmd_ablate->add_option("--jobs", ab_jobs, "Arms trained in parallel")->check(CLI::PositiveNumber);
  cmd_ablate->callback([&] {
    ab_flags.finish(default_seed(), cmd_ablate->count("--seed") > 0);
    if (!(ab_test_fraction > 0.0 && ab_test_fraction < 1.0)) throw UsageError("--test-fraction must lie in (0, 1)");
    AblationOptions opt;
    if (!ab_fields.empty()) {
      opt.fields.clear();
      std::stringstream ss(ab_fields);
      std::string name;
      while (std::getline(ss, name, ',')) {
        const auto f = field_from_name(name);
        if (!f) throw UsageError("unknown field " + name);
        opt.fields.push_back(*f);
      }
    }
    opt.test_fraction = ab_test_fraction;
    opt.jobs = ab_jobs;
    opt.progress = [](std::string_view msg) { std::cerr << msg << '\n'; };
    if (!ab_flags.fields.empty()) throw UsageError("ablate always starts from every field; drop --fields");
    const Corpus corpus = load_manifest_corpus(ab_flags.manifest);
    const AblationReport report =
        run_ablation(corpus, ab_flags.model, ab_flags.train, ab_split_seed.value_or(ab_flags.train.seed), opt);
    fs::create_directories(ab_out);
    write_text(fs::path(ab_out) / "ablation.jsonl", ablation_jsonl(report));
    const std::string table = ablation_table(report);
    write_text(fs::path(ab_out) / "ablation.txt", table);
    std::cout << table;
  });

  // inspect ------------------------------------------------------------------------
  std::string insp_checkpoint;
  std::string insp_manifest;
  std::string insp_trace;
  std::string insp_fields;
  CLI::App* cmd_inspect = app.add_subcommand("inspect", "Describe a checkpoint, a manifest or a trace's tokens");
  auto* opt_ck = cmd_inspect->add_option("--checkpoint", insp_checkpoint, "Checkpoint to describe");
  auto* opt_man = cmd_inspect->add_option("--manifest", insp_manifest, "Manifest to summarise");
  auto* opt_tr = cmd_inspect->add_option("--trace", insp_trace, "Trace whose tokens to print");
  cmd_inspect->add_option("--fields", insp_fields, "Fields to serialise with --trace (default: all)");
  opt_ck->excludes(opt_man);
  opt_man->excludes(opt_tr);
  cmd_inspect->callback([&] {
    if (!insp_checkpoint.empty()) {
      const Checkpoint ck = load_checkpoint(read_file_bytes(insp_checkpoint));
      if (!insp_trace.empty()) {
        const ParsedTrace trace = read_trace_file(insp_trace);
        const RawTokens raw = serialize_trace(trace, ck.fields);
        const TokenSequence seq = encode_tokens(raw, ck.vocab, ck.params.config.seq_len);
        for (int k = 0; k < seq.true_len; ++k) std::cout << ck.vocab.token(seq.ids[static_cast<std::size_t>(k)]) << '\n';
        return;
      }
      const ModelConfig& c = ck.params.config;
      std::cout << "precision   " << precision_name(ck.precision) << '\n'
                << "fields      " << ck.fields.to_string() << '\n'
                << "vocabulary  " << ck.vocab.size() << '\n'
                << "seq_len     " << c.seq_len << '\n'
                << "embed_dim   " << c.embed_dim << '\n'
                << "layers      " << c.num_layers << '\n'
                << "heads       " << c.num_heads << '\n'
                << "ffn_dim     " << c.ffn_dim << '\n'
                << "mlp_hidden  " << c.mlp_hidden << '\n'
                << "dropout     " << c.dropout << '\n'
                << "parameters  " << ck.params.num_parameters() << '\n';
      return;
    }
    if (!insp_manifest.empty()) {
      const LoadedCorpus loaded = load_corpus(read_manifest(insp_manifest));
      std::printf("%-24s %6s %6s\n", "project", "pass", "fail");
      for (const auto& [project, c] : loaded.counts) std::printf("%-24s %6zu %6zu\n", project.c_str(), c.pass, c.fail);
      return;
    }
    if (!insp_trace.empty()) {
      const ParsedTrace trace = read_trace_file(insp_trace);
      for (const std::string& tok : serialize_trace(trace, parse_fields(insp_fields))) std::cout << tok << '\n';
      return;
    }
    throw UsageError("inspect needs --checkpoint, --manifest or --trace");
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    switch (e.code()) {
      case ErrorCode::UnencodableTrace:
        return kExitInvalid;
      case ErrorCode::InvalidConfig:
        return kExitUsage;
      default:
        return kExitIo;
    }
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  }
  return exit_code;
}
