// Labelled corpora: manifests, loading, leave-one-program-out splits and the synthetic
// trace generator.
#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "traceoracle/trace_model.hpp"
#include "traceoracle/trace_parser.hpp"

namespace traceoracle {

struct ManifestEntry {
  std::string path;  // as written in the manifest; relative paths resolve against base_dir
  TraceFormat format = TraceFormat::Binary;
  TraceLabel label;
};

/// Line-delimited JSON, one record per trace with fields path, format, verdict,
/// project, category, cause, subcause, bug_id.
struct CorpusManifest {
  std::vector<ManifestEntry> entries;
  std::string base_dir;

  std::string resolve(const ManifestEntry& entry) const;
};

/// Throws Error(InvalidManifest) naming the 1-based line.
CorpusManifest parse_manifest(std::string_view jsonl, std::string base_dir = {});
std::string manifest_to_jsonl(const CorpusManifest& manifest);
CorpusManifest read_manifest(const std::string& path);
void write_manifest(const std::string& path, const CorpusManifest& manifest);

struct LabeledTrace {
  ParsedTrace trace;
  TraceLabel label;
  std::string source;  // file path, or empty for in-memory traces
};

using Corpus = std::vector<LabeledTrace>;

struct ProjectCounts {
  std::size_t pass = 0;
  std::size_t fail = 0;

  friend bool operator==(const ProjectCounts&, const ProjectCounts&) = default;
};

std::map<std::string, ProjectCounts> count_by_project(const Corpus& corpus);
/// Distinct projects in ascending order.
std::vector<std::string> project_names(const Corpus& corpus);

struct LoadedCorpus {
  Corpus items;
  std::map<std::string, ProjectCounts> counts;
};

/// Parses and validates every entry. Throws Error(EmptyManifest); parser and validation
/// failures are rethrown with the offending path prefixed.
LoadedCorpus load_corpus(const CorpusManifest& manifest);

/// Indices into the corpus.
struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Throws Error(UnknownProject).
Split split_lopo(const Corpus& corpus, std::string_view held_out_project);

/// Seeded random split with `test_fraction` of each verdict class held out.
Split split_stratified(const Corpus& corpus, double test_fraction, std::uint64_t seed);

// ---------------------------------------------------------------------------------
// Synthetic corpora

enum class BugSignature : std::uint8_t {
  UnmatchedBlock,  // a channel block with no later unblock of that goroutine
  DoubleCreate,    // two GoCreate events for one goroutine id
  RaceWindow,      // User events from two goroutines on one processor with equal messages
};

std::string_view signature_name(BugSignature s);

enum class LabelMode : std::uint8_t {
  /// Failing traces carry injected bug signatures.
  Signatures,
  /// Every trace has the same shared-message pair; failing traces run it on a single
  /// processor, passing traces spread it over two. Only P separates the classes.
  ProcessorPlanted,
};

struct SynthConfig {
  int num_projects = 4;
  int traces_per_project = 60;
  double pass_fraction = 0.5;
  int events_min = 4;
  int events_max = 8;
  /// Relative weights of UnmatchedBlock, DoubleCreate, RaceWindow.
  std::array<double, 3> bug_mix{1.0, 1.0, 1.0};
  std::uint64_t seed = 0;
  LabelMode mode = LabelMode::Signatures;
  TraceFormat format = TraceFormat::Binary;
  /// Injected signatures start within this leading fraction of the trace.
  double inject_window = 0.5;
  std::vector<std::string> project_names;  // defaults to project-1, project-2, ...

  /// Throws Error(InvalidConfig).
  void validate() const;
};

/// Generates the corpus in memory. Binary-format traces carry the byte offsets they
/// get when encoded; JSON-format traces have every Off at 0.
Corpus synth_corpus(const SynthConfig& cfg);

/// Writes one trace file per item plus `corpus.manifest.jsonl` into out_dir and returns
/// the manifest. Output is byte-identical for a given config.
CorpusManifest synth_generate(const SynthConfig& cfg, const std::string& out_dir);

}  // namespace traceoracle
