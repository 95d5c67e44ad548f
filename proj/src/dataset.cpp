#include "traceoracle/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "traceoracle/error.hpp"
#include "traceoracle/rng.hpp"

namespace traceoracle {

namespace fs = std::filesystem;

std::string CorpusManifest::resolve(const ManifestEntry& entry) const {
  const fs::path p(entry.path);
  if (p.is_absolute() || base_dir.empty()) return p.string();
  return (fs::path(base_dir) / p).string();
}

namespace {

std::optional<std::string> opt_string(const nlohmann::json& rec, const char* key, std::size_t line) {
  const auto it = rec.find(key);
  if (it == rec.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) {
    throw Error(ErrorCode::InvalidManifest, "line " + std::to_string(line) + ": \"" + key + "\" is not a string");
  }
  return it->get<std::string>();
}

}  // namespace

CorpusManifest parse_manifest(std::string_view jsonl, std::string base_dir) {
  CorpusManifest m;
  m.base_dir = std::move(base_dir);
  std::set<std::string> seen;
  std::istringstream in{std::string(jsonl)};
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isspace(c); })) continue;
    const auto bad = [&](const std::string& why) {
      throw Error(ErrorCode::InvalidManifest, "line " + std::to_string(line) + ": " + why);
    };
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& ex) {
      bad(ex.what());
    }
    if (!rec.is_object()) bad("record is not an object");

    ManifestEntry e;
    const auto path = opt_string(rec, "path", line);
    if (!path || path->empty()) bad("missing path");
    e.path = *path;
    if (!seen.insert(e.path).second) bad("duplicate path " + e.path);

    const auto format = opt_string(rec, "format", line).value_or("binary");
    if (format == "binary") {
      e.format = TraceFormat::Binary;
    } else if (format == "json") {
      e.format = TraceFormat::Json;
    } else {
      bad("unknown format " + format);
    }

    const auto verdict = opt_string(rec, "verdict", line);
    if (verdict == "pass") {
      e.label.verdict = Verdict::Pass;
    } else if (verdict == "fail") {
      e.label.verdict = Verdict::Fail;
    } else {
      bad("verdict must be \"pass\" or \"fail\"");
    }
    e.label.project = opt_string(rec, "project", line).value_or("");
    if (const auto cat = opt_string(rec, "category", line)) {
      if (*cat == "Blocking") {
        e.label.category = BugCategory::Blocking;
      } else if (*cat == "NonBlocking") {
        e.label.category = BugCategory::NonBlocking;
      } else {
        bad("unknown category " + *cat);
      }
    }
    e.label.cause = opt_string(rec, "cause", line);
    e.label.subcause = opt_string(rec, "subcause", line);
    e.label.bug_id = opt_string(rec, "bug_id", line);
    if (const std::string why = check_label(e.label); !why.empty()) bad(why);
    m.entries.push_back(std::move(e));
  }
  return m;
}

std::string manifest_to_jsonl(const CorpusManifest& manifest) {
  std::string out;
  for (const ManifestEntry& e : manifest.entries) {
    nlohmann::ordered_json rec;
    const auto opt = [](const std::optional<std::string>& s) -> nlohmann::ordered_json {
      return s ? nlohmann::ordered_json(*s) : nlohmann::ordered_json(nullptr);
    };
    rec["path"] = e.path;
    rec["format"] = e.format == TraceFormat::Binary ? "binary" : "json";
    rec["verdict"] = verdict_name(e.label.verdict);
    rec["project"] = e.label.project;
    rec["category"] = e.label.category ? nlohmann::ordered_json(category_name(*e.label.category))
                                       : nlohmann::ordered_json(nullptr);
    rec["cause"] = opt(e.label.cause);
    rec["subcause"] = opt(e.label.subcause);
    rec["bug_id"] = opt(e.label.bug_id);
    out += rec.dump();
    out += '\n';
  }
  return out;
}

CorpusManifest read_manifest(const std::string& path) {
  const auto bytes = read_file_bytes(path);
  return parse_manifest(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()),
                        fs::path(path).parent_path().string());
}

void write_manifest(const std::string& path, const CorpusManifest& manifest) {
  const std::string text = manifest_to_jsonl(manifest);
  write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::map<std::string, ProjectCounts> count_by_project(const Corpus& corpus) {
  std::map<std::string, ProjectCounts> counts;
  for (const LabeledTrace& t : corpus) {
    auto& c = counts[t.label.project];
    (t.label.verdict == Verdict::Pass ? c.pass : c.fail) += 1;
  }
  return counts;
}

std::vector<std::string> project_names(const Corpus& corpus) {
  std::set<std::string> names;
  for (const LabeledTrace& t : corpus) names.insert(t.label.project);
  return {names.begin(), names.end()};
}

LoadedCorpus load_corpus(const CorpusManifest& manifest) {
  if (manifest.entries.empty()) throw Error(ErrorCode::EmptyManifest, "manifest has no entries");
  LoadedCorpus out;
  for (const ManifestEntry& e : manifest.entries) {
    const std::string path = manifest.resolve(e);
    LabeledTrace item;
    try {
      item.trace = read_trace_file(path, e.format);
    } catch (const Error& ex) {
      throw Error(ex.code(), path + ": " + ex.what());
    }
    if (const auto report = validate_trace(item.trace); !report.empty()) {
      const Violation& v = report.front();
      throw Error(ErrorCode::InvalidManifest, path + ": event " + std::to_string(v.event_index) + ": " +
                                                  std::string(violation_name(v.kind)) + " (" + v.detail + ")");
    }
    item.label = e.label;
    item.source = path;
    out.items.push_back(std::move(item));
  }
  out.counts = count_by_project(out.items);
  return out;
}

Split split_lopo(const Corpus& corpus, std::string_view held_out_project) {
  Split s;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    (corpus[i].label.project == held_out_project ? s.test : s.train).push_back(i);
  }
  if (s.test.empty()) {
    throw Error(ErrorCode::UnknownProject, "project \"" + std::string(held_out_project) + "\" not in corpus");
  }
  return s;
}

Split split_stratified(const Corpus& corpus, double test_fraction, std::uint64_t seed) {
  Rng rng(mix_seed(seed, fnv1a("split")));
  Split s;
  for (Verdict v : {Verdict::Pass, Verdict::Fail}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      if (corpus[i].label.verdict == v) idx.push_back(i);
    }
    rng.shuffle(idx.begin(), idx.end());
    const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(idx.size())));
    s.test.insert(s.test.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
    s.train.insert(s.train.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_test), idx.end());
  }
  std::sort(s.test.begin(), s.test.end());
  std::sort(s.train.begin(), s.train.end());
  return s;
}

}  // namespace traceoracle
