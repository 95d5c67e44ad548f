#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>

#include "traceoracle/dataset.hpp"
#include "traceoracle/error.hpp"
#include "traceoracle/rng.hpp"

namespace traceoracle {

namespace fs = std::filesystem;

std::string_view signature_name(BugSignature s) {
  switch (s) {
    case BugSignature::UnmatchedBlock: return "unmatched-block";
    case BugSignature::DoubleCreate: return "double-create";
    case BugSignature::RaceWindow: return "race-window";
  }
  return "unknown";
}

void SynthConfig::validate() const {
  const auto bad = [](const std::string& why) { throw Error(ErrorCode::InvalidConfig, why); };
  if (num_projects < 1) bad("num_projects must be positive");
  if (traces_per_project < 1) bad("traces_per_project must be positive");
  if (!(pass_fraction >= 0.0 && pass_fraction <= 1.0)) bad("pass_fraction must lie in [0, 1]");
  if (events_min < 4 || events_max < events_min) bad("need 4 <= events_min <= events_max");
  if (!(inject_window > 0.0 && inject_window <= 1.0)) bad("inject_window must lie in (0, 1]");
  double total = 0.0;
  for (double w : bug_mix) {
    if (!(w >= 0.0) || !std::isfinite(w)) bad("bug_mix weights must be finite and non-negative");
    total += w;
  }
  if (total <= 0.0) bad("bug_mix needs a positive weight");
  if (!project_names.empty()) {
    if (static_cast<int>(project_names.size()) != num_projects) bad("project_names size differs from num_projects");
    std::vector<std::string> sorted = project_names;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) bad("project_names repeat");
    for (const auto& n : project_names) {
      if (n.empty() || n.find_first_of("/\\") != std::string::npos) bad("bad project name \"" + n + "\"");
    }
  }
}

namespace {

constexpr std::string_view kSharedMessage = "shared.counter";

const std::vector<std::string_view> kVerbs = {
    "handleRequest", "worker", "serve", "process", "flush", "dispatch",
    "poll", "loop", "run", "fetch", "commit", "watch", "reconcile", "drain",
};

struct Profile {
  std::string name;
  std::string pkg;
  std::vector<std::string> fns;
  std::vector<std::string> regions;
  std::int64_t ts_scale = 10;
  int extra_events = 0;
  std::uint64_t gid_base = 1;
  int nprocs = 2;
};

Profile make_profile(const SynthConfig& cfg, int index) {
  Profile pr;
  pr.name = cfg.project_names.empty() ? "project-" + std::to_string(index + 1)
                                      : cfg.project_names[static_cast<std::size_t>(index)];
  Rng rng(mix_seed(cfg.seed, fnv1a(pr.name)));
  for (char c : pr.name) {
    if (std::isalnum(static_cast<unsigned char>(c))) pr.pkg += static_cast<char>(std::tolower(c));
  }
  if (pr.pkg.empty()) pr.pkg = "pkg";
  std::vector<std::string_view> verbs = kVerbs;
  rng.shuffle(verbs.begin(), verbs.end());
  for (int k = 0; k < 5; ++k) pr.fns.push_back(pr.pkg + "." + std::string(verbs[static_cast<std::size_t>(k)]));
  for (int k = 5; k < 7; ++k) pr.regions.push_back(pr.pkg + "/" + std::string(verbs[static_cast<std::size_t>(k)]));
  pr.ts_scale = rng.between(3, 40);
  pr.extra_events = static_cast<int>(rng.between(0, 2));
  pr.gid_base = static_cast<std::uint64_t>(rng.between(1, 40));
  pr.nprocs = static_cast<int>(rng.between(2, 4));
  return pr;
}

Frame frame_for(std::string_view fn, std::string_view file) {
  Frame f;
  f.fn = std::string(fn);
  f.file = std::string(file);
  f.pc = 0x401000 + (fnv1a(fn) % 0x40000) * 16;
  f.line = static_cast<std::int64_t>(10 + fnv1a(std::string(fn) + "#line") % 390);
  return f;
}

class TraceBuilder {
 public:
  TraceBuilder(const Profile& pr, Rng& rng) : pr_(pr), rng_(rng), ts_(rng.between(0, 99)) {}

  FrameList project_stack() {
    const std::string& fn = pr_.fns[rng_.below(pr_.fns.size())];
    return {frame_for(fn, pr_.name + "/" + fn.substr(fn.find('.') + 1) + ".go")};
  }

  void proc_start(std::int64_t p, std::uint64_t machine) {
    p_ = p;
    current_g_[p] = 0;
    Event& e = push(EventType::ProcStart, {});
    e.args[0] = machine;
  }

  void go_start(std::uint64_t g) {
    current_g_[p_] = g;
    push(EventType::GoStart, {});
  }

  Event& emit(EventType type, FrameList frames = {}, std::array<std::uint64_t, 3> args = {},
              std::vector<std::string> sargs = {}) {
    Event& e = push(type, std::move(frames));
    e.args = args;
    e.sargs = std::move(sargs);
    return e;
  }

  std::uint64_t current() const {
    const auto it = current_g_.find(p_);
    return it == current_g_.end() ? 0 : it->second;
  }
  std::int64_t processor() const { return p_; }
  std::size_t size() const { return trace_.events.size(); }

  ParsedTrace finish() && { return std::move(trace_); }

 private:
  Event& push(EventType type, FrameList frames) {
    if (!trace_.events.empty()) ts_ += rng_.between(1, pr_.ts_scale);
    Event e;
    e.typ = type;
    e.seq = static_cast<std::int64_t>(trace_.events.size());
    e.ts = ts_;
    e.p = p_;
    e.g = current();
    if (!frames.empty()) {
      auto [it, fresh] = stack_ids_.try_emplace(frames, stack_ids_.size() + 1);
      if (fresh) trace_.stacks[it->second] = frames;
      e.stk_id = it->second;
      e.stk = std::move(frames);
    }
    trace_.events.push_back(std::move(e));
    return trace_.events.back();
  }

  struct FramesLess {
    bool operator()(const FrameList& a, const FrameList& b) const {
      return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(), [](const Frame& x, const Frame& y) {
        return std::tie(x.pc, x.fn, x.file, x.line) < std::tie(y.pc, y.fn, y.file, y.line);
      });
    }
  };

  const Profile& pr_;
  Rng& rng_;
  ParsedTrace trace_;
  std::int64_t ts_;
  std::int64_t p_ = kNoProcessor;
  std::map<std::int64_t, std::uint64_t> current_g_;
  std::map<FrameList, std::uint64_t, FramesLess> stack_ids_;
};

// Goroutine bookkeeping shared by the background actions and the injected signatures.
class Scheduler {
 public:
  Scheduler(const Profile& pr, Rng& rng, TraceBuilder& tb, bool allow_proc_switch)
      : pr_(pr), rng_(rng), tb_(tb), allow_proc_switch_(allow_proc_switch), next_gid_(pr.gid_base + 1) {}

  void start(std::int64_t p) {
    tb_.proc_start(p, static_cast<std::uint64_t>(rng_.below(4)));
    if (rng_.chance(0.5)) {
      tb_.emit(EventType::Gomaxprocs, {}, {static_cast<std::uint64_t>(pr_.nprocs), 0, 0});
    }
    alive_.push_back(pr_.gid_base);
    tb_.go_start(pr_.gid_base);
  }

  std::uint64_t create(FrameList frames = {}) {
    const std::uint64_t gid = next_gid_++;
    if (frames.empty()) frames = tb_.project_stack();
    tb_.emit(EventType::GoCreate, std::move(frames), {gid, frame_for(pr_.fns[0], "").pc, 0});
    alive_.push_back(gid);
    return gid;
  }

  /// Another live goroutine, created on demand.
  std::uint64_t other() {
    std::vector<std::uint64_t> others;
    for (std::uint64_t g : alive_) {
      if (g != tb_.current()) others.push_back(g);
    }
    if (others.empty()) return create();
    return others[rng_.below(others.size())];
  }

  void retire(std::uint64_t g) { alive_.erase(std::remove(alive_.begin(), alive_.end(), g), alive_.end()); }

  /// One background action drawn from behaviour present in passing and failing runs.
  void step() {
    static constexpr EventType kSafeBlocks[] = {EventType::GoBlock, EventType::GoBlockSelect, EventType::GoBlockSync,
                                                EventType::GoBlockCond, EventType::GoBlockNet};
    static constexpr EventType kStops[] = {EventType::GoYield, EventType::GoPreempt, EventType::GoSleep,
                                           EventType::GoStop};
    const double r = rng_.uniform();
    if (r < 0.20) {
      create();
    } else if (r < 0.35) {
      const std::uint64_t next = other();
      tb_.emit(kStops[rng_.below(std::size(kStops))], tb_.project_stack());
      tb_.go_start(next);
    } else if (r < 0.52) {
      const std::uint64_t next = other();
      const std::uint64_t blocked = tb_.current();
      tb_.emit(kSafeBlocks[rng_.below(std::size(kSafeBlocks))], tb_.project_stack());
      tb_.go_start(next);
      tb_.emit(EventType::GoUnblock, tb_.project_stack(), {blocked, 0, 0});
    } else if (r < 0.64) {
      const std::uint64_t g = tb_.current();
      tb_.emit(EventType::GoSysCall, tb_.project_stack());
      tb_.emit(EventType::GoSysExit, {}, {g, 0, 0});
    } else if (r < 0.72) {
      tb_.emit(EventType::GCStart);
      tb_.emit(EventType::GCDone);
    } else if (r < 0.84) {
      const std::string region = pr_.regions[rng_.below(pr_.regions.size())];
      tb_.emit(EventType::UserStart, tb_.project_stack(), {}, {region});
      tb_.emit(EventType::UserEnd, tb_.project_stack(), {}, {region});
    } else if (r < 0.93 && allow_proc_switch_) {
      std::int64_t p = tb_.processor();
      while (p == tb_.processor()) p = rng_.between(0, pr_.nprocs - 1);
      const std::uint64_t g = rng_.chance(0.5) ? tb_.current() : other();
      tb_.proc_start(p, static_cast<std::uint64_t>(rng_.below(4)));
      tb_.go_start(g);
    } else if (alive_.size() >= 2 && tb_.current() != pr_.gid_base) {
      const std::uint64_t done = tb_.current();
      const std::uint64_t next = other();
      tb_.emit(EventType::GoEnd);
      retire(done);
      tb_.go_start(next);
    } else {
      tb_.emit(EventType::GoSysCall, tb_.project_stack());
      tb_.emit(EventType::GoSysExit, {}, {tb_.current(), 0, 0});
    }
  }

  void inject(BugSignature sig) {
    switch (sig) {
      case BugSignature::UnmatchedBlock: {
        const bool recv = rng_.chance(0.5);
        const std::uint64_t next = other();
        const std::uint64_t stuck = tb_.current();
        FrameList frames = {recv ? frame_for("runtime.chanrecv1", "runtime/chan.go")
                                 : frame_for("runtime.chansend1", "runtime/chan.go")};
        frames.push_back(tb_.project_stack().front());
        tb_.emit(recv ? EventType::GoBlockRecv : EventType::GoBlockSend, std::move(frames));
        retire(stuck);
        tb_.go_start(next);
        break;
      }
      case BugSignature::DoubleCreate: {
        const FrameList frames = {frame_for("main.respawnWorker", "main.go")};
        const std::uint64_t gid = create(frames);
        tb_.emit(EventType::GoCreate, frames, {gid, frame_for(pr_.fns[0], "").pc, 0});
        break;
      }
      case BugSignature::RaceWindow: {
        const std::uint64_t second = other();
        const FrameList frames = {frame_for("main.incrementUnsafe", "main.go")};
        tb_.emit(EventType::User, frames, {}, {std::string(kSharedMessage)});
        tb_.go_start(second);
        tb_.emit(EventType::User, frames, {}, {std::string(kSharedMessage)});
        break;
      }
    }
  }

 private:
  const Profile& pr_;
  Rng& rng_;
  TraceBuilder& tb_;
  bool allow_proc_switch_;
  std::uint64_t next_gid_;
  std::vector<std::uint64_t> alive_;
};

BugSignature pick_signature(const SynthConfig& cfg, Rng& rng) {
  const double total = cfg.bug_mix[0] + cfg.bug_mix[1] + cfg.bug_mix[2];
  double r = rng.uniform() * total;
  for (int k = 0; k < 3; ++k) {
    if (r < cfg.bug_mix[static_cast<std::size_t>(k)]) return static_cast<BugSignature>(k);
    r -= cfg.bug_mix[static_cast<std::size_t>(k)];
  }
  for (int k = 2; k >= 0; --k) {
    if (cfg.bug_mix[static_cast<std::size_t>(k)] > 0) return static_cast<BugSignature>(k);
  }
  return BugSignature::UnmatchedBlock;
}

void apply_taxonomy(TraceLabel& label, BugSignature sig) {
  switch (sig) {
    case BugSignature::UnmatchedBlock:
      label.category = BugCategory::Blocking;
      label.cause = "Communication Deadlock";
      label.subcause = "Channel";
      break;
    case BugSignature::DoubleCreate:
      label.category = BugCategory::NonBlocking;
      label.cause = "Go-Specific";
      label.subcause = "Misuse";
      break;
    case BugSignature::RaceWindow:
      label.category = BugCategory::NonBlocking;
      label.cause = "Traditional";
      label.subcause = "Data race";
      break;
  }
}

int target_events(const SynthConfig& cfg, const Profile& pr, Rng& rng) {
  return static_cast<int>(rng.between(cfg.events_min, cfg.events_max)) + pr.extra_events;
}

ParsedTrace signature_trace(const SynthConfig& cfg, const Profile& pr, Rng& rng, std::optional<BugSignature> bug) {
  TraceBuilder tb(pr, rng);
  Scheduler s(pr, rng, tb, true);
  s.start(rng.between(0, pr.nprocs - 1));
  const int n = target_events(cfg, pr, rng);
  const auto intro = static_cast<std::int64_t>(tb.size());
  const auto window_end = std::max(intro, static_cast<std::int64_t>(std::floor(cfg.inject_window * n)));
  const std::int64_t inject_at = rng.between(intro, window_end);
  bool injected = !bug.has_value();
  while (static_cast<int>(tb.size()) < n || !injected) {
    if (!injected && static_cast<std::int64_t>(tb.size()) >= inject_at) {
      s.inject(*bug);
      injected = true;
      continue;
    }
    s.step();
  }
  return std::move(tb).finish();
}

ParsedTrace planted_trace(const SynthConfig& cfg, const Profile& pr, Rng& rng, bool failing) {
  TraceBuilder tb(pr, rng);
  Scheduler s(pr, rng, tb, false);
  const std::int64_t first_p = failing ? 0 : 1;
  const std::int64_t second_p = failing ? 0 : 2;
  s.start(first_p);
  s.create();
  const int n = target_events(cfg, pr, rng);
  const int before = static_cast<int>(rng.between(0, std::max(0, n / 2 - 5)));
  for (int k = 0; k < before; ++k) s.step();

  const FrameList frames = {frame_for("main.incrementUnsafe", "main.go")};
  tb.emit(EventType::User, frames, {}, {std::string(kSharedMessage)});
  const std::uint64_t second = s.other();
  tb.proc_start(second_p, static_cast<std::uint64_t>(rng.below(4)));
  tb.go_start(second);
  tb.emit(EventType::User, frames, {}, {std::string(kSharedMessage)});
  while (static_cast<int>(tb.size()) < n) s.step();
  return std::move(tb).finish();
}

void canonicalise(ParsedTrace& trace, TraceFormat format) {
  if (format == TraceFormat::Binary) trace = parse_binary(encode_binary(trace));
}

}  // namespace

Corpus synth_corpus(const SynthConfig& cfg) {
  cfg.validate();
  Corpus corpus;
  for (int pi = 0; pi < cfg.num_projects; ++pi) {
    const Profile pr = make_profile(cfg, pi);
    Rng order_rng(mix_seed(cfg.seed, fnv1a(pr.name + "/order")));
    const auto n_pass = static_cast<int>(std::llround(cfg.pass_fraction * cfg.traces_per_project));
    std::vector<bool> failing(static_cast<std::size_t>(cfg.traces_per_project), false);
    std::fill(failing.begin() + n_pass, failing.end(), true);
    order_rng.shuffle(failing.begin(), failing.end());

    for (int ti = 0; ti < cfg.traces_per_project; ++ti) {
      Rng rng(mix_seed(mix_seed(cfg.seed, fnv1a(pr.name)), static_cast<std::uint64_t>(ti)));
      LabeledTrace item;
      item.label.project = pr.name;
      const bool fail = failing[static_cast<std::size_t>(ti)];
      if (cfg.mode == LabelMode::Signatures) {
        std::optional<BugSignature> bug;
        if (fail) bug = pick_signature(cfg, rng);
        item.trace = signature_trace(cfg, pr, rng, bug);
        if (bug) apply_taxonomy(item.label, *bug);
      } else {
        item.trace = planted_trace(cfg, pr, rng, fail);
        if (fail) apply_taxonomy(item.label, BugSignature::RaceWindow);
      }
      if (fail) {
        item.label.verdict = Verdict::Fail;
        item.label.bug_id = pr.name + "#" + std::to_string(ti);
      }
      canonicalise(item.trace, cfg.format);
      corpus.push_back(std::move(item));
    }
  }
  return corpus;
}

CorpusManifest synth_generate(const SynthConfig& cfg, const std::string& out_dir) {
  Corpus corpus = synth_corpus(cfg);
  CorpusManifest manifest;
  manifest.base_dir = out_dir;
  std::map<std::string, int> next_index;
  for (LabeledTrace& item : corpus) {
    char name[32];
    std::snprintf(name, sizeof name, "trace-%03d.%s", next_index[item.label.project]++,
                  cfg.format == TraceFormat::Binary ? "gotrace" : "json");
    ManifestEntry e;
    e.path = item.label.project + "/" + name;
    e.format = cfg.format;
    e.label = item.label;
    fs::create_directories(fs::path(out_dir) / item.label.project);
    write_trace_file(manifest.resolve(e), item.trace, cfg.format);
    manifest.entries.push_back(std::move(e));
  }
  write_manifest((fs::path(out_dir) / "corpus.manifest.jsonl").string(), manifest);
  return manifest;
}

}  // namespace traceoracle
