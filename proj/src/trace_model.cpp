#include "traceoracle/trace_model.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

namespace traceoracle {

namespace {

constexpr std::array<std::string_view, kNumEventTypes> kEventNames = {
    "ProcStart",   "ProcStop",     "Freq",        "Stack",        "Gomaxprocs",  "GCStart",
    "GCDone",      "GCScanStart",  "GCScanDone",  "GCSweepStart", "GCSweepDone", "GoCreate",
    "GoStart",     "GoEnd",        "GoStop",      "GoYield",      "GoPreempt",   "GoSleep",
    "GoBlock",     "GoBlockSend",  "GoBlockRecv", "GoBlockSelect", "GoBlockSync", "GoBlockCond",
    "GoBlockNet",  "GoUnblock",    "GoSysCall",   "GoSysExit",    "GoSysBlock",  "User",
    "UserStart",   "UserEnd",
};

}  // namespace

std::string_view event_type_name(EventType type) {
  const auto code = static_cast<std::size_t>(type);
  if (code >= kEventNames.size()) {
    throw std::out_of_range("event type code " + std::to_string(code) + " out of range");
  }
  return kEventNames[code];
}

std::optional<EventType> event_type_from_name(std::string_view name) {
  const auto it = std::find(kEventNames.begin(), kEventNames.end(), name);
  if (it == kEventNames.end()) {
    return std::nullopt;
  }
  return static_cast<EventType>(it - kEventNames.begin());
}

std::string_view verdict_name(Verdict v) { return v == Verdict::Pass ? "pass" : "fail"; }

std::string_view category_name(BugCategory c) {
  return c == BugCategory::Blocking ? "Blocking" : "NonBlocking";
}

std::string check_label(const TraceLabel& label) {
  if (label.project.empty()) {
    return "project is empty";
  }
  if (label.verdict == Verdict::Pass &&
      (label.category || label.cause || label.subcause)) {
    return "bug taxonomy present on a passing trace";
  }
  return {};
}

std::string_view violation_name(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::Unsorted: return "unsorted";
    case ViolationKind::DanglingStackId: return "dangling stack id";
    case ViolationKind::StackMismatch: return "stack mismatch";
    case ViolationKind::BadLink: return "bad link";
    case ViolationKind::NegativeTimestamp: return "negative timestamp";
    case ViolationKind::NegativeOffset: return "negative offset";
    case ViolationKind::NegativeSeq: return "negative seq";
    case ViolationKind::BadProcessor: return "bad processor";
    case ViolationKind::BadEventType: return "bad event type";
    case ViolationKind::NegativeLine: return "negative line";
  }
  return "unknown";
}

ValidationReport validate_trace(const ParsedTrace& trace) {
  ValidationReport report;
  const auto add = [&](std::size_t i, ViolationKind kind, std::string detail) {
    report.push_back(Violation{i, kind, std::move(detail)});
  };

  const auto& events = trace.events;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const Event& e = events[i];
    if (!is_valid_event_code(static_cast<std::uint64_t>(e.typ))) {
      add(i, ViolationKind::BadEventType,
          "type code " + std::to_string(static_cast<int>(e.typ)));
    }
    if (e.ts < 0) add(i, ViolationKind::NegativeTimestamp, "ts " + std::to_string(e.ts));
    if (e.off < 0) add(i, ViolationKind::NegativeOffset, "off " + std::to_string(e.off));
    if (e.seq < 0) add(i, ViolationKind::NegativeSeq, "seq " + std::to_string(e.seq));
    if (e.p < kNoProcessor) add(i, ViolationKind::BadProcessor, "p " + std::to_string(e.p));

    if (i > 0) {
      const Event& prev = events[i - 1];
      if (std::pair(prev.ts, prev.seq) > std::pair(e.ts, e.seq)) {
        add(i, ViolationKind::Unsorted,
            "(ts " + std::to_string(e.ts) + ", seq " + std::to_string(e.seq) +
                ") precedes predecessor (ts " + std::to_string(prev.ts) + ", seq " +
                std::to_string(prev.seq) + ")");
      }
    }

    if (e.stk_id != 0) {
      const auto it = trace.stacks.find(e.stk_id);
      if (it == trace.stacks.end()) {
        add(i, ViolationKind::DanglingStackId, "stk_id " + std::to_string(e.stk_id));
      } else if (it->second != e.stk) {
        add(i, ViolationKind::StackMismatch,
            "stk differs from stack table entry " + std::to_string(e.stk_id));
      }
    }

    for (const Frame& f : e.stk) {
      if (f.line < 0) {
        add(i, ViolationKind::NegativeLine, "frame " + f.fn + " line " + std::to_string(f.line));
      }
    }

    if (e.link) {
      if (*e.link >= events.size()) {
        add(i, ViolationKind::BadLink, "link " + std::to_string(*e.link) + " out of range");
      } else if (*e.link == i) {
        add(i, ViolationKind::BadLink, "self link");
      }
    }
  }
  return report;
}

void sort_events(ParsedTrace& trace) {
  auto& events = trace.events;
  std::vector<std::size_t> order(events.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::pair(events[a].ts, events[a].seq) < std::pair(events[b].ts, events[b].seq);
  });

  std::vector<std::size_t> new_index(events.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    new_index[order[k]] = k;
  }
  std::vector<Event> sorted;
  sorted.reserve(events.size());
  for (std::size_t k : order) {
    Event e = std::move(events[k]);
    if (e.link && *e.link < new_index.size()) {
      e.link = new_index[*e.link];
    }
    sorted.push_back(std::move(e));
  }
  events = std::move(sorted);
}

}  // namespace traceoracle
