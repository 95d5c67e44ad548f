// In-memory representation of concurrent-program execution traces.
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace traceoracle {

/// Runtime event kinds. Codes are the opcode bytes of the binary format.
enum class EventType : std::uint8_t {
  ProcStart = 0x00,
  ProcStop = 0x01,
  Freq = 0x02,
  Stack = 0x03,
  Gomaxprocs = 0x04,
  GCStart = 0x05,
  GCDone = 0x06,
  GCScanStart = 0x07,
  GCScanDone = 0x08,
  GCSweepStart = 0x09,
  GCSweepDone = 0x0A,
  GoCreate = 0x0B,
  GoStart = 0x0C,
  GoEnd = 0x0D,
  GoStop = 0x0E,
  GoYield = 0x0F,
  GoPreempt = 0x10,
  GoSleep = 0x11,
  GoBlock = 0x12,
  GoBlockSend = 0x13,
  GoBlockRecv = 0x14,
  GoBlockSelect = 0x15,
  GoBlockSync = 0x16,
  GoBlockCond = 0x17,
  GoBlockNet = 0x18,
  GoUnblock = 0x19,
  GoSysCall = 0x1A,
  GoSysExit = 0x1B,
  GoSysBlock = 0x1C,
  User = 0x1D,
  UserStart = 0x1E,
  UserEnd = 0x1F,
};

inline constexpr int kNumEventTypes = 32;

constexpr bool is_valid_event_code(std::uint64_t code) { return code < kNumEventTypes; }

/// Symbolic name without the "Ev" prefix, e.g. "GoEnd". Throws std::out_of_range for
/// codes outside [0, 31].
std::string_view event_type_name(EventType type);
std::optional<EventType> event_type_from_name(std::string_view name);

/// True for GoBlock and its seven specialised variants (0x12..0x18).
constexpr bool is_block_event(EventType type) {
  return type >= EventType::GoBlock && type <= EventType::GoBlockNet;
}

struct Frame {
  std::uint64_t pc = 0;
  std::string fn;
  std::string file;
  std::int64_t line = 0;

  friend bool operator==(const Frame&, const Frame&) = default;
};

using FrameList = std::vector<Frame>;
using StackTable = std::map<std::uint64_t, FrameList>;

inline constexpr std::int64_t kNoProcessor = -1;

struct Event {
  std::int64_t off = 0;
  EventType typ = EventType::ProcStart;
  std::int64_t seq = 0;
  std::int64_t ts = 0;
  std::int64_t p = kNoProcessor;
  std::uint64_t g = 0;
  std::uint64_t stk_id = 0;
  FrameList stk;
  std::array<std::uint64_t, 3> args{};
  std::vector<std::string> sargs;
  std::optional<std::size_t> link;

  friend bool operator==(const Event&, const Event&) = default;
};

struct ParsedTrace {
  std::vector<Event> events;
  StackTable stacks;

  friend bool operator==(const ParsedTrace&, const ParsedTrace&) = default;
};

enum class Verdict : std::uint8_t { Pass = 0, Fail = 1 };
enum class BugCategory : std::uint8_t { Blocking, NonBlocking };

std::string_view verdict_name(Verdict v);
std::string_view category_name(BugCategory c);

struct TraceLabel {
  Verdict verdict = Verdict::Pass;
  std::optional<BugCategory> category;
  std::optional<std::string> cause;
  std::optional<std::string> subcause;
  std::string project;
  std::optional<std::string> bug_id;

  friend bool operator==(const TraceLabel&, const TraceLabel&) = default;
};

/// Returns an empty string when the label is well formed, else a description.
std::string check_label(const TraceLabel& label);

enum class ViolationKind : std::uint8_t {
  Unsorted,
  DanglingStackId,
  StackMismatch,
  BadLink,
  NegativeTimestamp,
  NegativeOffset,
  NegativeSeq,
  BadProcessor,
  BadEventType,
  NegativeLine,
};

std::string_view violation_name(ViolationKind kind);

struct Violation {
  std::size_t event_index = 0;
  ViolationKind kind = ViolationKind::Unsorted;
  std::string detail;

  friend bool operator==(const Violation&, const Violation&) = default;
};

using ValidationReport = std::vector<Violation>;

/// Reports every broken trace/event invariant. Never throws.
ValidationReport validate_trace(const ParsedTrace& trace);

/// Stable sort of events by (ts, seq), remapping links to the new indices.
void sort_events(ParsedTrace& trace);

}  // namespace traceoracle
