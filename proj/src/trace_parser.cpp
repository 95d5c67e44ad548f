#include "traceoracle/trace_parser.hpp"

#include <charconv>
#include <fstream>
#include <iterator>
#include <limits>
#include <map>

#include <json.hpp>

#include "traceoracle/error.hpp"
#include "traceoracle/varint.hpp"

namespace traceoracle {

namespace {

// Which operands an opcode carries on the wire, beyond the opcode byte.
struct WireLayout {
  bool time_diff = true;   // TimeDiff relative to the running timestamp
  int arg_slots = 0;       // leading Args slots carried (GoID, PC, Procs, ...)
  bool stack_id = false;
  bool message = false;    // one length-prefixed string, stored as sargs[0]
  bool sets_goroutine = false;
};

WireLayout layout_of(EventType type) {
  using T = EventType;
  WireLayout l;
  switch (type) {
    case T::ProcStart:  // ProcID MachineID Timestamp, handled specially
      l.time_diff = false;
      l.arg_slots = 1;
      break;
    case T::Freq:
      l.time_diff = false;
      l.arg_slots = 1;
      break;
    case T::Gomaxprocs:
      l.arg_slots = 1;
      break;
    case T::GCStart:
    case T::GCSweepStart:
      l.stack_id = true;
      break;
    case T::GoCreate:
      l.arg_slots = 2;
      l.stack_id = true;
      break;
    case T::GoStart:
      l.sets_goroutine = true;
      break;
    case T::GoUnblock:
      l.arg_slots = 1;
      l.stack_id = true;
      break;
    case T::GoSysExit:
      l.arg_slots = 1;
      break;
    case T::User:
    case T::UserStart:
    case T::UserEnd:
      l.stack_id = true;
      l.message = true;
      break;
    default:
      if (type >= T::GoStop && type <= T::GoBlockNet) {
        l.stack_id = true;
      } else if (type == T::GoSysCall) {
        l.stack_id = true;
      }
      break;
  }
  return l;
}

std::int64_t checked_add(std::int64_t base, std::uint64_t delta, std::size_t offset) {
  if (delta > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max() - base)) {
    throw ParseError(ErrorCode::VarintOverflow, offset, "timestamp overflows int64");
  }
  return base + static_cast<std::int64_t>(delta);
}

std::int64_t to_i64(std::uint64_t v, std::size_t offset) {
  if (v > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
    throw ParseError(ErrorCode::VarintOverflow, offset, "value exceeds int64");
  }
  return static_cast<std::int64_t>(v);
}

void resolve_stacks(ParsedTrace& trace) {
  for (Event& e : trace.events) {
    if (e.stk_id == 0) continue;
    if (const auto it = trace.stacks.find(e.stk_id); it != trace.stacks.end()) {
      e.stk = it->second;
    }
  }
}

void renumber(ParsedTrace& trace) {
  sort_events(trace);
  for (std::size_t i = 0; i < trace.events.size(); ++i) {
    trace.events[i].seq = static_cast<std::int64_t>(i);
  }
}

}  // namespace

ParsedTrace parse_binary(std::span<const std::uint8_t> bytes) {
  for (std::size_t i = 0; i < kBinaryMagic.size(); ++i) {
    if (i >= bytes.size()) {
      throw ParseError(ErrorCode::TruncatedRecord, i, "stream ends inside the magic");
    }
    if (bytes[i] != static_cast<std::uint8_t>(kBinaryMagic[i])) {
      throw ParseError(ErrorCode::BadMagic, i, "magic is not \"gotrace\"");
    }
  }
  varint::Reader in(bytes, kBinaryMagic.size());
  {
    const std::size_t at = in.pos();
    const std::uint64_t version = in.u64();
    if (version != kBinaryVersion) {
      throw ParseError(ErrorCode::UnsupportedVersion, at,
                       "version " + std::to_string(version));
    }
  }

  ParsedTrace trace;
  std::int64_t current_p = kNoProcessor;
  std::map<std::int64_t, std::uint64_t> current_g;
  std::int64_t last_ts = 0;
  std::int64_t next_seq = 0;

  while (!in.at_end()) {
    const std::size_t off = in.pos();
    const std::uint8_t opcode = in.byte();
    if (!is_valid_event_code(opcode)) {
      throw ParseError(ErrorCode::UnknownOpcode, off, "opcode " + std::to_string(opcode));
    }
    const auto type = static_cast<EventType>(opcode);

    if (type == EventType::Stack) {
      const std::uint64_t id = in.u64();
      const std::uint64_t len = in.u64();
      FrameList frames;
      for (std::uint64_t k = 0; k < len; ++k) {
        Frame f;
        f.pc = in.u64();
        f.fn = in.string();
        f.file = in.string();
        f.line = to_i64(in.u64(), off);
        frames.push_back(std::move(f));
      }
      trace.stacks[id] = std::move(frames);
      continue;
    }

    Event e;
    e.off = static_cast<std::int64_t>(off);
    e.typ = type;
    e.seq = next_seq++;
    const WireLayout l = layout_of(type);

    if (type == EventType::ProcStart) {
      current_p = to_i64(in.u64(), off);
      current_g[current_p] = 0;
      e.args[0] = in.u64();  // MachineID
      last_ts = to_i64(in.u64(), off);
    } else if (type == EventType::Freq) {
      e.args[0] = in.u64();
    } else {
      last_ts = checked_add(last_ts, in.u64(), off);
      if (l.sets_goroutine) {
        current_g[current_p] = in.u64();
      }
      for (int k = 0; k < l.arg_slots; ++k) {
        e.args[k] = in.u64();
      }
    }
    if (l.stack_id) e.stk_id = in.u64();
    if (l.message) e.sargs.push_back(in.string());

    e.ts = last_ts;
    e.p = current_p;
    e.g = current_g[current_p];
    trace.events.push_back(std::move(e));
  }

  resolve_stacks(trace);
  renumber(trace);
  return trace;
}

std::vector<std::uint8_t> encode_binary(const ParsedTrace& trace) {
  std::vector<std::uint8_t> out(kBinaryMagic.begin(), kBinaryMagic.end());
  varint::put(out, kBinaryVersion);

  for (const auto& [id, frames] : trace.stacks) {
    out.push_back(static_cast<std::uint8_t>(EventType::Stack));
    varint::put(out, id);
    varint::put(out, frames.size());
    for (const Frame& f : frames) {
      if (f.line < 0) {
        throw Error(ErrorCode::UnencodableTrace,
                    "negative line in stack " + std::to_string(id));
      }
      varint::put(out, f.pc);
      varint::put_string(out, f.fn);
      varint::put_string(out, f.file);
      varint::put(out, static_cast<std::uint64_t>(f.line));
    }
  }

  std::int64_t current_p = kNoProcessor;
  std::map<std::int64_t, std::uint64_t> current_g;
  std::int64_t last_ts = 0;

  const auto put_proc_start = [&](std::int64_t p, std::uint64_t machine, std::int64_t ts) {
    out.push_back(static_cast<std::uint8_t>(EventType::ProcStart));
    varint::put(out, static_cast<std::uint64_t>(p));
    varint::put(out, machine);
    varint::put(out, static_cast<std::uint64_t>(ts));
    current_p = p;
    current_g[p] = 0;
    last_ts = ts;
  };
  const auto put_go_start = [&](std::uint64_t g, std::uint64_t delta) {
    out.push_back(static_cast<std::uint8_t>(EventType::GoStart));
    varint::put(out, delta);
    varint::put(out, g);
    current_g[current_p] = g;
  };

  for (std::size_t i = 0; i < trace.events.size(); ++i) {
    const Event& e = trace.events[i];
    const auto fail = [&](const std::string& why) {
      throw EventError(ErrorCode::UnencodableTrace, i, why);
    };
    if (!is_valid_event_code(static_cast<std::uint64_t>(e.typ))) fail("invalid event type");
    if (e.typ == EventType::Stack) fail("Stack is a table record, not an event");
    if (e.ts < last_ts) {
      fail("timestamp " + std::to_string(e.ts) + " precedes " + std::to_string(last_ts));
    }

    const WireLayout l = layout_of(e.typ);
    for (int k = l.arg_slots; k < 3; ++k) {
      if (e.args[k] != 0) fail("args[" + std::to_string(k) + "] is not carried by this opcode");
    }
    if (!l.stack_id && e.stk_id != 0) fail("stack id is not carried by this opcode");
    if (e.stk_id == 0 && !e.stk.empty()) fail("frames without a stack id");
    if (l.message ? e.sargs.size() != 1 : !e.sargs.empty()) fail("string args do not match opcode");

    if (e.typ == EventType::ProcStart) {
      if (e.p < 0) fail("ProcStart on an unattributed processor");
      if (e.g != 0) fail("ProcStart runs no goroutine");
      put_proc_start(e.p, e.args[0], e.ts);
      continue;
    }

    if (e.p != current_p) {
      if (e.p < 0) fail("cannot return to the unattributed processor");
      put_proc_start(e.p, 0, last_ts);
    }
    if (e.typ == EventType::GoStart) {
      put_go_start(e.g, static_cast<std::uint64_t>(e.ts - last_ts));
      last_ts = e.ts;
      continue;
    }
    if (current_g[current_p] != e.g) {
      put_go_start(e.g, 0);
    }

    out.push_back(static_cast<std::uint8_t>(e.typ));
    if (e.typ == EventType::Freq) {
      if (e.ts != last_ts) fail("Freq carries no timestamp delta");
      varint::put(out, e.args[0]);
      continue;
    }
    varint::put(out, static_cast<std::uint64_t>(e.ts - last_ts));
    last_ts = e.ts;
    for (int k = 0; k < l.arg_slots; ++k) varint::put(out, e.args[k]);
    if (l.stack_id) varint::put(out, e.stk_id);
    if (l.message) varint::put_string(out, e.sargs.front());
  }
  return out;
}

// ---------------------------------------------------------------------------------
// JSON

namespace {

using nlohmann::json;

std::uint64_t json_u64(const json& v, std::size_t index, std::string_view key) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer()) {
    const auto s = v.get<std::int64_t>();
    if (s >= 0) return static_cast<std::uint64_t>(s);
  }
  if (v.is_string()) {
    const auto& s = v.get_ref<const std::string&>();
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec == std::errc() && ptr == s.data() + s.size() && !s.empty()) return out;
  }
  throw EventError(ErrorCode::TypeMismatch, index,
                   "\"" + std::string(key) + "\" is not an unsigned integer");
}

std::int64_t json_i64(const json& v, std::size_t index, std::string_view key) {
  if (v.is_number_integer() && !v.is_number_unsigned()) return v.get<std::int64_t>();
  if (v.is_number_unsigned()) {
    const auto u = v.get<std::uint64_t>();
    if (u <= static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
      return static_cast<std::int64_t>(u);
    }
  }
  if (v.is_string()) {
    const auto& s = v.get_ref<const std::string&>();
    std::int64_t out = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec == std::errc() && ptr == s.data() + s.size() && !s.empty()) return out;
  }
  throw EventError(ErrorCode::TypeMismatch, index,
                   "\"" + std::string(key) + "\" is not an integer");
}

const json* find_key(const json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return nullptr;
  return &*it;
}

FrameList parse_frames(const json& arr, std::size_t index) {
  if (!arr.is_array()) {
    throw EventError(ErrorCode::TypeMismatch, index, "frame list is not an array");
  }
  FrameList frames;
  for (const json& fo : arr) {
    if (!fo.is_object()) {
      throw EventError(ErrorCode::TypeMismatch, index, "frame is not an object");
    }
    Frame f;
    if (const json* v = find_key(fo, "PC")) f.pc = json_u64(*v, index, "PC");
    if (const json* v = find_key(fo, "Fn")) {
      if (!v->is_string()) throw EventError(ErrorCode::TypeMismatch, index, "\"Fn\" is not a string");
      f.fn = v->get<std::string>();
    }
    if (const json* v = find_key(fo, "File")) {
      if (!v->is_string()) throw EventError(ErrorCode::TypeMismatch, index, "\"File\" is not a string");
      f.file = v->get<std::string>();
    }
    if (const json* v = find_key(fo, "Line")) f.line = json_i64(*v, index, "Line");
    frames.push_back(std::move(f));
  }
  return frames;
}

nlohmann::ordered_json frames_to_json(const FrameList& frames) {
  auto arr = nlohmann::ordered_json::array();
  for (const Frame& f : frames) {
    nlohmann::ordered_json fo;
    fo["PC"] = f.pc;
    fo["Fn"] = f.fn;
    fo["File"] = f.file;
    fo["Line"] = f.line;
    arr.push_back(std::move(fo));
  }
  return arr;
}

}  // namespace

ParsedTrace parse_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& ex) {
    throw Error(ErrorCode::MalformedDocument, ex.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::MalformedDocument, "top level is not an object");
  const auto events_it = doc.find("Events");
  if (events_it == doc.end() || !events_it->is_array()) {
    throw Error(ErrorCode::MalformedDocument, "missing \"Events\" array");
  }

  ParsedTrace trace;
  if (const json* stacks = find_key(doc, "Stacks")) {
    if (!stacks->is_object()) throw Error(ErrorCode::MalformedDocument, "\"Stacks\" is not an object");
    for (const auto& [key, frames] : stacks->items()) {
      std::uint64_t id = 0;
      const auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), id);
      if (ec != std::errc() || ptr != key.data() + key.size() || key.empty()) {
        throw Error(ErrorCode::MalformedDocument, "stack key \"" + key + "\" is not decimal");
      }
      try {
        trace.stacks[id] = parse_frames(frames, 0);
      } catch (const EventError& ex) {
        throw Error(ErrorCode::TypeMismatch, "in stack " + key + ": " + ex.what());
      }
    }
  }

  std::size_t index = 0;
  for (const json& eo : *events_it) {
    if (!eo.is_object()) throw EventError(ErrorCode::TypeMismatch, index, "event is not an object");
    Event e;
    const json* type = find_key(eo, "Type");
    if (type == nullptr) throw EventError(ErrorCode::TypeMismatch, index, "missing \"Type\"");
    const std::uint64_t code = json_u64(*type, index, "Type");
    if (!is_valid_event_code(code)) {
      throw EventError(ErrorCode::UnknownEventTypeCode, index, "type code " + std::to_string(code));
    }
    e.typ = static_cast<EventType>(code);
    if (const json* v = find_key(eo, "Off")) e.off = json_i64(*v, index, "Off");
    if (const json* v = find_key(eo, "Ts")) e.ts = json_i64(*v, index, "Ts");
    if (const json* v = find_key(eo, "P")) e.p = json_i64(*v, index, "P");
    if (const json* v = find_key(eo, "G")) e.g = json_u64(*v, index, "G");
    if (const json* v = find_key(eo, "StkID")) e.stk_id = json_u64(*v, index, "StkID");
    if (const json* v = find_key(eo, "Stk")) {
      e.stk = parse_frames(*v, index);
    } else if (const auto it = trace.stacks.find(e.stk_id); e.stk_id != 0 && it != trace.stacks.end()) {
      e.stk = it->second;
    }
    if (const json* v = find_key(eo, "Args")) {
      if (!v->is_array() || v->size() > 3) {
        throw EventError(ErrorCode::TypeMismatch, index, "\"Args\" is not an array of at most 3");
      }
      for (std::size_t k = 0; k < v->size(); ++k) e.args[k] = json_u64((*v)[k], index, "Args");
    }
    if (const json* v = find_key(eo, "SArgs")) {
      if (!v->is_array()) throw EventError(ErrorCode::TypeMismatch, index, "\"SArgs\" is not an array");
      for (const json& s : *v) {
        if (!s.is_string()) throw EventError(ErrorCode::TypeMismatch, index, "SArgs entry is not a string");
        e.sargs.push_back(s.get<std::string>());
      }
    }
    e.seq = static_cast<std::int64_t>(index);
    trace.events.push_back(std::move(e));
    ++index;
  }

  renumber(trace);
  return trace;
}

std::string emit_json(const ParsedTrace& trace, int indent) {
  using ojson = nlohmann::ordered_json;
  ojson doc;
  ojson events = ojson::array();
  for (const Event& e : trace.events) {
    ojson eo;
    eo["Off"] = e.off;
    eo["Type"] = static_cast<int>(e.typ);
    eo["Ts"] = e.ts;
    eo["P"] = e.p;
    eo["G"] = e.g;
    eo["StkID"] = e.stk_id;
    eo["Stk"] = frames_to_json(e.stk);
    eo["Args"] = ojson::array({e.args[0], e.args[1], e.args[2]});
    eo["SArgs"] = e.sargs;
    events.push_back(std::move(eo));
  }
  doc["Events"] = std::move(events);
  ojson stacks = ojson::object();
  for (const auto& [id, frames] : trace.stacks) {  // std::map: ascending ids
    stacks[std::to_string(id)] = frames_to_json(frames);
  }
  doc["Stacks"] = std::move(stacks);
  return doc.dump(indent);
}

// ---------------------------------------------------------------------------------
// Files

TraceFormat detect_format(std::span<const std::uint8_t> bytes) {
  if (bytes.size() >= kBinaryMagic.size() &&
      std::equal(kBinaryMagic.begin(), kBinaryMagic.end(), bytes.begin())) {
    return TraceFormat::Binary;
  }
  for (std::uint8_t b : bytes) {
    if (b == ' ' || b == '\n' || b == '\r' || b == '\t') continue;
    return b == '{' ? TraceFormat::Json : TraceFormat::Binary;
  }
  return TraceFormat::Binary;
}

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::Io, "short write to " + path);
}

ParsedTrace read_trace_file(const std::string& path, TraceFormat format) {
  const auto bytes = read_file_bytes(path);
  if (format == TraceFormat::Binary) return parse_binary(bytes);
  return parse_json(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

ParsedTrace read_trace_file(const std::string& path) {
  const auto bytes = read_file_bytes(path);
  if (detect_format(bytes) == TraceFormat::Binary) return parse_binary(bytes);
  return parse_json(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

void write_trace_file(const std::string& path, const ParsedTrace& trace, TraceFormat format) {
  if (format == TraceFormat::Binary) {
    write_file_bytes(path, encode_binary(trace));
  } else {
    const std::string text = emit_json(trace);
    write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  }
}

}  // namespace traceoracle
