// Binary and JSON codecs for ParsedTrace.
//
// Binary layout: the 7 magic bytes "gotrace", a ULEB128 version (1), then records.
// Every record starts with a one-byte opcode equal to the EventType code; all integer
// fields are ULEB128 and strings are a ULEB128 length followed by raw bytes. Stack
// records (opcode 0x03) carry StackID, StackLen and per frame PC, Fn, File, Line; they
// populate the stack table and are not events.
//
// Processor and goroutine attribution is contextual: ProcStart selects the current
// processor and leaves it with no goroutine (G 0), GoStart selects the current
// goroutine of that processor, and every other record inherits both.
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "traceoracle/trace_model.hpp"

namespace traceoracle {

inline constexpr std::string_view kBinaryMagic = "gotrace";
inline constexpr std::uint64_t kBinaryVersion = 1;

enum class TraceFormat { Binary, Json };

/// Throws ParseError (BadMagic, UnsupportedVersion, UnknownOpcode, TruncatedRecord,
/// VarintOverflow) carrying the byte offset of the fault.
ParsedTrace parse_binary(std::span<const std::uint8_t> bytes);

/// Throws EventError(UnencodableTrace) naming the first event the wire format cannot
/// express: a timestamp that decreases, a field the opcode does not carry, or a
/// processor/goroutine change the context records cannot reproduce. Links and
/// offsets are not carried; seq is reassigned on parse.
std::vector<std::uint8_t> encode_binary(const ParsedTrace& trace);

/// Throws Error(MalformedDocument) or EventError(UnknownEventTypeCode, TypeMismatch).
ParsedTrace parse_json(std::string_view text);

/// Keys per event in the order Off, Type, Ts, P, G, StkID, Stk, Args, SArgs; stacks in
/// ascending id order. indent < 0 gives a single line.
std::string emit_json(const ParsedTrace& trace, int indent = -1);

/// Sniffs the magic prefix.
TraceFormat detect_format(std::span<const std::uint8_t> bytes);

ParsedTrace read_trace_file(const std::string& path, TraceFormat format);
ParsedTrace read_trace_file(const std::string& path);  // auto-detect
void write_trace_file(const std::string& path, const ParsedTrace& trace, TraceFormat format);

std::vector<std::uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, std::span<const std::uint8_t> bytes);

}  // namespace traceoracle
