// Trace serialization, vocabulary and fixed-length token sequences.
//
// A trace is flattened event by event into keyword tokens and single-digit tokens.
// Numeric fields are written as the field keyword followed by their decimal digits,
// one token per digit, so the vocabulary stays small regardless of value ranges.
#pragma once

#include <cstdint>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "traceoracle/trace_model.hpp"

namespace traceoracle {

enum class TraceField : std::uint8_t { Off, Type, Ts, P, G, StkID, Stk, Args, SArgs };

inline constexpr int kNumTraceFields = 9;

std::string_view field_name(TraceField f);
std::optional<TraceField> field_from_name(std::string_view name);

/// Subset of trace fields included in serialization. Never empty.
class FieldSet {
 public:
  /// All nine fields.
  FieldSet();
  FieldSet(std::initializer_list<TraceField> fields);

  static FieldSet all() { return FieldSet(); }
  /// Parses a comma-separated list of field names. Throws std::invalid_argument.
  static FieldSet parse(std::string_view csv);

  bool contains(TraceField f) const { return (bits_ >> static_cast<unsigned>(f)) & 1U; }
  /// Throws std::invalid_argument when removal would leave the set empty.
  FieldSet without(TraceField f) const;
  std::uint16_t bits() const { return bits_; }
  static FieldSet from_bits(std::uint16_t bits);
  std::string to_string() const;

  friend bool operator==(const FieldSet&, const FieldSet&) = default;

 private:
  std::uint16_t bits_ = 0;
};

/// The fields the ablation study removes one at a time.
inline constexpr TraceField kAblationFields[] = {TraceField::Off, TraceField::Type, TraceField::Ts,
                                                  TraceField::P,   TraceField::G,    TraceField::StkID,
                                                  TraceField::Stk};

inline constexpr std::string_view kPadToken = "<PAD>";
inline constexpr std::string_view kUnkToken = "<UNK>";
inline constexpr std::string_view kEotToken = "<EOT>";

inline constexpr int kPadId = 0;
inline constexpr int kUnkId = 1;
inline constexpr int kEotId = 2;
inline constexpr int kFirstDigitId = 3;
inline constexpr int kNumReserved = 13;

using RawTokens = std::vector<std::string>;

RawTokens serialize_trace(const ParsedTrace& trace, const FieldSet& fields = FieldSet::all());

class Vocabulary {
 public:
  /// Reserved tokens only: PAD, UNK, EOT and the ten digits.
  Vocabulary();

  int size() const { return static_cast<int>(tokens_.size()); }
  /// UNK for unseen tokens.
  int id(std::string_view token) const;
  bool contains(std::string_view token) const;
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  /// Appends the token if unseen; returns its id.
  int add(std::string_view token);

  /// One token per line, line k holds id k. Backslash and newline are escaped.
  std::string to_text() const;
  /// Throws std::invalid_argument when the reserved prefix is wrong or tokens repeat.
  static Vocabulary from_text(std::string_view text);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

Vocabulary build_vocab(const std::vector<RawTokens>& corpus);

struct TokenSequence {
  std::vector<int> ids;
  int true_len = 0;

  friend bool operator==(const TokenSequence&, const TokenSequence&) = default;
};

/// Head-kept truncation to seq_len, right padding with PAD.
TokenSequence encode_tokens(const RawTokens& raw, const Vocabulary& vocab, int seq_len);
TokenSequence tokenize(const ParsedTrace& trace, const Vocabulary& vocab, const FieldSet& fields,
                       int seq_len);

}  // namespace traceoracle
