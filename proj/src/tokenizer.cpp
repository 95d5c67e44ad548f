#include "traceoracle/tokenizer.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>

namespace traceoracle {

namespace {

constexpr std::array<std::string_view, kNumTraceFields> kFieldNames = {
    "Off", "Type", "Ts", "P", "G", "StkID", "Stk", "Args", "SArgs"};

constexpr std::array<std::string_view, 10> kDigits = {"0", "1", "2", "3", "4",
                                                      "5", "6", "7", "8", "9"};

constexpr std::string_view kNegToken = "neg";
constexpr std::string_view kFramePrefix = "Fn:";
constexpr std::string_view kStringArgPrefix = "S:";
constexpr std::array<std::string_view, 3> kArgKeywords = {"Arg0", "Arg1", "Arg2"};

void push_digits(RawTokens& out, std::uint64_t value) {
  char buf[24];
  int n = 0;
  do {
    buf[n++] = static_cast<char>('0' + value % 10);
    value /= 10;
  } while (value != 0);
  while (n > 0) out.emplace_back(kDigits[static_cast<std::size_t>(buf[--n] - '0')]);
}

void push_signed(RawTokens& out, std::int64_t value) {
  if (value < 0) {
    out.emplace_back(kNegToken);
    push_digits(out, ~static_cast<std::uint64_t>(value) + 1);
  } else {
    push_digits(out, static_cast<std::uint64_t>(value));
  }
}

void push_field(RawTokens& out, TraceField f) { out.emplace_back(kFieldNames[static_cast<std::size_t>(f)]); }

}  // namespace

std::string_view field_name(TraceField f) { return kFieldNames.at(static_cast<std::size_t>(f)); }

std::optional<TraceField> field_from_name(std::string_view name) {
  const auto it = std::find(kFieldNames.begin(), kFieldNames.end(), name);
  if (it == kFieldNames.end()) return std::nullopt;
  return static_cast<TraceField>(it - kFieldNames.begin());
}

FieldSet::FieldSet() : bits_((1U << kNumTraceFields) - 1) {}

FieldSet::FieldSet(std::initializer_list<TraceField> fields) {
  for (TraceField f : fields) bits_ |= static_cast<std::uint16_t>(1U << static_cast<unsigned>(f));
  if (bits_ == 0) throw std::invalid_argument("field set must not be empty");
}

FieldSet FieldSet::parse(std::string_view csv) {
  FieldSet fs;
  fs.bits_ = 0;
  std::size_t start = 0;
  while (start <= csv.size()) {
    const std::size_t end = std::min(csv.find(',', start), csv.size());
    const std::string_view name = csv.substr(start, end - start);
    if (!name.empty()) {
      const auto f = field_from_name(name);
      if (!f) throw std::invalid_argument("unknown trace field \"" + std::string(name) + "\"");
      fs.bits_ |= static_cast<std::uint16_t>(1U << static_cast<unsigned>(*f));
    }
    start = end + 1;
  }
  if (fs.bits_ == 0) throw std::invalid_argument("field set must not be empty");
  return fs;
}

FieldSet FieldSet::without(TraceField f) const {
  return from_bits(static_cast<std::uint16_t>(bits_ & ~(1U << static_cast<unsigned>(f))));
}

FieldSet FieldSet::from_bits(std::uint16_t bits) {
  bits &= static_cast<std::uint16_t>((1U << kNumTraceFields) - 1);
  if (bits == 0) throw std::invalid_argument("field set must not be empty");
  FieldSet fs;
  fs.bits_ = bits;
  return fs;
}

std::string FieldSet::to_string() const {
  std::string s;
  for (int k = 0; k < kNumTraceFields; ++k) {
    if (!contains(static_cast<TraceField>(k))) continue;
    if (!s.empty()) s += ',';
    s += kFieldNames[static_cast<std::size_t>(k)];
  }
  return s;
}

RawTokens serialize_trace(const ParsedTrace& trace, const FieldSet& fields) {
  RawTokens out;
  const bool off = fields.contains(TraceField::Off);
  const bool type = fields.contains(TraceField::Type);
  const bool ts = fields.contains(TraceField::Ts);
  const bool p = fields.contains(TraceField::P);
  const bool g = fields.contains(TraceField::G);
  const bool stk_id = fields.contains(TraceField::StkID);
  const bool stk = fields.contains(TraceField::Stk);
  const bool args = fields.contains(TraceField::Args);
  const bool sargs = fields.contains(TraceField::SArgs);

  for (const Event& e : trace.events) {
    if (type) out.push_back("Ev" + std::string(event_type_name(e.typ)));
    if (off) {
      push_field(out, TraceField::Off);
      push_signed(out, e.off);
    }
    if (ts) {
      push_field(out, TraceField::Ts);
      push_signed(out, e.ts);
    }
    if (p) {
      push_field(out, TraceField::P);
      push_signed(out, e.p);
    }
    if (g) {
      push_field(out, TraceField::G);
      push_digits(out, e.g);
    }
    if (stk_id) {
      push_field(out, TraceField::StkID);
      push_digits(out, e.stk_id);
    }
    if (stk) {
      for (const Frame& f : e.stk) {
        out.push_back(std::string(kFramePrefix) + f.fn);
        push_signed(out, f.line);
      }
    }
    if (args) {
      for (std::size_t k = 0; k < e.args.size(); ++k) {
        if (e.args[k] == 0) continue;
        out.emplace_back(kArgKeywords[k]);
        push_digits(out, e.args[k]);
      }
    }
    if (sargs) {
      for (const std::string& s : e.sargs) out.push_back(std::string(kStringArgPrefix) + s);
    }
  }
  out.emplace_back(kEotToken);
  return out;
}

Vocabulary::Vocabulary() {
  add(kPadToken);
  add(kUnkToken);
  add(kEotToken);
  for (std::string_view d : kDigits) add(d);
}

int Vocabulary::id(std::string_view token) const {
  const auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnkId : it->second;
}

bool Vocabulary::contains(std::string_view token) const {
  return index_.contains(std::string(token));
}

int Vocabulary::add(std::string_view token) {
  const auto [it, inserted] = index_.emplace(std::string(token), size());
  if (inserted) tokens_.emplace_back(token);
  return it->second;
}

std::string Vocabulary::to_text() const {
  std::string out;
  for (const std::string& t : tokens_) {
    for (char c : t) {
      if (c == '\\') {
        out += "\\\\";
      } else if (c == '\n') {
        out += "\\n";
      } else {
        out += c;
      }
    }
    out += '\n';
  }
  return out;
}

Vocabulary Vocabulary::from_text(std::string_view text) {
  std::vector<std::string> lines;
  std::string cur;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '\n') {
      lines.push_back(std::move(cur));
      cur.clear();
    } else if (c == '\\' && i + 1 < text.size()) {
      const char nxt = text[++i];
      cur += nxt == 'n' ? '\n' : nxt;
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) lines.push_back(std::move(cur));

  Vocabulary v;
  if (lines.size() < static_cast<std::size_t>(kNumReserved) ||
      !std::equal(v.tokens_.begin(), v.tokens_.end(), lines.begin())) {
    throw std::invalid_argument("vocabulary does not start with the reserved tokens");
  }
  for (std::size_t i = kNumReserved; i < lines.size(); ++i) {
    if (v.add(lines[i]) != static_cast<int>(i)) {
      throw std::invalid_argument("duplicate vocabulary token \"" + lines[i] + "\"");
    }
  }
  return v;
}

Vocabulary build_vocab(const std::vector<RawTokens>& corpus) {
  Vocabulary v;
  for (const RawTokens& tokens : corpus) {
    for (const std::string& t : tokens) v.add(t);
  }
  return v;
}

TokenSequence encode_tokens(const RawTokens& raw, const Vocabulary& vocab, int seq_len) {
  if (seq_len < 1) throw std::invalid_argument("sequence length must be >= 1");
  TokenSequence seq;
  seq.true_len = static_cast<int>(std::min<std::size_t>(raw.size(), static_cast<std::size_t>(seq_len)));
  seq.ids.assign(static_cast<std::size_t>(seq_len), kPadId);
  for (int i = 0; i < seq.true_len; ++i) seq.ids[static_cast<std::size_t>(i)] = vocab.id(raw[static_cast<std::size_t>(i)]);
  return seq;
}

TokenSequence tokenize(const ParsedTrace& trace, const Vocabulary& vocab, const FieldSet& fields,
                       int seq_len) {
  return encode_tokens(serialize_trace(trace, fields), vocab, seq_len);
}

}  // namespace traceoracle
