#include "traceoracle/varint.hpp"

#include "traceoracle/error.hpp"

namespace traceoracle {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::UnknownOpcode: return "UnknownOpcode";
    case ErrorCode::TruncatedRecord: return "TruncatedRecord";
    case ErrorCode::VarintOverflow: return "VarintOverflow";
    case ErrorCode::UnencodableTrace: return "UnencodableTrace";
    case ErrorCode::MalformedDocument: return "MalformedDocument";
    case ErrorCode::UnknownEventTypeCode: return "UnknownEventTypeCode";
    case ErrorCode::TypeMismatch: return "TypeMismatch";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::CorruptCheckpoint: return "CorruptCheckpoint";
    case ErrorCode::EmptyManifest: return "EmptyManifest";
    case ErrorCode::UnknownProject: return "UnknownProject";
    case ErrorCode::InvalidManifest: return "InvalidManifest";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

namespace varint {

void put(std::vector<std::uint8_t>& out, std::uint64_t value) {
  while (value >= 0x80) {
    out.push_back(static_cast<std::uint8_t>(value | 0x80));
    value >>= 7;
  }
  out.push_back(static_cast<std::uint8_t>(value));
}

void put_string(std::vector<std::uint8_t>& out, std::string_view s) {
  put(out, s.size());
  out.insert(out.end(), s.begin(), s.end());
}

std::uint8_t Reader::byte() {
  if (pos_ >= bytes_.size()) {
    throw ParseError(ErrorCode::TruncatedRecord, pos_, "stream ends mid-record");
  }
  return bytes_[pos_++];
}

std::uint64_t Reader::u64() {
  const std::size_t start = pos_;
  std::uint64_t value = 0;
  for (std::size_t i = 0; i < kMaxBytes; ++i) {
    const std::uint8_t b = byte();
    // The tenth byte may only contribute the top bit of a 64-bit value.
    if (i == kMaxBytes - 1 && b > 1) {
      throw ParseError(ErrorCode::VarintOverflow, start, "varint exceeds 64 bits");
    }
    value |= static_cast<std::uint64_t>(b & 0x7F) << (7 * i);
    if ((b & 0x80) == 0) {
      return value;
    }
  }
  throw ParseError(ErrorCode::VarintOverflow, start, "varint longer than 10 bytes");
}

std::string Reader::string() {
  const std::size_t start = pos_;
  const std::uint64_t len = u64();
  if (len > bytes_.size() - pos_) {
    throw ParseError(ErrorCode::TruncatedRecord, start, "string of length " +
                                                            std::to_string(len) +
                                                            " runs past end of stream");
  }
  std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), len);
  pos_ += len;
  return s;
}

}  // namespace varint
}  // namespace traceoracle
