// ULEB128 helpers shared by the trace codec.
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace traceoracle::varint {

inline constexpr std::size_t kMaxBytes = 10;

void put(std::vector<std::uint8_t>& out, std::uint64_t value);
void put_string(std::vector<std::uint8_t>& out, std::string_view s);

/// Sequential reader over a byte span. Throws ParseError with the failing offset.
class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes, std::size_t pos = 0)
      : bytes_(bytes), pos_(pos) {}

  std::uint64_t u64();
  std::string string();
  std::uint8_t byte();

  bool at_end() const noexcept { return pos_ >= bytes_.size(); }
  std::size_t pos() const noexcept { return pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_;
};

}  // namespace traceoracle::varint
