// Independent scan for the three injected bug patterns. Works on raw opcode values so
// it shares nothing with the generator beyond the trace data structure.
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "traceoracle/trace_model.hpp"

namespace oracle {

struct SignatureScan {
  bool unmatched_block = false;
  bool double_create = false;
  bool race_window = false;

  bool any() const { return unmatched_block || double_create || race_window; }
  int count() const { return int(unmatched_block) + int(double_create) + int(race_window); }
};

inline SignatureScan scan_signatures(const traceoracle::ParsedTrace& t) {
  constexpr unsigned kGoCreate = 0x0B;
  constexpr unsigned kBlockFirst = 0x12;
  constexpr unsigned kBlockLast = 0x18;
  constexpr unsigned kGoUnblock = 0x19;
  constexpr unsigned kUser = 0x1D;

  SignatureScan s;
  const auto& ev = t.events;
  const auto code = [&](std::size_t i) { return static_cast<unsigned>(ev[i].typ); };

  for (std::size_t i = 0; i < ev.size(); ++i) {
    if (code(i) < kBlockFirst || code(i) > kBlockLast) continue;
    bool woken = false;
    for (std::size_t j = i + 1; j < ev.size() && !woken; ++j) {
      woken = code(j) == kGoUnblock && ev[j].args[0] == ev[i].g;
    }
    if (!woken) s.unmatched_block = true;
  }

  std::map<std::uint64_t, int> creates;
  for (std::size_t i = 0; i < ev.size(); ++i) {
    if (code(i) == kGoCreate && ++creates[ev[i].args[0]] > 1) s.double_create = true;
  }

  for (std::size_t i = 0; i < ev.size(); ++i) {
    if (code(i) != kUser) continue;
    for (std::size_t j = i + 1; j < ev.size(); ++j) {
      if (code(j) == kUser && ev[j].p == ev[i].p && ev[j].g != ev[i].g && ev[j].sargs == ev[i].sargs) {
        s.race_window = true;
      }
    }
  }
  return s;
}

}  // namespace oracle
