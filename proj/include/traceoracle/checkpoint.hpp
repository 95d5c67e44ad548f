// Self-contained model checkpoints.
//
// Layout (all integers little-endian):
//   "GORACLE1"                         8-byte magic
//   u32 format version                  kCheckpointVersion
//   u8  training precision              0 = f32, 1 = f64
//   ModelConfig                         7 x i32, f64 dropout, i32 num_classes
//   u16 field-set bits                  fields used when tokenizing
//   u32 token count, then per token u32 length + bytes
//   u32 tensor count, then per tensor u32 rows, u32 cols, rows*cols f64 in row-major order
//   u64 FNV-1a checksum of every preceding byte
//
// Tensors are always stored as IEEE-754 binary64; a float model widens exactly and
// narrows back to the identical values on load.
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "traceoracle/model.hpp"
#include "traceoracle/tokenizer.hpp"

namespace traceoracle {

inline constexpr std::string_view kCheckpointMagic = "GORACLE1";
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelParams<double> params;
  Vocabulary vocab;
  FieldSet fields;
  Precision precision = Precision::Float64;

  template <typename Scalar>
  ModelParams<Scalar> params_as() const {
    return params.cast<Scalar>();
  }
};

template <typename Scalar>
std::vector<std::uint8_t> save_checkpoint(const ModelParams<Scalar>& params, const Vocabulary& vocab,
                                          const FieldSet& fields = FieldSet::all());

/// Throws Error(VersionMismatch) or Error(CorruptCheckpoint).
Checkpoint load_checkpoint(std::span<const std::uint8_t> bytes);

}  // namespace traceoracle
