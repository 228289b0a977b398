#pragma once
// Checkpoint container: named float64 arrays plus training metadata in one
// file. Layout (all integers little-endian):
//   bytes 0..7   magic "UWCKPT01" (format revision lives in the magic)
//   bytes 8..15  uint64 J = length of the JSON header
//   J bytes      UTF-8 JSON: {"meta": {...}, "arrays": [{name, shape, offset,
//                count}...]} with offsets relative to the payload start
//   payload      raw little-endian float64 data, concatenated
//   last 4 bytes uint32 CRC32 over everything before it
// Round-trip is bit-exact on array payloads.

#include <cstdint>
#include <map>
#include <string>

#include "uwir/core/tensor.hpp"

namespace uwir {

struct CheckpointMeta {
  std::string config_kv;   // RunConfig snapshot in key=value form
  std::string stage;       // "stage1", "stage2", or free-form tag
  std::int64_t iteration = 0;
  std::string rng_state;   // serialized engine state
};

struct Checkpoint {
  std::map<std::string, Tensor> params;   // ordered for deterministic layout
  CheckpointMeta meta;
};

void save_checkpoint(const Checkpoint& ck, const std::string& path);

// Throws ChecksumError on corruption, VersionError on a foreign magic,
// IoError when the file cannot be read.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace uwir
