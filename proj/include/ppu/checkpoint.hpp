// Checkpoint file layout:
//
//   bytes 0..7   magic "PPUCKPT\0"
//   bytes 8..11  header length L (uint32, little-endian)
//   next L bytes UTF-8 JSON header:
//                  { "format_version": 1,
//                    "kind": "uom" | "qe",
//                    "vocab_fingerprint": "<16 hex digits>",
//                    "hyperparameters": { ... },
//                    "tensors": [ {"name", "shape", "offset", "count"}, ... ] }
//   remainder    little-endian float32 blobs in directory order; "offset" is
//                the byte offset of each blob from the start of the remainder.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "ppu/params.hpp"

namespace ppu {

inline constexpr int kCheckpointFormatVersion = 1;

struct Checkpoint {
  int format_version = kCheckpointFormatVersion;
  std::string kind;
  std::uint64_t vocab_fingerprint = 0;
  nlohmann::json hyperparameters = nlohmann::json::object();
  ParamStore params;
};

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
// Throws CheckpointError on I/O failure, bad magic, unsupported version, or
// a directory that does not match the blob section.
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::string fingerprint_hex(std::uint64_t v);
std::uint64_t parse_fingerprint_hex(const std::string& s);

}  // namespace ppu
