#pragma once

#include "drivestyle/numkit/graph.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace drivestyle::numkit {

/// Header of the versioned checkpoint container. `meta` carries
/// module-specific settings (K, L_c, L_p, sampler kind, ...) as strings;
/// std::map keeps key order deterministic for byte-stable files.
struct CheckpointHeader {
  std::uint32_t version = 1;
  std::string fingerprint;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> meta;
};

struct Checkpoint {
  CheckpointHeader header;
  std::vector<std::pair<std::string, Tensor>> params;  // in store order
};

/// Binary container: magic, version, JSON header, then raw little-endian
/// IEEE-754 doubles per param. Round-trips bit-exactly.
void save_checkpoint(const std::string& path, const CheckpointHeader& header,
                     const ParamStore& store);

Checkpoint read_checkpoint(const std::string& path);
CheckpointHeader read_checkpoint_header(const std::string& path);

/// Copies checkpoint values into an existing store by param id.
/// Throws on missing params or shape mismatch.
void load_into(const Checkpoint& ckpt, ParamStore& store);

}  // namespace drivestyle::numkit
