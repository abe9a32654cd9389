// Checkpoint format: a directory holding manifest.json (format version,
// layer specs per network, parameter shapes, plus free-form metadata such
// as action scaling ranges) and one little-endian float32 binary blob per
// parameter tensor, row-major.
#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "blochgame/nn.hpp"

namespace blochgame::nn {

inline constexpr int kCheckpointFormatVersion = 1;

struct Checkpoint {
  std::map<std::string, Sequential<float>> networks;
  std::string meta_json;  // serialized metadata block from the manifest
};

// Writes atomically: the directory is assembled under a temporary name and
// renamed into place.
void save_checkpoint(const std::string& dir,
                     std::vector<std::pair<std::string, Sequential<float>*>> nets,
                     const std::string& meta_json = "{}");

// Rebuilds every network from its layer specs and restores parameters.
// Throws std::runtime_error on a missing/garbled manifest or a format
// version mismatch.
Checkpoint load_checkpoint(const std::string& dir);

}  // namespace blochgame::nn
