#pragma once

#include "drivestyle/datasets/types.hpp"

#include <string>

namespace drivestyle::datasets {

/// One trajectory per JSON line; stats (and dataset meta) in a sidecar.
/// Byte-stable: identical datasets serialize to identical bytes.
void save_dataset(const Dataset& ds, const std::string& jsonl_path,
                  const std::string& stats_path);

Dataset load_dataset(const std::string& jsonl_path, const std::string& stats_path);

}  // namespace drivestyle::datasets
