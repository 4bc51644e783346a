#pragma once

#include "drivestyle/datasets/types.hpp"

#include <string>
#include <vector>

namespace drivestyle::datasets {

/// Expected header (any column order): vehicle_id, frame_id, position,
/// velocity, acceleration, lane_id, space_headway, preceding_id,
/// vehicle_length.
extern const std::vector<std::string> kCsvColumns;

/// Reads the car-following CSV into per-vehicle, frame-sorted trajectories.
/// Errors name the offending line or column.
std::vector<RawTrajectory> ingest_csv(const std::string& path);

/// Writes records back in schema order (round-trip checks, fixtures).
void write_raw_csv(const std::string& path, const std::vector<RawTrajectory>& trajectories);

}  // namespace drivestyle::datasets
