#pragma once

#include <string>
#include <vector>

#include "fpbp/engine.hpp"
#include "fpbp/sim.hpp"

namespace fpbp {

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

// Palette file (JSON: class -> hex color).
Palette palette_from_json(const std::string& text);
std::string palette_to_json(const Palette& palette);

// Map manifest: resolution, grid interval, floor id, north offset.
struct MapManifest {
  double resolution_r = 1.0 / 0.07;
  double grid_interval_m = 0.3;
  int floor_id = 0;
  double north_offset_rad = 0.0;
};
MapManifest manifest_from_json(const std::string& text);
std::string manifest_to_json(const MapManifest& manifest);

// Merged event log (JSONL); one record per line, ordered by timestamp with
// RSSI before IMU/step records at equal times.
std::string event_log_to_jsonl(const std::vector<ReplayEvent>& events);
std::vector<ReplayEvent> event_log_from_jsonl(const std::string& text);

std::string outputs_to_jsonl(const std::vector<PoseOutput>& outputs);
std::vector<PoseOutput> outputs_from_jsonl(const std::string& text);

std::string truth_to_jsonl(const std::vector<TruthStep>& steps);
std::vector<TruthStep> truth_from_jsonl(const std::string& text);

std::string cdf_to_csv(const std::vector<std::pair<double, double>>& rows);

// Full parameter surface (Table-style defaults ship in
// configs/default_params.json); unknown keys are rejected to catch typos.
EngineConfig engine_config_from_json(const std::string& text);
std::string engine_config_to_json(const EngineConfig& config);

}  // namespace fpbp
