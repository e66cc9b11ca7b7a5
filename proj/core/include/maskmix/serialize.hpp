#pragma once

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "maskmix/metrics.hpp"
#include "maskmix/surrogate_world.hpp"
#include "maskmix/trainer.hpp"

namespace maskmix {

// JSON file formats for every persisted artifact, plus the CSV dumps. All
// artifacts carry format_version and a kind tag; readers reject unknown
// major versions and artifacts of the wrong kind. Digest-bearing artifacts
// are re-digested on load, so a tampered or hand-edited file is refused.
//
// Rendering rules: 64-bit hashes and digests are 16-char lowercase hex
// strings (JSON numbers lose them past 2^53), seeds and counters are exact
// unsigned numbers, matrices are arrays of row arrays, vectors are flat
// arrays. Doubles round-trip bitwise through the shortest-representation
// printer, which the bitwise resume and report-identity checks depend on.

using Json = nlohmann::ordered_json;

inline constexpr const char* kFormatVersion = "1.0";

const char* probe_name(MaskProbe probe);
MaskProbe probe_from_name(const std::string& name);

Json tensor_to_json(const Tensor& t);
Tensor tensor_from_json(const Json& j, const char* what);

Json config_to_json(const TrainConfig& config);
TrainConfig config_from_json(const Json& j);

Json world_to_json(const SurrogateWorld& world);
SurrogateWorld world_from_json(const Json& j);

Json code_to_json(const StyleCode& code);
StyleCode code_from_json(const Json& j, const StyleLayout& layout);

Json checkpoint_to_json(const Checkpoint& checkpoint);
Checkpoint checkpoint_from_json(const Json& j);

Json report_to_json(const MetricsReport& report);
std::string report_to_csv(const MetricsReport& report);
std::string report_to_table(const MetricsReport& report);

std::string log_csv_header();
std::string log_csv_row(const TrainLogRow& row);

// Per-active-channel dump: channel, owning layer s_index, pair-mean mask,
// ground-truth block label. One row per active position.
std::string inspect_mask_csv(const SurrogateWorld& world, const MaskRecovery& recovery);

struct RunManifest {
    TrainConfig config;
    std::uint64_t world_digest = 0;
    std::string checkpoint_path;
    std::string log_path;
    std::string tool_version;
    std::string started_at;   // ISO 8601 UTC
    std::string finished_at;  // ISO 8601 UTC
};

Json manifest_to_json(const RunManifest& manifest);

// Shortest decimal form that parses back to the identical double.
std::string format_double(double x);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

Json load_json_file(const std::string& path);
void save_json_file(const std::string& path, const Json& j);

SurrogateWorld load_world(const std::string& path);
Checkpoint load_checkpoint(const std::string& path);
StyleCode load_code(const std::string& path, const StyleLayout& layout);

}  // namespace maskmix
