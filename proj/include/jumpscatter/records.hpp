#pragma once

#include "jumpscatter/cojump.hpp"
#include "jumpscatter/event.hpp"
#include "jumpscatter/score.hpp"
#include "jumpscatter/wavelet.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace jumpscatter {

using Json = nlohmann::ordered_json;

/// "YYYY-MM-DD HH:MM", the inverse of format_minute.
Minute parse_minute(std::string_view text);

Json to_json(const JumpEvent& ev);
JumpEvent event_from_json(const Json& j);

Json to_json(const CoJump& cj);
CoJump cojump_from_json(const Json& j);

Json to_json(const DirectionModel& m);
DirectionModel model_from_json(const Json& j);

Json to_json(const TailFit& f);
Json bank_metadata(const FilterBankConfig& cfg);

/// Line-delimited JSON: a header object ({"kind": ..., "config_hash": ..., plus
/// `extra`}) followed by one record per line.
void write_jsonl(const std::filesystem::path& path, const std::string& kind, const std::string& config_hash,
                 const std::vector<Json>& records, const Json& extra = Json::object());

struct JsonlFile {
    Json header;
    std::vector<Json> records;
};
JsonlFile read_jsonl(const std::filesystem::path& path, const std::string& expected_kind);

std::vector<JumpEvent> read_events(const std::filesystem::path& path, Json* header = nullptr);
void write_events(const std::filesystem::path& path, const std::vector<JumpEvent>& events, const std::string& config_hash,
                  const Json& extra = Json::object());

/// Shortest round-trip decimal representation.
std::string format_double(double v);

}  // namespace jumpscatter
