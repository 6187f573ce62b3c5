#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

namespace bm {

using Json = nlohmann::json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumeric = 3;

struct CsvTable {
  std::string name;  // file name, e.g. "tail_curve.csv"
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

struct ScenarioOutput {
  Json report;
  std::vector<CsvTable> curves;
  int exit_code = kExitOk;
};

struct ScenarioOverrides {
  std::optional<std::string> task;  // must agree with the config's task when both are given
  std::optional<std::uint64_t> seed;
  // Beats the config's "workers" key. Worker count never enters the report.
  std::optional<std::size_t> workers;
};

// Validates the config, runs the named task and assembles the report. Never throws:
// schema violations give exit 2 and numeric failures exit 3 with a partial report.
ScenarioOutput run_scenario(const Json& config, const ScenarioOverrides& overrides = {});

// Sorted keys, shortest round-trip floats, trailing newline.
std::string canonical_json(const Json& j);
std::string csv_text(const CsvTable& t);
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);
// Shortest round-trip decimal for a double ("inf", "-inf", "nan" for non-finite values).
std::string format_double(double v);

// Writes report.json plus one CSV per curve into dir (created if needed).
void emit_report(const ScenarioOutput& out, const std::filesystem::path& dir);

std::string version_string();

}  // namespace bm
