#pragma once

#include <json.hpp>

#include <string>
#include <vector>

namespace lander {

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& contents);

nlohmann::json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const nlohmann::json& j);

// Shortest round-trip decimal form of a double ("%.17g" trimmed); CSV cells
// written with this re-parse to the exact same bits.
std::string format_double(double v);

void ensure_dir(const std::string& path);
bool file_exists(const std::string& path);

}  // namespace lander
