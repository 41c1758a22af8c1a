#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

namespace scenegeo {

nlohmann::json read_json(const std::filesystem::path& path);

/// Pretty-printed with a trailing newline so repeated runs are byte-identical.
void write_json(const nlohmann::json& j, const std::filesystem::path& path);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::string& text, const std::filesystem::path& path);

/// Hex SHA-256 of a byte string.
std::string sha256_hex(const std::string& bytes);

}  // namespace scenegeo
