#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace guitrace {

using Json = nlohmann::json;

/// The canonical text form shared by every artifact: sorted keys, two-space
/// indentation, trailing newline.
std::string to_canonical(const Json& doc);

/// Parses structured text, converting library errors to ParseError.
Json parse_json(std::string_view text);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hash_to_hex(std::uint64_t hash);
std::uint64_t hash_from_hex(std::string_view text);

}  // namespace guitrace
