#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace stylefx {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

std::string read_text_file(const std::filesystem::path& path);

/// Writes via a temporary sibling and rename, so readers never see a torn file.
void write_text_file(const std::filesystem::path& path, std::string_view contents);

/// Fails with IoError if `path` already exists.
void create_text_file_exclusive(const std::filesystem::path& path, std::string_view contents);

/// One JSON value per non-blank line; ParseError names the 1-based line.
std::vector<Json> read_jsonl(const std::filesystem::path& path);

/// Serializes with invalid UTF-8 replaced, never throwing on model output.
std::string dump_json(const OrderedJson& value, int indent = -1);
std::string dump_json(const Json& value, int indent = -1);

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
std::vector<std::string> split_whitespace(std::string_view s);
std::string hex64(std::uint64_t value);

/// Header-keyed rows of a plain comma-separated file (no quoting).
/// Rows with a different column count raise ParseError.
using CsvRow = std::map<std::string, std::string>;
std::vector<CsvRow> read_csv(const std::filesystem::path& path);

}  // namespace stylefx
