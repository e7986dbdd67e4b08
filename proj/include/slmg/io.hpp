#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>

#include "json.hpp"

namespace slmg::io {

using Json = nlohmann::json;

/// "%.17g": enough digits to round-trip any double exactly.
std::string format_real(double value);

/// "[a,b,c]" with every entry at format_real precision.
std::string format_real_array(std::span<const double> values);

/// JSON string literal (quoted and escaped).
std::string quote(std::string_view text);

/// Calls `visit(object, line_number)` for every non-blank line. Line numbers
/// are 1-based. Parse failures and non-object lines throw MalformedInput
/// naming the file and line; exceptions thrown by `visit` that are not
/// already slmg::Error are rewrapped the same way.
void read_jsonl(const std::filesystem::path& path,
                const std::function<void(const Json&, std::size_t)>& visit);

Json read_json_file(const std::filesystem::path& path);

/// Writes `contents` to `path`, creating parent directories.
void write_text_file(const std::filesystem::path& path, std::string_view contents);

/// Current UTC time as YYYY-MM-DDTHH:MM:SSZ.
std::string utc_timestamp();

/// Field accessors that raise MalformedInput with context instead of the
/// library's own type_error.
const Json& require_field(const Json& object, std::string_view key);
std::string require_string(const Json& object, std::string_view key);
long long require_integer(const Json& object, std::string_view key);

}  // namespace slmg::io
