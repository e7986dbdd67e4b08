#include "slmg/io.hpp"

#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include "slmg/error.hpp"

namespace slmg::io {

std::string format_real(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return buffer;
}

std::string format_real_array(std::span<const double> values) {
  std::string out = "[";
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += format_real(values[i]);
  }
  out += ']';
  return out;
}

std::string quote(std::string_view text) { return Json(std::string(text)).dump(); }

void read_jsonl(const std::filesystem::path& path,
                const std::function<void(const Json&, std::size_t)>& visit) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    Json object;
    try {
      object = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw Error(ErrorKind::MalformedInput, where + ": invalid JSON (" + e.what() + ")");
    }
    if (!object.is_object())
      throw Error(ErrorKind::MalformedInput, where + ": expected a JSON object");
    try {
      visit(object, line_no);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::MalformedInput) throw Error(e.kind(), where + ": " + e.detail());
      throw;
    } catch (const Json::exception& e) {
      throw Error(ErrorKind::MalformedInput, where + ": " + e.what());
    }
  }
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorKind::MalformedInput, path.string() + ": invalid JSON (" + e.what() + ")");
  }
}

void write_text_file(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

std::string utc_timestamp() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buffer[32];
  std::strftime(buffer, sizeof buffer, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buffer;
}

const Json& require_field(const Json& object, std::string_view key) {
  auto it = object.find(key);
  if (it == object.end())
    throw Error(ErrorKind::MalformedInput, "missing field \"" + std::string(key) + "\"");
  return *it;
}

std::string require_string(const Json& object, std::string_view key) {
  const Json& v = require_field(object, key);
  if (!v.is_string())
    throw Error(ErrorKind::MalformedInput, "field \"" + std::string(key) + "\" must be a string");
  return v.get<std::string>();
}

long long require_integer(const Json& object, std::string_view key) {
  const Json& v = require_field(object, key);
  if (!v.is_number_integer())
    throw Error(ErrorKind::MalformedInput, "field \"" + std::string(key) + "\" must be an integer");
  return v.get<long long>();
}

}  // namespace slmg::io
