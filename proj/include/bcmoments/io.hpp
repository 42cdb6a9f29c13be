#pragma once

// Output plumbing shared by the command-line tool: formats, the config echo
// header, and recovery of a config from a previous output file.

#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "json.hpp"

#include "bcmoments/error.hpp"

namespace bcmoments {

using json = nlohmann::json;

enum class OutputFormat { csv, json, jsonl };

inline OutputFormat parse_format(const std::string& s) {
  if (s == "csv") return OutputFormat::csv;
  if (s == "json") return OutputFormat::json;
  if (s == "jsonl") return OutputFormat::jsonl;
  fail(ErrorKind::input, "unknown format '" + s + "' (expected csv, json or jsonl)");
}

inline constexpr const char* kHeaderTag = "# bcmoments ";

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Comment header for CSV outputs: the resolved config on one line, then the
/// timestamp on its own line unless suppressed.
inline std::string csv_preamble(const json& config, bool deterministic) {
  std::string out = kHeaderTag + config.dump() + "\n";
  if (!deterministic) out += "# generated_at " + utc_timestamp() + "\n";
  return out;
}

/// Metadata object for JSON / JSONL outputs.
inline json meta_record(const json& config, bool deterministic) {
  json meta{{"config", config}};
  if (!deterministic) meta["generated_at"] = utc_timestamp();
  return meta;
}

/// Writes to a file, or to stdout for "" and "-".
inline void write_output(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::io, "cannot open output file '" + path + "'");
  out << content;
  require(static_cast<bool>(out), ErrorKind::io, "failed writing output file '" + path + "'");
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::io, "cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Accepts a plain config object, a JSON output ({"meta": {"config": ...}}),
/// a JSONL output (first record) or a CSV output (header comment line).
inline json extract_config(const std::string& text) {
  const auto unwrap = [](const json& j) -> json {
    if (j.contains("meta") && j["meta"].contains("config")) return j["meta"]["config"];
    if (j.contains("config")) return j["config"];
    return j;
  };
  const std::string tag = kHeaderTag;
  if (text.rfind(tag, 0) == 0) {
    const auto eol = text.find('\n');
    return json::parse(text.substr(tag.size(), eol == std::string::npos ? std::string::npos : eol - tag.size()));
  }
  try {
    return unwrap(json::parse(text));
  } catch (const json::parse_error&) {
    const auto eol = text.find('\n');
    try {
      return unwrap(json::parse(text.substr(0, eol)));
    } catch (const json::parse_error& e) {
      fail(ErrorKind::input, std::string("config is neither JSON nor a bcmoments output: ") + e.what());
    }
  }
}

inline std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace bcmoments
