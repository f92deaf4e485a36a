// Copyright 2026 The Arena Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Small text helpers shared by the file formats: CSV fields, whole-file I/O,
// JSONL lines and ISO-8601 UTC timestamps.

#pragma once

#include <charconv>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "arena/error.hpp"
#include "json.hpp"

namespace arena {

using Json = nlohmann::json;
using Timestamp = std::chrono::sys_time<std::chrono::milliseconds>;

// Splits one CSV line. Supports double-quoted fields with "" escapes.
inline std::vector<std::string> SplitCsvLine(std::string_view line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  if (quoted) throw ValidationError("unterminated quote in CSV line");
  fields.push_back(std::move(field));
  return fields;
}

inline std::string CsvField(std::string_view value) {
  if (value.find_first_of(",\"\n") == std::string_view::npos) {
    return std::string(value);
  }
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline std::string Trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

// Parses a finite or non-finite double; throws ValidationError on garbage.
inline double ParseDouble(std::string_view text, std::string_view what) {
  const std::string trimmed = Trim(text);
  if (trimmed.empty()) {
    throw ValidationError("empty numeric value for " + std::string(what));
  }
  // strtod accepts nan/inf spellings, which callers must be able to reject.
  char* end = nullptr;
  const double value = std::strtod(trimmed.c_str(), &end);
  if (end != trimmed.c_str() + trimmed.size()) {
    throw ValidationError("invalid number '" + trimmed + "' for " +
                          std::string(what));
  }
  return value;
}

inline std::int64_t ParseInt(std::string_view text, std::string_view what) {
  const std::string trimmed = Trim(text);
  std::int64_t value = 0;
  const auto [ptr, ec] = std::from_chars(
      trimmed.data(), trimmed.data() + trimmed.size(), value);
  if (ec != std::errc() || ptr != trimmed.data() + trimmed.size()) {
    throw ValidationError("invalid integer '" + trimmed + "' for " +
                          std::string(what));
  }
  return value;
}

inline std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw IoError("failed reading '" + path.string() + "'");
  return buffer.str();
}

inline void WriteFile(const std::filesystem::path& path,
                      std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  out.flush();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

inline Json ParseJson(std::string_view text, std::string_view what) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ValidationError("malformed JSON in " + std::string(what) + ": " +
                          e.what());
  }
}

inline Json ReadJsonFile(const std::filesystem::path& path) {
  return ParseJson(ReadFile(path), path.string());
}

// Parses JSON Lines; blank lines are skipped. Line numbers in errors are
// 1-based.
inline std::vector<Json> ParseJsonLines(std::string_view text,
                                        std::string_view what) {
  std::vector<Json> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    const std::string line = Trim(text.substr(pos, end - pos));
    pos = end + 1;
    if (line.empty()) continue;
    try {
      out.push_back(Json::parse(line));
    } catch (const Json::parse_error& e) {
      throw ValidationError(std::string(what) + ":" + std::to_string(line_no) +
                            ": malformed JSON: " + e.what());
    }
  }
  return out;
}

// ISO-8601 UTC with millisecond precision, e.g. 2026-01-02T03:04:05.006Z.
inline std::string FormatTimestamp(Timestamp t) {
  const auto secs = std::chrono::floor<std::chrono::seconds>(t);
  const auto millis = (t - secs).count();
  const std::time_t tt = std::chrono::system_clock::to_time_t(secs);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ",
                tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday, tm.tm_hour,
                tm.tm_min, tm.tm_sec, static_cast<int>(millis));
  return buf;
}

// Accepts YYYY-MM-DDTHH:MM:SS[.fff]Z.
inline Timestamp ParseTimestamp(std::string_view text) {
  int year, month, day, hour, minute, second;
  int consumed = 0;
  const std::string s(text);
  if (std::sscanf(s.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%n", &year, &month, &day,
                  &hour, &minute, &second, &consumed) != 6) {
    throw ValidationError("invalid ISO-8601 timestamp '" + s + "'");
  }
  int millis = 0;
  std::size_t rest = static_cast<std::size_t>(consumed);
  if (rest < s.size() && s[rest] == '.') {
    ++rest;
    int digits = 0;
    while (rest < s.size() && s[rest] >= '0' && s[rest] <= '9') {
      if (digits < 3) millis = millis * 10 + (s[rest] - '0');
      ++digits;
      ++rest;
    }
    for (; digits < 3; ++digits) millis *= 10;
  }
  if (rest != s.size() - 1 || s.back() != 'Z') {
    throw ValidationError("timestamp must be UTC with trailing 'Z': '" + s +
                          "'");
  }
  std::tm tm{};
  tm.tm_year = year - 1900;
  tm.tm_mon = month - 1;
  tm.tm_mday = day;
  tm.tm_hour = hour;
  tm.tm_min = minute;
  tm.tm_sec = second;
  const std::time_t tt = timegm(&tm);
  return std::chrono::time_point_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::from_time_t(tt)) +
         std::chrono::milliseconds(millis);
}

inline Timestamp NowUtc() {
  return std::chrono::time_point_cast<std::chrono::milliseconds>(
      std::chrono::system_clock::now());
}

}  // namespace arena
