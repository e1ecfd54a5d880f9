#pragma once

#include <array>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>

#include <json.hpp>

#include "simagents/errors.hpp"

namespace simagents {

using json = nlohmann::json;

namespace detail {

inline const json& require(const json& obj, const char* key, const std::string& ctx) {
  if (!obj.is_object()) throw ParseError(ctx + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(ctx + ": missing key '" + key + "'");
  return *it;
}

inline std::string require_string(const json& obj, const char* key, const std::string& ctx) {
  const json& v = require(obj, key, ctx);
  if (!v.is_string()) throw ParseError(ctx + ": '" + key + "' must be a string");
  return v.get<std::string>();
}

inline double require_number(const json& v, const std::string& ctx) {
  if (!v.is_number()) throw ParseError(ctx + ": expected a number");
  return v.get<double>();
}

template <std::size_t N>
std::array<double, N> number_row(const json& v, const std::string& ctx) {
  if (!v.is_array() || v.size() != N)
    throw ParseError(ctx + ": expected an array of " + std::to_string(N) + " numbers");
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i) out[i] = require_number(v[i], ctx);
  return out;
}

}  // namespace detail

inline json parse_json_text(const std::string& text, const std::string& ctx) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(ctx + ": " + e.what());
  }
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes via a sibling temp file and rename, so readers never see a partial file.
inline void write_text_file_atomic(const std::filesystem::path& path, const std::string& text) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp.string() + "'");
    out << text;
    out.flush();
    if (!out) throw IoError("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw IoError("cannot rename to '" + path.string() + "': " + ec.message());
  }
}

}  // namespace simagents
