// Copyright (c) 2026 teleimp contributors
// Use of this source code is governed by the Apache-2.0 license, see LICENSE
#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "teleimp/se3.hpp"

namespace teleimp {

/// Streaming writer for canonical JSON: keys in insertion order, no
/// whitespace, numbers as %.17g. Output is byte-stable for identical input,
/// which the episode logs and wire frames rely on.
class JsonWriter {
 public:
  JsonWriter& begin_object();
  JsonWriter& end_object();
  JsonWriter& begin_array();
  JsonWriter& end_array();
  JsonWriter& key(std::string_view k);

  JsonWriter& value(double v);
  JsonWriter& value(std::int64_t v);
  JsonWriter& value(std::uint64_t v);
  JsonWriter& value(int v) { return value(static_cast<std::int64_t>(v)); }
  JsonWriter& value(bool v);
  JsonWriter& value(std::string_view v);
  JsonWriter& value(const char* v) { return value(std::string_view(v)); }
  JsonWriter& null();
  /// Splices an already-serialized JSON value.
  JsonWriter& raw(std::string_view json);

  JsonWriter& vec(const Eigen::Vector3d& v);
  JsonWriter& pose(const Pose& p);

  const std::string& str() const noexcept { return out_; }
  std::string take() { return std::move(out_); }

 private:
  void separate();
  void write_string(std::string_view v);

  std::string out_;
  std::vector<bool> first_;
  bool after_key_ = false;
};

/// Formats one double exactly as JsonWriter does.
std::string format_number(double v);

using Json = nlohmann::json;

/// Field accessors that throw Errc::parse naming the offending field.
const Json& require_field(const Json& obj, std::string_view name);
double require_number(const Json& obj, std::string_view name);
Eigen::Vector3d parse_vec3(const Json& arr, std::string_view name);
Pose parse_pose(const Json& obj, std::string_view name = "pose");
Json parse_json_text(std::string_view text, std::string_view what);

/// Canonical re-serialization of an arbitrary parsed document (sorted keys).
std::string canonical_dump(const Json& doc);

}  // namespace teleimp
