// Copyright (c) 2026 teleimp contributors
// Use of this source code is governed by the Apache-2.0 license, see LICENSE
#include "teleimp/json_io.hpp"

#include <cmath>
#include <cstdio>

#include "teleimp/error.hpp"

namespace teleimp {

std::string format_number(double v) {
  if (!std::isfinite(v)) throw Error(Errc::domain, "cannot serialize non-finite number");
  if (v == 0.0) return std::signbit(v) ? "-0.0" : "0.0";
  char buf[32];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s(buf, static_cast<std::size_t>(n));
  // keep numbers typed as floating point on re-parse
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

void JsonWriter::separate() {
  if (after_key_) {
    after_key_ = false;
    return;
  }
  if (!first_.empty()) {
    if (!first_.back()) out_ += ',';
    first_.back() = false;
  }
}

JsonWriter& JsonWriter::begin_object() {
  separate();
  out_ += '{';
  first_.push_back(true);
  return *this;
}

JsonWriter& JsonWriter::end_object() {
  out_ += '}';
  first_.pop_back();
  return *this;
}

JsonWriter& JsonWriter::begin_array() {
  separate();
  out_ += '[';
  first_.push_back(true);
  return *this;
}

JsonWriter& JsonWriter::end_array() {
  out_ += ']';
  first_.pop_back();
  return *this;
}

JsonWriter& JsonWriter::key(std::string_view k) {
  separate();
  write_string(k);
  out_ += ':';
  after_key_ = true;
  return *this;
}

JsonWriter& JsonWriter::value(double v) {
  separate();
  out_ += format_number(v);
  return *this;
}

JsonWriter& JsonWriter::value(std::int64_t v) {
  separate();
  out_ += std::to_string(v);
  return *this;
}

JsonWriter& JsonWriter::value(std::uint64_t v) {
  separate();
  out_ += std::to_string(v);
  return *this;
}

JsonWriter& JsonWriter::value(bool v) {
  separate();
  out_ += v ? "true" : "false";
  return *this;
}

JsonWriter& JsonWriter::value(std::string_view v) {
  separate();
  write_string(v);
  return *this;
}

void JsonWriter::write_string(std::string_view v) {
  out_ += '"';
  for (const char c : v) {
    switch (c) {
      case '"': out_ += "\\\""; break;
      case '\\': out_ += "\\\\"; break;
      case '\n': out_ += "\\n"; break;
      case '\r': out_ += "\\r"; break;
      case '\t': out_ += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", static_cast<unsigned>(c));
          out_ += buf;
        } else {
          out_ += c;
        }
    }
  }
  out_ += '"';
}

JsonWriter& JsonWriter::null() {
  separate();
  out_ += "null";
  return *this;
}

JsonWriter& JsonWriter::raw(std::string_view json) {
  separate();
  out_ += json;
  return *this;
}

JsonWriter& JsonWriter::vec(const Eigen::Vector3d& v) {
  begin_array();
  value(v.x()).value(v.y()).value(v.z());
  return end_array();
}

JsonWriter& JsonWriter::pose(const Pose& p) {
  const Eigen::Quaterniond& q = p.orientation();
  begin_object();
  key("p").vec(p.position());
  key("q").begin_array().value(q.w()).value(q.x()).value(q.y()).value(q.z()).end_array();
  return end_object();
}

const Json& require_field(const Json& obj, std::string_view name) {
  if (!obj.is_object()) throw Error(Errc::parse, "expected object holding '" + std::string(name) + "'");
  const auto it = obj.find(name);
  if (it == obj.end()) throw Error(Errc::parse, "missing field '" + std::string(name) + "'");
  return *it;
}

double require_number(const Json& obj, std::string_view name) {
  const Json& v = require_field(obj, name);
  if (!v.is_number()) throw Error(Errc::parse, "field '" + std::string(name) + "' is not a number");
  return v.get<double>();
}

Eigen::Vector3d parse_vec3(const Json& arr, std::string_view name) {
  if (!arr.is_array() || arr.size() != 3) {
    throw Error(Errc::parse, "field '" + std::string(name) + "' must be an array of 3 numbers");
  }
  Eigen::Vector3d v;
  for (int i = 0; i < 3; ++i) {
    if (!arr[i].is_number()) throw Error(Errc::parse, "field '" + std::string(name) + "' holds a non-number");
    v[i] = arr[i].get<double>();
  }
  return v;
}

Pose parse_pose(const Json& obj, std::string_view name) {
  if (!obj.is_object()) throw Error(Errc::parse, "field '" + std::string(name) + "' must be a pose object");
  const Eigen::Vector3d p = parse_vec3(require_field(obj, "p"), std::string(name) + ".p");
  const Json& q = require_field(obj, "q");
  if (!q.is_array() || q.size() != 4) {
    throw Error(Errc::parse, "field '" + std::string(name) + ".q' must be an array of 4 numbers");
  }
  double c[4];
  for (int i = 0; i < 4; ++i) {
    if (!q[i].is_number()) throw Error(Errc::parse, "field '" + std::string(name) + ".q' holds a non-number");
    c[i] = q[i].get<double>();
  }
  try {
    return Pose(p, Eigen::Quaterniond(c[0], c[1], c[2], c[3]));
  } catch (const Error&) {
    throw Error(Errc::parse, "field '" + std::string(name) + ".q' is not a valid quaternion");
  }
}

Json parse_json_text(std::string_view text, std::string_view what) {
  try {
    return Json::parse(text.begin(), text.end());
  } catch (const Json::exception& e) {  // parse_error, or out_of_range on number overflow
    throw Error(Errc::parse, std::string(what) + ": " + e.what());
  }
}

namespace {

void dump_into(JsonWriter& w, const Json& v) {
  switch (v.type()) {
    case Json::value_t::object: {
      w.begin_object();
      // nlohmann::json keeps object keys sorted
      for (auto it = v.begin(); it != v.end(); ++it) {
        w.key(it.key());
        dump_into(w, it.value());
      }
      w.end_object();
      break;
    }
    case Json::value_t::array:
      w.begin_array();
      for (const auto& e : v) dump_into(w, e);
      w.end_array();
      break;
    case Json::value_t::string: w.value(v.get_ref<const std::string&>()); break;
    case Json::value_t::boolean: w.value(v.get<bool>()); break;
    case Json::value_t::number_integer: w.value(v.get<std::int64_t>()); break;
    case Json::value_t::number_unsigned: w.value(v.get<std::uint64_t>()); break;
    case Json::value_t::number_float: w.value(v.get<double>()); break;
    default: w.null(); break;
  }
}

}  // namespace

std::string canonical_dump(const Json& doc) {
  JsonWriter w;
  dump_into(w, doc);
  return w.take();
}

}  // namespace teleimp
