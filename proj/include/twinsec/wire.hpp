#pragma once

// TCPROS-style wire codec: typed message trees, bit-exact encode/decode with
// a 4-byte little-endian length prefix, connection headers, and the schema
// registry for the message types this simulator attacks.

#include <bit>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "twinsec/bytes.hpp"

namespace twinsec::wire {

enum class Kind { Float64, Int32, UInt32, Str, Duration, Time, Array, Record };

enum class WireErrc {
  SchemaMismatch,
  Truncated,
  TrailingBytes,
  BadLength,
  MalformedEntry,
};

class WireError : public std::runtime_error {
 public:
  WireError(WireErrc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  WireErrc code() const { return code_; }

 private:
  WireErrc code_;
};

// ---------------------------------------------------------------------------
// Field types and schemas

// Describes the shape of one field. Value-semantic; Array/Record interiors
// are shared immutable state so schemas copy cheaply.
class FieldType {
 public:
  using Fields = std::vector<std::pair<std::string, FieldType>>;

  FieldType() : kind_(Kind::Float64) {}

  static FieldType float64() { return FieldType(Kind::Float64); }
  static FieldType int32() { return FieldType(Kind::Int32); }
  static FieldType uint32() { return FieldType(Kind::UInt32); }
  static FieldType str() { return FieldType(Kind::Str); }
  static FieldType duration() { return FieldType(Kind::Duration); }
  static FieldType time() { return FieldType(Kind::Time); }
  static FieldType array_of(FieldType element) {
    FieldType t(Kind::Array);
    t.element_ = std::make_shared<const FieldType>(std::move(element));
    return t;
  }
  static FieldType record(Fields fields) {
    FieldType t(Kind::Record);
    t.fields_ = std::make_shared<const Fields>(std::move(fields));
    return t;
  }

  Kind kind() const { return kind_; }
  const FieldType& element() const { return *element_; }
  const Fields& fields() const { return *fields_; }

  const FieldType* find(std::string_view name) const {
    if (kind_ != Kind::Record) return nullptr;
    for (const auto& [n, t] : *fields_)
      if (n == name) return &t;
    return nullptr;
  }

 private:
  explicit FieldType(Kind k) : kind_(k) {}

  Kind kind_;
  std::shared_ptr<const FieldType> element_;
  std::shared_ptr<const Fields> fields_;
};

struct MessageSchema {
  std::string type_name;
  std::string md5sum;  // opaque token, compared for equality only
  FieldType root;      // always Kind::Record
};

// ---------------------------------------------------------------------------
// Field values

class FieldValue {
 public:
  struct Duration {
    std::int32_t secs = 0;
    std::int32_t nsecs = 0;
    bool operator==(const Duration&) const = default;
  };
  struct Time {
    std::uint32_t secs = 0;
    std::uint32_t nsecs = 0;
    bool operator==(const Time&) const = default;
  };
  using Array = std::vector<FieldValue>;
  using Record = std::vector<std::pair<std::string, FieldValue>>;

  FieldValue() : v_(0.0) {}

  static FieldValue float64(double v) { return FieldValue(Storage(v)); }
  static FieldValue int32(std::int32_t v) { return FieldValue(Storage(v)); }
  static FieldValue uint32(std::uint32_t v) { return FieldValue(Storage(v)); }
  static FieldValue str(std::string v) { return FieldValue(Storage(std::move(v))); }
  static FieldValue duration(std::int32_t s, std::int32_t ns) {
    return FieldValue(Storage(Duration{s, ns}));
  }
  static FieldValue time(std::uint32_t s, std::uint32_t ns) {
    return FieldValue(Storage(Time{s, ns}));
  }
  static FieldValue array(Array v) { return FieldValue(Storage(std::move(v))); }
  static FieldValue record(Record v) { return FieldValue(Storage(std::move(v))); }

  Kind kind() const { return static_cast<Kind>(v_.index()); }

  double as_f64() const { return std::get<double>(v_); }
  std::int32_t as_i32() const { return std::get<std::int32_t>(v_); }
  std::uint32_t as_u32() const { return std::get<std::uint32_t>(v_); }
  const std::string& as_str() const { return std::get<std::string>(v_); }
  const Duration& as_duration() const { return std::get<Duration>(v_); }
  const Time& as_time() const { return std::get<Time>(v_); }
  const Array& as_array() const { return std::get<Array>(v_); }
  const Record& as_record() const { return std::get<Record>(v_); }
  Array& as_array() { return std::get<Array>(v_); }
  Record& as_record() { return std::get<Record>(v_); }
  double& as_f64() { return std::get<double>(v_); }

  // Record field lookup by name; nullptr when absent or not a record.
  const FieldValue* find(std::string_view name) const {
    if (kind() != Kind::Record) return nullptr;
    for (const auto& [n, v] : as_record())
      if (n == name) return &v;
    return nullptr;
  }
  FieldValue* find(std::string_view name) {
    if (kind() != Kind::Record) return nullptr;
    for (auto& [n, v] : as_record())
      if (n == name) return &v;
    return nullptr;
  }

  // Float64 compares by bit pattern: this type models wire bytes, so NaN
  // payloads and signed zeros must survive an equality check.
  bool operator==(const FieldValue& o) const {
    if (v_.index() != o.v_.index()) return false;
    if (kind() == Kind::Float64)
      return std::bit_cast<std::uint64_t>(as_f64()) == std::bit_cast<std::uint64_t>(o.as_f64());
    return v_ == o.v_;
  }

 private:
  using Storage = std::variant<double, std::int32_t, std::uint32_t, std::string, Duration, Time,
                               Array, Record>;
  explicit FieldValue(Storage s) : v_(std::move(s)) {}

  Storage v_;
};

inline const char* kind_name(Kind k) {
  switch (k) {
    case Kind::Float64: return "float64";
    case Kind::Int32: return "int32";
    case Kind::UInt32: return "uint32";
    case Kind::Str: return "string";
    case Kind::Duration: return "duration";
    case Kind::Time: return "time";
    case Kind::Array: return "array";
    case Kind::Record: return "record";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Message body codec

namespace detail {

inline void encode_value(const FieldType& type, const FieldValue& value, ByteWriter& w) {
  if (value.kind() != type.kind())
    throw WireError(WireErrc::SchemaMismatch,
                    std::string("value kind ") + kind_name(value.kind()) +
                        " does not match schema kind " + kind_name(type.kind()));
  switch (type.kind()) {
    case Kind::Float64: w.f64(value.as_f64()); break;
    case Kind::Int32: w.i32(value.as_i32()); break;
    case Kind::UInt32: w.u32(value.as_u32()); break;
    case Kind::Str: {
      const auto& s = value.as_str();
      w.u32(static_cast<std::uint32_t>(s.size()));
      w.raw(s);
      break;
    }
    case Kind::Duration: {
      const auto& d = value.as_duration();
      w.i32(d.secs);
      w.i32(d.nsecs);
      break;
    }
    case Kind::Time: {
      const auto& t = value.as_time();
      w.u32(t.secs);
      w.u32(t.nsecs);
      break;
    }
    case Kind::Array: {
      const auto& a = value.as_array();
      w.u32(static_cast<std::uint32_t>(a.size()));
      for (const auto& el : a) encode_value(type.element(), el, w);
      break;
    }
    case Kind::Record: {
      const auto& fields = type.fields();
      const auto& rec = value.as_record();
      if (rec.size() != fields.size())
        throw WireError(WireErrc::SchemaMismatch, "record field count differs from schema");
      for (std::size_t i = 0; i < fields.size(); ++i) {
        if (rec[i].first != fields[i].first)
          throw WireError(WireErrc::SchemaMismatch, "record field '" + rec[i].first +
                                                        "' where schema expects '" +
                                                        fields[i].first + "'");
        encode_value(fields[i].second, rec[i].second, w);
      }
      break;
    }
  }
}

// Smallest possible encoding of a value of this type, used to reject
// impossible array counts before allocating.
inline std::uint64_t min_encoded_size(const FieldType& type) {
  switch (type.kind()) {
    case Kind::Float64: return 8;
    case Kind::Int32:
    case Kind::UInt32:
    case Kind::Str:
    case Kind::Array: return 4;
    case Kind::Duration:
    case Kind::Time: return 8;
    case Kind::Record: {
      std::uint64_t n = 0;
      for (const auto& [name, t] : type.fields()) n += min_encoded_size(t);
      return n;
    }
  }
  return 0;
}

inline FieldValue decode_value(const FieldType& type, ByteReader& r) {
  auto need = [&](std::size_t n) {
    if (r.remaining() < n)
      throw WireError(WireErrc::Truncated, "message body ends inside a field");
  };
  switch (type.kind()) {
    case Kind::Float64:
      need(8);
      return FieldValue::float64(r.f64());
    case Kind::Int32:
      need(4);
      return FieldValue::int32(r.i32());
    case Kind::UInt32:
      need(4);
      return FieldValue::uint32(r.u32());
    case Kind::Str: {
      need(4);
      std::uint32_t n = r.u32();
      if (n > r.remaining())
        throw WireError(WireErrc::BadLength, "string length exceeds remaining bytes");
      return FieldValue::str(r.str(n));
    }
    case Kind::Duration: {
      need(8);
      std::int32_t s = r.i32();
      std::int32_t ns = r.i32();
      return FieldValue::duration(s, ns);
    }
    case Kind::Time: {
      need(8);
      std::uint32_t s = r.u32();
      std::uint32_t ns = r.u32();
      return FieldValue::time(s, ns);
    }
    case Kind::Array: {
      need(4);
      std::uint32_t count = r.u32();
      if (static_cast<std::uint64_t>(count) * min_encoded_size(type.element()) > r.remaining())
        throw WireError(WireErrc::BadLength, "array count exceeds remaining bytes");
      FieldValue::Array a;
      a.reserve(count);
      for (std::uint32_t i = 0; i < count; ++i) a.push_back(decode_value(type.element(), r));
      return FieldValue::array(std::move(a));
    }
    case Kind::Record: {
      FieldValue::Record rec;
      rec.reserve(type.fields().size());
      for (const auto& [name, t] : type.fields()) rec.emplace_back(name, decode_value(t, r));
      return FieldValue::record(std::move(rec));
    }
  }
  throw WireError(WireErrc::SchemaMismatch, "unknown field kind");
}

}  // namespace detail

// Serializes a conforming record: 4-byte LE body length, then the body.
inline Bytes encode_message(const MessageSchema& schema, const FieldValue& value) {
  ByteWriter body;
  detail::encode_value(schema.root, value, body);
  ByteWriter out;
  out.u32(static_cast<std::uint32_t>(body.size()));
  out.raw(body.data());
  return out.take();
}

// Inverse of encode_message. The buffer must contain exactly one message.
inline FieldValue decode_message(const MessageSchema& schema, const Bytes& buf) {
  if (buf.size() < 4) throw WireError(WireErrc::Truncated, "buffer shorter than length prefix");
  ByteReader r(buf);
  std::uint32_t declared = r.u32();
  if (declared > r.remaining())
    throw WireError(WireErrc::Truncated, "declared body length exceeds buffer");
  if (declared < r.remaining())
    throw WireError(WireErrc::TrailingBytes, "buffer longer than declared body");
  FieldValue v = detail::decode_value(schema.root, r);
  if (r.remaining() != 0)
    throw WireError(WireErrc::TrailingBytes, "schema consumed less than declared body");
  return v;
}

// ---------------------------------------------------------------------------
// Connection headers

struct ConnectionHeader {
  std::vector<std::pair<std::string, std::string>> entries;

  std::optional<std::string> find(std::string_view key) const {
    for (const auto& [k, v] : entries)
      if (k == key) return v;
    return std::nullopt;
  }
  bool operator==(const ConnectionHeader&) const = default;
};

inline Bytes encode_header(const ConnectionHeader& h) {
  ByteWriter body;
  for (const auto& [k, v] : h.entries) {
    if (k.find('=') != std::string::npos)
      throw WireError(WireErrc::MalformedEntry, "header key contains '='");
    body.u32(static_cast<std::uint32_t>(k.size() + 1 + v.size()));
    body.raw(k);
    body.u8('=');
    body.raw(v);
  }
  ByteWriter out;
  out.u32(static_cast<std::uint32_t>(body.size()));
  out.raw(body.data());
  return out.take();
}

inline ConnectionHeader decode_header(const Bytes& buf) {
  if (buf.size() < 4) throw WireError(WireErrc::Truncated, "buffer shorter than length prefix");
  ByteReader r(buf);
  std::uint32_t declared = r.u32();
  if (declared > r.remaining())
    throw WireError(WireErrc::Truncated, "declared header length exceeds buffer");
  if (declared < r.remaining())
    throw WireError(WireErrc::TrailingBytes, "buffer longer than declared header");
  ConnectionHeader h;
  while (r.remaining() > 0) {
    if (r.remaining() < 4) throw WireError(WireErrc::BadLength, "dangling bytes before entry length");
    std::uint32_t n = r.u32();
    if (n > r.remaining())
      throw WireError(WireErrc::BadLength, "entry length exceeds remaining bytes");
    std::string entry = r.str(n);
    auto eq = entry.find('=');
    if (eq == std::string::npos)
      throw WireError(WireErrc::MalformedEntry, "header entry has no '=': " + entry);
    h.entries.emplace_back(entry.substr(0, eq), entry.substr(eq + 1));
  }
  return h;
}

// ---------------------------------------------------------------------------
// Builtin schema registry

namespace detail {

inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline void describe_type(const FieldType& t, std::string& out) {
  out += kind_name(t.kind());
  if (t.kind() == Kind::Array) {
    out += '<';
    describe_type(t.element(), out);
    out += '>';
  } else if (t.kind() == Kind::Record) {
    out += '{';
    for (const auto& [name, ft] : t.fields()) {
      out += name;
      out += ':';
      describe_type(ft, out);
      out += ';';
    }
    out += '}';
  }
}

// Opaque 32-hex type token. Not MD5: handshakes only ever compare these for
// equality, so any deterministic digest of the schema text works.
inline std::string type_token(const std::string& type_name, const FieldType& root) {
  std::string desc = type_name + "=";
  describe_type(root, desc);
  std::uint64_t a = fnv1a64(desc);
  std::uint64_t b = fnv1a64(desc, a ^ 0x9e3779b97f4a7c15ULL);
  static constexpr char digits[] = "0123456789abcdef";
  std::string tok;
  tok.reserve(32);
  for (int i = 15; i >= 0; --i) tok.push_back(digits[(a >> (4 * i)) & 0xf]);
  for (int i = 15; i >= 0; --i) tok.push_back(digits[(b >> (4 * i)) & 0xf]);
  return tok;
}

}  // namespace detail

class SchemaRegistry {
 public:
  const MessageSchema* find(std::string_view type_name) const {
    auto it = schemas_.find(std::string(type_name));
    return it == schemas_.end() ? nullptr : &it->second;
  }

  const std::map<std::string, MessageSchema>& all() const { return schemas_; }

  void add(std::string type_name, FieldType root) {
    MessageSchema s;
    s.type_name = type_name;
    s.md5sum = detail::type_token(type_name, root);
    s.root = std::move(root);
    schemas_.emplace(std::move(type_name), std::move(s));
  }

  // The message types involved in the two attacked flows.
  static const SchemaRegistry& builtin() {
    static const SchemaRegistry reg = [] {
      SchemaRegistry r;
      auto f64 = FieldType::float64();

      FieldType vector3 = FieldType::record({{"x", f64}, {"y", f64}, {"z", f64}});
      r.add("geometry_msgs/Vector3", vector3);
      r.add("geometry_msgs/Twist",
            FieldType::record({{"linear", vector3}, {"angular", vector3}}));

      FieldType header = FieldType::record({{"seq", FieldType::uint32()},
                                            {"stamp", FieldType::time()},
                                            {"frame_id", FieldType::str()}});
      r.add("std_msgs/Header", header);

      FieldType goal_id =
          FieldType::record({{"stamp", FieldType::time()}, {"id", FieldType::str()}});
      r.add("actionlib_msgs/GoalID", goal_id);

      FieldType traj_point = FieldType::record({{"positions", FieldType::array_of(f64)},
                                                {"velocities", FieldType::array_of(f64)},
                                                {"accelerations", FieldType::array_of(f64)},
                                                {"time_from_start", FieldType::duration()}});
      r.add("trajectory_msgs/JointTrajectoryPoint", traj_point);

      FieldType trajectory =
          FieldType::record({{"header", header},
                             {"joint_names", FieldType::array_of(FieldType::str())},
                             {"points", FieldType::array_of(traj_point)}});
      r.add("trajectory_msgs/JointTrajectory", trajectory);

      FieldType tolerance = FieldType::record({{"name", FieldType::str()},
                                               {"position", f64},
                                               {"velocity", f64},
                                               {"acceleration", f64}});
      r.add("control_msgs/JointTolerance", tolerance);

      FieldType follow_goal =
          FieldType::record({{"trajectory", trajectory},
                             {"path_tolerance", FieldType::array_of(tolerance)},
                             {"goal_tolerance", FieldType::array_of(tolerance)},
                             {"goal_time_tolerance", FieldType::duration()}});
      r.add("control_msgs/FollowJointTrajectoryGoal", follow_goal);

      r.add("control_msgs/FollowJointTrajectoryActionGoal",
            FieldType::record(
                {{"header", header}, {"goal_id", goal_id}, {"goal", follow_goal}}));
      return r;
    }();
    return reg;
  }

 private:
  std::map<std::string, MessageSchema> schemas_;
};

inline const SchemaRegistry& builtin_schemas() { return SchemaRegistry::builtin(); }

// ---------------------------------------------------------------------------
// Field paths ("linear.x", "goal.trajectory.points[0].positions[2]")

struct PathSegment {
  std::string name;
  std::vector<std::size_t> indexes;
};

using FieldPath = std::vector<PathSegment>;

inline FieldPath parse_field_path(std::string_view text) {
  FieldPath path;
  std::size_t i = 0;
  auto fail = [&](const std::string& why) {
    throw std::invalid_argument("bad field path '" + std::string(text) + "': " + why);
  };
  while (i < text.size()) {
    std::size_t start = i;
    while (i < text.size() && text[i] != '.' && text[i] != '[') ++i;
    if (i == start) fail("empty segment name");
    PathSegment seg;
    seg.name = std::string(text.substr(start, i - start));
    while (i < text.size() && text[i] == '[') {
      ++i;
      std::size_t num_start = i;
      while (i < text.size() && text[i] >= '0' && text[i] <= '9') ++i;
      if (i == num_start || i >= text.size() || text[i] != ']') fail("malformed index");
      seg.indexes.push_back(std::stoull(std::string(text.substr(num_start, i - num_start))));
      ++i;
    }
    path.push_back(std::move(seg));
    if (i < text.size()) {
      if (text[i] != '.') fail("expected '.' between segments");
      ++i;
      if (i == text.size()) fail("trailing '.'");
    }
  }
  if (path.empty()) fail("empty path");
  return path;
}

// Walks a value tree; nullptr when any segment fails to resolve.
inline FieldValue* resolve_path(FieldValue& root, const FieldPath& path) {
  FieldValue* cur = &root;
  for (const auto& seg : path) {
    cur = cur->find(seg.name);
    if (!cur) return nullptr;
    for (std::size_t idx : seg.indexes) {
      if (cur->kind() != Kind::Array) return nullptr;
      auto& arr = cur->as_array();
      if (idx >= arr.size()) return nullptr;
      cur = &arr[idx];
    }
  }
  return cur;
}

// Type-level check: does the path reach the given kind in this schema? Array
// indexes are validated against element types only; out-of-range indexes are
// a runtime concern.
inline bool path_reaches_kind(const FieldType& root, const FieldPath& path, Kind want) {
  const FieldType* cur = &root;
  for (const auto& seg : path) {
    cur = cur->find(seg.name);
    if (!cur) return false;
    for (std::size_t j = 0; j < seg.indexes.size(); ++j) {
      if (cur->kind() != Kind::Array) return false;
      cur = &cur->element();
    }
  }
  return cur->kind() == want;
}

inline std::string path_to_string(const FieldPath& path) {
  std::string out;
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (i) out += '.';
    out += path[i].name;
    for (std::size_t idx : path[i].indexes) {
      out += '[';
      out += std::to_string(idx);
      out += ']';
    }
  }
  return out;
}

}  // namespace twinsec::wire
