#pragma once

// Candidate mitigations: an authenticated message channel (keyed 64-bit tag
// appended to each message) and a command anomaly detector (absolute and
// step-change bounds on configured float fields).

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "twinsec/bytes.hpp"
#include "twinsec/wire.hpp"

namespace twinsec::guard {

// ---------------------------------------------------------------------------
// SipHash-2-4, 64-bit output. Test-grade keying is fine here: the in-sim
// adversary never holds the key, and tags are compared for equality only.

namespace detail {

inline std::uint64_t rotl(std::uint64_t x, int b) { return (x << b) | (x >> (64 - b)); }

inline std::uint64_t siphash24(std::uint64_t k0, std::uint64_t k1, const std::uint8_t* data,
                               std::size_t len) {
  std::uint64_t v0 = 0x736f6d6570736575ULL ^ k0;
  std::uint64_t v1 = 0x646f72616e646f6dULL ^ k1;
  std::uint64_t v2 = 0x6c7967656e657261ULL ^ k0;
  std::uint64_t v3 = 0x7465646279746573ULL ^ k1;

  auto round = [&] {
    v0 += v1;
    v1 = rotl(v1, 13);
    v1 ^= v0;
    v0 = rotl(v0, 32);
    v2 += v3;
    v3 = rotl(v3, 16);
    v3 ^= v2;
    v0 += v3;
    v3 = rotl(v3, 21);
    v3 ^= v0;
    v2 += v1;
    v1 = rotl(v1, 17);
    v1 ^= v2;
    v2 = rotl(v2, 32);
  };

  const std::size_t end = len - (len % 8);
  for (std::size_t i = 0; i < end; i += 8) {
    std::uint64_t m = 0;
    for (int j = 7; j >= 0; --j) m = (m << 8) | data[i + j];
    v3 ^= m;
    round();
    round();
    v0 ^= m;
  }
  std::uint64_t last = static_cast<std::uint64_t>(len & 0xff) << 56;
  for (std::size_t i = end; i < len; ++i)
    last |= static_cast<std::uint64_t>(data[i]) << (8 * (i - end));
  v3 ^= last;
  round();
  round();
  v0 ^= last;
  v2 ^= 0xff;
  round();
  round();
  round();
  round();
  return v0 ^ v1 ^ v2 ^ v3;
}

inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Authenticated channel

struct AuthConfig {
  std::string key;                 // shared secret, scenario-provided
  bool sequence_numbers = false;   // replay protection, default off
  static constexpr std::size_t kTagLen = 8;
};

// Tag over (topic, message bytes) with the topic length-prefixed so the
// domains cannot run into each other. `seq` participates only when replay
// protection is on.
inline std::uint64_t compute_tag(const AuthConfig& cfg, std::string_view topic,
                                 const Bytes& msg_bytes, std::uint64_t seq = 0) {
  std::uint64_t k0 = detail::fnv1a64(cfg.key, 0xcbf29ce484222325ULL);
  std::uint64_t k1 = detail::fnv1a64(cfg.key, 0x84222325cbf29ce4ULL);
  ByteWriter w;
  if (cfg.sequence_numbers) w.u64(seq);
  w.u32(static_cast<std::uint32_t>(topic.size()));
  w.raw(topic);
  w.raw(msg_bytes);
  const Bytes& input = w.data();
  return detail::siphash24(k0, k1, input.data(), input.size());
}

// Appends the 8-byte tag; the message's own length prefix still covers the
// body only, so the tag rides as a trailer inside the frame payload.
inline Bytes tag_message(const AuthConfig& cfg, std::string_view topic, const Bytes& msg_bytes,
                         std::uint64_t seq = 0) {
  Bytes out = msg_bytes;
  std::uint64_t tag = compute_tag(cfg, topic, msg_bytes, seq);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(tag >> (8 * i)));
  return out;
}

// Accept returns the message bytes with the trailer stripped; Reject means
// the payload was too short or the recomputed tag differed.
inline std::optional<Bytes> verify_message(const AuthConfig& cfg, std::string_view topic,
                                           const Bytes& payload, std::uint64_t seq = 0) {
  if (payload.size() < AuthConfig::kTagLen) return std::nullopt;
  Bytes body(payload.begin(), payload.end() - AuthConfig::kTagLen);
  std::uint64_t got = 0;
  for (int i = 0; i < 8; ++i)
    got |= static_cast<std::uint64_t>(payload[payload.size() - 8 + i]) << (8 * i);
  if (got != compute_tag(cfg, topic, body, seq)) return std::nullopt;
  return body;
}

// ---------------------------------------------------------------------------
// Anomaly detector

struct AnomalyConfig {
  struct Rule {
    std::string path_text;
    wire::FieldPath path;
    std::optional<double> min, max;   // absolute bounds
    std::optional<double> max_step;   // vs. previous accepted value
  };
  std::vector<Rule> rules;

  static Rule make_rule(std::string path_text, std::optional<double> min, std::optional<double> max,
                        std::optional<double> max_step) {
    Rule r;
    r.path = wire::parse_field_path(path_text);
    r.path_text = std::move(path_text);
    r.min = min;
    r.max = max;
    r.max_step = max_step;
    return r;
  }
};

// Tracks the last accepted value per monitored path. Step bounds only apply
// once a message has been accepted.
class AnomalyMonitor {
 public:
  explicit AnomalyMonitor(AnomalyConfig cfg) : cfg_(std::move(cfg)) {}

  // nullopt = accept. A reject leaves the stored state untouched.
  std::optional<std::string> check(const wire::FieldValue& candidate) {
    std::vector<std::pair<std::string, double>> observed;
    for (const auto& rule : cfg_.rules) {
      wire::FieldValue tmp = candidate;  // resolve_path wants mutable access
      const wire::FieldValue* leaf = wire::resolve_path(tmp, rule.path);
      if (!leaf || leaf->kind() != wire::Kind::Float64)
        return "PathUnresolved(" + rule.path_text + ")";
      double v = leaf->as_f64();
      if (rule.min && v < *rule.min)
        return "AbsoluteBound(" + rule.path_text + ")";
      if (rule.max && v > *rule.max)
        return "AbsoluteBound(" + rule.path_text + ")";
      if (rule.max_step) {
        auto it = last_.find(rule.path_text);
        if (it != last_.end() && std::abs(v - it->second) > *rule.max_step)
          return "StepChange(" + rule.path_text + ")";
      }
      observed.emplace_back(rule.path_text, v);
    }
    for (auto& [p, v] : observed) last_[p] = v;
    return std::nullopt;
  }

 private:
  AnomalyConfig cfg_;
  std::map<std::string, double> last_;
};

}  // namespace twinsec::guard
