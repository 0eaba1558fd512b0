#pragma once

// Person-in-the-middle attacker: scans the subnet for the victims, poisons
// both ARP caches so victim-to-victim traffic diverts through this host,
// classifies intercepted frames, rewrites float fields on the target topic,
// and relays everything so the victims notice nothing but the extra hop.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "twinsec/netsim.hpp"
#include "twinsec/pubsub.hpp"
#include "twinsec/wire.hpp"

namespace twinsec::attack {

using netsim::Frame;
using netsim::IpAddr;
using netsim::MacAddr;
using netsim::SimTime;

// ---------------------------------------------------------------------------
// Mutation rules

struct MutationRule {
  enum class Action { Set, Scale, Add, OverrideStream };

  std::string path_text;
  wire::FieldPath path;
  Action action = Action::Set;
  double value = 0;  // Set constant / Scale factor / Add delta / stream start
  double step = 0;   // OverrideStream increment per mutated message

  static MutationRule set(const std::string& path, double v) {
    return {path, wire::parse_field_path(path), Action::Set, v, 0};
  }
  static MutationRule scale(const std::string& path, double f) {
    return {path, wire::parse_field_path(path), Action::Scale, f, 0};
  }
  static MutationRule add(const std::string& path, double d) {
    return {path, wire::parse_field_path(path), Action::Add, d, 0};
  }
  static MutationRule override_stream(const std::string& path, double start, double step) {
    return {path, wire::parse_field_path(path), Action::OverrideStream, start, step};
  }
};

// Per-rule runtime state; OverrideStream emits value + applied*step.
struct RuleState {
  MutationRule rule;
  std::uint64_t applied = 0;

  double next_value(double current) {
    switch (rule.action) {
      case MutationRule::Action::Set: return rule.value;
      case MutationRule::Action::Scale: return current * rule.value;
      case MutationRule::Action::Add: return current + rule.value;
      case MutationRule::Action::OverrideStream:
        return rule.value + static_cast<double>(applied) * rule.step;
    }
    return current;
  }
};

// Decode -> apply rules in order -> re-encode, with the length prefix
// recomputed. All-or-nothing: if any rule path fails to resolve the original
// bytes are returned untouched and *error names the path. `msg` excludes any
// auth trailer; the caller splits and reattaches it.
inline std::optional<Bytes> mutate_message(const wire::MessageSchema& schema, const Bytes& msg,
                                           std::vector<RuleState>& rules, std::string* error) {
  wire::FieldValue value;
  try {
    value = wire::decode_message(schema, msg);
  } catch (const wire::WireError& e) {
    if (error) *error = std::string("undecodable: ") + e.what();
    return std::nullopt;
  }
  // resolve every path before touching anything
  std::vector<double*> leaves;
  for (auto& rs : rules) {
    wire::FieldValue* leaf = wire::resolve_path(value, rs.rule.path);
    if (!leaf || leaf->kind() != wire::Kind::Float64) {
      if (error) *error = "PathUnresolved(" + rs.rule.path_text + ")";
      return std::nullopt;
    }
    leaves.push_back(&leaf->as_f64());
  }
  for (std::size_t i = 0; i < rules.size(); ++i) {
    *leaves[i] = rules[i].next_value(*leaves[i]);
    ++rules[i].applied;
  }
  return wire::encode_message(schema, value);
}

// ---------------------------------------------------------------------------
// Plan and intercept state

struct AttackPlan {
  IpAddr victim_a_ip;  // DTS side: the only direction that gets mutated
  IpAddr victim_b_ip;  // CPS side
  std::string target_topic;
  std::vector<MutationRule> rules;
  SimTime start_time = 0;
  SimTime stop_time = std::numeric_limits<SimTime>::max();
};

struct InterceptCounters {
  std::uint64_t seen = 0;
  std::uint64_t matched = 0;
  std::uint64_t mutated = 0;
  std::uint64_t forwarded = 0;
  std::uint64_t path_errors = 0;
};

enum class AttackStatus { Pending, Scanning, Active, Stopped, VictimNotFound };

inline const char* attack_status_name(AttackStatus s) {
  switch (s) {
    case AttackStatus::Pending: return "pending";
    case AttackStatus::Scanning: return "scanning";
    case AttackStatus::Active: return "active";
    case AttackStatus::Stopped: return "stopped";
    case AttackStatus::VictimNotFound: return "victim_not_found";
  }
  return "?";
}

enum class FrameClass { HeaderFrame, TargetMessage, Passthrough };

// ---------------------------------------------------------------------------
// Attacker host

class AttackerHost : public netsim::Host {
 public:
  // `master` enables endpoint lookup for streams whose handshake predates the
  // attack; pass nullptr to rely on observed headers alone.
  AttackerHost(std::string name, IpAddr ip, MacAddr mac, AttackPlan plan,
               const pubsub::Master* master = nullptr,
               const wire::SchemaRegistry& reg = wire::builtin_schemas())
      : Host(std::move(name), ip, mac), plan_(std::move(plan)), master_(master), reg_(reg) {
    for (const auto& r : plan_.rules) rule_state_.push_back(RuleState{r, 0});
  }

  // Schedules the attack; call once the host is attached.
  void arm() {
    net().events().schedule(plan_.start_time, [this] { begin(); });
  }

  AttackStatus status() const { return status_; }
  const InterceptCounters& counters() const { return counters_; }
  const std::vector<std::pair<IpAddr, MacAddr>>& scan_results() const { return scan_results_; }
  SimTime poison_time() const { return poison_time_; }

  struct ConnState {
    std::optional<wire::ConnectionHeader> observed_header;
    std::string topic;
    const wire::MessageSchema* schema = nullptr;
    InterceptCounters counters;
  };

  const std::map<std::string, ConnState>& connections() const { return conns_; }

 protected:
  void on_diverted(const Frame& f) override {
    ++counters_.seen;
    Frame out = f;
    out.pitm = "passthrough";

    if (f.kind == FrameKind::Stream) {
      ConnState* conn = nullptr;
      switch (classify(f, &conn)) {
        case FrameClass::HeaderFrame:
          out.pitm = "header";
          break;
        case FrameClass::TargetMessage: {
          ++counters_.matched;
          if (conn) ++conn->counters.matched;
          out.pitm = "target";
          bool window_open = net().now() >= plan_.start_time && net().now() < plan_.stop_time;
          if (window_open && !rule_state_.empty() && conn && conn->schema) {
            // the length prefix bounds the message; any trailer tags along
            Bytes body = f.payload;
            Bytes trailer;
            if (f.payload.size() >= 4) {
              ByteReader r(f.payload);
              std::uint64_t msg_len = 4 + static_cast<std::uint64_t>(r.u32());
              if (msg_len <= f.payload.size()) {
                body.assign(f.payload.begin(), f.payload.begin() + msg_len);
                trailer.assign(f.payload.begin() + msg_len, f.payload.end());
              }
            }
            std::string err;
            if (auto mutated = mutate_message(*conn->schema, body, rule_state_, &err)) {
              mutated->insert(mutated->end(), trailer.begin(), trailer.end());
              out.payload = std::move(*mutated);
              out.pitm = "mutated";
              ++counters_.mutated;
              if (conn) ++conn->counters.mutated;
            } else {
              ++counters_.path_errors;
              mutate_errors_.push_back(err);
            }
          }
          break;
        }
        case FrameClass::Passthrough:
          break;
      }
      if (conn) ++conn->counters.seen;
    }

    forward(std::move(out));
  }

 private:
  using FrameKind = netsim::FrameKind;
  using ByteReader = twinsec::ByteReader;

  void begin() {
    status_ = AttackStatus::Scanning;
    if (master_) {
      if (auto rec = master_->lookup(plan_.target_topic)) {
        if (netsim::Host* pub = net().find_by_name(rec->publisher_host)) {
          target_endpoint_ = {pub->ip(), rec->port};
          target_schema_ = reg_.find(rec->type_name);
        }
      }
    }
    netsim::scan_subnet(*this, [this](std::vector<std::pair<IpAddr, MacAddr>> found) {
      scan_results_ = std::move(found);
      std::optional<MacAddr> mac_a, mac_b;
      for (const auto& [ip, mac] : scan_results_) {
        if (ip == plan_.victim_a_ip) mac_a = mac;
        if (ip == plan_.victim_b_ip) mac_b = mac;
      }
      if (!mac_a || !mac_b) {
        status_ = AttackStatus::VictimNotFound;
        return;  // abort before any poisoning
      }
      mac_a_ = *mac_a;
      mac_b_ = *mac_b;
      poison();
    });
  }

  void poison() {
    // both directions: each victim maps the other's ip to our mac
    send_poison_reply(mac_a_, plan_.victim_a_ip, plan_.victim_b_ip, mac());
    send_poison_reply(mac_b_, plan_.victim_b_ip, plan_.victim_a_ip, mac());
    poison_time_ = net().now() + net().link_latency();
    status_ = AttackStatus::Active;
    if (plan_.stop_time != std::numeric_limits<SimTime>::max()) {
      net().events().schedule(plan_.stop_time, [this] { stop(); });
    }
  }

  void stop() {
    if (status_ != AttackStatus::Active) return;
    // hand the victims their true mappings back; frames already diverted
    // keep being relayed unmodified
    send_poison_reply(mac_a_, plan_.victim_a_ip, plan_.victim_b_ip, mac_b_);
    send_poison_reply(mac_b_, plan_.victim_b_ip, plan_.victim_a_ip, mac_a_);
    status_ = AttackStatus::Stopped;
  }

  void send_poison_reply(MacAddr to_mac, IpAddr to_ip, IpAddr claim_ip, MacAddr claim_mac) {
    Frame f;
    f.kind = FrameKind::ArpReply;
    f.src_mac = mac();
    f.dst_mac = to_mac;
    f.src_ip = ip();
    f.dst_ip = to_ip;
    f.payload = netsim::arp_reply_payload(claim_ip, claim_mac);
    f.pitm = (claim_mac == mac()) ? "poison" : "restore";
    net().transmit(std::move(f));
  }

  static std::string conn_key(const Frame& f) {
    std::string a = f.src_ip.str() + ":" + std::to_string(f.src_port);
    std::string b = f.dst_ip.str() + ":" + std::to_string(f.dst_port);
    return a < b ? a + "|" + b : b + "|" + a;
  }

  bool between_victims(const Frame& f) const {
    return (f.src_ip == plan_.victim_a_ip && f.dst_ip == plan_.victim_b_ip) ||
           (f.src_ip == plan_.victim_b_ip && f.dst_ip == plan_.victim_a_ip);
  }

  // Filter taxonomy: ip pair, transport, topic. Stream frames model the TCP
  // transport; a UDP branch would hook in here, but the simulated network
  // carries no UDP, so everything else is relayed untouched.
  FrameClass classify(const Frame& f, ConnState** conn_out) {
    *conn_out = nullptr;
    if (f.kind != FrameKind::Stream || !between_victims(f)) return FrameClass::Passthrough;

    std::string key = conn_key(f);
    auto it = conns_.find(key);
    if (it == conns_.end()) {
      // untagged connection: a header names its topic...
      try {
        wire::ConnectionHeader h = wire::decode_header(f.payload);
        if (auto topic = h.find("topic")) {
          ConnState st;
          st.observed_header = h;
          st.topic = *topic;
          if (auto type = h.find("type")) st.schema = reg_.find(*type);
          it = conns_.emplace(key, std::move(st)).first;
          *conn_out = &it->second;
          return FrameClass::HeaderFrame;
        }
      } catch (const wire::WireError&) {
        // fail open: not a header
      }
      // ...otherwise the master's registry identifies the publisher endpoint
      // (the handshake may predate the poisoning)
      if (target_endpoint_ && f.src_ip == target_endpoint_->first &&
          f.src_port == target_endpoint_->second) {
        ConnState st;
        st.topic = plan_.target_topic;
        st.schema = target_schema_;
        it = conns_.emplace(key, std::move(st)).first;
      } else {
        return FrameClass::Passthrough;
      }
    }
    *conn_out = &it->second;
    if (it->second.topic == plan_.target_topic && f.src_ip == plan_.victim_a_ip)
      return FrameClass::TargetMessage;  // only the DTS->CPS direction is rewritten
    return FrameClass::Passthrough;
  }

  // Re-emit toward the true owner of dst_ip; IP-layer fields stay untouched
  // so the victims still see each other as the peer.
  void forward(Frame f) {
    std::optional<MacAddr> true_mac = arp_cache().lookup(f.dst_ip);
    if (!true_mac) return;  // unknown destination: nothing to relay to
    f.src_mac = mac();
    f.dst_mac = *true_mac;
    ++counters_.forwarded;
    auto it = conns_.find(conn_key(f));
    if (it != conns_.end() && f.kind == FrameKind::Stream) ++it->second.counters.forwarded;
    net().transmit(std::move(f));
  }

  AttackPlan plan_;
  const pubsub::Master* master_;
  const wire::SchemaRegistry& reg_;

  AttackStatus status_ = AttackStatus::Pending;
  InterceptCounters counters_;
  std::vector<RuleState> rule_state_;
  std::vector<std::pair<IpAddr, MacAddr>> scan_results_;
  MacAddr mac_a_, mac_b_;
  SimTime poison_time_ = 0;
  std::optional<std::pair<IpAddr, std::uint16_t>> target_endpoint_;
  const wire::MessageSchema* target_schema_ = nullptr;
  std::map<std::string, ConnState> conns_;
  std::vector<std::string> mutate_errors_;

 public:
  const std::vector<std::string>& mutate_errors() const { return mutate_errors_; }
};

}  // namespace twinsec::attack
