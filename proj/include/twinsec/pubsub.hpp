#pragma once

// Minimal ROS1-style computation graph over netsim: a master registry plus
// publisher/subscriber endpoints that exchange connection headers and then
// stream length-prefixed messages. Master lookups are direct calls; only the
// data channel rides the simulated network (and is therefore attackable).

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "twinsec/guard.hpp"
#include "twinsec/netsim.hpp"
#include "twinsec/wire.hpp"

namespace twinsec::pubsub {

using netsim::Frame;
using netsim::IpAddr;
using netsim::MacAddr;
using netsim::SimTime;

enum class PubSubErrc { DuplicateTopic, UnknownTopic, TypeMismatch, NotEstablished };

class PubSubError : public std::runtime_error {
 public:
  PubSubError(PubSubErrc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  PubSubErrc code() const { return code_; }

 private:
  PubSubErrc code_;
};

struct TopicRecord {
  std::string topic;
  std::string type_name;
  std::string publisher_host;
  std::uint16_t port = 0;
};

class Master {
 public:
  void register_publisher(const std::string& topic, const std::string& type_name,
                          const std::string& host, std::uint16_t port) {
    if (topic.empty() || topic[0] != '/')
      throw std::invalid_argument("topic must begin with '/': " + topic);
    if (topics_.count(topic))
      throw PubSubError(PubSubErrc::DuplicateTopic, "topic already registered: " + topic);
    topics_[topic] = TopicRecord{topic, type_name, host, port};
  }

  std::optional<TopicRecord> lookup(const std::string& topic) const {
    auto it = topics_.find(topic);
    if (it == topics_.end()) return std::nullopt;
    return it->second;
  }

 private:
  std::map<std::string, TopicRecord> topics_;
};

enum class LinkState { HandshakeSent, Established, Closed };

struct SubCounters {
  std::uint64_t delivered = 0;
  std::uint64_t rejected_auth = 0;
  std::uint64_t rejected_anomaly = 0;
  std::uint64_t decode_errors = 0;
};

// A host that can carry any number of publisher and subscriber endpoints,
// dispatched by destination port.
class NodeHost : public netsim::Host {
 public:
  using MessageCallback = std::function<void(const wire::FieldValue&, SimTime)>;

  NodeHost(std::string name, IpAddr ip, MacAddr mac,
           const wire::SchemaRegistry& reg = wire::builtin_schemas())
      : Host(std::move(name), ip, mac), reg_(reg) {}

  struct AdvertiseOptions {
    std::optional<guard::AuthConfig> auth;
  };

  void advertise(Master& master, const std::string& topic, const std::string& type_name,
                 std::uint16_t port, AdvertiseOptions opt = {}) {
    const wire::MessageSchema* schema = reg_.find(type_name);
    if (!schema) throw std::invalid_argument("unknown message type: " + type_name);
    master.register_publisher(topic, type_name, name(), port);
    auto& pub = pubs_[port];
    pub.topic = topic;
    pub.schema = schema;
    pub.port = port;
    pub.auth = std::move(opt.auth);
  }

  struct SubscribeOptions {
    std::optional<std::string> expect_type;  // defaults to the master record's type
    std::optional<std::string> expect_md5;   // defaults to the registry token
    std::optional<guard::AuthConfig> auth;
    std::optional<guard::AnomalyConfig> anomaly;
  };

  // Resolves the publisher via the master, ARPs its host (poisonable) and
  // sends our connection header. Establishment completes asynchronously.
  void subscribe(Master& master, const std::string& topic, MessageCallback cb,
                 SubscribeOptions opt = {}) {
    auto rec = master.lookup(topic);
    if (!rec) throw PubSubError(PubSubErrc::UnknownTopic, "no publisher for topic " + topic);
    netsim::Host* pub_host = net().find_by_name(rec->publisher_host);
    if (!pub_host) throw std::invalid_argument("publisher host absent: " + rec->publisher_host);

    std::string type_name = opt.expect_type.value_or(rec->type_name);
    const wire::MessageSchema* schema = reg_.find(type_name);
    if (!schema) throw std::invalid_argument("unknown message type: " + type_name);

    std::uint16_t local_port = next_port_++;
    auto& sub = subs_[local_port];
    sub.topic = topic;
    sub.schema = schema;
    sub.md5sum = opt.expect_md5.value_or(schema->md5sum);
    sub.state = LinkState::HandshakeSent;
    sub.peer_ip = pub_host->ip();
    sub.peer_port = rec->port;
    sub.callback = std::move(cb);
    sub.auth = std::move(opt.auth);
    if (opt.anomaly) sub.anomaly.emplace(*opt.anomaly);

    wire::ConnectionHeader h;
    h.entries = {{"callerid", "/" + name()},
                 {"md5sum", sub.md5sum},
                 {"topic", topic},
                 {"type", type_name}};
    Bytes header_bytes = wire::encode_header(h);
    IpAddr dst_ip = sub.peer_ip;
    std::uint16_t dst_port = sub.peer_port;
    resolve(dst_ip, [this, local_port, dst_ip, dst_port,
                     header_bytes = std::move(header_bytes)](std::optional<MacAddr> mac) {
      auto it = subs_.find(local_port);
      if (it == subs_.end()) return;
      if (!mac) {
        it->second.state = LinkState::Closed;
        it->second.error = "arp resolution timed out";
        return;
      }
      send_stream(*mac, dst_ip, local_port, dst_port, header_bytes);
    });
  }

  // Sends one encoded message to every established subscriber, addressed by
  // the current (possibly poisoned) ARP mapping.
  void publish(const std::string& topic, const wire::FieldValue& value) {
    Publication* pub = find_pub(topic);
    if (!pub) throw PubSubError(PubSubErrc::NotEstablished, "not advertising " + topic);
    bool any = false;
    for (auto& conn : pub->connections)
      if (conn.state == LinkState::Established) any = true;
    if (!any)
      throw PubSubError(PubSubErrc::NotEstablished, "no established subscriber on " + topic);
    Bytes msg = wire::encode_message(*pub->schema, value);
    for (auto& conn : pub->connections) {
      if (conn.state != LinkState::Established) continue;
      Bytes payload =
          pub->auth ? guard::tag_message(*pub->auth, topic, msg, conn.seq) : msg;
      ++conn.seq;
      send_to(conn.peer_ip, pub->port, conn.peer_port, std::move(payload));
    }
    ++pub->published;
  }

  // --- introspection ---------------------------------------------------

  LinkState sub_state(const std::string& topic) const {
    for (const auto& [port, s] : subs_)
      if (s.topic == topic) return s.state;
    throw std::invalid_argument("no subscription for " + topic);
  }
  const std::string& sub_error(const std::string& topic) const {
    for (const auto& [port, s] : subs_)
      if (s.topic == topic) return s.error;
    throw std::invalid_argument("no subscription for " + topic);
  }
  const SubCounters& sub_counters(const std::string& topic) const {
    for (const auto& [port, s] : subs_)
      if (s.topic == topic) return s.counters;
    throw std::invalid_argument("no subscription for " + topic);
  }
  std::uint64_t published(const std::string& topic) const {
    for (const auto& [port, p] : pubs_)
      if (p.topic == topic) return p.published;
    return 0;
  }
  std::size_t established_subscribers(const std::string& topic) const {
    std::size_t n = 0;
    for (const auto& [port, p] : pubs_)
      if (p.topic == topic)
        for (const auto& c : p.connections)
          if (c.state == LinkState::Established) ++n;
    return n;
  }

 protected:
  void on_stream(const Frame& f) override {
    if (auto it = pubs_.find(f.dst_port); it != pubs_.end()) {
      pub_on_frame(it->second, it->first, f);
      return;
    }
    if (auto it = subs_.find(f.dst_port); it != subs_.end()) {
      sub_on_frame(it->second, f);
      return;
    }
    // not ours; a real stack would RST, the simulator just ignores
  }

 private:
  struct PubConnection {
    IpAddr peer_ip;
    std::uint16_t peer_port = 0;
    LinkState state = LinkState::Closed;
    std::uint64_t seq = 0;
  };

  struct Publication {
    std::string topic;
    const wire::MessageSchema* schema = nullptr;
    std::uint16_t port = 0;
    std::optional<guard::AuthConfig> auth;
    std::vector<PubConnection> connections;
    std::uint64_t published = 0;
  };

  struct Subscription {
    std::string topic;
    const wire::MessageSchema* schema = nullptr;
    std::string md5sum;
    LinkState state = LinkState::Closed;
    IpAddr peer_ip;
    std::uint16_t peer_port = 0;
    MessageCallback callback;
    std::optional<guard::AuthConfig> auth;
    std::optional<guard::AnomalyMonitor> anomaly;
    SubCounters counters;
    std::string error;
    std::uint64_t recv_seq = 0;
  };

  Publication* find_pub(const std::string& topic) {
    for (auto& [port, p] : pubs_)
      if (p.topic == topic) return &p;
    return nullptr;
  }

  void send_to(IpAddr dst_ip, std::uint16_t src_port, std::uint16_t dst_port, Bytes payload) {
    if (auto mac = arp_cache().lookup(dst_ip)) {
      send_stream(*mac, dst_ip, src_port, dst_port, std::move(payload));
      return;
    }
    resolve(dst_ip, [this, dst_ip, src_port, dst_port,
                     payload = std::move(payload)](std::optional<MacAddr> mac) mutable {
      if (mac) send_stream(*mac, dst_ip, src_port, dst_port, std::move(payload));
    });
  }

  void pub_on_frame(Publication& pub, std::uint16_t port, const Frame& f) {
    for (auto& conn : pub.connections) {
      if (conn.peer_ip == f.src_ip && conn.peer_port == f.src_port) return;  // already seen
    }
    wire::ConnectionHeader h;
    try {
      h = wire::decode_header(f.payload);
    } catch (const wire::WireError&) {
      return;  // not a handshake; ignore
    }
    auto topic = h.find("topic");
    auto type = h.find("type");
    auto md5 = h.find("md5sum");

    wire::ConnectionHeader reply;
    bool ok = topic && *topic == pub.topic && type && *type == pub.schema->type_name && md5 &&
              *md5 == pub.schema->md5sum;
    if (ok) {
      reply.entries = {{"callerid", "/" + name()},
                       {"md5sum", pub.schema->md5sum},
                       {"topic", pub.topic},
                       {"type", pub.schema->type_name}};
    } else {
      reply.entries = {{"error", "type or topic mismatch on " + pub.topic}};
    }
    PubConnection conn;
    conn.peer_ip = f.src_ip;
    conn.peer_port = f.src_port;
    conn.state = ok ? LinkState::Established : LinkState::Closed;
    pub.connections.push_back(conn);
    send_to(f.src_ip, port, f.src_port, wire::encode_header(reply));
  }

  void sub_on_frame(Subscription& sub, const Frame& f) {
    if (sub.state == LinkState::HandshakeSent) {
      wire::ConnectionHeader h;
      try {
        h = wire::decode_header(f.payload);
      } catch (const wire::WireError&) {
        sub.state = LinkState::Closed;
        sub.error = "garbled handshake reply";
        return;
      }
      if (auto err = h.find("error")) {
        sub.state = LinkState::Closed;
        sub.error = "TypeMismatch: " + *err;
        return;
      }
      auto type = h.find("type");
      auto md5 = h.find("md5sum");
      if (!type || *type != sub.schema->type_name || !md5 || *md5 != sub.md5sum) {
        sub.state = LinkState::Closed;
        sub.error = "TypeMismatch: publisher header disagrees";
        return;
      }
      sub.state = LinkState::Established;
      return;
    }
    if (sub.state != LinkState::Established) return;

    std::uint64_t seq = sub.recv_seq++;
    Bytes msg = f.payload;
    if (sub.auth) {
      auto body = guard::verify_message(*sub.auth, sub.topic, f.payload, seq);
      if (!body) {
        ++sub.counters.rejected_auth;
        return;  // hold previous command
      }
      msg = std::move(*body);
    }
    wire::FieldValue value;
    try {
      value = wire::decode_message(*sub.schema, msg);
    } catch (const wire::WireError&) {
      ++sub.counters.decode_errors;
      return;
    }
    if (sub.anomaly) {
      if (auto reason = sub.anomaly->check(value)) {
        ++sub.counters.rejected_anomaly;
        return;
      }
    }
    ++sub.counters.delivered;
    if (sub.callback) sub.callback(value, f.timestamp);
  }

  const wire::SchemaRegistry& reg_;
  std::map<std::uint16_t, Publication> pubs_;
  std::map<std::uint16_t, Subscription> subs_;
  std::uint16_t next_port_ = 50000;
};

}  // namespace twinsec::pubsub
