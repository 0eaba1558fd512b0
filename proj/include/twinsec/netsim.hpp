#pragma once

// Deterministic simulated LAN: one switch, one subnet, hosts with gullible
// ARP caches, reliable ordered delivery with fixed link latency, all driven
// by a (timestamp, sequence) ordered event queue. Delivery is by MAC, which
// is what makes ARP cache poisoning effective.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "twinsec/bytes.hpp"

namespace twinsec::netsim {

using SimTime = std::int64_t;  // nanoseconds

constexpr SimTime sim_us(std::int64_t v) { return v * 1000; }
constexpr SimTime sim_ms(std::int64_t v) { return v * 1000000; }
inline SimTime sim_seconds(double s) { return static_cast<SimTime>(std::llround(s * 1e9)); }
inline double to_seconds(SimTime t) { return static_cast<double>(t) * 1e-9; }

// ---------------------------------------------------------------------------
// Addresses

struct MacAddr {
  std::array<std::uint8_t, 6> b{};

  static MacAddr broadcast() { return {{0xff, 0xff, 0xff, 0xff, 0xff, 0xff}}; }
  bool is_broadcast() const { return *this == broadcast(); }

  static MacAddr parse(std::string_view s) {
    MacAddr m;
    if (s.size() != 17) throw std::invalid_argument("bad mac: " + std::string(s));
    auto nib = [&](char c) -> int {
      if (c >= '0' && c <= '9') return c - '0';
      if (c >= 'a' && c <= 'f') return c - 'a' + 10;
      if (c >= 'A' && c <= 'F') return c - 'A' + 10;
      throw std::invalid_argument("bad mac: " + std::string(s));
    };
    for (int i = 0; i < 6; ++i) {
      if (i && s[i * 3 - 1] != ':') throw std::invalid_argument("bad mac: " + std::string(s));
      m.b[i] = static_cast<std::uint8_t>(nib(s[i * 3]) << 4 | nib(s[i * 3 + 1]));
    }
    return m;
  }

  std::string str() const {
    char out[18];
    std::snprintf(out, sizeof out, "%02x:%02x:%02x:%02x:%02x:%02x", b[0], b[1], b[2], b[3], b[4],
                  b[5]);
    return out;
  }

  auto operator<=>(const MacAddr&) const = default;
};

struct IpAddr {
  std::array<std::uint8_t, 4> b{};

  static IpAddr parse(std::string_view s) {
    IpAddr ip;
    int part = 0, val = -1;
    for (char c : s) {
      if (c == '.') {
        if (val < 0 || part >= 3) throw std::invalid_argument("bad ip: " + std::string(s));
        ip.b[part++] = static_cast<std::uint8_t>(val);
        val = -1;
      } else if (c >= '0' && c <= '9') {
        val = (val < 0 ? 0 : val * 10) + (c - '0');
        if (val > 255) throw std::invalid_argument("bad ip: " + std::string(s));
      } else {
        throw std::invalid_argument("bad ip: " + std::string(s));
      }
    }
    if (part != 3 || val < 0) throw std::invalid_argument("bad ip: " + std::string(s));
    ip.b[3] = static_cast<std::uint8_t>(val);
    return ip;
  }

  std::string str() const {
    return std::to_string(b[0]) + "." + std::to_string(b[1]) + "." + std::to_string(b[2]) + "." +
           std::to_string(b[3]);
  }

  auto operator<=>(const IpAddr&) const = default;
};

// ---------------------------------------------------------------------------
// Frames

enum class FrameKind { ArpRequest, ArpReply, Stream };

inline const char* frame_kind_name(FrameKind k) {
  switch (k) {
    case FrameKind::ArpRequest: return "arp_request";
    case FrameKind::ArpReply: return "arp_reply";
    case FrameKind::Stream: return "stream";
  }
  return "?";
}

// One link-layer unit. Stream frames carry exactly one pub/sub unit (a
// connection header or one length-prefixed message, plus any auth trailer).
// ArpRequest payload: 4-byte queried ip. ArpReply payload: 4-byte claimed ip
// followed by the 6-byte claimed mac.
struct Frame {
  MacAddr src_mac, dst_mac;
  IpAddr src_ip, dst_ip;
  std::uint16_t src_port = 0, dst_port = 0;
  FrameKind kind = FrameKind::Stream;
  Bytes payload;
  SimTime timestamp = 0;  // delivery time, stamped by the switch
  std::string pitm;       // attacker annotation, empty when untouched
};

inline Bytes arp_request_payload(IpAddr target) { return Bytes(target.b.begin(), target.b.end()); }

inline Bytes arp_reply_payload(IpAddr claim_ip, MacAddr claim_mac) {
  Bytes p(claim_ip.b.begin(), claim_ip.b.end());
  p.insert(p.end(), claim_mac.b.begin(), claim_mac.b.end());
  return p;
}

inline IpAddr arp_payload_ip(const Bytes& p) {
  IpAddr ip;
  std::copy_n(p.begin(), 4, ip.b.begin());
  return ip;
}

inline MacAddr arp_reply_payload_mac(const Bytes& p) {
  MacAddr m;
  std::copy_n(p.begin() + 4, 6, m.b.begin());
  return m;
}

// ---------------------------------------------------------------------------
// Event queue

class EventQueue {
 public:
  void schedule(SimTime at, std::function<void()> fn) {
    if (at < now_) at = now_;  // clock never moves backward
    heap_.push(Ev{at, seq_++, std::move(fn)});
  }

  SimTime now() const { return now_; }
  bool empty() const { return heap_.empty(); }

  // Runs events with timestamp <= end; leaves the clock at end.
  void run_until(SimTime end) {
    while (!heap_.empty() && heap_.top().at <= end) {
      Ev ev = heap_.top();
      heap_.pop();
      now_ = ev.at;
      try {
        ev.fn();
      } catch (const std::exception& e) {
        throw std::runtime_error("at t=" + std::to_string(to_seconds(now_)) + "s: " + e.what());
      }
    }
    now_ = end;
  }

 private:
  struct Ev {
    SimTime at;
    std::uint64_t seq;
    std::function<void()> fn;
  };
  struct Later {
    bool operator()(const Ev& a, const Ev& b) const {
      return a.at != b.at ? a.at > b.at : a.seq > b.seq;
    }
  };

  std::priority_queue<Ev, std::vector<Ev>, Later> heap_;
  std::uint64_t seq_ = 0;
  SimTime now_ = 0;
};

// ---------------------------------------------------------------------------
// Trace

struct TraceEntry {
  Frame frame;
  std::vector<std::string> delivered_to;
  bool dropped = false;
};

class TraceLog {
 public:
  void record(TraceEntry e) { entries_.push_back(std::move(e)); }
  const std::vector<TraceEntry>& entries() const { return entries_; }

  // One frame per line: timestamp, kind, addresses, payload as hex.
  void write_jsonl(std::ostream& os) const {
    for (const auto& e : entries_) {
      nlohmann::ordered_json j;
      j["t"] = e.frame.timestamp;
      j["kind"] = frame_kind_name(e.frame.kind);
      j["src_mac"] = e.frame.src_mac.str();
      j["dst_mac"] = e.frame.dst_mac.str();
      j["src_ip"] = e.frame.src_ip.str();
      j["dst_ip"] = e.frame.dst_ip.str();
      j["src_port"] = e.frame.src_port;
      j["dst_port"] = e.frame.dst_port;
      j["payload"] = to_hex(e.frame.payload);
      j["delivered_to"] = e.delivered_to;
      if (e.dropped) j["dropped"] = true;
      if (!e.frame.pitm.empty()) j["pitm"] = e.frame.pitm;
      os << j.dump() << "\n";
    }
  }

 private:
  std::vector<TraceEntry> entries_;
};

// ---------------------------------------------------------------------------
// Hosts and the switch

class Network;

// ARP cache. Accepts whatever the latest reply claims; that gullibility is
// the modeled vulnerability. Entries never expire within a scenario.
class ArpCache {
 public:
  std::optional<MacAddr> lookup(IpAddr ip) const {
    auto it = map_.find(ip);
    if (it == map_.end()) return std::nullopt;
    return it->second;
  }
  void learn(IpAddr ip, MacAddr mac) { map_[ip] = mac; }
  const std::map<IpAddr, MacAddr>& entries() const { return map_; }

 private:
  std::map<IpAddr, MacAddr> map_;
};

class Host {
 public:
  Host(std::string name, IpAddr ip, MacAddr mac)
      : name_(std::move(name)), ip_(ip), mac_(mac) {}
  virtual ~Host() = default;

  const std::string& name() const { return name_; }
  IpAddr ip() const { return ip_; }
  MacAddr mac() const { return mac_; }
  ArpCache& arp_cache() { return arp_; }
  const ArpCache& arp_cache() const { return arp_; }
  Network& net() const { return *net_; }

  void handle_frame(const Frame& f);

  // Resolves ip to a mac: cache hit answers immediately, otherwise an
  // ArpRequest goes out and the continuation fires on the first reply or
  // with nullopt at the timeout.
  void resolve(IpAddr ip, std::function<void(std::optional<MacAddr>)> done);

  // Gratuitous/forged replies included; `to_mac` is the link-layer target.
  void send_arp_reply(MacAddr to_mac, IpAddr to_ip, IpAddr claim_ip, MacAddr claim_mac);

  void send_stream(MacAddr dst_mac, IpAddr dst_ip, std::uint16_t src_port, std::uint16_t dst_port,
                   Bytes payload);

 protected:
  virtual void on_stream(const Frame&) {}
  // Frames whose dst_mac is ours but dst_ip is not: only seen under a
  // poisoned cache. Default hosts ignore them; the attacker overrides.
  virtual void on_diverted(const Frame&) {}

 private:
  friend class Network;

  void handle_arp(const Frame& f);

  std::string name_;
  IpAddr ip_;
  MacAddr mac_;
  ArpCache arp_;
  Network* net_ = nullptr;

  struct PendingResolve {
    IpAddr ip;
    std::function<void(std::optional<MacAddr>)> done;
    bool settled = false;
  };
  std::vector<std::shared_ptr<PendingResolve>> pending_;
};

class Network {
 public:
  explicit Network(SimTime link_latency = sim_ms(1), SimTime arp_timeout = sim_ms(100))
      : latency_(link_latency), arp_timeout_(arp_timeout) {}

  SimTime link_latency() const { return latency_; }
  SimTime arp_timeout() const { return arp_timeout_; }
  EventQueue& events() { return events_; }
  SimTime now() const { return events_.now(); }
  TraceLog& trace() { return trace_; }
  const TraceLog& trace() const { return trace_; }

  void attach(std::shared_ptr<Host> host) {
    if (by_mac_.count(host->mac())) throw std::invalid_argument("duplicate mac on subnet");
    if (by_ip_.count(host->ip())) throw std::invalid_argument("duplicate ip on subnet");
    host->net_ = this;
    by_mac_[host->mac()] = host.get();
    by_ip_[host->ip()] = host.get();
    hosts_.push_back(std::move(host));
  }

  Host* find_by_name(std::string_view name) const {
    for (const auto& h : hosts_)
      if (h->name() == name) return h.get();
    return nullptr;
  }

  // The scenario's address space, used by subnet scans.
  std::vector<IpAddr> known_ips() const {
    std::vector<IpAddr> out;
    out.reserve(by_ip_.size());
    for (const auto& [ip, h] : by_ip_) out.push_back(ip);
    return out;
  }

  // Hands a frame to the switch; it reaches the owner of dst_mac one link
  // latency later. Unknown unicast macs are dropped and counted.
  void transmit(Frame f) {
    ++injected_;
    events_.schedule(events_.now() + latency_, [this, f = std::move(f)]() mutable {
      f.timestamp = events_.now();
      deliver(std::move(f));
    });
  }

  std::uint64_t injected() const { return injected_; }
  std::uint64_t delivered() const { return delivered_; }
  std::uint64_t dropped() const { return dropped_; }

 private:
  void deliver(Frame f) {
    TraceEntry entry;
    entry.frame = f;
    if (f.dst_mac.is_broadcast()) {
      std::vector<Host*> targets;
      for (const auto& [mac, h] : by_mac_)
        if (mac != f.src_mac) targets.push_back(h);
      for (Host* h : targets) entry.delivered_to.push_back(h->name());
      ++delivered_;
      trace_.record(std::move(entry));
      for (Host* h : targets) h->handle_frame(f);
      return;
    }
    auto it = by_mac_.find(f.dst_mac);
    if (it == by_mac_.end()) {
      ++dropped_;
      entry.dropped = true;
      trace_.record(std::move(entry));
      return;
    }
    entry.delivered_to.push_back(it->second->name());
    ++delivered_;
    trace_.record(std::move(entry));
    it->second->handle_frame(f);
  }

  SimTime latency_;
  SimTime arp_timeout_;
  EventQueue events_;
  TraceLog trace_;
  std::vector<std::shared_ptr<Host>> hosts_;
  std::map<MacAddr, Host*> by_mac_;
  std::map<IpAddr, Host*> by_ip_;
  std::uint64_t injected_ = 0, delivered_ = 0, dropped_ = 0;
};

// ---------------------------------------------------------------------------
// Host implementation

inline void Host::handle_frame(const Frame& f) {
  if (!f.dst_mac.is_broadcast() && f.dst_ip != ip_) {
    on_diverted(f);  // only reaches us via a poisoned cache
    return;
  }
  if (f.kind == FrameKind::ArpRequest || f.kind == FrameKind::ArpReply) {
    handle_arp(f);
    return;
  }
  on_stream(f);
}

inline void Host::handle_arp(const Frame& f) {
  if (f.kind == FrameKind::ArpRequest) {
    IpAddr wanted = arp_payload_ip(f.payload);
    if (wanted == ip_) {
      // Hosts always answer for their own address, with the truth.
      Frame reply;
      reply.kind = FrameKind::ArpReply;
      reply.src_mac = mac_;
      reply.dst_mac = f.src_mac;
      reply.src_ip = ip_;
      reply.dst_ip = f.src_ip;
      reply.payload = arp_reply_payload(ip_, mac_);
      net_->transmit(std::move(reply));
    }
    return;
  }
  // Any reply updates the cache, no questions asked.
  IpAddr claim_ip = arp_payload_ip(f.payload);
  MacAddr claim_mac = arp_reply_payload_mac(f.payload);
  arp_.learn(claim_ip, claim_mac);
  std::vector<std::function<void(std::optional<MacAddr>)>> fire;
  for (auto& p : pending_) {
    if (!p->settled && p->ip == claim_ip) {
      p->settled = true;
      fire.push_back(std::move(p->done));
    }
  }
  std::erase_if(pending_, [](const auto& p) { return p->settled; });
  for (auto& fn : fire) fn(claim_mac);  // may start new resolutions
}

inline void Host::resolve(IpAddr ip, std::function<void(std::optional<MacAddr>)> done) {
  if (auto mac = arp_.lookup(ip)) {
    done(*mac);
    return;
  }
  auto pending = std::make_shared<PendingResolve>();
  pending->ip = ip;
  pending->done = std::move(done);
  pending_.push_back(pending);

  Frame req;
  req.kind = FrameKind::ArpRequest;
  req.src_mac = mac_;
  req.dst_mac = MacAddr::broadcast();
  req.src_ip = ip_;
  req.dst_ip = ip;
  req.payload = arp_request_payload(ip);
  net_->transmit(std::move(req));

  net_->events().schedule(net_->now() + net_->arp_timeout(), [this, pending] {
    if (!pending->settled) {
      pending->settled = true;
      pending->done(std::nullopt);
      std::erase_if(pending_, [&](const auto& p) { return p.get() == pending.get(); });
    }
  });
}

inline void Host::send_arp_reply(MacAddr to_mac, IpAddr to_ip, IpAddr claim_ip,
                                 MacAddr claim_mac) {
  Frame f;
  f.kind = FrameKind::ArpReply;
  f.src_mac = mac_;
  f.dst_mac = to_mac;
  f.src_ip = ip_;
  f.dst_ip = to_ip;
  f.payload = arp_reply_payload(claim_ip, claim_mac);
  net_->transmit(std::move(f));
}

inline void Host::send_stream(MacAddr dst_mac, IpAddr dst_ip, std::uint16_t src_port,
                              std::uint16_t dst_port, Bytes payload) {
  Frame f;
  f.kind = FrameKind::Stream;
  f.src_mac = mac_;
  f.dst_mac = dst_mac;
  f.src_ip = ip_;
  f.dst_ip = dst_ip;
  f.src_port = src_port;
  f.dst_port = dst_port;
  f.payload = std::move(payload);
  net_->transmit(std::move(f));
}

// ---------------------------------------------------------------------------
// Scan helper (Alg. 1 step 1): request every known subnet address, collect
// responders from the scanner's own cache after the timeout window.

inline void scan_subnet(Host& scanner,
                        std::function<void(std::vector<std::pair<IpAddr, MacAddr>>)> done) {
  Network& net = scanner.net();
  std::vector<IpAddr> targets;
  for (IpAddr ip : net.known_ips())
    if (ip != scanner.ip()) targets.push_back(ip);
  for (IpAddr ip : targets) {
    Frame req;
    req.kind = FrameKind::ArpRequest;
    req.src_mac = scanner.mac();
    req.dst_mac = MacAddr::broadcast();
    req.src_ip = scanner.ip();
    req.dst_ip = ip;
    req.payload = arp_request_payload(ip);
    net.transmit(std::move(req));
  }
  net.events().schedule(net.now() + net.arp_timeout(), [&scanner, targets, done = std::move(done)] {
    std::vector<std::pair<IpAddr, MacAddr>> found;
    for (IpAddr ip : targets)
      if (auto mac = scanner.arp_cache().lookup(ip)) found.emplace_back(ip, *mac);
    done(std::move(found));  // targets are already ip-sorted
  });
}

}  // namespace twinsec::netsim
