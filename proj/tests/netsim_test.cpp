#include "twinsec/netsim.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace twinsec;
using namespace twinsec::netsim;

namespace {

struct Recorder : Host {
  using Host::Host;
  std::vector<Frame> streams;
  void on_stream(const Frame& f) override { streams.push_back(f); }
};

struct Lan {
  Network net;
  std::shared_ptr<Recorder> a, b, m;

  Lan() {
    a = std::make_shared<Recorder>("alpha", IpAddr::parse("10.0.0.1"),
                                   MacAddr::parse("02:00:00:00:00:01"));
    b = std::make_shared<Recorder>("bravo", IpAddr::parse("10.0.0.2"),
                                   MacAddr::parse("02:00:00:00:00:02"));
    m = std::make_shared<Recorder>("mallory", IpAddr::parse("10.0.0.66"),
                                   MacAddr::parse("02:00:00:00:00:66"));
    net.attach(a);
    net.attach(b);
    net.attach(m);
  }
};

TEST(Addresses, ParseAndFormat) {
  EXPECT_EQ(IpAddr::parse("10.0.0.1").str(), "10.0.0.1");
  EXPECT_EQ(MacAddr::parse("02:00:00:00:00:01").str(), "02:00:00:00:00:01");
  EXPECT_THROW(IpAddr::parse("10.0.0.256"), std::invalid_argument);
  EXPECT_THROW(IpAddr::parse("10.0.0"), std::invalid_argument);
  EXPECT_THROW(MacAddr::parse("02:00"), std::invalid_argument);
  EXPECT_TRUE(MacAddr::broadcast().is_broadcast());
}

TEST(Switch, UnicastDeliveredWithLatency) {
  Lan lan;
  lan.a->send_stream(lan.b->mac(), lan.b->ip(), 1, 2, {0xaa});
  lan.net.events().run_until(sim_ms(10));
  ASSERT_EQ(lan.b->streams.size(), 1u);
  EXPECT_EQ(lan.b->streams[0].timestamp, sim_ms(1));
  EXPECT_EQ(lan.b->streams[0].payload, Bytes{0xaa});
}

TEST(Switch, BroadcastReachesAllButSender) {
  Lan lan;
  Frame f;
  f.kind = FrameKind::Stream;
  f.src_mac = lan.a->mac();
  f.dst_mac = MacAddr::broadcast();
  f.src_ip = lan.a->ip();
  f.dst_ip = IpAddr::parse("255.255.255.255");
  lan.net.transmit(f);
  lan.net.events().run_until(sim_ms(10));
  ASSERT_EQ(lan.net.trace().entries().size(), 1u);
  auto names = lan.net.trace().entries()[0].delivered_to;
  EXPECT_EQ(names, (std::vector<std::string>{"bravo", "mallory"})) << "sender excluded";
  // alpha itself saw nothing
  EXPECT_TRUE(lan.a->streams.empty());
}

TEST(Switch, UnknownMacDroppedAndCounted) {
  Lan lan;
  lan.a->send_stream(MacAddr::parse("02:aa:aa:aa:aa:aa"), lan.b->ip(), 1, 2, {0x01});
  lan.net.events().run_until(sim_ms(10));
  EXPECT_EQ(lan.net.dropped(), 1u);
  EXPECT_TRUE(lan.net.trace().entries()[0].dropped);
  EXPECT_TRUE(lan.b->streams.empty());
}

TEST(Arp, ColdCacheResolves) {
  Lan lan;
  std::optional<MacAddr> got;
  lan.a->resolve(lan.b->ip(), [&](std::optional<MacAddr> m) { got = m; });
  lan.net.events().run_until(sim_ms(10));
  ASSERT_TRUE(got.has_value());
  EXPECT_EQ(*got, lan.b->mac());
  EXPECT_EQ(lan.a->arp_cache().lookup(lan.b->ip()), lan.b->mac());
}

TEST(Arp, PoisonedCacheWins) {
  Lan lan;
  // mallory claims bravo's ip
  lan.m->send_arp_reply(lan.a->mac(), lan.a->ip(), lan.b->ip(), lan.m->mac());
  lan.net.events().run_until(sim_ms(10));
  std::optional<MacAddr> got;
  lan.a->resolve(lan.b->ip(), [&](std::optional<MacAddr> m) { got = m; });
  lan.net.events().run_until(sim_ms(20));
  ASSERT_TRUE(got.has_value());
  EXPECT_EQ(*got, lan.m->mac());
}

TEST(Arp, TimeoutWhenAbsent) {
  Lan lan;
  std::optional<std::optional<MacAddr>> result;
  lan.a->resolve(IpAddr::parse("10.0.0.99"), [&](std::optional<MacAddr> m) { result = m; });
  lan.net.events().run_until(sim_ms(99));
  EXPECT_FALSE(result.has_value()) << "should still be pending";
  lan.net.events().run_until(sim_ms(101));
  ASSERT_TRUE(result.has_value());
  EXPECT_FALSE(result->has_value()) << "resolution must time out";
}

TEST(Arp, GratuitousReplyIdempotent) {
  Lan lan;
  for (int i = 0; i < 3; ++i)
    lan.m->send_arp_reply(lan.a->mac(), lan.a->ip(), lan.b->ip(), lan.m->mac());
  lan.net.events().run_until(sim_ms(10));
  EXPECT_EQ(lan.a->arp_cache().lookup(lan.b->ip()), lan.m->mac());
  EXPECT_EQ(lan.a->arp_cache().entries().size(), 1u);
}

TEST(Scan, FindsAllOthersSorted) {
  Lan lan;
  std::vector<std::pair<IpAddr, MacAddr>> found;
  scan_subnet(*lan.m, [&](auto v) { found = std::move(v); });
  lan.net.events().run_until(sim_ms(200));
  ASSERT_EQ(found.size(), 2u);
  EXPECT_EQ(found[0].first, lan.a->ip());
  EXPECT_EQ(found[0].second, lan.a->mac());
  EXPECT_EQ(found[1].first, lan.b->ip());
  EXPECT_EQ(found[1].second, lan.b->mac());
}

TEST(Scan, AloneFindsNothing) {
  Network net;
  auto solo = std::make_shared<Recorder>("solo", IpAddr::parse("10.0.0.1"),
                                         MacAddr::parse("02:00:00:00:00:01"));
  net.attach(solo);
  std::vector<std::pair<IpAddr, MacAddr>> found{{IpAddr{}, MacAddr{}}};
  scan_subnet(*solo, [&](auto v) { found = std::move(v); });
  net.events().run_until(sim_ms(200));
  EXPECT_TRUE(found.empty());
}

TEST(Scan, PoisoningDoesNotAlterScanResults) {
  Lan lan;
  // poison both victims first
  lan.m->send_arp_reply(lan.a->mac(), lan.a->ip(), lan.b->ip(), lan.m->mac());
  lan.m->send_arp_reply(lan.b->mac(), lan.b->ip(), lan.a->ip(), lan.m->mac());
  lan.net.events().run_until(sim_ms(10));
  std::vector<std::pair<IpAddr, MacAddr>> found;
  scan_subnet(*lan.m, [&](auto v) { found = std::move(v); });
  lan.net.events().run_until(sim_ms(300));
  ASSERT_EQ(found.size(), 2u);
  EXPECT_EQ(found[0].second, lan.a->mac()) << "hosts answer for their own ip";
  EXPECT_EQ(found[1].second, lan.b->mac());
}

TEST(Poison, StreamsDivertToClaimedMac) {
  Lan lan;
  struct Diverter : Recorder {
    using Recorder::Recorder;
    std::vector<Frame> diverted;
    void on_diverted(const Frame& f) override { diverted.push_back(f); }
  };
  Network net;
  auto a = std::make_shared<Recorder>("alpha", IpAddr::parse("10.0.0.1"),
                                      MacAddr::parse("02:00:00:00:00:01"));
  auto b = std::make_shared<Recorder>("bravo", IpAddr::parse("10.0.0.2"),
                                      MacAddr::parse("02:00:00:00:00:02"));
  auto m = std::make_shared<Diverter>("mallory", IpAddr::parse("10.0.0.66"),
                                      MacAddr::parse("02:00:00:00:00:66"));
  net.attach(a);
  net.attach(b);
  net.attach(m);
  m->send_arp_reply(a->mac(), a->ip(), b->ip(), m->mac());
  m->send_arp_reply(b->mac(), b->ip(), a->ip(), m->mac());
  net.events().run_until(sim_ms(10));

  // 100 messages each way, senders consult their (poisoned) caches
  for (int i = 0; i < 100; ++i) {
    net.events().schedule(sim_ms(10 + i), [&] {
      a->send_stream(*a->arp_cache().lookup(b->ip()), b->ip(), 1, 2, {0x01});
      b->send_stream(*b->arp_cache().lookup(a->ip()), a->ip(), 2, 1, {0x02});
    });
  }
  net.events().run_until(sim_ms(500));

  EXPECT_EQ(m->diverted.size(), 200u);
  EXPECT_TRUE(a->streams.empty());
  EXPECT_TRUE(b->streams.empty());
  // trace audit: zero direct victim-to-victim stream deliveries
  for (const auto& e : net.trace().entries()) {
    if (e.frame.kind != FrameKind::Stream) continue;
    bool victim_src = e.frame.src_mac == a->mac() || e.frame.src_mac == b->mac();
    bool victim_dst = e.frame.dst_mac == a->mac() || e.frame.dst_mac == b->mac();
    EXPECT_FALSE(victim_src && victim_dst);
  }
}

TEST(Events, DeterministicTraceBytes) {
  auto run = [] {
    Lan lan;
    lan.a->resolve(lan.b->ip(), [](auto) {});
    for (int i = 0; i < 50; ++i)
      lan.net.events().schedule(sim_ms(5 + i), [&lan, i] {
        lan.a->send_stream(lan.b->mac(), lan.b->ip(), 1, 2, {static_cast<std::uint8_t>(i)});
      });
    lan.net.events().run_until(sim_ms(200));
    std::ostringstream os;
    lan.net.trace().write_jsonl(os);
    return os.str();
  };
  std::string first = run(), second = run();
  EXPECT_FALSE(first.empty());
  EXPECT_EQ(first, second);
}

TEST(Events, ConservationEveryFrameAccountedOnce) {
  Lan lan;
  for (int i = 0; i < 30; ++i) {
    lan.net.events().schedule(sim_ms(i), [&lan] {
      lan.a->send_stream(lan.b->mac(), lan.b->ip(), 1, 2, {0x01});
    });
  }
  lan.a->send_stream(MacAddr::parse("02:dd:dd:dd:dd:dd"), lan.b->ip(), 1, 2, {0x02});
  lan.net.events().run_until(sim_ms(100));
  EXPECT_EQ(lan.net.injected(), lan.net.delivered() + lan.net.dropped());
  EXPECT_EQ(lan.net.injected(), lan.net.trace().entries().size());
}

TEST(Events, ErrorsCarrySimTimestamp) {
  EventQueue q;
  q.schedule(sim_ms(250), [] { throw std::runtime_error("boom"); });
  try {
    q.run_until(sim_seconds(1.0));
    FAIL() << "expected propagation";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("t=0.25"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("boom"), std::string::npos);
  }
}

TEST(Events, ClockNeverMovesBackward) {
  EventQueue q;
  std::vector<SimTime> seen;
  q.schedule(sim_ms(5), [&] { seen.push_back(q.now()); });
  q.schedule(sim_ms(5), [&] {
    seen.push_back(q.now());
    q.schedule(sim_ms(1), [&] { seen.push_back(q.now()); });  // past: clamped to now
  });
  q.schedule(sim_ms(2), [&] { seen.push_back(q.now()); });
  q.run_until(sim_ms(10));
  ASSERT_EQ(seen.size(), 4u);
  EXPECT_TRUE(std::is_sorted(seen.begin(), seen.end()));
  EXPECT_EQ(seen[0], sim_ms(2));
  EXPECT_EQ(seen[3], sim_ms(5));
}

}  // namespace
