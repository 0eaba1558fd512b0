#include "twinsec/guard.hpp"

#include <gtest/gtest.h>

#include "twinsec/rng.hpp"

using namespace twinsec;
using namespace twinsec::guard;

namespace {

Bytes some_message() {
  // any length-prefixed bytes will do for tag tests
  return Bytes{8, 0, 0, 0, 1, 2, 3, 4, 5, 6, 7, 8};
}

TEST(AuthTag, Deterministic) {
  AuthConfig cfg{.key = "shared-secret"};
  Bytes m = some_message();
  EXPECT_EQ(tag_message(cfg, "/cmd_vel", m), tag_message(cfg, "/cmd_vel", m));
  EXPECT_EQ(tag_message(cfg, "/cmd_vel", m).size(), m.size() + AuthConfig::kTagLen);
}

TEST(AuthTag, EmptyBodyDefined) {
  AuthConfig cfg{.key = "k"};
  Bytes tagged = tag_message(cfg, "/t", {});
  EXPECT_EQ(tagged.size(), AuthConfig::kTagLen);
  auto body = verify_message(cfg, "/t", tagged);
  ASSERT_TRUE(body.has_value());
  EXPECT_TRUE(body->empty());
}

TEST(AuthTag, DifferingKeysDifferingTags) {
  // 1e5 random key pairs, same body: expect zero tag collisions.
  Bytes m = some_message();
  Rng rng(314159);
  int collisions = 0;
  for (int i = 0; i < 100000; ++i, rng.next_u64()) {
    AuthConfig a{.key = "k" + std::to_string(rng.next_u64())};
    AuthConfig b{.key = "k" + std::to_string(rng.next_u64())};
    if (a.key == b.key) continue;
    if (compute_tag(a, "/t", m) == compute_tag(b, "/t", m)) ++collisions;
  }
  EXPECT_EQ(collisions, 0);
}

TEST(AuthTag, TopicBindsTag) {
  AuthConfig cfg{.key = "k"};
  Bytes m = some_message();
  EXPECT_NE(compute_tag(cfg, "/cmd_vel", m), compute_tag(cfg, "/other", m));
}

TEST(AuthVerify, UntamperedAccepted) {
  AuthConfig cfg{.key = "shared"};
  Bytes m = some_message();
  auto body = verify_message(cfg, "/cmd_vel", tag_message(cfg, "/cmd_vel", m));
  ASSERT_TRUE(body.has_value());
  EXPECT_EQ(*body, m);
}

TEST(AuthVerify, TamperRejected) {
  AuthConfig cfg{.key = "shared"};
  Bytes tagged = tag_message(cfg, "/cmd_vel", some_message());
  tagged[5] ^= 0x01;  // flip one body bit
  EXPECT_FALSE(verify_message(cfg, "/cmd_vel", tagged).has_value());
}

TEST(AuthVerify, TooShortRejected) {
  AuthConfig cfg{.key = "shared"};
  EXPECT_FALSE(verify_message(cfg, "/cmd_vel", Bytes{1, 2, 3}).has_value());
}

TEST(AuthVerify, WrongKeyRejected) {
  AuthConfig pub{.key = "alpha"};
  AuthConfig sub{.key = "beta"};
  Bytes tagged = tag_message(pub, "/t", some_message());
  EXPECT_FALSE(verify_message(sub, "/t", tagged).has_value());
}

TEST(AuthVerify, SequenceNumbersDetectReplay) {
  AuthConfig cfg{.key = "shared", .sequence_numbers = true};
  Bytes m = some_message();
  Bytes first = tag_message(cfg, "/t", m, 0);
  EXPECT_TRUE(verify_message(cfg, "/t", first, 0).has_value());
  // replaying seq-0 bytes against expected seq 1 fails
  EXPECT_FALSE(verify_message(cfg, "/t", first, 1).has_value());
}

wire::FieldValue twist_x(double x) {
  auto vec = [](double a, double b, double c) {
    return wire::FieldValue::record({{"x", wire::FieldValue::float64(a)},
                                     {"y", wire::FieldValue::float64(b)},
                                     {"z", wire::FieldValue::float64(c)}});
  };
  return wire::FieldValue::record({{"linear", vec(x, 0, 0)}, {"angular", vec(0, 0, 0)}});
}

TEST(Anomaly, StepChangeRejected) {
  AnomalyConfig cfg;
  cfg.rules.push_back(AnomalyConfig::make_rule("linear.x", 0.0, 1.2, 0.2));
  AnomalyMonitor mon(cfg);
  EXPECT_FALSE(mon.check(twist_x(1.0)).has_value()) << "first message, absolute bounds only";
  auto rej = mon.check(twist_x(1.5));
  ASSERT_TRUE(rej.has_value());
  EXPECT_NE(rej->find("AbsoluteBound"), std::string::npos);  // 1.5 > 1.2 too
}

TEST(Anomaly, StepChangeAloneRejected) {
  AnomalyConfig cfg;
  cfg.rules.push_back(AnomalyConfig::make_rule("linear.x", std::nullopt, std::nullopt, 0.2));
  AnomalyMonitor mon(cfg);
  EXPECT_FALSE(mon.check(twist_x(1.0)).has_value());
  auto rej = mon.check(twist_x(1.5));
  ASSERT_TRUE(rej.has_value());
  EXPECT_NE(rej->find("StepChange"), std::string::npos);
  // reject must not update state: 1.1 is within 0.2 of the last ACCEPTED 1.0
  EXPECT_FALSE(mon.check(twist_x(1.1)).has_value());
}

TEST(Anomaly, CompliantStepAccepted) {
  AnomalyConfig cfg;
  cfg.rules.push_back(AnomalyConfig::make_rule("linear.x", 0.0, 1.2, 0.2));
  AnomalyMonitor mon(cfg);
  EXPECT_FALSE(mon.check(twist_x(1.0)).has_value());
  EXPECT_FALSE(mon.check(twist_x(1.1)).has_value());
}

TEST(Anomaly, FirstMessageAbsoluteBoundsOnly) {
  AnomalyConfig cfg;
  cfg.rules.push_back(AnomalyConfig::make_rule("linear.x", 0.0, 1.2, 0.2));
  AnomalyMonitor mon(cfg);
  EXPECT_FALSE(mon.check(twist_x(1.0)).has_value()) << "1.0 within [0, 1.2]";
  AnomalyMonitor mon2(cfg);
  EXPECT_TRUE(mon2.check(twist_x(1.5)).has_value()) << "1.5 outside [0, 1.2]";
}

TEST(Anomaly, DetectorBoundProperty) {
  // never accepts consecutive values differing by more than the step bound
  AnomalyConfig cfg;
  cfg.rules.push_back(AnomalyConfig::make_rule("linear.x", std::nullopt, std::nullopt, 0.25));
  AnomalyMonitor mon(cfg);
  Rng rng(77);
  double last_accepted = 0.0;
  bool have_accepted = false;
  for (int i = 0; i < 2000; ++i) {
    double v = rng.next_in(-2.0, 2.0);
    bool accepted = !mon.check(twist_x(v)).has_value();
    if (accepted) {
      if (have_accepted) {
        ASSERT_LE(std::abs(v - last_accepted), 0.25);
      }
      last_accepted = v;
      have_accepted = true;
    }
  }
}

}  // namespace
