// twinsec: deterministic simulator for person-in-the-middle attacks on the
// DTS->CPS command flow of ROS1-style robot systems.
//
//   twinsec run <scenario.json|builtin> [--seed N] [--out DIR]
//                                       [--no-attack] [--auth] [--anomaly]
//   twinsec inspect <trace.jsonl>
//   twinsec codec --schema NAME --hex BYTES
//   twinsec list-builtins
//
// Exit codes: 0 clean run, 1 validation/usage error, 2 runtime error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "twinsec/runner.hpp"

namespace fs = std::filesystem;
using namespace twinsec;

namespace {

std::string printable(const std::string& s) {
  std::string out;
  for (unsigned char c : s) {
    if (c >= 0x20 && c < 0x7f) {
      out.push_back(static_cast<char>(c));
    } else {
      char buf[5];
      std::snprintf(buf, sizeof buf, "\\x%02x", c);
      out += buf;
    }
  }
  return out;
}

std::string value_to_text(const wire::FieldValue& v) {
  using wire::Kind;
  switch (v.kind()) {
    case Kind::Float64: return harness::detail::fmt_double(v.as_f64());
    case Kind::Int32: return std::to_string(v.as_i32());
    case Kind::UInt32: return std::to_string(v.as_u32());
    case Kind::Str: return "\"" + printable(v.as_str()) + "\"";
    case Kind::Duration: {
      const auto& d = v.as_duration();
      return std::to_string(d.secs) + "s+" + std::to_string(d.nsecs) + "ns";
    }
    case Kind::Time: {
      const auto& t = v.as_time();
      return std::to_string(t.secs) + "s+" + std::to_string(t.nsecs) + "ns";
    }
    case Kind::Array: {
      std::string out = "[";
      const auto& a = v.as_array();
      for (std::size_t i = 0; i < a.size(); ++i) {
        if (i) out += ", ";
        out += value_to_text(a[i]);
      }
      return out + "]";
    }
    case Kind::Record: {
      std::string out = "{";
      const auto& r = v.as_record();
      for (std::size_t i = 0; i < r.size(); ++i) {
        if (i) out += ", ";
        out += r[i].first + ": " + value_to_text(r[i].second);
      }
      return out + "}";
    }
  }
  return "?";
}

int cmd_run(const std::string& scenario_arg, std::optional<std::uint64_t> seed,
            std::string out_dir, bool no_attack, bool auth, bool anomaly) {
  harness::Scenario s;
  if (auto builtin = harness::load_builtin(scenario_arg)) {
    s = *builtin;
  } else if (fs::exists(scenario_arg)) {
    s = harness::load_scenario_file(scenario_arg);
  } else {
    throw harness::ValidationError("no builtin or file named '" + scenario_arg +
                                   "' (try list-builtins)");
  }
  if (seed) s.seed = *seed;
  if (no_attack) s.attack.reset();
  if (auth) s.auth.enabled = true;
  if (anomaly) s.anomaly.enabled = true;

  if (out_dir.empty()) {
    const char* env = std::getenv("TWINSEC_OUT");
    out_dir = env && *env ? env : "twinsec_out";
  }

  harness::RunReport rep = harness::run_scenario(s, out_dir);

  std::cout << "scenario:        " << rep.scenario_name << " (seed " << rep.seed << ")\n";
  std::cout << "simulated:       " << s.measure_from_s + s.duration_s << " s ("
            << rep.duration_s << " s measured window), wall " << rep.wall_seconds << " s\n";
  std::cout << "attack:          "
            << (rep.attack_enabled ? attack::attack_status_name(rep.attack_status) : "disabled")
            << "\n";
  std::cout << "frames seen:     " << rep.intercept.seen << " (mutated " << rep.intercept.mutated
            << ", forwarded " << rep.intercept.forwarded << ")\n";
  std::cout << "guard:           accepted " << rep.guard.accepted << ", rejected "
            << rep.guard.rejected() << " (auth " << rep.guard.rejected_auth << ", anomaly "
            << rep.guard.rejected_anomaly << ")\n";
  if (s.auth.enabled)
    std::cout << "guard note:      channel auth is integrity protection, not confidentiality;"
                 " tampered commands are dropped, so a live attacker degrades into denial of"
                 " service (see the rejected count)\n";
  std::cout << "max divergence:  " << harness::detail::fmt_double(rep.safety.max_divergence)
            << "\n";
  if (rep.safety.first_violation_t) {
    std::cout << "violation:       " << plant::violation_kind_name(*rep.safety.violation_kind)
              << " at t=" << harness::detail::fmt_time(*rep.safety.first_violation_t) << " s\n";
  } else {
    std::cout << "violation:       none\n";
  }
  std::cout << "outputs:         " << rep.trace_path.string() << "\n"
            << "                 " << rep.dts_csv_path.string() << ", "
            << rep.cps_csv_path.string() << "\n"
            << "                 " << rep.metrics_csv_path.string() << ", "
            << rep.divergence_csv_path.string() << "\n";
  return 0;
}

int cmd_inspect(const std::string& trace_path) {
  std::ifstream in(trace_path, std::ios::binary);
  if (!in) throw harness::ValidationError("cannot open trace: " + trace_path);
  const auto& reg = wire::builtin_schemas();

  // connection tuple -> message type, learned from observed headers
  std::map<std::string, const wire::MessageSchema*> conn_schema;
  auto conn_key = [](const nlohmann::json& j) {
    std::string a = j.at("src_ip").get<std::string>() + ":" +
                    std::to_string(j.at("src_port").get<int>());
    std::string b = j.at("dst_ip").get<std::string>() + ":" +
                    std::to_string(j.at("dst_port").get<int>());
    return a < b ? a + "|" + b : b + "|" + a;
  };

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw harness::ValidationError(trace_path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    double t = j.at("t").get<double>() * 1e-9;
    std::string kind = j.at("kind").get<std::string>();
    char head[160];
    std::snprintf(head, sizeof head, "[%12.6f] %-11s %s:%d -> %s:%d", t, kind.c_str(),
                  j.at("src_ip").get<std::string>().c_str(), j.at("src_port").get<int>(),
                  j.at("dst_ip").get<std::string>().c_str(), j.at("dst_port").get<int>());
    std::cout << head;
    if (j.contains("pitm")) std::cout << "  pitm=" << j.at("pitm").get<std::string>();
    if (j.contains("dropped")) std::cout << "  DROPPED";
    if (j.contains("delivered_to")) {
      std::cout << "  ->";
      for (const auto& n : j.at("delivered_to")) std::cout << " " << n.get<std::string>();
    }
    std::cout << "\n";

    Bytes payload = from_hex(j.at("payload").get<std::string>());
    if (kind == "arp_request" && payload.size() >= 4) {
      std::cout << "    who-has " << netsim::arp_payload_ip(payload).str() << "\n";
    } else if (kind == "arp_reply" && payload.size() >= 10) {
      std::cout << "    " << netsim::arp_payload_ip(payload).str() << " is-at "
                << netsim::arp_reply_payload_mac(payload).str() << "\n";
    } else if (kind == "stream") {
      // header?
      bool shown = false;
      try {
        wire::ConnectionHeader h = wire::decode_header(payload);
        if (h.find("topic") || h.find("error")) {
          std::cout << "    header:";
          for (const auto& [k, v] : h.entries) std::cout << " " << k << "=" << printable(v);
          std::cout << "\n";
          if (auto type = h.find("type"))
            if (const auto* schema = reg.find(*type)) conn_schema[conn_key(j)] = schema;
          shown = true;
        }
      } catch (const wire::WireError&) {
      }
      if (!shown) {
        auto it = conn_schema.find(conn_key(j));
        if (it != conn_schema.end() && payload.size() >= 4) {
          ByteReader r(payload);
          std::uint64_t msg_len = 4 + static_cast<std::uint64_t>(r.u32());
          Bytes msg(payload.begin(),
                    payload.begin() + std::min<std::uint64_t>(msg_len, payload.size()));
          try {
            wire::FieldValue v = wire::decode_message(*it->second, msg);
            std::cout << "    " << it->second->type_name << " " << value_to_text(v);
            if (payload.size() > msg_len) {
              Bytes trailer(payload.begin() + msg_len, payload.end());
              std::cout << "  +trailer " << to_hex(trailer);
            }
            std::cout << "\n";
          } catch (const wire::WireError& e) {
            std::cout << "    undecodable (" << e.what() << ")\n";
          }
        } else {
          std::cout << "    " << payload.size() << " bytes (unknown connection)\n";
        }
      }
    }
  }
  return 0;
}

int cmd_codec(const std::string& schema_name, const std::string& hex) {
  const auto* schema = wire::builtin_schemas().find(schema_name);
  if (!schema) {
    std::string known;
    for (const auto& [name, s] : wire::builtin_schemas().all()) known += "\n  " + name;
    throw harness::ValidationError("unknown schema '" + schema_name + "'; known:" + known);
  }
  Bytes buf;
  try {
    buf = from_hex(hex);
  } catch (const std::invalid_argument& e) {
    throw harness::ValidationError(e.what());
  }
  wire::FieldValue v;
  try {
    v = wire::decode_message(*schema, buf);
  } catch (const wire::WireError& e) {
    throw harness::ValidationError(std::string("decode failed: ") + e.what());
  }
  std::cout << schema->type_name << " (md5 " << schema->md5sum << ")\n";
  std::cout << value_to_text(v) << "\n";
  Bytes re = wire::encode_message(*schema, v);
  std::cout << "re-encoded: " << to_hex(re) << "\n";
  std::cout << "round-trip: " << (re == buf ? "ok" : "MISMATCH") << "\n";
  return re == buf ? 0 : 2;
}

int cmd_list_builtins() {
  for (const auto& b : harness::builtin_scenarios())
    std::cout << b.name << "\n    " << b.description << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deterministic PitM attack simulator for DTS-CPS robot systems"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run a scenario (builtin name or JSON file)");
  std::string scenario_arg, out_dir;
  std::optional<std::uint64_t> seed;
  bool no_attack = false, auth = false, anomaly = false;
  run->add_option("scenario", scenario_arg, "builtin name or scenario.json path")->required();
  run->add_option("--seed", seed, "override the scenario seed");
  run->add_option("--out", out_dir, "output directory (default $TWINSEC_OUT or ./twinsec_out)");
  run->add_flag("--no-attack", no_attack, "strip the attack plan (baseline run)");
  run->add_flag("--auth", auth, "enable the authenticated-channel guard");
  run->add_flag("--anomaly", anomaly, "enable the command anomaly detector");

  auto* inspect = app.add_subcommand("inspect", "pretty-print a trace.jsonl, decoding messages");
  std::string trace_path;
  inspect->add_option("trace", trace_path, "trace.jsonl path")->required();

  auto* codec = app.add_subcommand("codec", "decode hex message bytes and re-encode");
  std::string schema_name, hex;
  codec->add_option("--schema", schema_name, "message type name")->required();
  codec->add_option("--hex", hex, "length-prefixed message bytes as hex")->required();

  app.add_subcommand("list-builtins", "list embedded scenarios");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << e.what() << "\n";
    return 1;
  }

  try {
    if (run->parsed()) return cmd_run(scenario_arg, seed, out_dir, no_attack, auth, anomaly);
    if (inspect->parsed()) return cmd_inspect(trace_path);
    if (codec->parsed()) return cmd_codec(schema_name, hex);
    return cmd_list_builtins();
  } catch (const harness::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const harness::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 2;
  }
}
