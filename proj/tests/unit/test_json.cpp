#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "rmaft/json_io.hpp"

using namespace rmaft;

TEST_CASE("scenario round trip") {
  Scenario s;
  s.name = "rt";
  s.processes = 3;
  s.workload = WorkloadKind::Custom;
  s.programs = {{Op{OpKind::Put, 1, 2, 0, 9}}, {}, {Op{OpKind::Lock, 0}, Op{OpKind::Unlock, 0}}};
  s.protocol.recovery = RecoveryScheme::Locks;
  s.faults = {{2, 11}};
  const auto back = scenario_from_json(scenario_to_json(s));
  CHECK(scenario_to_json(back) == scenario_to_json(s));
  CHECK(back.programs == s.programs);
  CHECK(back.protocol.recovery == RecoveryScheme::Locks);
}

TEST_CASE("malformed JSON reports line and column") {
  const std::string text = "{\n  \"processes\": 4,\n  \"seed\": ,\n}";
  try {
    scenario_from_json(text);
    FAIL("no error");
  } catch (const JsonParseError& e) {
    CHECK(e.line() == 3);
    CHECK(e.column() == 11);
  }
}

TEST_CASE("unknown keys and bad values are rejected") {
  CHECK_THROWS_AS(scenario_from_json(R"({"procesess": 4})"), ScenarioError);
  CHECK_THROWS_AS(scenario_from_json(R"({"processes": "four"})"), ScenarioError);
  CHECK_THROWS_AS(scenario_from_json(R"({"workload": {"kind": "fft"}})"), ScenarioError);
  CHECK_THROWS_AS(scenario_from_json(R"({"workload": {"kind": "custom", "programs": [[{"op": "jump"}]]}})"),
                  ScenarioError);
}

TEST_CASE("profile round trip") {
  const auto h = tsubame2_profile();
  const auto back = profile_from_json(profile_to_json(h));
  REQUIRE(back.height() == 4);
  for (std::size_t j = 1; j <= 4; ++j) {
    CHECK(back.level(j).name == h.level(j).name);
    CHECK(back.level(j).count == h.level(j).count);
    CHECK(back.level(j).pdf.a == h.level(j).pdf.a);
    CHECK(back.level(j).pdf.lambda == h.level(j).pdf.lambda);
  }
  CHECK_THROWS_AS(profile_from_json(R"({"levels": [{"name": "node", "count": 0, "pdf": {"A": 1, "lambda": 1}}]})"),
                  ScenarioError);
}

TEST_CASE("payload binary format is little-endian words") {
  const std::vector<Word> payload{1, -1, 0x0102030405060708};
  std::stringstream ss;
  write_payload(ss, payload);
  const auto bytes = ss.str();
  REQUIRE(bytes.size() == 24);
  CHECK(bytes[0] == 1);
  CHECK(bytes[16] == 0x08);
  CHECK(bytes[23] == 0x01);
  CHECK(read_payload(ss) == payload);
  std::stringstream bad("abc");
  CHECK_THROWS_AS(read_payload(bad), ArgumentError);
}

TEST_CASE("trace and log dumps are one JSON object per line") {
  Scenario s;
  s.processes = 3;
  s.window_cells = 8;
  s.protocol.mtbf = 100.0;
  Simulation sim(s);
  sim.run();
  std::stringstream trace, logs;
  write_trace_jsonl(trace, sim.machine().graph());
  write_logs_jsonl(logs, sim.log());
  std::string line;
  std::size_t lines = 0;
  while (std::getline(trace, line)) {
    CHECK(nlohmann::json::parse(line).is_object());
    ++lines;
  }
  CHECK(lines == sim.machine().graph().size());
  std::size_t entries = 0;
  while (std::getline(logs, line)) {
    if (nlohmann::json::parse(line).contains("log")) ++entries;
  }
  std::size_t held = 0;
  for (std::uint32_t p = 0; p < 3; ++p) held += sim.log().entries_held(ProcessId{p});
  CHECK(entries == held);
  CHECK(held > 0);
}
