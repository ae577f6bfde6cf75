#include <doctest.h>

#include "config.hpp"
#include "error.hpp"

using namespace bdp;

namespace {

const char* kValid = R"(dimension: 2
caps: [3, 2]
initial: [1, 0]
horizon: 5
seed: 9
types:
  - birth: {kind: constant, params: [4]}
    death: {kind: state_affine_capped, params: [0.1, 0.2, 0.1, 1]}
    bounds: {birth_lo: 4, birth_hi: 4, death_lo: 0.3, death_hi: 1}
  - birth: {kind: periodic, params: [1, 0.5], period: 2}
    death: {kind: table, axis: count, values: [0, 1, 2]}
    bounds: {birth_lo: 0.5, birth_hi: 1.5, death_lo: 1, death_hi: 2}
)";

std::string message_of(const std::string& text) {
  try {
    parse_config(text, "model.yaml");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("valid config with defaults") {
  const ModelConfig c = parse_config(kValid, "model.yaml");
  CHECK(c.model.dimension() == 2);
  CHECK(c.space.size() == 12);
  CHECK(c.initial == MultiIndex{1, 0});
  CHECK(c.settings.horizon == 5.0);
  CHECK(c.settings.grid_step == 0.01);
  CHECK(c.settings.tail_threshold == 1e-3);
  CHECK(c.settings.slack == 1e-6);
  CHECK(c.settings.seed == 9);
  CHECK(c.settings.paths == 100000);
  const auto times = c.settings.effective_sample_times();
  REQUIRE(times.size() == 11);
  CHECK(times.front() == 0.0);
  CHECK(times.back() == 5.0);
  CHECK(c.model.type(1).death.kind() == RuleKind::table);
  CHECK(c.model.bounds(0).birth_lo == 4.0);
}

TEST_CASE("schema violations name the line and field") {
  std::string text = kValid;
  text.replace(text.find("kind: constant"), 14, "kind: constantt");
  const std::string msg = message_of(text);
  CHECK(msg.find("model.yaml:7:") == 0);
  CHECK(msg.find("types[0].birth.kind") != std::string::npos);
  CHECK(msg.find("constantt") != std::string::npos);
}

TEST_CASE("unknown and missing keys") {
  std::string unknown = kValid;
  unknown += "colour: blue\n";
  CHECK(message_of(unknown).find("colour") != std::string::npos);

  std::string missing = kValid;
  missing.replace(missing.find("caps: [3, 2]\n"), 13, "");
  CHECK(message_of(missing).find("caps") != std::string::npos);

  std::string short_caps = kValid;
  short_caps.replace(short_caps.find("caps: [3, 2]"), 12, "caps: [3]");
  CHECK(message_of(short_caps).find("caps") != std::string::npos);
}

TEST_CASE("bad values are rejected") {
  std::string neg = kValid;
  neg.replace(neg.find("horizon: 5"), 10, "horizon: -1");
  CHECK(message_of(neg).find("horizon") != std::string::npos);

  std::string outside = kValid;
  outside.replace(outside.find("initial: [1, 0]"), 15, "initial: [4, 0]");
  CHECK(message_of(outside).find("initial") != std::string::npos);

  std::string bounds = kValid;
  bounds.replace(bounds.find("birth_lo: 4, birth_hi: 4"), 24, "birth_lo: 5, birth_hi: 4");
  CHECK(message_of(bounds).find("bounds") != std::string::npos);

  std::string text = kValid;
  text.replace(text.find("seed: 9"), 7, "seed: abc");
  CHECK(message_of(text).find("seed") != std::string::npos);

  CHECK(message_of("[1, 2").size() > 0);
  CHECK(message_of("").size() > 0);
}

TEST_CASE("missing config file names the path") {
  try {
    load_config("/nonexistent/model.yaml");
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("/nonexistent/model.yaml") != std::string::npos);
    CHECK(e.code() == ErrorCode::config);
  }
}
