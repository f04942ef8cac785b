#include <doctest.h>

#include <map>
#include <set>
#include <string>

#include "sivnems/config.hpp"
#include "sivnems/csv.hpp"

using namespace sivnems;

namespace {
const char* kSample = R"(# run configuration
[bath]
chi_hz = 1e6
temperature_k = 4.0
exponent_n = 2

[output]
points = 201
label = scan-a
)";

std::map<std::string, std::set<std::string>> sample_schema() {
  return {{"bath", {"chi_hz", "temperature_k", "exponent_n"}},
          {"output", {"points", "label"}}};
}

bool message_contains(const std::exception& e, const std::string& needle) {
  return std::string(e.what()).find(needle) != std::string::npos;
}
}  // namespace

TEST_CASE("config: parse, typed getters, and fallbacks") {
  const auto cfg = RunConfig::parse_string(kSample);
  cfg.validate_schema(sample_schema());
  CHECK(cfg.get_double("bath", "chi_hz", 0.0) == 1e6);
  CHECK(cfg.get_double("bath", "temperature_k", 0.0) == 4.0);
  CHECK(cfg.get_int("output", "points", 0) == 201);
  CHECK(cfg.get_string("output", "label", "") == "scan-a");
  CHECK(cfg.get_double("bath", "missing", 7.5) == 7.5);
  CHECK(cfg.get_string("nosection", "key", "dflt") == "dflt");
  CHECK(cfg.has("bath", "chi_hz"));
  CHECK_FALSE(cfg.has("bath", "missing"));
}

TEST_CASE("config: unknown key and section are rejected with location") {
  const auto cfg = RunConfig::parse_string(
      "[bath]\nchi_hz = 1\n\ntemprature_k = 4\n", "run.ini");
  try {
    cfg.validate_schema(sample_schema());
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(message_contains(e, "run.ini:4"));
    CHECK(message_contains(e, "temprature_k"));
    CHECK(message_contains(e, "[bath]"));
  }

  const auto cfg2 = RunConfig::parse_string("[baht]\nchi_hz = 1\n", "run.ini");
  try {
    cfg2.validate_schema(sample_schema());
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(message_contains(e, "[baht]"));
  }
}

TEST_CASE("config: malformed input errors carry line numbers") {
  try {
    RunConfig::parse_string("[bath]\nchi_hz 1e6\n", "c.ini");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(message_contains(e, "c.ini:2"));
  }
  CHECK_THROWS_AS(RunConfig::parse_string("chi_hz = 1\n"), ConfigError);  // no section
  CHECK_THROWS_AS(RunConfig::parse_string("[bath\nchi_hz = 1\n"), ConfigError);
  CHECK_THROWS_AS(RunConfig::parse_string("[]\n"), ConfigError);
  CHECK_THROWS_AS(RunConfig::parse_string("[bath]\n= 1\n"), ConfigError);
  CHECK_THROWS_AS(RunConfig::parse_string("[bath]\na = 1\na = 2\n"), ConfigError);  // dup
}

TEST_CASE("config: non-numeric values fail only when read as numbers") {
  const auto cfg = RunConfig::parse_string("[output]\npoints = many\nlabel = x1\n");
  CHECK_THROWS_AS(cfg.get_int("output", "points", 0), ConfigError);
  CHECK_THROWS_AS(cfg.get_double("output", "points", 0.0), ConfigError);
  CHECK(cfg.get_string("output", "points", "") == "many");
  CHECK_THROWS_AS(cfg.get_double("output", "label", 0.0), ConfigError);  // "x1" trailing chars
}

TEST_CASE("config: comments and blank lines are ignored, values are stripped") {
  const auto cfg = RunConfig::parse_string(
      "; alt comment\n\n[bath]\n  chi_hz =   2e5  \n# tail\n");
  CHECK(cfg.get_double("bath", "chi_hz", 0.0) == 2e5);
}

TEST_CASE("config: snapshot lines are deterministic and complete") {
  const auto a = RunConfig::parse_string(kSample).snapshot_lines();
  const auto b = RunConfig::parse_string(kSample).snapshot_lines();
  CHECK(a == b);
  CHECK(a.size() == 5);
  bool found = false;
  for (const auto& line : a)
    if (line == "bath.chi_hz = 1e6") found = true;
  CHECK(found);
}

TEST_CASE("config: missing file reports its path") {
  try {
    RunConfig::parse_file("/nonexistent/sivnems.ini");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(message_contains(e, "/nonexistent/sivnems.ini"));
  }
}

TEST_CASE("csv: round trip preserves values, headers, and comments") {
  CsvTable t({"delta_ghz", "rate_hz"});
  t.add_comment("tool: example 1.0");
  t.add_comment("seed: 42");
  t.add_row({46.0, 1.357612345678e6});
  t.add_row({467.0, 0.281});
  const std::string text = t.to_string();
  const auto back = CsvTable::parse_string(text);
  CHECK(back.headers() == t.headers());
  CHECK(back.comments() == t.comments());
  REQUIRE(back.row_count() == 2);
  CHECK(back.rows()[0][0] == 46.0);
  CHECK(back.rows()[0][1] == doctest::Approx(1.357612345678e6).epsilon(1e-11));
  CHECK(back.column("rate_hz")[1] == 0.281);
}

TEST_CASE("csv: to_string is byte-deterministic") {
  auto make = [] {
    CsvTable t({"x", "y"});
    t.add_comment("provenance");
    t.add_row({1.0 / 3.0, 2e-15});
    t.add_row({-0.0, 1234567890.123});
    return t.to_string();
  };
  CHECK(make() == make());
  // %.12g keeps 12 significant digits.
  CHECK(make().find("0.333333333333") != std::string::npos);
}

TEST_CASE("csv: structural errors") {
  CHECK_THROWS_AS(CsvTable({"a", "a"}), CsvError);
  CsvTable t({"a", "b"});
  CHECK_THROWS_AS(t.add_row({1.0}), CsvError);
  CHECK_THROWS_AS(t.column("c"), CsvError);
  CHECK_FALSE(t.has_column("c"));
  CHECK(t.has_column("b"));

  CHECK_THROWS_AS(CsvTable::parse_string(""), CsvError);
  CHECK_THROWS_AS(CsvTable::parse_string("# only a comment\n"), CsvError);
  try {
    CsvTable::parse_string("a,b\n1.0\n");
    FAIL("expected CsvError");
  } catch (const CsvError& e) {
    CHECK(message_contains(e, "line 2"));
  }
  try {
    CsvTable::parse_string("a,b\n1.0,zzz\n");
    FAIL("expected CsvError");
  } catch (const CsvError& e) {
    CHECK(message_contains(e, "zzz"));
  }
  CHECK_THROWS_AS(CsvTable::parse_file("/nonexistent/data.csv"), CsvError);
}

TEST_CASE("csv: CRLF input and comments before the header survive parsing") {
  const auto t = CsvTable::parse_string("# made by tool\r\nx,y\r\n1,2\r\n");
  CHECK(t.headers() == std::vector<std::string>{"x", "y"});
  REQUIRE(t.comments().size() == 1);
  CHECK(t.comments()[0] == "made by tool");
  CHECK(t.rows()[0] == std::vector<double>{1.0, 2.0});
}
