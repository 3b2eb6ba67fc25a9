#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "config.hpp"
#include "output.hpp"

using namespace qpmp;
using namespace qpmp::cli;

namespace {

const char* kClosed = R"({
  "schema": "qpmp-config/1",
  "model": {"id": "two-level-closed", "delta": 1.0, "observable": "sigma_z"},
  "bounds": [{"channel": 1, "min": -1.0, "max": 1.0}],
  "problem": {"mode": "terminal", "horizon": 1.5, "initial_state": "excited"},
  "solver": {"grid": 16, "starts": 2, "seed": 3}
})";

int error_line(const std::string& text) {
  try {
    parse_config_text(text, "test.json");
  } catch (const ConfigError& e) {
    return e.line();
  }
  return -1;
}

std::string temp_path(const std::string& name) { return (std::filesystem::temp_directory_path() / name).string(); }

}  // namespace

TEST(Config, ParsesClosedTwoLevel) {
  const RunConfig c = parse_config_text(kClosed, "closed.json");
  EXPECT_EQ(c.model_id, "two-level-closed");
  EXPECT_FALSE(c.periodic);
  EXPECT_DOUBLE_EQ(c.horizon, 1.5);
  EXPECT_EQ(c.solver.intervals, 16);
  EXPECT_EQ(c.solver.starts, 2);
  EXPECT_EQ(c.solver.seed, 3u);
  const ProblemSpec s = build_problem(c);
  EXPECT_TRUE(s.model.closed());
  EXPECT_NEAR(s.initial_state().to_matrix()(1, 1).real(), 1.0, 1e-15);
  const auto pols = initial_policies(c, s);
  ASSERT_EQ(pols.size(), 2u);
  EXPECT_EQ(pols[0].intervals(), 16);
  // Deterministic in the seed.
  const auto again = initial_policies(c, s);
  EXPECT_EQ(pols[1].values(), again[1].values());
}

TEST(Config, ErrorsCarryLineNumbers) {
  std::string unknown = kClosed;
  unknown.replace(unknown.find("\"seed\""), 6, "\"sede\"");
  EXPECT_EQ(error_line(unknown), 6);
  std::string model = kClosed;
  model.replace(model.find("two-level-closed"), 16, "two-level-opened");
  EXPECT_EQ(error_line(model), 3);
  EXPECT_EQ(error_line("{\n  \"model\": {\"id\": \"lambda\"},\n  \"problem\": {\"mode\": \"terminal\",,}\n}"), 3);
  std::string schema = kClosed;
  schema.replace(schema.find("qpmp-config/1"), 13, "qpmp-config/9");
  EXPECT_EQ(error_line(schema), 2);
  std::string grid = kClosed;
  grid.replace(grid.find("\"grid\": 16"), 10, "\"grid\": 0");
  EXPECT_EQ(error_line(grid), 6);
}

TEST(Config, InvertedBoundsRejected) {
  std::string text = kClosed;
  text.replace(text.find("\"min\": -1.0, \"max\": 1.0"), 23, "\"min\": 2.0, \"max\": 1.0");
  bool raised = false;
  try {
    build_problem(parse_config_text(text, "b.json"));
  } catch (const ConfigError& e) {
    raised = true;
    EXPECT_EQ(e.line(), 4);
  } catch (const Error& e) {
    raised = true;
    EXPECT_EQ(e.code(), ErrorCode::Config);
  }
  EXPECT_TRUE(raised);
}

TEST(Config, ShippedConfigsLoad) {
  for (const char* name : {"two_level_closed", "two_level_closed_long", "two_level_thermal", "two_collision", "reservoir_drive",
                           "random_lindblad", "lambda_periodic", "closed_periodic"}) {
    const RunConfig c = load_config(std::string(QPMP_CONFIG_DIR) + "/" + name + ".json");
    EXPECT_NO_THROW(build_problem(c)) << name;
  }
}

TEST(PolicyFile, RoundTripIsExact) {
  const RunConfig c = parse_config_text(kClosed, "closed.json");
  const ProblemSpec s = build_problem(c);
  const ControlPolicy p = initial_policies(c, s)[1];
  const std::string path = temp_path("qpmp_policy_roundtrip.csv");
  write_policy_file(path, c, p, s.horizon());
  const PolicyFile f = read_policy_file(path);
  EXPECT_EQ(f.policy.nodes(), p.nodes());
  EXPECT_EQ(f.policy.values(), p.values());
  EXPECT_EQ(f.config.model_id, c.model_id);
  EXPECT_EQ(objective_value(build_problem(f.config), f.policy), objective_value(s, p));
  std::filesystem::remove(path);
}

TEST(PolicyFile, TruncationReportsByteOffset) {
  const RunConfig c = parse_config_text(kClosed, "closed.json");
  const ProblemSpec s = build_problem(c);
  const std::string path = temp_path("qpmp_policy_truncated.csv");
  write_policy_file(path, c, initial_policies(c, s)[0], s.horizon());
  std::string text;
  {
    std::ifstream in(path, std::ios::binary);
    text.assign(std::istreambuf_iterator<char>(in), {});
  }
  const auto cut = text.rfind('\n', text.size() - 40);
  {
    std::ofstream out(path, std::ios::binary);
    out << text.substr(0, cut + 1);
  }
  try {
    read_policy_file(path);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Format);
    EXPECT_NE(std::string(e.what()).find("byte "), std::string::npos);
  }
  std::filesystem::remove(path);
}

TEST(Report, SchemaHeaderAndNumbers) {
  Report r("qpmp-test/1");
  r.add("a", 0.1);
  r.add("b", true);
  r.add("c", "x\ny");
  EXPECT_EQ(r.str(), "# schema qpmp-test/1\na = 0.10000000000000001\nb = true\nc = x y\n");
}
