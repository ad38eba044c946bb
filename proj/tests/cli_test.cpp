#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <sys/wait.h>

#include "intervene/cli/runner.hpp"

namespace intervene::cli {
namespace {

Scenario parse(const std::string& text) {
  std::istringstream in(text);
  return parse_scenario(in, "test.ini");
}

RunResult run_text(const std::string& text, const Overrides& ov = {}) { return run(parse(text), ov); }

const char* kAccess = "[model]\ntype = random_access\nusers = 2\n";

TEST(Scenario, ParsesSectionsAndComments) {
  const auto sc = parse("; comment\n[model]\ntype = random_access\nusers = 2\n[task]\ntype = solve\n");
  EXPECT_EQ(sc.model.text("type"), "random_access");
  EXPECT_FALSE(sc.mechanism.has_value());
  EXPECT_EQ(sc.task.count("grid", 7), 7u);
}

TEST(Scenario, ErrorsNameTheProblem) {
  auto message = [](const std::string& text) {
    try {
      parse(text);
    } catch (const ScenarioError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  EXPECT_NE(message("[task]\ntype = solve\n").find("[model]"), std::string::npos);
  EXPECT_NE(message("[model]\ntype = x\n").find("[task]"), std::string::npos);
  EXPECT_NE(message("[model]\ntype = x\n[task]\ntype = solve\n[bogus]\nk = 1\n").find("[bogus]"), std::string::npos);
  EXPECT_NE(message("[model]\nthis line is not a key value pair\n").find("test.ini:2"), std::string::npos);
}

TEST(Scenario, FieldErrorsNameSectionAndKey) {
  try {
    run_text(std::string(kAccess) + "gamma = 1, x\n[task]\ntype = solve\n");
    FAIL();
  } catch (const ScenarioError& e) {
    EXPECT_NE(std::string(e.what()).find("[model] gamma"), std::string::npos) << e.what();
  }
}

TEST(Scenario, BenefitSpellings) {
  EXPECT_EQ(parse_benefit("cube", "k").label(), "power:3");
  EXPECT_EQ(parse_benefit("power:0.5", "k").label(), "power:0.5");
  EXPECT_EQ(parse_benefit("satexp", "k").label(), "satexp:1");
  EXPECT_NEAR(parse_benefit("tabulated:0/0 0.5/0.8 1/1", "k")(0.25), 0.4, 1e-15);
  EXPECT_THROW(parse_benefit("wiggle", "k"), ScenarioError);
}

TEST(Run, VerifyMaxPunishment) {
  const auto r = run_text(std::string(kAccess) +
                          "[mechanism]\ntype = max_punishment\ntarget = 0.5, 0.5\n[task]\ntype = verify\n");
  EXPECT_EQ(r.exit_code, kSuccess);
  EXPECT_NE(r.report.find("supports: true; max gain 0.0"), std::string::npos) << r.report;
  EXPECT_EQ(r.csv, "user,best_deviation,gain\n1,0.5,0\n2,0.5,0\n");
}

TEST(Run, VerifyNegativeVerdictExitsOne) {
  const auto r = run_text(std::string(kAccess) + "[mechanism]\ntype = constant\nvalue = 0\n[task]\ntype = verify\nprofile = 0.5, 0.5\n");
  EXPECT_EQ(r.exit_code, kNegativeVerdict);
  EXPECT_NE(r.report.find("supports: false"), std::string::npos);
}

TEST(Run, MissingMechanismBlock) {
  try {
    run_text(std::string(kAccess) + "[task]\ntype = verify\nprofile = 0.5, 0.5\n");
    FAIL();
  } catch (const ScenarioError& e) {
    EXPECT_NE(std::string(e.what()).find("[mechanism]"), std::string::npos) << e.what();
  }
}

TEST(Run, Solve) {
  const auto r = run_text(std::string(kAccess) + "[task]\ntype = solve\n");
  EXPECT_EQ(r.exit_code, kSuccess);
  EXPECT_EQ(r.csv, "a_1,a_2,manager_value\n0,1,1\n");
}

TEST(Run, DesignAffine) {
  const auto r = run_text(std::string(kAccess) + "[task]\ntype = design-affine\ntarget = 0.25, 0.8\n");
  EXPECT_EQ(r.exit_code, kSuccess) << r.report;
  std::istringstream csv(r.csv);
  std::string header, l1, l2;
  std::getline(csv, header);
  std::getline(csv, l1);
  std::getline(csv, l2);
  EXPECT_EQ(header, "user,rate");
  EXPECT_NEAR(std::stod(l1.substr(2)), 4.0, 1e-6);
  EXPECT_NEAR(std::stod(l2.substr(2)), 1.25, 1e-6);
}

TEST(Run, SweepRateThresholdAtOne) {
  const auto r = run_text(std::string(kAccess) +
                          "[mechanism]\ntype = affine\ntarget = 0.5, 0.5\n"
                          "[task]\ntype = sweep\nparameter = c1\nvalues = 0.5, 1, 2, 4\ngrid = 101\n");
  EXPECT_EQ(r.exit_code, kSuccess);
  std::istringstream csv(r.csv);
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "c1,supports,max_gain,manager_value");
  std::vector<std::string> verdicts;
  while (std::getline(csv, line)) verdicts.push_back(line.substr(line.find(',') + 1, 1));
  EXPECT_EQ(verdicts, (std::vector<std::string>{"0", "0", "1", "1"}));
}

TEST(Run, EmptySweepWritesHeaderOnly) {
  const auto r = run_text(std::string(kAccess) +
                          "[mechanism]\ntype = max_punishment\ntarget = 0.5, 0.5\n"
                          "[task]\ntype = sweep\nparameter = target1\nvalues =\n");
  EXPECT_EQ(r.exit_code, kSuccess);
  EXPECT_EQ(r.csv, "target1,supports,max_gain,manager_value\n");
}

TEST(Run, SweepUnknownParameter) {
  EXPECT_THROW(run_text(std::string(kAccess) + "[mechanism]\ntype = affine\ntarget = 0.5, 0.5\n"
                                               "[task]\ntype = sweep\nparameter = zeta1\nvalues = 1\n"),
               ScenarioError);
  EXPECT_THROW(run_text(std::string(kAccess) + "[mechanism]\ntype = affine\ntarget = 0.5, 0.5\n"
                                               "[task]\ntype = sweep\nparameter = c3\nvalues = 1\n"),
               ScenarioError);
}

TEST(Run, StrongCheckReportsCounterexamples) {
  const auto r = run_text(std::string(kAccess) +
                          "[mechanism]\ntype = max_punishment\ntarget = 0.5, 0.5\n[task]\ntype = strong-check\ngrid = 21\n");
  EXPECT_EQ(r.exit_code, kNegativeVerdict);
  EXPECT_NE(r.report.find("grid-strong support: false"), std::string::npos);
  EXPECT_GT(std::count(r.csv.begin(), r.csv.end(), '\n'), 1);
}

TEST(Run, Maximin) {
  const auto r = run_text(std::string(kAccess) +
                          "[mechanism]\nfamily = constant:0; constant:1\n[task]\ntype = maximin\ngrid = 11\n");
  EXPECT_EQ(r.exit_code, kSuccess);
  EXPECT_NE(r.report.find("maximin choice: [0]"), std::string::npos) << r.report;
}

TEST(Run, Robustness) {
  const auto r = run_text(std::string(kAccess) + "[task]\ntype = robustness\ntarget = 0.5, 0.5\n");
  EXPECT_EQ(r.exit_code, kSuccess);
  EXPECT_NE(r.csv.find("affine,power:3,1,"), std::string::npos) << r.csv;
  EXPECT_NE(r.csv.find("fixed_prices,power:3,0,"), std::string::npos) << r.csv;
}

TEST(Run, AffineConditions) {
  const auto r = run_text(std::string(kAccess) + "[task]\ntype = prop4\ntarget = 0.5, 0.5\n");
  EXPECT_EQ(r.exit_code, kSuccess) << r.report;
  EXPECT_NE(r.csv.find("1,positive,concave_along_ramp_above_target,strict,"), std::string::npos) << r.csv;
}

TEST(Run, FiniteModel) {
  const auto r = run_text("[model]\ntype = finite\nusers = 2\nactions_1 = 0, 1\nactions_2 = 0, 1\n"
                          "manager_actions = 0, 1\n"
                          "payoff_0 = 3,3, 0,4, 4,0, 1,1\npayoff_1 = 1,1, 0,0, 0,0, 0,0\n"
                          "[task]\ntype = solve\n");
  EXPECT_EQ(r.csv, "a_1,a_2,manager_value\n0,0,6\n");
}

TEST(Run, InterventionOrdering) {
  const auto r = run_text(std::string(kAccess) + "[task]\ntype = assumption1\nsamples = 50\n");
  EXPECT_EQ(r.exit_code, kSuccess);
  EXPECT_EQ(r.csv, "player,inequality,slack\n");
}

TEST(Run, GridPrecedence) {
  const auto sc = parse(std::string(kAccess) + "[task]\ntype = solve\ngrid = 31\n");
  EXPECT_EQ(resolve_grid(sc, {}, 2).resolution, 31u);
  Overrides ov;
  ov.grid = 41;
  EXPECT_EQ(resolve_grid(sc, ov, 2).resolution, 41u);
  EXPECT_EQ(resolve_grid(parse(std::string(kAccess) + "[task]\ntype = solve\n"), {}, 3).resolution, 21u);
  EXPECT_THROW(resolve_grid(parse(std::string(kAccess) + "[task]\ntype = solve\ngrid = 1\n"), {}, 2), ScenarioError);
}

TEST(Run, Deterministic) {
  const std::string text = std::string(kAccess) +
                           "benefit = satexp:2\n[mechanism]\ntype = affine\ntarget = 0.3, 0.6\n"
                           "[task]\ntype = sweep\nparameter = gamma1\nvalues = 0.5, 1, 1.5\n";
  const auto a = run_text(text);
  const auto b = run_text(text);
  EXPECT_EQ(a.csv, b.csv);
  EXPECT_EQ(a.report, b.report);
}

TEST(Format, Numbers) {
  EXPECT_EQ(pretty(0.0), "0.0");
  EXPECT_EQ(pretty(0.25), "0.25");
  EXPECT_EQ(pretty(2.0), "2.0");
  EXPECT_EQ(csv_number(0.1), "0.10000000000000001");
  EXPECT_THROW(csv_number(NAN), DataError);
}

// End-to-end through the built executable.

class Binary : public ::testing::Test {
protected:
  void SetUp() override {
    const char* bin = std::getenv("INTERVENE_BIN");
    if (!bin) GTEST_SKIP() << "INTERVENE_BIN not set";
    bin_ = bin;
    dir_ = std::filesystem::temp_directory_path() / ("intervene_cli_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override {
    if (!dir_.empty()) std::filesystem::remove_all(dir_);
  }

  std::string write(const std::string& name, const std::string& text) {
    const auto p = dir_ / name;
    std::ofstream(p) << text;
    return p.string();
  }
  int exec(const std::string& args) {
    const int status = std::system((bin_ + " " + args + " >" + (dir_ / "stdout").string() + " 2>" + (dir_ / "stderr").string()).c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }
  std::string slurp(const std::string& name) {
    std::ifstream in(dir_ / name, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
  }

  std::string bin_;
  std::filesystem::path dir_;
};

TEST_F(Binary, ExitCodes) {
  const auto ok = write("ok.ini", std::string(kAccess) + "[mechanism]\ntype = max_punishment\ntarget = 0.5, 0.5\n[task]\ntype = verify\n");
  EXPECT_EQ(exec(ok), 0);
  EXPECT_NE(slurp("stdout").find("supports: true; max gain 0.0"), std::string::npos);

  const auto no = write("no.ini", std::string(kAccess) + "[mechanism]\ntype = constant\nvalue = 0\n[task]\ntype = verify\nprofile = 0.5, 0.5\n");
  EXPECT_EQ(exec(no), 1);

  const auto bad = write("bad.ini", std::string(kAccess) + "[task]\ntype = verify\nprofile = 0.5, 0.5\n");
  EXPECT_EQ(exec(bad), 2);
  EXPECT_NE(slurp("stderr").find("[mechanism]"), std::string::npos);

  EXPECT_EQ(exec((dir_ / "missing.ini").string()), 2);
  EXPECT_EQ(exec(ok + " --grid 1"), 2);
  EXPECT_EQ(exec(ok + " --no-such-flag"), 2);
}

TEST_F(Binary, CsvIsByteIdenticalAcrossRuns) {
  const auto sc = write("sweep.ini", std::string(kAccess) +
                                         "[mechanism]\ntype = affine\ntarget = 0.5, 0.5\n"
                                         "[task]\ntype = sweep\nparameter = c1\nvalues = 0.5, 1, 2, 4\n");
  ASSERT_EQ(exec(sc + " --csv " + (dir_ / "a.csv").string()), 0);
  ASSERT_EQ(exec(sc + " --csv " + (dir_ / "b.csv").string()), 0);
  EXPECT_FALSE(slurp("a.csv").empty());
  EXPECT_EQ(slurp("a.csv"), slurp("b.csv"));
}

TEST_F(Binary, GridEnvironmentVariable) {
  const auto sc = write("solve.ini", std::string(kAccess) + "[task]\ntype = strong-check\n[mechanism]\ntype = constant\nvalue = 1\ntarget = 0.5, 0.5\n");
  ::setenv(kGridEnvVar, "5", 1);
  exec(sc);
  ::unsetenv(kGridEnvVar);
  EXPECT_NE(slurp("stdout").find("profiles enumerated: 25"), std::string::npos) << slurp("stdout");
}

TEST_F(Binary, ShippedScenariosRun) {
  const char* dir = INTERVENE_SCENARIOS_DIR;
  std::size_t seen = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() != ".ini") continue;
    ++seen;
    const int code = exec(entry.path().string());
    EXPECT_TRUE(code == 0 || code == 1) << entry.path() << " exited " << code << ": " << slurp("stderr");
  }
  EXPECT_GT(seen, 0u);
}

} // namespace
} // namespace intervene::cli
