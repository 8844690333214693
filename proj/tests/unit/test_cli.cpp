#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "afsmote/cli.hpp"
#include "afsmote/config.hpp"
#include "afsmote/error.hpp"

using namespace afsmote;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = 0;
  std::string out, err;
};

Outcome cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  Outcome o;
  o.code = run_cli(args, out, err);
  o.out = out.str();
  o.err = err.str();
  return o;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("afsmote_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_file(const fs::path& p, const std::string& body) {
  std::ofstream(p) << body;
  return p;
}

const char* kSmallRun =
    "[data]\n"
    "n = 1200\n"
    "pi1 = 0.1\n"
    "separation = 2.0\n"
    "[experiment]\n"
    "folds = 3\n"
    "[evaluation]\n"
    "intervals = false\n"
    "delong = false\n";

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kInvalidArgument;
}

}  // namespace

TEST(ConfigText, SectionsCommentsAndLists) {
  ResolvedConfig rc;
  parse_config_text(rc,
                    "# experiment\n"
                    "[filter]\n"
                    "lambda = 0.25   # trailing comment\n"
                    "top_k = 40\n"
                    "[evaluation]\n"
                    "betas = [1, 2, 4]\n"
                    "[sweep]\n"
                    "k = 3, 5\n"
                    "[data]\n"
                    "csv = \"data/with#hash.csv\"\n");
  EXPECT_EQ(rc.experiment.filter.lambda, 0.25);
  EXPECT_EQ(rc.experiment.filter.top_k, std::optional<std::size_t>(40));
  EXPECT_EQ(rc.experiment.betas, (std::vector<double>{1, 2, 4}));
  EXPECT_EQ(rc.sweep.k_values, (std::vector<std::size_t>{3, 5}));
  ASSERT_TRUE(rc.experiment.data.csv);
  EXPECT_EQ(rc.experiment.data.csv->string(), "data/with#hash.csv");
}

TEST(ConfigText, Errors) {
  ResolvedConfig rc;
  EXPECT_EQ(code_of([&] { parse_config_text(rc, "lambda = 0.5\n"); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([&] { parse_config_text(rc, "[filter]\nlamda = 0.5\n"); }), ErrorCode::kUnknownConfigKey);
  EXPECT_EQ(code_of([&] { parse_config_text(rc, "[filter]\nlambda = half\n"); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([&] { parse_config_text(rc, "[filter]\nhead_weights = 1, 0\n"); }),
            ErrorCode::kInvalidArgument);
  try {
    parse_config_text(rc, "[sampler]\n\nk = x\n", "exp.cfg");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("exp.cfg:3"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("sampler.k"), std::string::npos) << e.what();
  }
}

TEST(ConfigText, OverridesAreRecordedInOrder) {
  ResolvedConfig rc;
  apply_override(rc, "filter.lambda=0.25");
  apply_override(rc, "experiment.seed=9");
  EXPECT_EQ(rc.experiment.filter.lambda, 0.25);
  EXPECT_TRUE(rc.seed_set);
  EXPECT_EQ(rc.experiment.seed, 9u);
  EXPECT_EQ(rc.overrides, (std::vector<std::string>{"filter.lambda=0.25", "experiment.seed=9"}));
  EXPECT_THROW(apply_override(rc, "filter.lambda"), Error);
}

TEST(ConfigText, EveryKeyIsSettable) {
  const auto keys = config_keys();
  EXPECT_TRUE(std::is_sorted(keys.begin(), keys.end()));
  EXPECT_NE(std::find(keys.begin(), keys.end(), "filter.lambda"), keys.end());
  EXPECT_NE(std::find(keys.begin(), keys.end(), "sweep.ratio"), keys.end());
}

TEST(Cli, HelpExitsZeroForEverySubcommand) {
  EXPECT_EQ(cli({"--help"}).code, 0);
  for (const char* sub : {"gen-synth", "augment", "run", "sweep", "theorem-check"}) {
    const auto o = cli({sub, "--help"});
    EXPECT_EQ(o.code, 0) << sub;
    EXPECT_NE(o.out.find("--config"), std::string::npos) << sub;
  }
}

TEST(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(cli({}).code, 1);
  EXPECT_EQ(cli({"frobnicate"}).code, 1);
  EXPECT_EQ(cli({"run", "--jobs", "0"}).code, 1);
  const auto o = cli({"run", "--set", "filter.lamda=0.25", "-o", scratch("unknown").string()});
  EXPECT_EQ(o.code, 1);
  EXPECT_NE(o.err.find("filter.lamda"), std::string::npos) << o.err;
  EXPECT_EQ(cli({"run", "--seed", "-3"}).code, 1);
  EXPECT_EQ(cli({"run", "--config", "/nonexistent/exp.cfg"}).code, 2);
}

TEST(Cli, DataErrorsExitTwo) {
  const auto dir = scratch("bad_csv");
  const auto csv = write_file(dir / "bad.csv", "a,y\n1,0\nx,1\n");
  const auto o = cli({"run", "--set", "data.csv=" + csv.string(), "-o", dir.string()});
  EXPECT_EQ(o.code, 2) << o.err;
  EXPECT_NE(o.err.find("NonNumericCell"), std::string::npos) << o.err;
}

TEST(Cli, RunRecordsOverridesInProvenance) {
  const auto dir = scratch("run");
  const auto cfg = write_file(dir / "exp.cfg", kSmallRun);
  const auto o = cli({"run", "-c", cfg.string(), "--set", "filter.lambda=0.25", "--seed", "5", "-o", dir.string()});
  ASSERT_EQ(o.code, 0) << o.err;
  const fs::path out_dir = first_line(o.out);
  std::ifstream in(out_dir / "report.json");
  const auto report = nlohmann::json::parse(in);
  EXPECT_EQ(report["provenance"]["overrides"], nlohmann::json::array({"filter.lambda=0.25"}));
  EXPECT_EQ(report["provenance"]["seed"], 5);
  EXPECT_EQ(report["provenance"]["config"]["filter"]["lambda"], 0.25);
  EXPECT_TRUE(fs::exists(out_dir / "report.csv"));
  EXPECT_TRUE(fs::exists(out_dir / "reliability.csv"));
}

TEST(Cli, RunIsReproducible) {
  const auto dir = scratch("repro");
  const auto cfg = write_file(dir / "exp.cfg", kSmallRun);
  auto strip = [](const fs::path& p) {
    std::ifstream in(p);
    auto j = nlohmann::json::parse(in);
    j.erase("timestamps");
    return j.dump();
  };
  const auto a = cli({"run", "-c", cfg.string(), "--seed", "7", "-o", (dir / "a").string()});
  const auto b = cli({"run", "-c", cfg.string(), "--seed", "7", "-o", (dir / "b").string()});
  ASSERT_EQ(a.code, 0) << a.err;
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_EQ(fs::path(first_line(a.out)).filename(), fs::path(first_line(b.out)).filename());
  EXPECT_EQ(strip(fs::path(first_line(a.out)) / "report.json"), strip(fs::path(first_line(b.out)) / "report.json"));
}

TEST(Cli, GenSynthAndAugment) {
  const auto dir = scratch("augment");
  const auto gen = cli({"gen-synth", "--set", "data.n=400", "--set", "data.pi1=0.1", "-o", dir.string()});
  ASSERT_EQ(gen.code, 0) << gen.err;
  const std::string data_csv = first_line(gen.out);
  ASSERT_TRUE(fs::exists(data_csv));
  const auto aug = cli({"augment", "--set", "data.csv=" + data_csv, "--set", "filter.tau=0.5", "--emit-candidates",
                        "--emit-scores", "-o", dir.string()});
  ASSERT_EQ(aug.code, 0) << aug.err;
  const fs::path out_dir = fs::path(first_line(aug.out)).parent_path();
  for (const char* f : {"augmented.csv", "candidates.csv", "scores.csv"}) EXPECT_TRUE(fs::exists(out_dir / f)) << f;
  const auto no_filter = cli({"augment", "--set", "data.csv=" + data_csv, "--set", "filter.enabled=false",
                              "--emit-scores", "-o", dir.string()});
  EXPECT_EQ(no_filter.code, 1) << no_filter.err;
}

TEST(Cli, SeedPrecedence) {
  const auto dir = scratch("seed");
  const auto cfg = write_file(dir / "exp.cfg", std::string(kSmallRun) + "[experiment]\nseed = 3\n");
  setenv("AFSMOTE_SEED", "99", 1);
  auto seed_of = [&](std::vector<std::string> extra) {
    std::vector<std::string> args{"run", "-c", cfg.string(), "-o", dir.string()};
    args.insert(args.end(), extra.begin(), extra.end());
    const auto o = cli(args);
    EXPECT_EQ(o.code, 0) << o.err;
    std::ifstream in(fs::path(first_line(o.out)) / "report.json");
    return nlohmann::json::parse(in)["provenance"]["seed"].get<std::uint64_t>();
  };
  EXPECT_EQ(seed_of({}), 3u);
  EXPECT_EQ(seed_of({"--seed", "4"}), 4u);
  const auto plain_cfg = write_file(dir / "plain.cfg", kSmallRun);
  const auto o = cli({"run", "-c", plain_cfg.string(), "-o", dir.string()});
  ASSERT_EQ(o.code, 0) << o.err;
  std::ifstream in(fs::path(first_line(o.out)) / "report.json");
  EXPECT_EQ(nlohmann::json::parse(in)["provenance"]["seed"], 99);
  unsetenv("AFSMOTE_SEED");
}

TEST(Cli, TheoremCheckWithZeroSeedsSucceeds) {
  const auto dir = scratch("theorem");
  const auto o = cli({"theorem-check", "--seeds", "0", "-o", dir.string()});
  EXPECT_EQ(o.code, 0) << o.err;
  std::ifstream in(first_line(o.out));
  const auto j = nlohmann::json::parse(in);
  EXPECT_TRUE(j.contains("provenance"));
}
