#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "drivestyle/cli/commands.hpp"
#include "drivestyle/common/hash.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace drivestyle;
using namespace drivestyle::cli;

namespace {

namespace fs = std::filesystem;

const char* kSmallConfig = R"(
[run]
seed = 5
[synthetic]
n_styles = 2
n_drivers = 8
traj_len = 30
[contrastive]
K = 16
channels = 8
style_dim = 16
passes = 4
batch = 8
[prior]
channels = 8
epochs = 2
[policy]
epochs = 2
T = 5
hidden = 16
embed = 8
n_hidden = 2
[eval]
n_scenarios = 3
steps = 30
max_steps = 15
workers = 1
)";

std::uint64_t hash_file(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return fnv1a64(ss.str());
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("config parsing, sections and types") {
  RunConfig config = RunConfig::from_text("[run]\nseed = 42\n# comment\n[a]\nx = 1.5\nflag = true\n");
  CHECK(config.master_seed() == 42);
  CHECK(config.get_double("a", "x", 0.0) == 1.5);
  CHECK(config.get_flag("a", "flag", false));
  CHECK(config.get("missing", "key", "fallback") == "fallback");
  CHECK_THROWS(config.require("missing", "key"));
  CHECK_THROWS(RunConfig::from_text("[run\nseed = 1\n"));
  CHECK_THROWS(RunConfig::from_text("[run]\nno equals sign\n"));
  CHECK_THROWS(config.get_int("a", "x", 0) == 1);  // 1.5 is not an integer
}

TEST_CASE("overrides replace file values") {
  RunConfig config = RunConfig::from_text("[run]\nseed = 1\n");
  config.apply_overrides({"run.seed=9", "policy.T=25"});
  CHECK(config.master_seed() == 9);
  CHECK(config.get_int("policy", "T", 0) == 25);
  CHECK_THROWS(config.apply_overrides({"bad-key"}));
  CHECK_THROWS(config.apply_overrides({"noDot=1"}));
}

TEST_CASE("fingerprint covers training config but not transient sections") {
  RunConfig a = RunConfig::from_text("[run]\nseed = 1\n[policy]\nT = 50\n");
  RunConfig b = a;
  CHECK(a.fingerprint() == b.fingerprint());
  b.set("eval.policy", "mse");
  b.set("cli.allow_fingerprint_mismatch", "1");
  CHECK(a.fingerprint() == b.fingerprint());  // [eval]/[cli] excluded
  b.set("policy.T", "25");
  CHECK(a.fingerprint() != b.fingerprint());
}

TEST_CASE("stage seeds derive deterministically from the master seed") {
  CHECK(stage_seed(7, "train-style") == stage_seed(7, "train-style"));
  CHECK(stage_seed(7, "train-style") != stage_seed(7, "train-prior"));
  CHECK(stage_seed(7, "train-style") != stage_seed(8, "train-style"));
}

TEST_CASE("synth is byte-reproducible across runs") {
  TempDir a("drivestyle_cli_a"), b("drivestyle_cli_b");
  RunConfig config = RunConfig::from_text(kSmallConfig);
  std::ostringstream sink;

  config.set("run.output_dir", a.path.string());
  cmd_synth(config, sink);
  config.set("run.output_dir", b.path.string());
  cmd_synth(config, sink);
  CHECK(hash_file(a.path / "dataset.jsonl") == hash_file(b.path / "dataset.jsonl"));
  CHECK(hash_file(a.path / "dataset.stats.json") == hash_file(b.path / "dataset.stats.json"));
}

TEST_CASE("train-policy without the style checkpoint names the missing stage") {
  TempDir dir("drivestyle_cli_gate");
  RunConfig config = RunConfig::from_text(kSmallConfig);
  config.set("run.output_dir", dir.path.string());
  std::ostringstream sink;
  cmd_synth(config, sink);
  try {
    cmd_train_policy(config, sink);
    FAIL("expected dependency error");
  } catch (const std::exception& e) {
    CHECK(std::string(e.what()).find("train-style") != std::string::npos);
  }
}

TEST_CASE("missing input path surfaces in the error") {
  RunConfig config = RunConfig::from_text("[run]\noutput_dir = /tmp/drivestyle_cli_ingest\n[ingest]\ncsv = /nope/missing.csv\n");
  std::ostringstream sink, err;
  const int rc = run_command("ingest", config, {}, sink, err);
  CHECK(rc != 0);
  CHECK(err.str().find("/nope/missing.csv") != std::string::npos);
  fs::remove_all("/tmp/drivestyle_cli_ingest");
}

TEST_CASE("manifest records the synthetic style count") {
  TempDir dir("drivestyle_cli_manifest");
  RunConfig config = RunConfig::from_text(kSmallConfig);
  config.set("run.output_dir", dir.path.string());
  config.set("synthetic.n_styles", "4");
  config.set("synthetic.n_drivers", "8");
  std::ostringstream sink;
  cmd_synth(config, sink);
  std::ifstream is(dir.path / "manifest_synth.json");
  std::stringstream ss;
  ss << is.rdbuf();
  CHECK(ss.str().find("\"n_styles\": \"4\"") != std::string::npos);
  CHECK(ss.str().find(config.fingerprint()) != std::string::npos);
}

TEST_CASE("full small pipeline runs and evals deterministically") {
  TempDir a("drivestyle_cli_full_a"), b("drivestyle_cli_full_b");
  std::ostringstream sink;
  for (const auto& dir : {a.path, b.path}) {
    RunConfig config = RunConfig::from_text(kSmallConfig);
    config.set("run.output_dir", dir.string());
    cmd_synth(config, sink);
    cmd_train_style(config, sink);
    cmd_train_prior(config, sink);
    cmd_train_policy(config, sink);
    cmd_eval(config, "crash", sink);
    cmd_eval(config, "f1", sink);
  }
  for (const char* file : {"style.ckpt", "prior.ckpt", "policy.ckpt", "report_crash_dsdp.json",
                           "report_f1_dsdp.json"}) {
    CHECK(hash_file(a.path / file) == hash_file(b.path / file));
  }
  // Reports carry the config fingerprint.
  RunConfig config = RunConfig::from_text(kSmallConfig);
  std::ifstream is(a.path / "report_f1_dsdp.json");
  std::stringstream ss;
  ss << is.rdbuf();
  CHECK(ss.str().find(config.fingerprint()) != std::string::npos);
}

TEST_CASE("report aggregation emits mean and two-SE columns") {
  TempDir dir("drivestyle_cli_report");
  RunConfig config = RunConfig::from_text(kSmallConfig);
  config.set("run.output_dir", dir.path.string());
  std::ostringstream sink;
  cmd_synth(config, sink);
  cmd_train_style(config, sink);
  cmd_train_prior(config, sink);
  cmd_train_policy(config, sink);
  cmd_eval(config, "crash", sink);

  // Synthesize a second seed's report by rerunning with another seed.
  RunConfig config2 = config;
  config2.set("run.seed", "6");
  cmd_train_style(config2, sink);
  cmd_train_prior(config2, sink);
  cmd_train_policy(config2, sink);
  std::ostringstream out2;
  cmd_eval(config2, "crash", out2);
  fs::copy_file(dir.path / "report_crash_dsdp.json", dir.path / "report_crash_seed2.json",
                fs::copy_options::overwrite_existing);

  std::ostringstream out;
  cmd_report(config, {(dir.path / "report_crash_dsdp.json").string(),
                      (dir.path / "report_crash_seed2.json").string()},
             out);
  std::ifstream is(dir.path / "aggregate_crash.csv");
  std::string header;
  std::getline(is, header);
  CHECK(header == "metric,mean,two_se,n_seeds");
  std::string row;
  std::getline(is, row);
  CHECK(row.rfind("crash_pct,", 0) == 0);
}
