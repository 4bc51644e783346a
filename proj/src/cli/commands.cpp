#include "drivestyle/cli/commands.hpp"

#include "drivestyle/baselines/baselines.hpp"
#include "drivestyle/common/hash.hpp"
#include "drivestyle/common/parallel.hpp"
#include "drivestyle/datasets/csv.hpp"
#include "drivestyle/datasets/preprocess.hpp"
#include "drivestyle/datasets/serialize.hpp"
#include "drivestyle/datasets/synthetic.hpp"
#include "drivestyle/eval/report.hpp"
#include "drivestyle/policy/train.hpp"
#include "drivestyle/styles/train.hpp"

#include <json.hpp>

#include <charconv>
#include <filesystem>
#include <fstream>

namespace drivestyle::cli {

namespace fs = std::filesystem;
using drivestyle::datasets::Dataset;

namespace {

fs::path out_dir(const RunConfig& config) {
  const fs::path dir = config.get("run", "output_dir", "out");
  fs::create_directories(dir);
  return dir;
}

/// Resolved config echoed once per stage; byte-stable.
void echo_config(const RunConfig& config, const fs::path& dir) {
  std::ofstream os(dir / "config.resolved");
  os << config.canonical();
}

void write_manifest(const RunConfig& config, const fs::path& dir, const std::string& stage,
                    const std::vector<std::string>& files,
                    const std::map<std::string, std::string>& meta) {
  nlohmann::json j;
  j["stage"] = stage;
  j["fingerprint"] = config.fingerprint();
  j["files"] = files;
  j["meta"] = meta;
  std::ofstream os(dir / ("manifest_" + stage + ".json"));
  os << j.dump(2) << "\n";
}

void write_curve(const fs::path& path, const std::vector<double>& curve) {
  std::ofstream os(path);
  os << "epoch,loss\n";
  char buf[64];
  for (std::size_t i = 0; i < curve.size(); ++i) {
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), curve[i]);
    os << i << "," << std::string(buf, ptr) << "\n";
  }
}

Dataset load_named_dataset(const fs::path& dir, const std::string& name) {
  const fs::path jsonl = dir / (name + ".jsonl");
  const fs::path stats = dir / (name + ".stats.json");
  if (!fs::exists(jsonl) || !fs::exists(stats)) {
    throw std::runtime_error("missing dataset '" + name + "' under " + dir.string() +
                             " (run synth or preprocess first)");
  }
  return datasets::load_dataset(jsonl.string(), stats.string());
}

void require_checkpoint(const fs::path& path, const std::string& stage) {
  if (!fs::exists(path)) {
    throw std::runtime_error("missing dependency checkpoint '" + path.string() +
                             "' (run " + stage + " first)");
  }
}

void check_fingerprint(const RunConfig& config, const numkit::CheckpointHeader& header,
                       const std::string& what) {
  if (header.fingerprint == config.fingerprint()) return;
  if (config.get_flag("cli", "allow_fingerprint_mismatch", false)) return;
  throw std::runtime_error("fingerprint mismatch for " + what + ": checkpoint " +
                           header.fingerprint + " vs config " + config.fingerprint() +
                           " (pass --force to override)");
}

datasets::SyntheticSpec synthetic_spec(const RunConfig& config) {
  datasets::SyntheticSpec spec;
  spec.n_styles = static_cast<int>(config.get_int("synthetic", "n_styles", 4));
  spec.n_drivers = static_cast<int>(config.get_int("synthetic", "n_drivers", 200));
  spec.traj_len = static_cast<int>(config.get_int("synthetic", "traj_len", 200));
  spec.action_noise = config.get_double("synthetic", "action_noise", 0.2);
  spec.start_speed_frac = config.get_double("synthetic", "start_speed_frac", 0.5);
  spec.initial_gap_factor = config.get_double("synthetic", "initial_gap_factor", 1.0);
  spec.leader_speed_min = config.get_double("synthetic", "leader_speed_min", 4.0);
  spec.leader_speed_max = config.get_double("synthetic", "leader_speed_max", 16.0);
  spec.leader_segment_duration = config.get_double("synthetic", "leader_segment_s", 4.0);
  spec.seed = stage_seed(config.master_seed(), "synth");
  return spec;
}

styles::ContrastiveConfig contrastive_config(const RunConfig& config) {
  styles::ContrastiveConfig cc;
  cc.L_c = static_cast<int>(config.get_int("contrastive", "L_c", 5));
  cc.K = static_cast<int>(config.get_int("contrastive", "K", 256));
  cc.channels = static_cast<int>(config.get_int("contrastive", "channels", 16));
  cc.style_dim = static_cast<int>(config.get_int("contrastive", "style_dim", 64));
  cc.tau = config.get_double("contrastive", "tau", 0.1);
  cc.lambda_e = config.get_double("contrastive", "lambda_e", 0.1);
  cc.ema_decay = config.get_double("contrastive", "ema_decay", 0.99);
  cc.passes = static_cast<int>(config.get_int("contrastive", "passes", 500));
  cc.batch = static_cast<int>(config.get_int("contrastive", "batch", 128));
  cc.lr = config.get_double("contrastive", "lr", 1e-3);
  cc.use_triplet = config.get_flag("contrastive", "use_triplet", false);
  cc.triplet_margin = config.get_double("contrastive", "triplet_margin", 1.0);
  cc.seed = stage_seed(config.master_seed(), "train-style");
  return cc;
}

styles::PriorConfig prior_config(const RunConfig& config) {
  styles::PriorConfig pc;
  pc.L_p = static_cast<int>(config.get_int("prior", "L_p", 5));
  pc.channels = static_cast<int>(config.get_int("prior", "channels", 16));
  pc.epochs = static_cast<int>(config.get_int("prior", "epochs", 30));
  pc.batch = static_cast<int>(config.get_int("prior", "batch", 128));
  pc.lr = config.get_double("prior", "lr", 1e-3);
  pc.seed = stage_seed(config.master_seed(), "train-prior");
  return pc;
}

policy::PolicyTrainConfig policy_config(const RunConfig& config, int style_dim) {
  policy::PolicyTrainConfig ptc;
  ptc.epochs = static_cast<int>(config.get_int("policy", "epochs", 30));
  ptc.batch = static_cast<int>(config.get_int("policy", "batch", 32));
  ptc.lr = config.get_double("policy", "lr", 1e-4);
  ptc.checkpoint_every = static_cast<int>(config.get_int("policy", "checkpoint_every", 5));
  ptc.T = static_cast<int>(config.get_int("policy", "T", 50));
  ptc.beta_min = config.get_double("policy", "beta_min", 1e-4);
  ptc.beta_max = config.get_double("policy", "beta_max", 0.02);
  ptc.seed = stage_seed(config.master_seed(), "train-policy");
  ptc.denoiser.style_dim = style_dim;
  ptc.denoiser.hidden = static_cast<int>(config.get_int("policy", "hidden", 128));
  ptc.denoiser.embed = static_cast<int>(config.get_int("policy", "embed", 64));
  ptc.denoiser.n_hidden = static_cast<int>(config.get_int("policy", "n_hidden", 3));
  return ptc;
}

baselines::BaselineConfig baseline_config(const RunConfig& config, const std::string& kind) {
  baselines::BaselineConfig bc;
  bc.epochs = static_cast<int>(config.get_int("baseline", "epochs", 30));
  bc.batch = static_cast<int>(config.get_int("baseline", "batch", 32));
  bc.lr = config.get_double("baseline", "lr", 1e-4);
  bc.L_p = static_cast<int>(config.get_int("prior", "L_p", 5));
  bc.hidden = static_cast<int>(config.get_int("baseline", "hidden", 128));
  bc.embed = static_cast<int>(config.get_int("baseline", "embed", 64));
  bc.n_hidden = static_cast<int>(config.get_int("baseline", "n_hidden", 3));
  bc.bins = static_cast<int>(config.get_int("baseline", "bins", 20));
  bc.kmeans_k = static_cast<int>(config.get_int("baseline", "kmeans_k", 20));
  bc.T = static_cast<int>(config.get_int("policy", "T", 50));
  bc.beta_min = config.get_double("policy", "beta_min", 1e-4);
  bc.beta_max = config.get_double("policy", "beta_max", 0.02);
  bc.cond_dim = static_cast<int>(config.get_int("baseline", "cond_dim", 64));
  bc.sampler = policy::SamplerKind::parse(config.get("policy", "sampler", "ddpm"));
  bc.ebm_negatives = static_cast<int>(config.get_int("baseline", "ebm_negatives", 64));
  bc.ebm_candidates = static_cast<int>(config.get_int("baseline", "ebm_candidates", 256));
  bc.ebm_iters = static_cast<int>(config.get_int("baseline", "ebm_iters", 3));
  bc.seed = stage_seed(config.master_seed(), "train-baseline:" + kind);
  return bc;
}

int eval_workers(const RunConfig& config) {
  const int w = static_cast<int>(config.get_int("eval", "workers", 0));
  return w <= 0 ? default_workers() : w;
}

/// Train/val split for checkpoint selection; synthetic data splits by
/// driver, preprocessed data already ships as train/test files.
std::pair<Dataset, Dataset> load_train_val(const RunConfig& config, const fs::path& dir) {
  if (fs::exists(dir / "train.jsonl")) {
    return {load_named_dataset(dir, "train"), load_named_dataset(dir, "test")};
  }
  Dataset ds = load_named_dataset(dir, "dataset");
  const double frac = config.get_double("run", "train_fraction", 0.8);
  return datasets::split_by_driver(ds, frac, stage_seed(config.master_seed(), "split"));
}

struct DsdpArtifacts {
  styles::ReprFunction repr;
  styles::PriorNet prior;
  policy::DiffusionPolicy policy;
};

DsdpArtifacts load_dsdp(const RunConfig& config, const fs::path& dir) {
  require_checkpoint(dir / "style.ckpt", "train-style");
  require_checkpoint(dir / "prior.ckpt", "train-prior");
  require_checkpoint(dir / "policy.ckpt", "train-policy");
  check_fingerprint(config, numkit::read_checkpoint_header((dir / "style.ckpt").string()),
                    "style.ckpt");
  check_fingerprint(config, numkit::read_checkpoint_header((dir / "prior.ckpt").string()),
                    "prior.ckpt");
  check_fingerprint(config, numkit::read_checkpoint_header((dir / "policy.ckpt").string()),
                    "policy.ckpt");
  return DsdpArtifacts{styles::ReprFunction::load((dir / "style.ckpt").string()),
                       styles::PriorNet::load((dir / "prior.ckpt").string()),
                       policy::DiffusionPolicy::load((dir / "policy.ckpt").string())};
}

}  // namespace

void cmd_synth(const RunConfig& config, std::ostream& out) {
  const fs::path dir = out_dir(config);
  echo_config(config, dir);
  const datasets::SyntheticSpec spec = synthetic_spec(config);
  Dataset ds = datasets::generate_synthetic(spec);
  datasets::save_dataset(ds, (dir / "dataset.jsonl").string(),
                         (dir / "dataset.stats.json").string());
  write_manifest(config, dir, "synth", {"dataset.jsonl", "dataset.stats.json"},
                 {{"n_styles", std::to_string(spec.n_styles)},
                  {"n_drivers", std::to_string(spec.n_drivers)},
                  {"trajectories", std::to_string(ds.trajectories.size())}});
  out << "synth: " << ds.trajectories.size() << " trajectories, " << spec.n_styles
      << " styles -> " << (dir / "dataset.jsonl").string() << "\n";
}

void cmd_ingest(const RunConfig& config, std::ostream& out) {
  const fs::path dir = out_dir(config);
  echo_config(config, dir);
  const std::string path = config.require("ingest", "csv");
  const auto raw = datasets::ingest_csv(path);
  std::size_t records = 0;
  for (const auto& t : raw) records += t.records.size();
  datasets::write_raw_csv((dir / "raw.csv").string(), raw);
  write_manifest(config, dir, "ingest", {"raw.csv"},
                 {{"source", path},
                  {"vehicles", std::to_string(raw.size())},
                  {"records", std::to_string(records)}});
  out << "ingest: " << raw.size() << " vehicles, " << records << " records -> "
      << (dir / "raw.csv").string() << "\n";
}

void cmd_preprocess(const RunConfig& config, std::ostream& out) {
  const fs::path dir = out_dir(config);
  echo_config(config, dir);
  const std::string csv = config.get("preprocess", "csv", (dir / "raw.csv").string());
  const auto raw = datasets::ingest_csv(csv);
  datasets::PreprocessConfig pc;
  pc.savgol_window = static_cast<int>(config.get_int("preprocess", "savgol_window", 7));
  pc.savgol_polyorder = static_cast<int>(config.get_int("preprocess", "savgol_polyorder", 2));
  pc.train_fraction = config.get_double("preprocess", "train_fraction", 0.8);
  const auto result = datasets::preprocess(raw, pc);
  datasets::save_dataset(result.train, (dir / "train.jsonl").string(),
                         (dir / "train.stats.json").string());
  datasets::save_dataset(result.test, (dir / "test.jsonl").string(),
                         (dir / "test.stats.json").string());
  write_manifest(config, dir, "preprocess",
                 {"train.jsonl", "train.stats.json", "test.jsonl", "test.stats.json"},
                 {{"dropped_short", std::to_string(result.report.dropped_short)},
                  {"outliers_replaced", std::to_string(result.report.outliers_replaced)},
                  {"split_frame", std::to_string(result.report.split_frame)}});
  out << "preprocess: " << result.train.trajectories.size() << " train / "
      << result.test.trajectories.size() << " test trajectories ("
      << result.report.dropped_short << " dropped short)\n";
}

void cmd_train_style(const RunConfig& config, std::ostream& out) {
  const fs::path dir = out_dir(config);
  echo_config(config, dir);
  auto [train, val] = load_train_val(config, dir);
  auto run = styles::train_contrastive(train.views(), contrastive_config(config));
  run.repr.save((dir / "style.ckpt").string(), config.fingerprint(),
                stage_seed(config.master_seed(), "train-style"));
  write_curve(dir / "style_curve.csv", run.loss_curve);
  write_manifest(config, dir, "train-style", {"style.ckpt", "style_curve.csv"},
                 {{"K", std::to_string(run.repr.config().K)},
                  {"final_loss", std::to_string(run.loss_curve.back())}});
  out << "train-style: " << run.loss_curve.size() << " passes, final loss "
      << run.loss_curve.back() << " -> " << (dir / "style.ckpt").string() << "\n";
}

void cmd_train_prior(const RunConfig& config, std::ostream& out) {
  const fs::path dir = out_dir(config);
  echo_config(config, dir);
  require_checkpoint(dir / "style.ckpt", "train-style");
  check_fingerprint(config, numkit::read_checkpoint_header((dir / "style.ckpt").string()),
                    "style.ckpt");
  auto repr = styles::ReprFunction::load((dir / "style.ckpt").string());
  auto [train, val] = load_train_val(config, dir);
  auto run = styles::train_prior(train.views(), repr, prior_config(config));
  run.prior.save((dir / "prior.ckpt").string(), config.fingerprint(),
                 stage_seed(config.master_seed(), "train-prior"));
  write_curve(dir / "prior_curve.csv", run.loss_curve);
  write_manifest(config, dir, "train-prior", {"prior.ckpt", "prior_curve.csv"},
                 {{"final_loss", std::to_string(run.loss_curve.back())}});
  out << "train-prior: final cross-entropy " << run.loss_curve.back() << " -> "
      << (dir / "prior.ckpt").string() << "\n";
}

void cmd_train_policy(const RunConfig& config, std::ostream& out) {
  const fs::path dir = out_dir(config);
  echo_config(config, dir);
  require_checkpoint(dir / "style.ckpt", "train-style");
  check_fingerprint(config, numkit::read_checkpoint_header((dir / "style.ckpt").string()),
                    "style.ckpt");
  auto repr = styles::ReprFunction::load((dir / "style.ckpt").string());
  auto [train, val] = load_train_val(config, dir);
  auto ptc = policy_config(config, repr.config().style_dim);
  auto run = policy::train_policy(train.views(), val.views(), &repr, ptc);
  const policy::SamplerKind sampler =
      policy::SamplerKind::parse(config.get("policy", "sampler", "ddpm"));
  run.policy.save((dir / "policy.ckpt").string(), config.fingerprint(), ptc.seed, sampler);
  write_curve(dir / "policy_curve.csv", run.loss_curve);
  std::vector<std::string> files = {"policy.ckpt", "policy_curve.csv"};
  std::map<std::string, std::string> meta = {{"best_epoch", std::to_string(run.best_epoch)}};
  for (const auto& ck : run.checkpoints) {
    meta["val_loss_epoch_" + std::to_string(ck.epoch)] = std::to_string(ck.val_loss);
  }
  write_manifest(config, dir, "train-policy", files, meta);
  out << "train-policy: best epoch " << run.best_epoch << " -> "
      << (dir / "policy.ckpt").string() << "\n";
}

void cmd_train_baseline(const RunConfig& config, const std::string& kind, std::ostream& out) {
  const fs::path dir = out_dir(config);
  echo_config(config, dir);
  const baselines::BaselineKind bk = baselines::baseline_kind_from_string(kind);
  auto [train, val] = load_train_val(config, dir);
  std::vector<double> curve;
  auto artifact = baselines::train_baseline(bk, train, val, baseline_config(config, kind), &curve);
  const std::string name = "baseline_" + kind + ".ckpt";
  artifact->save((dir / name).string(), config.fingerprint(),
                 stage_seed(config.master_seed(), "train-baseline:" + kind));
  std::vector<std::string> files = {name};
  if (!curve.empty()) {
    write_curve(dir / ("baseline_" + kind + "_curve.csv"), curve);
    files.push_back("baseline_" + kind + "_curve.csv");
  }
  write_manifest(config, dir, "train-baseline-" + kind, files, {});
  out << "train-baseline " << kind << " -> " << (dir / name).string() << "\n";
}

namespace {

/// Hooks factory for the configured policy under evaluation: "dsdp" or a
/// baseline kind name.
struct EvalPolicy {
  std::string name;
  std::unique_ptr<DsdpArtifacts> dsdp;
  std::unique_ptr<baselines::BaselinePolicy> baseline;
  policy::RolloutConfig rollout;

  eval::HooksFactory factory() const {
    if (dsdp) {
      const DsdpArtifacts* artifacts = dsdp.get();
      const policy::RolloutConfig rc = rollout;
      return [artifacts, rc](std::size_t, std::size_t, Rng&) {
        policy::EgoPolicyHooks hooks =
            policy::make_policy_hooks(artifacts->policy, &artifacts->prior, &artifacts->repr, rc);
        return hooks;
      };
    }
    const baselines::BaselinePolicy* artifact = baseline.get();
    return [artifact](std::size_t, std::size_t, Rng&) { return artifact->make_hooks(); };
  }
};

EvalPolicy load_eval_policy(const RunConfig& config, const fs::path& dir) {
  EvalPolicy ep;
  ep.name = config.get("eval", "policy", "dsdp");
  ep.rollout.L_p = static_cast<int>(config.get_int("prior", "L_p", 5));
  ep.rollout.temperature = config.get_double("eval", "style_temperature", 1.0);
  ep.rollout.sampler = policy::SamplerKind::parse(config.get("policy", "sampler", "ddpm"));
  if (ep.name == "dsdp") {
    ep.dsdp = std::make_unique<DsdpArtifacts>(load_dsdp(config, dir));
  } else {
    const fs::path path = dir / ("baseline_" + ep.name + ".ckpt");
    require_checkpoint(path, "train-baseline " + ep.name);
    check_fingerprint(config, numkit::read_checkpoint_header(path.string()), path.filename().string());
    ep.baseline = baselines::load_baseline(path.string());
  }
  return ep;
}

}  // namespace

void cmd_eval(const RunConfig& config, const std::string& metric, std::ostream& out) {
  if (metric != "crash" && metric != "f1") {
    throw std::invalid_argument("eval: metric must be 'crash' or 'f1'");
  }
  const fs::path dir = out_dir(config);
  echo_config(config, dir);
  const Dataset test = fs::exists(dir / "test.jsonl")
                           ? load_named_dataset(dir, "test")
                           : load_train_val(config, dir).second;
  EvalPolicy ep = load_eval_policy(config, dir);

  eval::EvalReport report;
  report.metric = metric;
  report.policy_name = ep.name;
  report.fingerprint = config.fingerprint();
  report.seed = stage_seed(config.master_seed(), "eval-" + metric);

  if (metric == "crash") {
    eval::CrashProtocolConfig cc;
    cc.n_scenarios = static_cast<int>(config.get_int("eval", "n_scenarios", 100));
    cc.steps = static_cast<int>(config.get_int("eval", "steps", 200));
    cc.L_p = static_cast<int>(config.get_int("prior", "L_p", 5));
    cc.stopped_leader = config.get_flag("eval", "stopped_leader", false);
    cc.seed = report.seed;
    cc.workers = eval_workers(config);
    const auto set = eval::build_crash_scenarios(test, cc);
    const auto result = eval::run_crash_protocol(ep.factory(), set, test.stats, cc);
    report.n_scenarios = cc.n_scenarios;
    report.crash_pct = 100.0 * result.crash_fraction;
    report.crash_rows = result.crashed;
    out << "eval-crash [" << ep.name << "]: " << report.crash_pct << "% over "
        << cc.n_scenarios << " scenarios\n";
  } else {
    eval::F1Config fc;
    fc.k = static_cast<int>(config.get_int("eval", "k", 5));
    fc.n_scenarios = static_cast<int>(config.get_int("eval", "n_scenarios", 20));
    fc.L_p = static_cast<int>(config.get_int("prior", "L_p", 5));
    fc.max_steps = static_cast<int>(config.get_int("eval", "max_steps", 150));
    fc.seed = report.seed;
    fc.workers = eval_workers(config);
    const auto result = eval::evaluate_f1(ep.factory(), test, fc);
    report.n_scenarios = fc.n_scenarios;
    report.density = result.density;
    report.coverage = result.coverage;
    report.f1 = result.f1;
    report.skipped = result.skipped;
    report.f1_rows = result.rows;
    out << "eval-f1 [" << ep.name << "]: F1 " << report.f1 << " (density " << report.density
        << ", coverage " << report.coverage << ") over " << fc.n_scenarios << " scenarios\n";
  }
  const std::string stem = "report_" + metric + "_" + ep.name;
  eval::save_report_json((dir / (stem + ".json")).string(), report);
  eval::save_report_csv((dir / (stem + ".csv")).string(), report);
  write_manifest(config, dir, "eval-" + metric + "-" + ep.name,
                 {stem + ".json", stem + ".csv"}, {});
}

void cmd_report(const RunConfig& config, const std::vector<std::string>& report_paths,
                std::ostream& out) {
  if (report_paths.empty()) throw std::invalid_argument("report: no report files given");
  const fs::path dir = out_dir(config);
  std::vector<double> crash, f1, density, coverage;
  std::string metric;
  for (const std::string& path : report_paths) {
    const eval::EvalReport r = eval::load_report_json(path);
    if (metric.empty()) metric = r.metric;
    if (metric != r.metric) throw std::invalid_argument("report: mixed metrics in inputs");
    if (r.metric == "crash") {
      crash.push_back(r.crash_pct);
    } else {
      f1.push_back(r.f1);
      density.push_back(r.density);
      coverage.push_back(r.coverage);
    }
  }
  const fs::path path = dir / ("aggregate_" + metric + ".csv");
  std::ofstream os(path);
  os << "metric,mean,two_se,n_seeds\n";
  auto emit = [&](const std::string& name, const std::vector<double>& values) {
    const eval::Aggregate a = eval::aggregate(values);
    os << name << "," << a.mean << "," << a.two_se << "," << values.size() << "\n";
    out << name << ": " << a.mean << " +/- " << a.two_se << " (" << values.size() << " seeds)\n";
  };
  if (metric == "crash") {
    emit("crash_pct", crash);
  } else {
    emit("f1", f1);
    emit("density", density);
    emit("coverage", coverage);
  }
}

int run_command(const std::string& command, const RunConfig& config,
                const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    if (command == "synth") {
      cmd_synth(config, out);
    } else if (command == "ingest") {
      cmd_ingest(config, out);
    } else if (command == "preprocess") {
      cmd_preprocess(config, out);
    } else if (command == "train-style") {
      cmd_train_style(config, out);
    } else if (command == "train-prior") {
      cmd_train_prior(config, out);
    } else if (command == "train-policy") {
      cmd_train_policy(config, out);
    } else if (command == "train-baseline") {
      if (args.empty()) throw std::invalid_argument("train-baseline: missing kind argument");
      cmd_train_baseline(config, args.front(), out);
    } else if (command == "eval-crash") {
      cmd_eval(config, "crash", out);
    } else if (command == "eval-f1") {
      cmd_eval(config, "f1", out);
    } else if (command == "report") {
      cmd_report(config, args, out);
    } else {
      throw std::invalid_argument("unknown command '" + command + "'");
    }
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace drivestyle::cli
