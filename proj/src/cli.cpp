#include "afsmote/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "afsmote/calibration.hpp"
#include "afsmote/config.hpp"
#include "afsmote/dataset.hpp"
#include "afsmote/error.hpp"
#include "afsmote/pipeline.hpp"

namespace afsmote {

namespace {

namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitRuntime = 3;

struct CommonOptions {
  std::string config;
  std::vector<std::string> sets;
  std::string seed;
  std::string out = "out";
  std::size_t jobs = 1;
  std::string impute;
};

void add_common(CLI::App& cmd, CommonOptions& o) {
  cmd.add_option("-c,--config", o.config, "Config file ([section] key = value)");
  cmd.add_option("-s,--set", o.sets, "Override, section.key=value (repeatable, applied after the file)");
  cmd.add_option("--seed", o.seed, "Base seed (unsigned 64-bit); beats the config and AFSMOTE_SEED");
  cmd.add_option("-o,--out", o.out, "Output root; files go to <out>/<config-hash>/")->capture_default_str();
  cmd.add_option("-j,--jobs", o.jobs, "Concurrent folds or sweep cells")->capture_default_str()->check(
      CLI::PositiveNumber);
  cmd.add_option("--impute", o.impute, "NaN handling for CSV input: none or mean (training-split means)")
      ->check(CLI::IsMember({"none", "mean"}));
}

std::uint64_t parse_seed(const std::string& text, const std::string& origin) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
    throw Error(ErrorCode::kInvalidArgument, origin + ": expected an unsigned 64-bit seed, got '" + text + "'");
  }
  return v;
}

ResolvedConfig resolve(const CommonOptions& o) {
  ResolvedConfig rc = o.config.empty() ? ResolvedConfig{} : load_config_file(o.config);
  if (!o.impute.empty()) apply_override(rc, "data.impute=" + o.impute);
  for (const auto& s : o.sets) apply_override(rc, s);
  if (!o.seed.empty()) {
    rc.experiment.seed = parse_seed(o.seed, "--seed");
  } else if (!rc.seed_set) {
    const char* env = std::getenv("AFSMOTE_SEED");
    rc.experiment.seed = env != nullptr ? parse_seed(env, "AFSMOTE_SEED") : 0;
  }
  rc.experiment.jobs = o.jobs;
  rc.experiment.validate();
  return rc;
}

fs::path output_dir(const std::string& root, const std::string& hash) {
  const fs::path dir = fs::path(root) / hash;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());
  return dir;
}

void write_json(const nlohmann::json& j, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

void require_synthetic(const ResolvedConfig& rc, const char* command) {
  if (rc.experiment.data.csv) {
    throw Error(ErrorCode::kInvalidArgument, std::string(command) + " needs the synthetic source; unset data.csv");
  }
}

int cmd_gen_synth(const CommonOptions& o, std::ostream& out) {
  const ResolvedConfig rc = resolve(o);
  require_synthetic(rc, "gen-synth");
  const Dataset data = load_source(rc.experiment.data, rc.experiment.seed);
  const fs::path dir = output_dir(o.out, config_hash(rc.experiment));
  write_csv(data, dir / "data.csv");
  out << (dir / "data.csv").string() << '\n';
  return kExitOk;
}

int cmd_augment(const CommonOptions& o, bool emit_candidates, bool emit_scores, std::ostream& out) {
  const ResolvedConfig rc = resolve(o);
  const Dataset data = load_source(rc.experiment.data, rc.experiment.seed);
  const AugmentResult result = augment_dataset(data, rc.experiment);
  const fs::path dir = output_dir(o.out, config_hash(rc.experiment));
  write_csv(result.augmented, dir / "augmented.csv");
  out << (dir / "augmented.csv").string() << '\n';
  if (emit_candidates) {
    write_candidates_csv(result.candidates, dir / "candidates.csv");
    out << (dir / "candidates.csv").string() << '\n';
  }
  if (emit_scores) {
    if (result.filtered.scored.empty() && result.candidates.points.rows() > 0) {
      throw Error(ErrorCode::kInvalidArgument, "--emit-scores needs filter.enabled = true");
    }
    write_scores_csv(result.filtered, dir / "scores.csv");
    out << (dir / "scores.csv").string() << '\n';
  }
  return kExitOk;
}

int cmd_run(const CommonOptions& o, std::ostream& out) {
  const ResolvedConfig rc = resolve(o);
  const Dataset data = load_source(rc.experiment.data, rc.experiment.seed);
  RunResult result = run_on_dataset(data, rc.experiment);
  result.overrides = rc.overrides;
  const fs::path dir = output_dir(o.out, result.config_hash);
  emit_report(result, ReportFormat::kJson, dir / "report.json");
  emit_report(result, ReportFormat::kCsv, dir / "report.csv");

  std::vector<double> probs;
  std::vector<int> labels;
  for (const auto& f : result.folds) {
    probs.insert(probs.end(), f.test_probs.begin(), f.test_probs.end());
    for (const std::size_t i : f.test_indices) labels.push_back(data.labels[i]);
  }
  write_reliability_csv(reliability_bins(probs, labels, kDefaultBins), dir / "reliability.csv");
  out << dir.string() << '\n';
  return kExitOk;
}

int cmd_sweep(const CommonOptions& o, std::ostream& out, std::ostream& err) {
  const ResolvedConfig rc = resolve(o);
  const auto cells = run_sweep(rc.experiment, rc.sweep);
  nlohmann::json key{{"base", rc.experiment.to_json()},
                     {"grid",
                      {{"lambda", rc.sweep.lambda_values},
                       {"p0", rc.sweep.p0_values},
                       {"k", rc.sweep.k_values},
                       {"ratio", rc.sweep.ratio_values}}}};
  const fs::path dir = output_dir(o.out, json_hash(key));
  write_sweep_csv(cells, dir / "sweep.csv");
  std::size_t failed = 0;
  for (const auto& c : cells) {
    if (c.result) continue;
    ++failed;
    err << "cell " << c.id << " failed: " << c.error << '\n';
  }
  out << (dir / "sweep.csv").string() << '\n';
  if (failed > 0) {
    err << failed << " of " << cells.size() << " cells failed\n";
    return kExitRuntime;
  }
  return kExitOk;
}

int cmd_theorem(const CommonOptions& o, std::optional<std::size_t> seeds, std::ostream& out, std::ostream& err) {
  ResolvedConfig rc = resolve(o);
  require_synthetic(rc, "theorem-check");
  if (seeds) rc.theorem.n_seeds = *seeds;
  const TheoremReport report = theorem_check(rc.experiment.data.synthetic, rc.experiment, rc.theorem);
  nlohmann::json j = report.to_json();
  j["provenance"] = {{"config", rc.experiment.to_json()},
                     {"seed", rc.experiment.seed},
                     {"overrides", rc.overrides},
                     {"artifact_version", kArtifactVersion}};
  const fs::path dir = output_dir(o.out, json_hash(j["provenance"]["config"]));
  write_json(j, dir / "theorem.json");
  out << (dir / "theorem.json").string() << '\n';
  if (!report.passed) {
    err << "theorem check failed: improvement fraction " << report.improvement_fraction << ", bound held on "
        << report.bound_holds << " of " << report.seeds.size() << " seeds\n";
    return kExitRuntime;
  }
  return kExitOk;
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kUsage:
      return kExitUsage;
    case ErrorKind::kData:
      return kExitData;
    case ErrorKind::kRuntime:
      return kExitRuntime;
  }
  return kExitRuntime;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Adversarially filtered SMOTE: augmentation, experiments, sweeps and theorem checks", "afsmote"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kArtifactVersion));

  CommonOptions gen_o, aug_o, run_o, sweep_o, thm_o;
  auto* gen = app.add_subcommand("gen-synth", "Write the synthetic dataset to data.csv");
  add_common(*gen, gen_o);

  auto* aug = app.add_subcommand("augment", "Generate, filter and write augmented.csv");
  add_common(*aug, aug_o);
  bool emit_candidates = false, emit_scores = false;
  aug->add_flag("--emit-candidates", emit_candidates, "Also write candidates.csv");
  aug->add_flag("--emit-scores", emit_scores, "Also write scores.csv (head scores, S, retained)");

  auto* run = app.add_subcommand("run", "Cross-validated experiment; writes report.json, report.csv, reliability.csv");
  add_common(*run, run_o);

  auto* sweep = app.add_subcommand("sweep", "Grid over lambda x p0 x k x ratio; writes sweep.csv");
  add_common(*sweep, sweep_o);

  auto* thm = app.add_subcommand("theorem-check", "Directional and Brier-bound checks over seeds; writes theorem.json");
  add_common(*thm, thm_o);
  std::optional<std::size_t> seeds;
  thm->add_option("--seeds", seeds, "Number of seeds (overrides theorem.seeds)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen) return cmd_gen_synth(gen_o, out);
    if (*aug) return cmd_augment(aug_o, emit_candidates, emit_scores, out);
    if (*run) return cmd_run(run_o, out);
    if (*sweep) return cmd_sweep(sweep_o, out, err);
    if (*thm) return cmd_theorem(thm_o, seeds, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace afsmote
