// ergocam command-line entry point.
//
// Exit codes: 0 success, 1 runtime failure, 2 validation or usage failure.
// ERGOCAM_OUTPUT_ROOT sets the default output directory (else ./ergocam_out).

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ergocam/error.hpp"
#include "ergocam/evaluation.hpp"
#include "ergocam/pipeline.hpp"
#include "ergocam/scenario.hpp"

namespace fs = std::filesystem;
using namespace ergocam;

namespace {

fs::path default_output_root() {
  if (const char* env = std::getenv("ERGOCAM_OUTPUT_ROOT"); env && *env) return env;
  return "ergocam_out";
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  f << text;
}

std::vector<RunRecording> load_runs(const fs::path& root) {
  std::vector<RunRecording> runs;
  for (const auto& dir : find_runs(root)) runs.push_back(read_recording(dir));
  if (runs.empty()) throw Error(ErrorCode::kIo, "no recordings below " + root.string());
  return runs;
}

int cmd_simulate(const fs::path& scenario_path, std::uint64_t seed, const fs::path& out, const std::string& scheduler) {
  const Scenario s = load_scenario(scenario_path);
  RunOptions options;
  options.scheduler = scheduler == "actors" ? SchedulerMode::kActors : SchedulerMode::kSingleThreaded;
  options.out_root = out;
  options.keep_in_memory = false;
  for (double h : s.statures) {
    for (int k = 0; k < s.seeds_per_stature; ++k) {
      const std::uint64_t run_seed = seed + static_cast<std::uint64_t>(k);
      const RunResult r = run_scenario(with_stature(s, h), run_seed, options);
      std::printf("%s  class=%s estimated=%.3f m  pre=%s  post=%s  frames=%d  dropped=%d  %.3f ms/frame\n",
                  r.pre.manifest.run_id.c_str(), std::string(to_string(r.adaptation.height_class)).c_str(),
                  r.adaptation.estimated_height, r.pre.manifest.digest.substr(0, 12).c_str(),
                  r.post.manifest.digest.substr(0, 12).c_str(), r.stats.processed_frames,
                  r.pre.manifest.dropped_frames + r.post.manifest.dropped_frames, r.stats.mean_frame_ms());
    }
  }
  return 0;
}

int cmd_eval_rmse(const fs::path& recording, const fs::path& out) {
  for (const auto& rec : load_runs(recording)) {
    const RmseReport report = compute_rmse(rec);
    std::cout << rec.manifest.phase << "/" << rec.manifest.run_id << "\n" << format_rmse_table(report) << "\n";
    write_text(out / rec.manifest.phase / (rec.manifest.run_id + ".json"), rmse_to_json(report));
  }
  return 0;
}

int cmd_eval_rula(const fs::path& pre, const fs::path& post, const fs::path& out) {
  const RulaComparison c = compare_rula(load_runs(pre), load_runs(post));
  std::cout << format_rula_comparison(c);
  write_rula_comparison(c, out);
  return 0;
}

int cmd_export(const fs::path& recording, const std::string& what, const std::string& format,
               const std::string& out) {
  const auto fmt = format == "json" ? ExportFormat::kJson : ExportFormat::kCsv;
  const auto dirs = find_runs(recording);
  if (dirs.size() != 1) {
    throw Error(ErrorCode::kValidation, "export: --recording must name a single run directory (found " +
                                            std::to_string(dirs.size()) + ")");
  }
  const RunRecording rec = read_recording(dirs.front());
  std::string text;
  if (what == "landmarks") {
    text = export_landmarks(rec, fmt);
  } else if (what == "rula") {
    text = export_rula(rec, fmt);
  } else {
    text = export_heatmap(rec, fmt);
  }
  if (out.empty() || out == "-") {
    std::cout << text;
  } else {
    write_text(out, text);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-rig stereo ergonomics toolkit"};
  app.require_subcommand(1);
  const fs::path root = default_output_root();

  fs::path scenario_path, out_dir = root;
  std::uint64_t seed = 0;
  std::string scheduler = "single-threaded";
  auto* sim = app.add_subcommand("simulate", "Run a scenario and write pre/post recordings");
  sim->add_option("--scenario", scenario_path, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  sim->add_option("--seed", seed, "Base seed; run k of a stature uses seed + k")->required();
  sim->add_option("--out", out_dir, "Output root")->capture_default_str();
  sim->add_option("--scheduler", scheduler)->check(CLI::IsMember({"single-threaded", "actors"}))->capture_default_str();

  fs::path recording, rmse_out = root / "eval-rmse";
  auto* rmse = app.add_subcommand("eval-rmse", "Per-landmark RMSE of each rig and of the fusion");
  rmse->add_option("--recording", recording, "Run directory or a root containing runs")->required();
  rmse->add_option("--out", rmse_out, "Directory for JSON reports")->capture_default_str();

  fs::path pre, post, rula_out = root / "eval-rula";
  auto* rula = app.add_subcommand("eval-rula", "Paired pre/post RULA comparison");
  rula->add_option("--recording-pre", pre)->required();
  rula->add_option("--recording-post", post)->required();
  rula->add_option("--out", rula_out, "Directory for CSV reports")->capture_default_str();

  std::string what, format = "csv", export_out;
  auto* exp = app.add_subcommand("export", "Export one stream of a run");
  exp->add_option("--recording", recording)->required();
  exp->add_option("--what", what)->required()->check(CLI::IsMember({"landmarks", "rula", "heatmap"}));
  exp->add_option("--format", format)->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
  exp->add_option("--out", export_out, "Output file (default standard output)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*sim) return cmd_simulate(scenario_path, seed, out_dir, scheduler);
    if (*rmse) return cmd_eval_rmse(recording, rmse_out);
    if (*rula) return cmd_eval_rula(pre, post, rula_out);
    return cmd_export(recording, what, format, export_out);
  } catch (const Error& e) {
    std::cerr << "ergocam: " << to_string(e.code()) << ": " << e.what() << "\n";
    return e.code() == ErrorCode::kValidation ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "ergocam: " << e.what() << "\n";
    return 1;
  }
}
