// binpick: scene generation, single trials, benchmark suites and renders.
//
// Exit codes: 0 ran, 2 invalid flags or config, 3 scene generation failed, 4 I/O.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>

#include "CLI11.hpp"
#include "binpick/binpick.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitGeneration = 3;
constexpr int kExitIo = 4;

int exit_code(bp_status s) {
  switch (s) {
    case BP_OK: return kExitOk;
    case BP_INVALID_ARGUMENT:
    case BP_INVALID_CONFIG: return kExitConfig;
    case BP_GENERATION_FAILED: return kExitGeneration;
    case BP_IO:
    case BP_PARSE: return kExitIo;
    case BP_INTERNAL: return 1;
  }
  return 1;
}

int report(bp_status s) {
  if (s != BP_OK) std::fprintf(stderr, "binpick: %s: %s\n", bp_status_string(s), bp_last_error());
  return exit_code(s);
}

// Owns one C handle.
template <class T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Free(p); }
};

using Config = Handle<bp_config, bp_config_free>;
using Scene = Handle<bp_scene, bp_scene_free>;

bp_status load_config(const std::string& path, Config& cfg) {
  return bp_config_load(path.empty() ? nullptr : path.c_str(), &cfg.p);
}

std::string default_summary_path(const std::string& csv) {
  std::filesystem::path p(csv);
  p.replace_extension(".summary.json");
  return p.string();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"2D bin-picking lab"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(bp_version()));

  std::string config_path;
  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file (default: $BINPICK_CONFIG, else built-in defaults)");
  };

  struct {
    int objects = 0;
    std::string shape = "mixed";
    std::uint64_t seed = 0;
    std::string out;
  } gen;
  CLI::App* gen_cmd = app.add_subcommand("gen-scene", "Generate a seeded bin scene");
  gen_cmd->add_option("--objects", gen.objects, "Number of objects")->required();
  gen_cmd->add_option("--shape", gen.shape, "disk, polygon or mixed");
  gen_cmd->add_option("--seed", gen.seed, "Scene seed");
  gen_cmd->add_option("--out", gen.out, "Scene JSON path")->required();
  add_config(gen_cmd);

  struct {
    std::string scene;
    std::string mode = "two-stage";
    std::uint64_t seed = 0;
    std::string out;
  } run;
  CLI::App* run_cmd = app.add_subcommand("run", "Run one trial on a scene");
  run_cmd->add_option("--scene", run.scene, "Scene JSON path")->required();
  run_cmd->add_option("--mode", run.mode, "two-stage or one-stage");
  run_cmd->add_option("--seed", run.seed, "Trial seed");
  run_cmd->add_option("--out", run.out, "Record CSV path")->required();
  add_config(run_cmd);

  struct {
    std::string suite;
    int trials = 0;
    std::uint64_t seed = 0;
    int threads = 0;
    std::string out;
    std::string summary;
  } bench;
  CLI::App* bench_cmd = app.add_subcommand("bench", "Run a benchmark suite");
  bench_cmd->add_option("--suite", bench.suite, "singulation or pipeline")->required();
  bench_cmd->add_option("--trials", bench.trials, "Trials per cell (default: from config)");
  bench_cmd->add_option("--seed", bench.seed, "Root seed");
  bench_cmd->add_option("--threads", bench.threads, "Worker threads (default: all cores)");
  bench_cmd->add_option("--out", bench.out, "Per-trial CSV path")->required();
  bench_cmd->add_option("--summary", bench.summary, "Summary JSON path (default: <out>.summary.json)");
  add_config(bench_cmd);

  struct {
    std::string scene;
    std::string what;
    std::string region = "bin";
    std::string out;
  } render;
  CLI::App* render_cmd = app.add_subcommand("render", "Render density maps or instance masks as PGM");
  render_cmd->add_option("--scene", render.scene, "Scene JSON path")->required();
  render_cmd->add_option("--what", render.what, "density or masks")->required();
  render_cmd->add_option("--region", render.region, "bin or tray");
  render_cmd->add_option("--out", render.out, "Output directory")->required();
  add_config(render_cmd);

  std::string dump_out;
  CLI::App* config_cmd = app.add_subcommand("config", "Print the effective configuration");
  config_cmd->add_option("--out", dump_out, "Write to a file instead of stdout");
  add_config(config_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  Config cfg;
  if (bp_status s = load_config(config_path, cfg); s != BP_OK) return report(s);

  if (*gen_cmd) {
    if (gen.objects < 1) {
      std::fprintf(stderr, "binpick: --objects must be at least 1\n");
      return kExitConfig;
    }
    Scene scene;
    if (bp_status s = bp_scene_generate(cfg.p, gen.objects, gen.shape.c_str(), gen.seed, &scene.p); s != BP_OK)
      return report(s);
    return report(bp_scene_save(scene.p, gen.out.c_str()));
  }

  if (*run_cmd) {
    if (run.mode != "two-stage" && run.mode != "one-stage") {
      std::fprintf(stderr, "binpick: --mode must be two-stage or one-stage\n");
      return kExitConfig;
    }
    Scene scene;
    if (bp_status s = bp_scene_load(run.scene.c_str(), &scene.p); s != BP_OK) return report(s);
    bp_trial_summary summary;
    if (bp_status s = bp_run_trial(cfg.p, scene.p, run.mode.c_str(), run.seed, run.out.c_str(), &summary); s != BP_OK)
      return report(s);
    std::printf("%s: success=%s actions=%d singulations=%d rough_grasps=%d%s%s\n", run.mode.c_str(),
                summary.success ? "true" : "false", summary.action_count, summary.singulation_count,
                summary.rough_grasp_count, summary.failure_reason[0] ? " failure=" : "", summary.failure_reason);
    return kExitOk;
  }

  if (*bench_cmd) {
    if (bench.suite != "singulation" && bench.suite != "pipeline") {
      std::fprintf(stderr, "binpick: --suite must be singulation or pipeline\n");
      return kExitConfig;
    }
    if (bench.trials < 0) {
      std::fprintf(stderr, "binpick: --trials must be positive\n");
      return kExitConfig;
    }
    const std::string summary = bench.summary.empty() ? default_summary_path(bench.out) : bench.summary;
    int rows = 0;
    if (bp_status s = bp_run_bench(cfg.p, bench.suite.c_str(), bench.trials, bench.seed, bench.threads,
                                   bench.out.c_str(), summary.c_str(), &rows);
        s != BP_OK)
      return report(s);
    std::printf("%d rows -> %s, summary -> %s\n", rows, bench.out.c_str(), summary.c_str());
    return kExitOk;
  }

  if (*render_cmd) {
    if (render.what != "density" && render.what != "masks") {
      std::fprintf(stderr, "binpick: --what must be density or masks\n");
      return kExitConfig;
    }
    if (render.region != "bin" && render.region != "tray") {
      std::fprintf(stderr, "binpick: --region must be bin or tray\n");
      return kExitConfig;
    }
    Scene scene;
    if (bp_status s = bp_scene_load(render.scene.c_str(), &scene.p); s != BP_OK) return report(s);
    return report(bp_render(cfg.p, scene.p, render.what.c_str(), render.region.c_str(), render.out.c_str()));
  }

  if (*config_cmd) {
    char* text = nullptr;
    if (bp_status s = bp_config_dump(cfg.p, &text); s != BP_OK) return report(s);
    int rc = kExitOk;
    if (dump_out.empty()) {
      std::fputs(text, stdout);
    } else if (std::FILE* f = std::fopen(dump_out.c_str(), "wb")) {
      std::fputs(text, f);
      if (std::fclose(f) != 0) rc = kExitIo;
    } else {
      std::fprintf(stderr, "binpick: cannot write %s\n", dump_out.c_str());
      rc = kExitIo;
    }
    bp_string_free(text);
    return rc;
  }
  return kExitConfig;
}
