#include "binpick/binpick.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <filesystem>
#include <fstream>
#include <memory>
#include <new>
#include <optional>
#include <span>
#include <string>

#include "binpick/config.hpp"
#include "binpick/density.hpp"
#include "binpick/error.hpp"
#include "binpick/pipeline.hpp"
#include "binpick/scene.hpp"

struct bp_config {
  binpick::RunConfig cfg;
};

struct bp_scene {
  binpick::WorldState world;
};

namespace {

thread_local std::string g_last_error;

bp_status status_for(binpick::ErrorCode code) {
  using binpick::ErrorCode;
  switch (code) {
    case ErrorCode::InvalidConfig: return BP_INVALID_CONFIG;
    case ErrorCode::PlacementFailure: return BP_GENERATION_FAILED;
    case ErrorCode::Io: return BP_IO;
    case ErrorCode::Parse: return BP_PARSE;
    case ErrorCode::NonConvergence: return BP_INTERNAL;
    default: return BP_INVALID_ARGUMENT;
  }
}

template <class F>
bp_status guarded(F&& f) {
  g_last_error.clear();
  try {
    f();
    return BP_OK;
  } catch (const binpick::Error& e) {
    g_last_error = e.what();
    return status_for(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return BP_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return BP_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (!p) throw binpick::Error(binpick::ErrorCode::InvalidArgument, std::string(what) + " must not be null");
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

binpick::Location parse_region(const char* region) {
  const std::string r = region ? region : "bin";
  if (r == "bin") return binpick::Location::InBin;
  if (r == "tray") return binpick::Location::OnTray;
  throw binpick::Error(binpick::ErrorCode::InvalidArgument, "unknown region '" + r + "'");
}

}  // namespace

extern "C" {

const char* bp_version(void) { return "1.0.0"; }

const char* bp_status_string(bp_status status) {
  switch (status) {
    case BP_OK: return "ok";
    case BP_INVALID_ARGUMENT: return "invalid argument";
    case BP_INVALID_CONFIG: return "invalid config";
    case BP_GENERATION_FAILED: return "generation failed";
    case BP_IO: return "i/o error";
    case BP_PARSE: return "parse error";
    case BP_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* bp_last_error(void) { return g_last_error.c_str(); }

void bp_string_free(char* s) { std::free(s); }

bp_status bp_config_default(bp_config** out) {
  return guarded([&] {
    need(out, "out");
    *out = nullptr;
    auto h = std::make_unique<bp_config>();
    h->cfg = binpick::parse_config("{}");
    *out = h.release();
  });
}

bp_status bp_config_load(const char* path, bp_config** out) {
  return guarded([&] {
    need(out, "out");
    *out = nullptr;
    std::optional<std::filesystem::path> p;
    if (path) p = std::filesystem::path(path);
    auto h = std::make_unique<bp_config>();
    h->cfg = binpick::load_config_or_default(p);
    *out = h.release();
  });
}

bp_status bp_config_parse(const char* json_text, bp_config** out) {
  return guarded([&] {
    need(json_text, "json_text");
    need(out, "out");
    *out = nullptr;
    auto h = std::make_unique<bp_config>();
    h->cfg = binpick::parse_config(json_text);
    *out = h.release();
  });
}

bp_status bp_config_dump(const bp_config* cfg, char** out_json) {
  return guarded([&] {
    need(cfg, "cfg");
    need(out_json, "out_json");
    *out_json = copy_string(binpick::dump_config(cfg->cfg));
  });
}

void bp_config_free(bp_config* cfg) { delete cfg; }

bp_status bp_scene_generate(const bp_config* cfg, int objects, const char* shape, uint64_t seed, bp_scene** out) {
  return guarded([&] {
    need(cfg, "cfg");
    need(shape, "shape");
    need(out, "out");
    *out = nullptr;
    auto h = std::make_unique<bp_scene>();
    h->world = binpick::generate_scene(objects, binpick::parse_shape_kind(shape), seed, cfg->cfg.workspace,
                                       cfg->cfg.scene);
    *out = h.release();
  });
}

bp_status bp_scene_load(const char* path, bp_scene** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = nullptr;
    auto h = std::make_unique<bp_scene>();
    h->world = binpick::load_scene(path);
    *out = h.release();
  });
}

bp_status bp_scene_save(const bp_scene* scene, const char* path) {
  return guarded([&] {
    need(scene, "scene");
    need(path, "path");
    binpick::save_scene(scene->world, path);
  });
}

bp_status bp_scene_item_count(const bp_scene* scene, int* out) {
  return guarded([&] {
    need(scene, "scene");
    need(out, "out");
    *out = static_cast<int>(scene->world.items.size());
  });
}

void bp_scene_free(bp_scene* scene) { delete scene; }

bp_status bp_run_trial(const bp_config* cfg, const bp_scene* scene, const char* mode, uint64_t seed,
                       const char* csv_path, bp_trial_summary* summary) {
  return guarded([&] {
    need(cfg, "cfg");
    need(scene, "scene");
    need(mode, "mode");
    binpick::TrialConfig tc = cfg->cfg.trial;
    tc.mode = binpick::parse_mode(mode);
    tc.seed = seed;
    binpick::ResultRow row;
    row.mode = tc.mode;
    row.policy = tc.singulation_policy;
    row.seed = seed;
    row.record = binpick::run_trial(scene->world, tc, cfg->cfg.lab);
    if (csv_path) binpick::write_rows_csv(std::span<const binpick::ResultRow>(&row, 1), csv_path);
    if (summary) {
      const binpick::TrialRecord& r = row.record;
      *summary = {};
      summary->success = r.success ? 1 : 0;
      summary->action_count = r.action_count;
      summary->singulation_count = r.singulation_count;
      summary->rough_grasp_count = r.rough_grasp_count;
      summary->picked_count = static_cast<int>(r.picked_ids.size());
      if (r.failure_reason) {
        const std::string_view s = binpick::to_string(*r.failure_reason);
        std::memcpy(summary->failure_reason, s.data(), std::min(s.size(), sizeof summary->failure_reason - 1));
      }
    }
  });
}

bp_status bp_run_bench(const bp_config* cfg, const char* suite, int trials, uint64_t seed, int threads,
                       const char* csv_path, const char* summary_path, int* out_rows) {
  return guarded([&] {
    need(cfg, "cfg");
    need(suite, "suite");
    need(csv_path, "csv_path");
    const std::string s = suite;
    const binpick::RunConfig& c = cfg->cfg;
    std::vector<binpick::ResultRow> rows;
    if (s == "singulation") {
      binpick::SingulationBench b = c.singulation;
      if (trials > 0) b.trials = trials;
      rows = binpick::run_singulation_bench(b, c.trial, c.lab, seed, threads);
    } else if (s == "pipeline") {
      binpick::PipelineBench b = c.pipeline;
      if (trials > 0) b.trials = trials;
      rows = binpick::run_pipeline_bench(b, c.trial, c.lab, seed, threads);
    } else {
      throw binpick::Error(binpick::ErrorCode::InvalidConfig, "unknown suite '" + s + "'");
    }
    binpick::write_rows_csv(rows, csv_path);
    if (summary_path) {
      std::ofstream out(summary_path, std::ios::binary);
      if (!out) throw binpick::Error(binpick::ErrorCode::Io, std::string("cannot write ") + summary_path);
      out << binpick::summarize(rows).dump(2) << '\n';
      if (!out) throw binpick::Error(binpick::ErrorCode::Io, std::string("write failed for ") + summary_path);
    }
    if (out_rows) *out_rows = static_cast<int>(rows.size());
  });
}

bp_status bp_render(const bp_config* cfg, const bp_scene* scene, const char* what, const char* region,
                    const char* out_dir) {
  return guarded([&] {
    need(cfg, "cfg");
    need(scene, "scene");
    need(what, "what");
    need(out_dir, "out_dir");
    const binpick::Location loc = parse_region(region);
    const binpick::Lab& lab = cfg->cfg.lab;
    const double scale = loc == binpick::Location::InBin ? lab.bin_mm_per_px : lab.tray_mm_per_px;
    const binpick::RasterFrame frame =
        binpick::rasterize(scene->world, scene->world.workspace.region(loc), scale);
    const std::filesystem::path dir(out_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw binpick::Error(binpick::ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());
    const std::string w = what;
    if (w == "density") {
      const binpick::DotMap dots = binpick::make_dot_map(frame);
      const binpick::DensityMap density = binpick::dot_to_density(dots, lab.density_sigma_px);
      binpick::write_density_pgm(density, dir / "density.pgm");
      binpick::write_density_csv(density, dir / "density.csv");
      binpick::write_dot_pgm(dots, dir / "dots.pgm");
    } else if (w == "masks") {
      binpick::write_mask_pgm(frame.instance_mask, dir / "masks.pgm");
    } else {
      throw binpick::Error(binpick::ErrorCode::InvalidArgument, "unknown render target '" + w + "'");
    }
  });
}

}  // extern "C"
