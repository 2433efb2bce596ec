#pragma once

// Trial state machines and the benchmark harness.
//
// Two-stage cycle: estimate density on the bin, grab at the densest site and
// drop the catch on the tray (3 actions); then detect grasps on the tray and
// either pick the best one (3 actions) or singulate (2 actions); reflow the
// tray into the bin at the end (2 actions). One-stage cycle: detect and pick
// directly in the bin (3 actions).

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "binpick/density.hpp"
#include "binpick/grasp.hpp"
#include "binpick/scene.hpp"
#include "binpick/singulation.hpp"
#include "binpick/world.hpp"

namespace binpick {

enum class Mode { TwoStage, OneStage };
enum class SingulationPolicy { Auto, OutsweepOnly, BreakOffOnly, Baseline };
enum class FailureReason { NoGraspFound, MultiCapture, Collision, LimitExceeded, PlacementFailure, NonConvergence };

std::string_view to_string(Mode m);
std::string_view to_string(SingulationPolicy p);
std::string_view to_string(FailureReason r);
Mode parse_mode(std::string_view s);
SingulationPolicy parse_policy(std::string_view s);

struct TrialNoise {
  double tray_jitter_sigma = 0.3;  // px
  double bin_jitter_sigma = 0.8;   // px
  EstimatorNoise estimator{0.5, 3e-4, 0.0};
};

struct TrialLimits {
  int max_singulations = 20;
  int max_rough_attempts = 5;  // consecutive empty grabs
};

/// Everything about the cell that is not per-trial: hardware, sensing and planner knobs.
struct Lab {
  Gripper gripper;
  double tray_mm_per_px = 1.0;
  double bin_mm_per_px = 2.0;
  double density_sigma_px = 8.0;
  double rough_open_width = 14.0;  // mm
  double link_distance_factor = 3.0;  // D_link = factor * mean item diameter
  GraspParams grasp;
  ClusterParams cluster;
  PlannerParams planner;
  DynamicsParams dynamics;
  PlacementParams placement;
};

struct TrialConfig {
  Mode mode = Mode::TwoStage;
  int target_picks = 1;
  SingulationPolicy singulation_policy = SingulationPolicy::Auto;
  TrialNoise noise;
  TrialLimits limits;
  std::uint64_t seed = 0;
};

void validate(const TrialConfig& cfg);

struct TrialRecord {
  bool success = false;
  std::vector<int> picked_ids;
  int singulation_count = 0;
  int rough_grasp_count = 0;
  int action_count = 0;
  std::optional<FailureReason> failure_reason;
  /// Successful fine picks that did not lower the tray count by exactly one.
  int pick_contract_violations = 0;
  WorldState final_world;
};

TrialRecord run_two_stage(const WorldState& world, const TrialConfig& cfg, const Lab& lab = {});
TrialRecord run_one_stage(const WorldState& world, const TrialConfig& cfg, const Lab& lab = {});
TrialRecord run_trial(const WorldState& world, const TrialConfig& cfg, const Lab& lab = {});

/// Picks from the tray until `picks_needed` items are placed or the tray is
/// empty, singulating when no grasp is found. Updates `world` and `rec` in place;
/// returns false when the trial has failed.
bool run_fine_stage(WorldState& world, int picks_needed, const TrialConfig& cfg, const Lab& lab, TrialRecord& rec);

/// One benchmark row.
struct ResultRow {
  Mode mode = Mode::TwoStage;
  SingulationPolicy policy = SingulationPolicy::Auto;
  int cluster_size = 0;  // 0 for pipeline trials
  std::uint64_t seed = 0;
  TrialRecord record;
};

struct SingulationBench {
  std::vector<int> cluster_sizes{2, 3, 4, 6, 10, 20};
  std::vector<SingulationPolicy> policies{SingulationPolicy::Baseline, SingulationPolicy::OutsweepOnly,
                                          SingulationPolicy::BreakOffOnly, SingulationPolicy::Auto};
  int trials = 5;
  int max_singulations = 60;
  ShapeKind shape = ShapeKind::Mixed;
  SceneParams scene;
  Workspace workspace;
};

struct PipelineBench {
  int trials = 200;
  int objects_min = 100;
  int objects_max = 300;
  ShapeKind shape = ShapeKind::Mixed;
  SceneParams scene;
  Workspace workspace;
};

/// Tray-only world holding one contacting cluster of `size` items at the tray center.
WorldState make_cluster_world(int size, std::uint64_t seed, const SingulationBench& bench, const Lab& lab,
                              const Workspace& workspace = {});

/// Rows sorted by (mode, policy, cluster_size, seed). `threads` <= 0 uses the hardware concurrency.
std::vector<ResultRow> run_singulation_bench(const SingulationBench& bench, const TrialConfig& base, const Lab& lab,
                                             std::uint64_t root_seed, int threads = 0);
std::vector<ResultRow> run_pipeline_bench(const PipelineBench& bench, const TrialConfig& base, const Lab& lab,
                                          std::uint64_t root_seed, int threads = 0);

/// The 8 standard calibration scenes: scene i holds 100 + floor(200 i / 7) mixed items, seed 1000 + i.
std::vector<WorldState> standard_scenes(const Workspace& workspace = {}, const SceneParams& params = {});

/// Calibrated MSE (see kCalibrationDensityScale) of the estimator against ground
/// truth on each standard scene, rasterized at the bin scale.
std::vector<double> calibration_errors(const Lab& lab, const EstimatorNoise& noise, std::uint64_t seed);

void sort_rows(std::vector<ResultRow>& rows);
std::string rows_to_csv(std::span<const ResultRow> rows);
void write_rows_csv(std::span<const ResultRow> rows, const std::filesystem::path& path);
/// Per (mode, policy, cluster_size) group: count, success rate and mean counters.
nlohmann::json summarize(std::span<const ResultRow> rows);

}  // namespace binpick
