#include "binpick/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <thread>
#include <tuple>

#include "binpick/error.hpp"
#include "binpick/random.hpp"

namespace binpick {

std::string_view to_string(Mode m) { return m == Mode::TwoStage ? "two-stage" : "one-stage"; }

std::string_view to_string(SingulationPolicy p) {
  switch (p) {
    case SingulationPolicy::Auto: return "auto";
    case SingulationPolicy::OutsweepOnly: return "outsweep";
    case SingulationPolicy::BreakOffOnly: return "break-off";
    case SingulationPolicy::Baseline: return "baseline";
  }
  return "?";
}

std::string_view to_string(FailureReason r) {
  switch (r) {
    case FailureReason::NoGraspFound: return "NoGraspFound";
    case FailureReason::MultiCapture: return "MultiCapture";
    case FailureReason::Collision: return "Collision";
    case FailureReason::LimitExceeded: return "LimitExceeded";
    case FailureReason::PlacementFailure: return "PlacementFailure";
    case FailureReason::NonConvergence: return "NonConvergence";
  }
  return "?";
}

Mode parse_mode(std::string_view s) {
  if (s == "two-stage") return Mode::TwoStage;
  if (s == "one-stage") return Mode::OneStage;
  throw Error(ErrorCode::InvalidConfig, "unknown mode '" + std::string(s) + "'");
}

SingulationPolicy parse_policy(std::string_view s) {
  for (auto p : {SingulationPolicy::Auto, SingulationPolicy::OutsweepOnly, SingulationPolicy::BreakOffOnly,
                 SingulationPolicy::Baseline})
    if (to_string(p) == s) return p;
  throw Error(ErrorCode::InvalidConfig, "unknown singulation policy '" + std::string(s) + "'");
}

void validate(const TrialConfig& cfg) {
  if (cfg.target_picks < 1) throw Error(ErrorCode::InvalidConfig, "target_picks must be at least 1");
  if (cfg.limits.max_singulations < 0 || cfg.limits.max_rough_attempts < 1)
    throw Error(ErrorCode::InvalidConfig, "trial limits out of range");
  if (!(cfg.noise.tray_jitter_sigma >= 0.0) || !(cfg.noise.bin_jitter_sigma >= 0.0))
    throw Error(ErrorCode::InvalidConfig, "contour jitter must be non-negative");
  validate_noise(cfg.noise.estimator);
}

namespace {

// Seed-stream tags.
constexpr std::uint64_t kDetect = 1, kPolicy = 2, kPlan = 3, kDensity = 4, kWorld = 5;

std::optional<FailureReason> reason_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::PlacementFailure: return FailureReason::PlacementFailure;
    case ErrorCode::NonConvergence: return FailureReason::NonConvergence;
    default: return std::nullopt;
  }
}

FailureReason reason_for(PickResult r) {
  switch (r) {
    case PickResult::Collision: return FailureReason::Collision;
    case PickResult::MultiCapture: return FailureReason::MultiCapture;
    default: return FailureReason::NoGraspFound;
  }
}

ClusterParams cluster_params(const WorldState& world, const Lab& lab) {
  ClusterParams p = lab.cluster;
  p.link_distance = link_distance_for(world, lab.link_distance_factor);
  return p;
}

/// Tray items nearest each other, used when clustering finds nothing to split.
Cluster fallback_cluster(const WorldState& world) {
  std::vector<int> ids = world.ids_at(Location::OnTray);
  Cluster c;
  if (ids.size() >= 2) {
    std::vector<Vec2> centers;
    for (int id : ids) centers.push_back(world.find(id)->pose.position);
    const ClosestPair cp = closest_pair(centers);
    c.member_ids = {ids[cp.i], ids[cp.j]};
    std::sort(c.member_ids.begin(), c.member_ids.end());
  } else {
    c.member_ids = ids;
  }
  c.size = static_cast<int>(c.member_ids.size());
  for (int id : c.member_ids) c.centroid += world.find(id)->pose.position;
  if (c.size > 0) c.centroid = c.centroid / static_cast<double>(c.size);
  return c;
}

PushAction plan_singulation(const WorldState& world, const TrialConfig& cfg, const Lab& lab, std::uint64_t step) {
  const std::uint64_t policy_seed = derive_seed(cfg.seed, {kPolicy, step});
  const std::uint64_t plan_seed = derive_seed(cfg.seed, {kPlan, step});

  Cluster cluster;
  PolicyFlag flag = PolicyFlag::Outsweep;
  try {
    PolicyChoice choice = select_policy(world, policy_seed, cluster_params(world, lab));
    cluster = std::move(choice.cluster);
    flag = choice.flag;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NothingToSingulate) throw;
    cluster = fallback_cluster(world);
    flag = policy_for_size(cluster.size);
  }

  auto baseline = [&] { return plan_baseline_push(cluster, world, lab.gripper, plan_seed, lab.planner); };
  if (cfg.singulation_policy == SingulationPolicy::Baseline || cluster.size < 2) return baseline();
  if (cfg.singulation_policy == SingulationPolicy::OutsweepOnly) flag = PolicyFlag::Outsweep;
  if (cfg.singulation_policy == SingulationPolicy::BreakOffOnly) flag = PolicyFlag::BreakOff;

  try {
    if (flag == PolicyFlag::Outsweep) return plan_outsweep(cluster, world, lab.gripper, lab.planner);
    return plan_breakoff(cluster, world, lab.gripper, plan_seed, lab.planner);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoAccessiblePoint) throw;
  }
  if (flag == PolicyFlag::Outsweep) {
    try {
      return plan_breakoff(cluster, world, lab.gripper, plan_seed, lab.planner);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoAccessiblePoint) throw;
    }
  }
  return baseline();
}

void fail(TrialRecord& rec, FailureReason r) {
  rec.success = false;
  rec.failure_reason = r;
}

}  // namespace

bool run_fine_stage(WorldState& world, int picks_needed, const TrialConfig& cfg, const Lab& lab, TrialRecord& rec) {
  int picked = 0;
  std::uint64_t step = 0;
  while (picked < picks_needed && world.count(Location::OnTray) > 0) {
    ++step;
    const RasterFrame frame = rasterize(world, world.workspace.tray, lab.tray_mm_per_px);
    const std::uint64_t detect_seed = derive_seed(cfg.seed, {kDetect, static_cast<std::uint64_t>(rec.rough_grasp_count), step});
    const std::vector<Grasp> grasps =
        detect_grasps(frame, lab.gripper, cfg.noise.tray_jitter_sigma, detect_seed, lab.grasp);

    if (!grasps.empty()) {
      const PickOutcome out = execute_grasp(world, Location::OnTray, frame, grasps.front(), lab.gripper, lab.grasp);
      rec.action_count += 3;
      if (out.result != PickResult::Success) {
        fail(rec, reason_for(out.result));
        return false;
      }
      const std::size_t before = world.count(Location::OnTray);
      place_item(world, out.item_id);
      if (before - world.count(Location::OnTray) != 1) ++rec.pick_contract_violations;
      rec.picked_ids.push_back(out.item_id);
      ++picked;
      continue;
    }

    if (rec.singulation_count >= cfg.limits.max_singulations) {
      fail(rec, FailureReason::LimitExceeded);
      return false;
    }
    try {
      const PushAction action = plan_singulation(world, cfg, lab, derive_seed(static_cast<std::uint64_t>(rec.rough_grasp_count), {step}));
      world = apply_push(world, action, lab.gripper, lab.dynamics);
    } catch (const Error& e) {
      const auto r = reason_for(e);
      if (!r) throw;
      fail(rec, *r);
      return false;
    }
    ++rec.singulation_count;
    rec.action_count += 2;
  }
  return true;
}

TrialRecord run_two_stage(const WorldState& start, const TrialConfig& cfg, const Lab& lab) {
  validate(cfg);
  TrialRecord rec;
  WorldState world = start;
  world.rng_seed = derive_seed(start.rng_seed, {kWorld, cfg.seed});

  int empty_grabs = 0;
  bool alive = true;
  while (alive && static_cast<int>(rec.picked_ids.size()) < cfg.target_picks) {
    if (world.count(Location::OnTray) == 0) {
      if (world.count(Location::InBin) == 0 || empty_grabs >= cfg.limits.max_rough_attempts) {
        fail(rec, world.count(Location::InBin) == 0 ? FailureReason::NoGraspFound : FailureReason::LimitExceeded);
        break;
      }
      ++rec.rough_grasp_count;
      rec.action_count += 3;
      const RasterFrame frame = rasterize(world, world.workspace.bin, lab.bin_mm_per_px);
      const DensityMap density = estimate_density(frame, cfg.noise.estimator, lab.density_sigma_px,
                                                  derive_seed(cfg.seed, {kDensity, static_cast<std::uint64_t>(rec.rough_grasp_count)}));
      Vec2 site;
      try {
        site = select_rough_grasp(density, frame, lab.rough_open_width, world.workspace.bin);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::EmptyBin) throw;
        ++empty_grabs;  // estimator dropped every object: nothing to aim at
        continue;
      }
      GrabResult grab = grab_at(world, site, lab.rough_open_width, lab.gripper);
      if (grab.captured.empty()) {
        ++empty_grabs;
        continue;
      }
      empty_grabs = 0;
      try {
        world = place_on_tray(grab.world, grab.captured, lab.placement);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::PlacementFailure) throw;
        fail(rec, FailureReason::PlacementFailure);
        break;
      }
    }
    alive = run_fine_stage(world, cfg.target_picks - static_cast<int>(rec.picked_ids.size()), cfg, lab, rec);
  }

  // Leftovers (and anything still held) go back into the bin.
  for (Item& it : world.items)
    if (it.location == Location::Held) it.location = Location::OnTray;
  try {
    world = reflow(world, lab.placement);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::PlacementFailure) throw;
    if (!rec.failure_reason) fail(rec, FailureReason::PlacementFailure);
  }
  rec.action_count += 2;
  rec.success = !rec.failure_reason && static_cast<int>(rec.picked_ids.size()) == cfg.target_picks;
  rec.final_world = std::move(world);
  return rec;
}

TrialRecord run_one_stage(const WorldState& start, const TrialConfig& cfg, const Lab& lab) {
  validate(cfg);
  TrialRecord rec;
  WorldState world = start;
  world.rng_seed = derive_seed(start.rng_seed, {kWorld, cfg.seed});
  for (int pick = 0; pick < cfg.target_picks; ++pick) {
    const RasterFrame frame = rasterize(world, world.workspace.bin, lab.bin_mm_per_px);
    const std::vector<Grasp> grasps = detect_grasps(frame, lab.gripper, cfg.noise.bin_jitter_sigma,
                                                    derive_seed(cfg.seed, {kDetect, static_cast<std::uint64_t>(pick)}),
                                                    lab.grasp);
    rec.action_count += 3;
    if (grasps.empty()) {
      fail(rec, FailureReason::NoGraspFound);
      break;
    }
    const PickOutcome out = execute_grasp(world, Location::InBin, frame, grasps.front(), lab.gripper, lab.grasp);
    if (out.result != PickResult::Success) {
      fail(rec, reason_for(out.result));
      break;
    }
    place_item(world, out.item_id);
    rec.picked_ids.push_back(out.item_id);
  }
  rec.success = !rec.failure_reason;
  rec.final_world = std::move(world);
  return rec;
}

TrialRecord run_trial(const WorldState& world, const TrialConfig& cfg, const Lab& lab) {
  return cfg.mode == Mode::TwoStage ? run_two_stage(world, cfg, lab) : run_one_stage(world, cfg, lab);
}

// --- benchmarks ---------------------------------------------------------------------

WorldState make_cluster_world(int size, std::uint64_t seed, const SingulationBench& bench, const Lab& lab,
                              const Workspace& workspace) {
  if (size < 1) throw Error(ErrorCode::InvalidArgument, "cluster size must be positive");
  WorldState world;
  world.workspace = workspace;
  world.rng_seed = seed;
  Rng rng(derive_seed(seed, {1}));
  std::vector<int> ids;
  for (int id = 1; id <= size; ++id) {
    auto [shape, category] = sample_shape(bench.shape, bench.scene, rng);
    Item it;
    it.id = id;
    it.category = category;
    it.shape = std::move(shape);
    it.pose.theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
    it.location = Location::Held;
    world.items.push_back(std::move(it));
    ids.push_back(id);
  }
  place_cluster(world, ids, Location::OnTray, workspace.tray.center(), rng, lab.placement);
  return world;
}

namespace {

template <typename Job>
void parallel_for(std::size_t n, int threads, Job job) {
  int workers = threads > 0 ? threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  workers = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(workers), std::max<std::size_t>(n, 1)));
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t i = next++; i < n && !failed; i = next++) {
        try {
          job(i);
        } catch (...) {
          if (!failed.exchange(true)) error = std::current_exception();
        }
      }
      (void)w;
    });
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

std::vector<ResultRow> run_singulation_bench(const SingulationBench& bench, const TrialConfig& base, const Lab& lab,
                                             std::uint64_t root_seed, int threads) {
  if (bench.trials < 1) throw Error(ErrorCode::InvalidConfig, "trials must be at least 1");
  struct Cell {
    SingulationPolicy policy;
    int size;
    int trial;
  };
  std::vector<Cell> cells;
  for (SingulationPolicy p : bench.policies)
    for (int s : bench.cluster_sizes)
      for (int t = 0; t < bench.trials; ++t) cells.push_back({p, s, t});

  std::vector<ResultRow> rows(cells.size());
  parallel_for(cells.size(), threads, [&](std::size_t i) {
    const Cell& c = cells[i];
    // The scenario depends on (size, trial) only, so every policy faces the same clusters.
    const std::uint64_t seed = derive_seed(root_seed, {static_cast<std::uint64_t>(c.size), static_cast<std::uint64_t>(c.trial)});
    TrialConfig cfg = base;
    cfg.singulation_policy = c.policy;
    cfg.seed = seed;
    cfg.limits.max_singulations = bench.max_singulations;
    cfg.noise.tray_jitter_sigma = 0.0;
    validate(cfg);

    ResultRow& row = rows[i];
    row.mode = Mode::TwoStage;
    row.policy = c.policy;
    row.cluster_size = c.size;
    row.seed = seed;
    TrialRecord& rec = row.record;
    try {
      WorldState world = make_cluster_world(c.size, seed, bench, lab, bench.workspace);
      run_fine_stage(world, c.size, cfg, lab, rec);
      rec.success = !rec.failure_reason && static_cast<int>(rec.picked_ids.size()) == c.size;
      rec.final_world = std::move(world);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::PlacementFailure) throw;
      fail(rec, FailureReason::PlacementFailure);
    }
  });
  sort_rows(rows);
  return rows;
}

std::vector<ResultRow> run_pipeline_bench(const PipelineBench& bench, const TrialConfig& base, const Lab& lab,
                                          std::uint64_t root_seed, int threads) {
  if (bench.trials < 1) throw Error(ErrorCode::InvalidConfig, "trials must be at least 1");
  if (bench.objects_min < 1 || bench.objects_max < bench.objects_min)
    throw Error(ErrorCode::InvalidConfig, "pipeline object range is empty");
  std::vector<ResultRow> rows(2 * static_cast<std::size_t>(bench.trials));
  parallel_for(static_cast<std::size_t>(bench.trials), threads, [&](std::size_t t) {
    const std::uint64_t seed = derive_seed(root_seed, {static_cast<std::uint64_t>(t)});
    Rng rng(derive_seed(seed, {0}));
    const int objects = bench.objects_min + static_cast<int>(rng.index(static_cast<std::size_t>(bench.objects_max - bench.objects_min + 1)));
    const WorldState scene = generate_scene(objects, bench.shape, seed, bench.workspace, bench.scene);
    for (Mode m : {Mode::TwoStage, Mode::OneStage}) {
      TrialConfig cfg = base;
      cfg.mode = m;
      cfg.seed = seed;
      ResultRow& row = rows[2 * t + (m == Mode::TwoStage ? 0 : 1)];
      row.mode = m;
      row.policy = cfg.singulation_policy;
      row.cluster_size = 0;
      row.seed = seed;
      row.record = run_trial(scene, cfg, lab);
      row.record.final_world = {};  // keep memory flat on long runs
    }
  });
  sort_rows(rows);
  return rows;
}

std::vector<WorldState> standard_scenes(const Workspace& workspace, const SceneParams& params) {
  std::vector<WorldState> out;
  for (int i = 0; i < 8; ++i)
    out.push_back(generate_scene(100 + (200 * i) / 7, ShapeKind::Mixed, 1000 + static_cast<std::uint64_t>(i), workspace, params));
  return out;
}

std::vector<double> calibration_errors(const Lab& lab, const EstimatorNoise& noise, std::uint64_t seed) {
  std::vector<double> out;
  const std::vector<WorldState> scenes = standard_scenes();
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const RasterFrame frame = rasterize(scenes[i], scenes[i].workspace.bin, lab.bin_mm_per_px);
    const DensityMap truth = dot_to_density(make_dot_map(frame), lab.density_sigma_px);
    const DensityMap est = estimate_density(frame, noise, lab.density_sigma_px, derive_seed(seed, {static_cast<std::uint64_t>(i)}));
    out.push_back(calibrated_mse(est, truth));
  }
  return out;
}

void sort_rows(std::vector<ResultRow>& rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
    return std::tuple(to_string(a.mode), to_string(a.policy), a.cluster_size, a.seed) <
           std::tuple(to_string(b.mode), to_string(b.policy), b.cluster_size, b.seed);
  });
}

std::string rows_to_csv(std::span<const ResultRow> rows) {
  std::string out = "mode,policy,cluster_size,seed,success,singulation_count,rough_grasp_count,action_count,failure_reason\n";
  char buf[256];
  for (const ResultRow& r : rows) {
    const TrialRecord& t = r.record;
    std::snprintf(buf, sizeof buf, "%s,%s,%d,%llu,%s,%d,%d,%d,%s\n", std::string(to_string(r.mode)).c_str(),
                  std::string(to_string(r.policy)).c_str(), r.cluster_size, static_cast<unsigned long long>(r.seed),
                  t.success ? "true" : "false", t.singulation_count, t.rough_grasp_count, t.action_count,
                  t.failure_reason ? std::string(to_string(*t.failure_reason)).c_str() : "");
    out += buf;
  }
  return out;
}

void write_rows_csv(std::span<const ResultRow> rows, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << rows_to_csv(rows);
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

nlohmann::json summarize(std::span<const ResultRow> rows) {
  struct Acc {
    int n = 0, ok = 0;
    double sing = 0, rough = 0, actions = 0;
  };
  std::map<std::tuple<std::string, std::string, int>, Acc> groups;
  for (const ResultRow& r : rows) {
    Acc& a = groups[{std::string(to_string(r.mode)), std::string(to_string(r.policy)), r.cluster_size}];
    ++a.n;
    a.ok += r.record.success ? 1 : 0;
    a.sing += r.record.singulation_count;
    a.rough += r.record.rough_grasp_count;
    a.actions += r.record.action_count;
  }
  nlohmann::json out = nlohmann::json::array();
  for (const auto& [key, a] : groups)
    out.push_back({{"mode", std::get<0>(key)},
                   {"policy", std::get<1>(key)},
                   {"cluster_size", std::get<2>(key)},
                   {"count", a.n},
                   {"success_rate", static_cast<double>(a.ok) / a.n},
                   {"mean_singulation_count", a.sing / a.n},
                   {"mean_rough_grasp_count", a.rough / a.n},
                   {"mean_action_count", a.actions / a.n}});
  return {{"groups", out}};
}

}  // namespace binpick
