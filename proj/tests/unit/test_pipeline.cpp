#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "doctest.h"
#include "binpick/error.hpp"
#include "binpick/pipeline.hpp"
#include "support.hpp"

using namespace binpick;
using namespace testing;

namespace {

TrialConfig quiet(Mode mode, std::uint64_t seed = 1) {
  TrialConfig cfg;
  cfg.mode = mode;
  cfg.seed = seed;
  cfg.noise = TrialNoise{0.0, 0.0, EstimatorNoise{0.0, 0.0, 0.0}};
  return cfg;
}

std::size_t total(const WorldState& w) {
  return w.count(Location::InBin) + w.count(Location::OnTray) + w.count(Location::Placed) + w.count(Location::Held);
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> out;
  std::stringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.push_back("");
    out.push_back(cells);
  }
  return out;
}

bool same(const TrialRecord& a, const TrialRecord& b) {
  return a.success == b.success && a.picked_ids == b.picked_ids && a.singulation_count == b.singulation_count &&
         a.rough_grasp_count == b.rough_grasp_count && a.action_count == b.action_count &&
         a.failure_reason == b.failure_reason;
}

double one_stage_rate(double sigma) {
  int ok = 0;
  const PipelineBench bench;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const WorldState scene = generate_scene(100 + static_cast<int>(s * 2), ShapeKind::Mixed, 7000 + s, bench.workspace, bench.scene);
    TrialConfig cfg;
    cfg.mode = Mode::OneStage;
    cfg.seed = s;
    cfg.noise.bin_jitter_sigma = sigma;
    ok += run_one_stage(scene, cfg).success;
  }
  return ok / 100.0;
}

}  // namespace

TEST_CASE("single isolated item, two-stage, no noise") {
  const Workspace ws;
  const WorldState w = world_of({disk_item(1, ws.bin.center() + Vec2{12, -20}, 4)});
  const TrialRecord r = run_two_stage(w, quiet(Mode::TwoStage));
  CHECK(r.success);
  CHECK(r.singulation_count == 0);
  CHECK(r.rough_grasp_count == 1);
  CHECK(r.action_count == 8);
  CHECK(r.picked_ids == std::vector<int>{1});
  CHECK(r.final_world.find(1)->location == Location::Placed);
  CHECK(!r.failure_reason);

  const TrialRecord o = run_one_stage(w, quiet(Mode::OneStage));
  CHECK(o.success);
  CHECK(o.action_count == 3);
  CHECK(o.rough_grasp_count == 0);
  CHECK(same(run_trial(w, quiet(Mode::OneStage)), o));
}

TEST_CASE("a touching pair on the tray is singulated, then picked") {
  const Workspace ws;
  const Vec2 c = ws.bin.center();
  const WorldState w = world_of({disk_item(1, c - Vec2{3.1, 0}, 3), disk_item(2, c + Vec2{3.1, 0}, 3)});
  int singulated = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const TrialRecord r = run_two_stage(w, quiet(Mode::TwoStage, seed));
    CHECK(r.success);
    CHECK(r.rough_grasp_count == 1);
    CHECK(r.action_count == 3 + 2 * r.singulation_count + 3 + 2);
    singulated += r.singulation_count >= 1;
  }
  CHECK(singulated > 0);
}

TEST_CASE("zero singulation budget fails an unpickable cluster") {
  const Lab lab;
  const SingulationBench bench;
  std::optional<WorldState> stuck;
  for (std::uint64_t seed = 0; seed < 50 && !stuck; ++seed) {
    WorldState w = make_cluster_world(6, seed, bench, lab);
    const RasterFrame f = rasterize(w, w.workspace.tray, lab.tray_mm_per_px);
    if (detect_grasps(f, lab.gripper, 0.0, 0, lab.grasp).empty()) stuck = w;
  }
  REQUIRE(stuck);
  TrialConfig cfg = quiet(Mode::TwoStage);
  cfg.limits.max_singulations = 0;
  WorldState world = *stuck;
  TrialRecord rec;
  CHECK_FALSE(run_fine_stage(world, 6, cfg, lab, rec));
  CHECK(rec.failure_reason == FailureReason::LimitExceeded);
  CHECK(rec.singulation_count == 0);
  CHECK(rec.action_count == 0);
}

TEST_CASE("two-stage trial invariants on seeded heaps") {
  const PipelineBench bench;
  for (std::uint64_t seed = 0; seed < 15; ++seed) {
    const WorldState scene = generate_scene(100 + static_cast<int>(seed) * 13, ShapeKind::Mixed, seed, bench.workspace, bench.scene);
    TrialConfig cfg;
    cfg.seed = seed;
    cfg.target_picks = 1 + static_cast<int>(seed % 3);
    const TrialRecord r = run_two_stage(scene, cfg);
    CHECK(total(r.final_world) == scene.items.size());
    CHECK(r.final_world.count(Location::OnTray) == 0);
    CHECK(r.final_world.count(Location::Held) == 0);
    CHECK(r.pick_contract_violations == 0);
    CHECK(r.final_world.count(Location::Placed) == r.picked_ids.size());
    CHECK(std::set<int>(r.picked_ids.begin(), r.picked_ids.end()).size() == r.picked_ids.size());
    if (r.success) {
      CHECK(static_cast<int>(r.picked_ids.size()) == cfg.target_picks);
      for (int id : r.picked_ids) CHECK(r.final_world.find(id)->location == Location::Placed);
    } else {
      CHECK(r.failure_reason.has_value());
    }
    CHECK(r.action_count == 3 * r.rough_grasp_count + 2 * r.singulation_count + 3 * static_cast<int>(r.picked_ids.size()) + 2 +
                                (r.failure_reason == FailureReason::Collision || r.failure_reason == FailureReason::MultiCapture ? 3 : 0));
    CHECK(same(run_two_stage(scene, cfg), r));
  }
}

TEST_CASE("one-stage on dense heaps fails by missing or bad grasps") {
  const PipelineBench bench;
  int failures = 0, perception = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const WorldState scene = generate_scene(150, ShapeKind::Mixed, 300 + seed, bench.workspace, bench.scene);
    TrialConfig cfg;
    cfg.mode = Mode::OneStage;
    cfg.seed = seed;
    const TrialRecord r = run_one_stage(scene, cfg);
    CHECK(r.action_count == 3);
    CHECK(same(run_one_stage(scene, cfg), r));
    if (!r.success) {
      ++failures;
      perception += r.failure_reason == FailureReason::NoGraspFound || r.failure_reason == FailureReason::Collision;
    }
  }
  CHECK(failures >= 40);
  CHECK(perception >= failures * 3 / 4);
}

TEST_CASE("one-stage success does not rise with bin noise") {
  const double r0 = one_stage_rate(0.0), r1 = one_stage_rate(0.8), r2 = one_stage_rate(2.0), r3 = one_stage_rate(4.0);
  MESSAGE("one-stage success at 0/0.8/2/4 px: ", r0, " ", r1, " ", r2, " ", r3);
  CHECK(r0 >= r1);
  CHECK(r1 >= r2);
  CHECK(r2 >= r3);
}

TEST_CASE("trial config validation and names") {
  const WorldState w = world_of({disk_item(1, Workspace{}.bin.center(), 4)});
  TrialConfig bad = quiet(Mode::TwoStage);
  bad.target_picks = 0;
  CHECK_THROWS_AS(run_trial(w, bad), Error);
  bad = quiet(Mode::OneStage);
  bad.noise.bin_jitter_sigma = -1;
  CHECK_THROWS_AS(run_trial(w, bad), Error);
  bad = quiet(Mode::TwoStage);
  bad.limits.max_rough_attempts = 0;
  CHECK_THROWS_AS(validate(bad), Error);

  for (Mode m : {Mode::TwoStage, Mode::OneStage}) CHECK(parse_mode(to_string(m)) == m);
  for (auto p : {SingulationPolicy::Auto, SingulationPolicy::OutsweepOnly, SingulationPolicy::BreakOffOnly, SingulationPolicy::Baseline})
    CHECK(parse_policy(to_string(p)) == p);
  CHECK_THROWS_AS(parse_mode("three-stage"), Error);
  CHECK_THROWS_AS(parse_policy("shove"), Error);
}

TEST_CASE("singulation bench grid, determinism and exactly-one picks") {
  const Lab lab;
  const SingulationBench bench;
  const auto rows = run_singulation_bench(bench, TrialConfig{}, lab, 2024, 1);
  REQUIRE(rows.size() == 120);
  std::map<std::pair<std::string, int>, int> cells;
  for (const ResultRow& r : rows) {
    ++cells[{std::string(to_string(r.policy)), r.cluster_size}];
    CHECK(r.record.pick_contract_violations == 0);
    CHECK(r.record.rough_grasp_count == 0);
    if (r.record.success) CHECK(static_cast<int>(r.record.picked_ids.size()) == r.cluster_size);
  }
  CHECK(cells.size() == 24);
  for (const auto& [k, n] : cells) CHECK(n == 5);

  const std::string csv = rows_to_csv(rows);
  CHECK(rows_to_csv(run_singulation_bench(bench, TrialConfig{}, lab, 2024, 3)) == csv);
  CHECK_FALSE(rows_to_csv(run_singulation_bench(bench, TrialConfig{}, lab, 2025, 1)) == csv);

  // Rows arrive sorted by (mode, policy, cluster_size, seed).
  std::vector<ResultRow> shuffled(rows.rbegin(), rows.rend());
  sort_rows(shuffled);
  CHECK(rows_to_csv(shuffled) == csv);

  SingulationBench singles = bench;
  singles.cluster_sizes = {1};
  singles.trials = 3;
  for (const ResultRow& r : run_singulation_bench(singles, TrialConfig{}, lab, 5, 1)) {
    CHECK(r.record.success);
    CHECK(r.record.singulation_count == 0);
  }

  SingulationBench empty = bench;
  empty.trials = 0;
  CHECK_THROWS_AS(run_singulation_bench(empty, TrialConfig{}, lab, 1, 1), Error);
}

TEST_CASE("auto policy outsweeps contacting pairs") {
  const Lab lab;
  const SingulationBench bench;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const WorldState w = make_cluster_world(2, seed, bench, lab);
    ClusterParams p = lab.cluster;
    p.link_distance = link_distance_for(w, lab.link_distance_factor);
    const PolicyChoice pc = select_policy(w, seed, p);
    CHECK(pc.cluster.size == 2);
    CHECK(pc.flag == PolicyFlag::Outsweep);
  }
}

TEST_CASE("pipeline bench rows, csv and summary") {
  const Lab lab;
  PipelineBench bench;
  bench.trials = 6;
  const auto rows = run_pipeline_bench(bench, TrialConfig{}, lab, 9, 2);
  REQUIRE(rows.size() == 12);
  CHECK(rows_to_csv(run_pipeline_bench(bench, TrialConfig{}, lab, 9, 1)) == rows_to_csv(rows));
  int one = 0;
  for (const ResultRow& r : rows) {
    CHECK(r.cluster_size == 0);
    CHECK(r.record.pick_contract_violations == 0);
    if (r.mode == Mode::OneStage) {
      ++one;
      CHECK(r.record.action_count == 3);
    }
  }
  CHECK(one == 6);

  const auto table = parse_csv(rows_to_csv(rows));
  REQUIRE(table.size() == 13);
  CHECK(table[0] == std::vector<std::string>{"mode", "policy", "cluster_size", "seed", "success", "singulation_count",
                                             "rough_grasp_count", "action_count", "failure_reason"});
  struct Acc {
    int n = 0, ok = 0;
    double actions = 0, sing = 0;
  };
  std::map<std::string, Acc> acc;
  for (std::size_t i = 1; i < table.size(); ++i) {
    REQUIRE(table[i].size() == 9);
    Acc& a = acc[table[i][0]];
    ++a.n;
    a.ok += table[i][4] == "true";
    a.sing += std::stod(table[i][5]);
    a.actions += std::stod(table[i][7]);
    CHECK((table[i][4] == "true") == table[i][8].empty());
  }
  const auto summary = summarize(rows);
  REQUIRE(summary["groups"].size() == 2);
  for (const auto& g : summary["groups"]) {
    const Acc& a = acc.at(g["mode"].get<std::string>());
    CHECK(g["count"] == a.n);
    CHECK(g["success_rate"].get<double>() == doctest::Approx(static_cast<double>(a.ok) / a.n));
    CHECK(g["mean_action_count"].get<double>() == doctest::Approx(a.actions / a.n));
    CHECK(g["mean_singulation_count"].get<double>() == doctest::Approx(a.sing / a.n));
  }

  PipelineBench bad = bench;
  bad.objects_max = 50;
  CHECK_THROWS_AS(run_pipeline_bench(bad, TrialConfig{}, lab, 1, 1), Error);
}

TEST_CASE("standard scenes") {
  const auto scenes = standard_scenes();
  REQUIRE(scenes.size() == 8);
  CHECK(scenes.front().items.size() == 100);
  CHECK(scenes.back().items.size() == 300);
  for (std::size_t i = 1; i < scenes.size(); ++i) CHECK(scenes[i].items.size() > scenes[i - 1].items.size());
}
