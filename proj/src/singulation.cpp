#include "binpick/singulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "binpick/error.hpp"
#include "binpick/random.hpp"

namespace binpick {

// --- clustering ------------------------------------------------------------------

namespace {

struct KMeansResult {
  std::vector<int> label;
  int k = 0;
};

KMeansResult kmeans(const std::vector<Vec2>& pts, int k, std::uint64_t seed, const ClusterParams& params) {
  const std::size_t n = pts.size();
  Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(k)}));
  std::vector<Vec2> centers{pts[rng.index(n)]};
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  while (static_cast<int>(centers.size()) < k) {
    std::size_t far = 0;
    double far_d = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], (pts[i] - centers.back()).norm2());
      if (nearest[i] > far_d) {
        far_d = nearest[i];
        far = i;
      }
    }
    centers.push_back(pts[far]);
  }

  KMeansResult r{std::vector<int>(n, 0), k};
  for (int iter = 0; iter < params.max_iterations; ++iter) {
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const double d = (pts[i] - centers[c]).norm2();
        if (d < best) {
          best = d;
          r.label[i] = c;
        }
      }
    }
    std::vector<Vec2> sum(k);
    std::vector<int> cnt(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      sum[r.label[i]] += pts[i];
      ++cnt[r.label[i]];
    }
    double shift = 0.0;
    for (int c = 0; c < k; ++c) {
      if (cnt[c] == 0) continue;
      const Vec2 m = sum[c] / static_cast<double>(cnt[c]);
      shift = std::max(shift, distance(m, centers[c]));
      centers[c] = m;
    }
    if (shift <= params.tolerance) break;
  }
  return r;
}

double max_spread(const std::vector<Vec2>& pts, const std::vector<int>& label, int k) {
  double worst = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j)
      if (label[i] == label[j]) worst = std::max(worst, distance(pts[i], pts[j]));
  (void)k;
  return worst;
}

}  // namespace

std::vector<Cluster> cluster_items(std::span<const Vec2> centers, std::span<const int> ids, std::uint64_t seed,
                                   const ClusterParams& params) {
  if (centers.empty()) throw Error(ErrorCode::NoItems, "nothing to cluster");
  if (ids.size() != centers.size()) throw Error(ErrorCode::InvalidArgument, "ids and centers differ in length");

  // Canonical order by id makes the result independent of input order.
  std::vector<std::size_t> order(centers.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ids[a] < ids[b]; });
  std::vector<Vec2> pts;
  std::vector<int> pid;
  for (std::size_t o : order) {
    pts.push_back(centers[o]);
    pid.push_back(ids[o]);
  }

  const int kmax = std::min(static_cast<int>(pts.size()), std::max(1, params.k_max));
  KMeansResult chosen;
  for (int k = 1; k <= kmax; ++k) {
    chosen = kmeans(pts, k, seed, params);
    if (max_spread(pts, chosen.label, k) <= params.link_distance) break;
  }

  std::vector<Cluster> out(chosen.k);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    Cluster& c = out[chosen.label[i]];
    c.member_ids.push_back(pid[i]);
    c.centroid += pts[i];
  }
  std::erase_if(out, [](const Cluster& c) { return c.member_ids.empty(); });
  for (Cluster& c : out) {
    c.size = static_cast<int>(c.member_ids.size());
    c.centroid = c.centroid / static_cast<double>(c.size);
  }
  std::sort(out.begin(), out.end(), [](const Cluster& a, const Cluster& b) { return a.member_ids.front() < b.member_ids.front(); });
  return out;
}

double link_distance_for(const WorldState& world, double factor) {
  double sum = 0.0;
  int n = 0;
  for (const Item& it : world.items)
    if (it.location == Location::OnTray) {
      sum += max_diameter(it.shape);
      ++n;
    }
  return n == 0 ? 0.0 : factor * sum / n;
}

PolicyChoice select_policy(const WorldState& world, std::uint64_t seed, const ClusterParams& params) {
  std::vector<Vec2> centers;
  std::vector<int> ids;
  for (const Item& it : world.items)
    if (it.location == Location::OnTray) {
      centers.push_back(it.pose.position);
      ids.push_back(it.id);
    }
  if (centers.size() < 2) throw Error(ErrorCode::NothingToSingulate, "fewer than two items on the tray");
  std::vector<Cluster> clusters = cluster_items(centers, ids, derive_seed(seed, {1}), params);
  std::erase_if(clusters, [](const Cluster& c) { return c.size < 2; });
  if (clusters.empty()) throw Error(ErrorCode::NothingToSingulate, "every cluster is a singleton");
  Rng rng(derive_seed(seed, {2}));
  Cluster picked = clusters[rng.index(clusters.size())];
  return PolicyChoice{policy_for_size(picked.size), std::move(picked)};
}

// --- planners ---------------------------------------------------------------------

namespace {

std::vector<const Item*> members_of(const Cluster& cluster, const WorldState& world) {
  std::vector<const Item*> out;
  for (int id : cluster.member_ids) {
    const Item* it = world.find(id);
    if (!it) throw Error(ErrorCode::InvalidArgument, "cluster member " + std::to_string(id) + " not in world");
    out.push_back(it);
  }
  return out;
}

bool polygon_inside(const Polygon& p, const Rect& r) {
  return std::all_of(p.vertices.begin(), p.vertices.end(), [&](Vec2 v) { return r.contains(v); });
}

bool footprint_free(const Polygon& fp, const WorldState& world, Location loc) {
  for (const Item& it : world.items)
    if (it.location == loc && penetration(fp, world_shape(it))) return false;
  return true;
}

enum class Scan { Free, Blocked, OutOfRegion };

Scan probe(Vec2 p, const PushAction& proto, const WorldState& world, const Gripper& gripper) {
  const Polygon fp = gripper_footprint_at(p, proto, gripper);
  if (!polygon_inside(fp, world.workspace.tray)) return Scan::OutOfRegion;
  return footprint_free(fp, world, Location::OnTray) ? Scan::Free : Scan::Blocked;
}

/// Scan grid origin + d * dir, d = from, from + step, ... while the footprint stays inside the tray.
std::vector<Vec2> scan_grid(Vec2 origin, Vec2 dir, double from, double step, const PushAction& proto,
                            const WorldState& world, const Gripper& gripper) {
  std::vector<Vec2> grid;
  for (double d = from;; d += step) {
    const Vec2 p = origin + dir * d;
    if (probe(p, proto, world, gripper) == Scan::OutOfRegion) return grid;
    grid.push_back(p);
  }
}

/// Outermost collision-free grid point (retracting inward from the tray margin).
std::optional<Vec2> farthest_free(const std::vector<Vec2>& grid, const PushAction& proto, const WorldState& world,
                                  const Gripper& gripper) {
  for (auto it = grid.rbegin(); it != grid.rend(); ++it)
    if (probe(*it, proto, world, gripper) == Scan::Free) return *it;
  return std::nullopt;
}

}  // namespace

PushAction plan_outsweep(const Cluster& cluster, const WorldState& world, const Gripper& gripper,
                         const PlannerParams& params) {
  if (cluster.size < 2) throw Error(ErrorCode::TooFewItems, "outsweep needs at least two items");
  const auto members = members_of(cluster, world);
  std::vector<Vec2> centers;
  for (const Item* m : members) centers.push_back(m->pose.position);
  const ClosestPair cp = closest_pair(centers);
  const Vec2 c1 = centers[cp.i], c2 = centers[cp.j];
  const Vec2 c0 = (c1 + c2) / 2.0;
  const UnitVec2 axis = UnitVec2::from(c2 - c1);
  const UnitVec2 normal = axis.perp();

  struct Option {
    Vec2 point;
    UnitVec2 approach;
    double distance;
    double to_center;
  };
  std::optional<Option> best;
  for (const UnitVec2 side : {normal, -normal}) {
    const UnitVec2 approach = -side;
    PushAction proto{c0 + side.vec(), c0, approach.angle(), std::nullopt};
    const auto grid = scan_grid(c0, side.vec(), params.approach_distance, params.scan_step, proto, world, gripper);
    const auto p = farthest_free(grid, proto, world, gripper);
    if (!p) continue;
    const Option o{*p, approach, distance(*p, c0), distance(*p, world.workspace.tray.center())};
    if (!best || o.distance > best->distance + 1e-9 ||
        (std::abs(o.distance - best->distance) <= 1e-9 && o.to_center < best->to_center))
      best = o;
  }
  if (!best) throw Error(ErrorCode::NoAccessiblePoint, "both outsweep approaches are blocked");

  PushAction a;
  a.start = best->point;
  a.end = c0;
  a.gripper_theta = normalize_angle(best->approach.angle());
  a.finger_open = FingerOpen{c0, axis, gripper.max_open_width};
  return a;
}

PushAction plan_breakoff(const Cluster& cluster, const WorldState& world, const Gripper& gripper, std::uint64_t seed,
                         const PlannerParams& params) {
  if (cluster.size < 2) throw Error(ErrorCode::TooFewItems, "break-off needs at least two items");
  const auto members = members_of(cluster, world);
  std::vector<Vec2> centers;
  for (const Item* m : members) centers.push_back(m->pose.position);
  Vec2 ci;
  for (const Vec2& c : centers) ci += c;
  ci = ci / static_cast<double>(centers.size());
  const UnitVec2 axis = principal_axes(centers).major;
  const double heading = normalize_angle(axis.perp().angle());

  struct End {
    std::optional<Vec2> free;    // collision-free standoff retracted from the margin
    std::optional<Vec2> inside;  // outermost in-tray point
  };
  auto side_points = [&](UnitVec2 dir) {
    double extent = 0.0;
    for (const Item* m : members)
      extent = std::max(extent, dir.dot(m->pose.position - ci) + bounding_radius(m->shape));
    const PushAction proto{ci + dir.vec(), ci, heading, std::nullopt};
    const double from = extent + 0.5 * gripper.closed_body_width;
    const std::vector<Vec2> grid = scan_grid(ci, dir.vec(), from, params.scan_step, proto, world, gripper);
    End e;
    if (!grid.empty()) e.inside = grid.back();
    e.free = farthest_free(grid, proto, world, gripper);
    return e;
  };
  const End pos = side_points(axis);
  const End neg = side_points(-axis);

  struct Motion {
    Vec2 start, end;
  };
  std::vector<Motion> options;
  if (pos.free && (neg.free || neg.inside)) options.push_back({*pos.free, neg.free ? *neg.free : *neg.inside});
  if (neg.free && (pos.free || pos.inside)) options.push_back({*neg.free, pos.free ? *pos.free : *pos.inside});
  if (options.empty()) throw Error(ErrorCode::NoAccessiblePoint, "no collision-free break-off standoff");

  const Rect& tray = world.workspace.tray;
  std::size_t pick = 0;
  if (options.size() == 2) {
    const double w0 = tray.wall_distance(options[0].start), w1 = tray.wall_distance(options[1].start);
    if (std::abs(w0 - w1) <= 1e-9) pick = Rng(seed).index(2);
    else pick = w1 > w0 ? 1 : 0;
  }
  return PushAction{options[pick].start, options[pick].end, heading, std::nullopt};
}

PushAction plan_baseline_push(const Cluster& cluster, const WorldState& world, const Gripper& gripper,
                              std::uint64_t seed, const PlannerParams& params) {
  if (cluster.size < 1 || cluster.member_ids.empty()) throw Error(ErrorCode::TooFewItems, "baseline push needs a cluster");
  Rng rng(seed);
  const Item* target = world.find(cluster.member_ids[rng.index(cluster.member_ids.size())]);
  if (!target) throw Error(ErrorCode::InvalidArgument, "cluster member not in world");
  const Vec2 t = target->pose.position;
  const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double dist = rng.uniform(params.baseline_min_distance, params.baseline_max_distance);

  const Rect area = world.workspace.tray.inset(0.5 * std::hypot(gripper.closed_body_length, gripper.closed_body_width));
  Vec2 start = t + Vec2{std::cos(phi), std::sin(phi)} * params.baseline_radius;
  start.x = std::clamp(start.x, area.min.x, area.max.x);
  start.y = std::clamp(start.y, area.min.y, area.max.y);
  if (start == t) start.x = start.x > area.center().x ? area.min.x : area.max.x;
  const UnitVec2 dir = UnitVec2::from(t - start);

  // Longest travel along dir that keeps the gripper inside the tray.
  double reach = dist;
  const Vec2 d = dir.vec();
  if (d.x > 0.0) reach = std::min(reach, (area.max.x - start.x) / d.x);
  if (d.x < 0.0) reach = std::min(reach, (area.min.x - start.x) / d.x);
  if (d.y > 0.0) reach = std::min(reach, (area.max.y - start.y) / d.y);
  if (d.y < 0.0) reach = std::min(reach, (area.min.y - start.y) / d.y);
  reach = std::max(reach, 0.0);
  PushAction a;
  a.start = start;
  a.end = reach > 0.0 ? start + d * reach : start + d * 1e-6;
  a.gripper_theta = normalize_angle(dir.angle());
  return a;
}

nlohmann::json action_to_json(std::string_view policy, const PushAction& a) {
  nlohmann::json j = {{"policy", policy},
                      {"start", {a.start.x, a.start.y}},
                      {"end", {a.end.x, a.end.y}},
                      {"theta", a.gripper_theta}};
  if (a.finger_open)
    j["finger_open"] = {{"at", {a.finger_open->at.x, a.finger_open->at.y}},
                        {"axis", {a.finger_open->axis.x(), a.finger_open->axis.y()}},
                        {"opening", a.finger_open->opening}};
  return j;
}

}  // namespace binpick
