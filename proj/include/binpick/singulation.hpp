#pragma once

// Cluster analysis of tray items, threshold-based policy selection and the
// push planners (outsweep, break-off, random linear baseline).

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "binpick/geometry.hpp"
#include "binpick/world.hpp"

namespace binpick {

struct Cluster {
  std::vector<int> member_ids;  // ascending
  Vec2 centroid;
  int size = 0;
};

enum class PolicyFlag { Outsweep, BreakOff };

struct PolicyChoice {
  PolicyFlag flag = PolicyFlag::Outsweep;
  Cluster cluster;
};

/// Clusters of at most this many items are outswept; larger ones are broken off.
inline constexpr int kOutsweepThreshold = 3;

constexpr PolicyFlag policy_for_size(int size) {
  return size <= kOutsweepThreshold ? PolicyFlag::Outsweep : PolicyFlag::BreakOff;
}

struct ClusterParams {
  double link_distance = 20.0;  // mm; max intra-cluster pairwise distance
  int k_max = 8;
  int max_iterations = 100;
  double tolerance = 1e-6;  // mm
};

struct PlannerParams {
  double approach_distance = 30.0;  // minimum outsweep standoff from C0, mm
  double scan_step = 5.0;           // accessible-point search step, mm
  double baseline_radius = 50.0;
  double baseline_min_distance = 20.0;
  double baseline_max_distance = 80.0;
};

/// Seeded k-means for k = 1..min(n, k_max); returns the smallest k whose
/// clusters all have pairwise member distance <= link_distance (k = min(n, k_max)
/// when none qualifies). Clusters are ordered by their smallest member id.
std::vector<Cluster> cluster_items(std::span<const Vec2> centers, std::span<const int> ids, std::uint64_t seed,
                                   const ClusterParams& params);

/// Link distance as `factor` times the mean max-diameter of the tray items.
double link_distance_for(const WorldState& world, double factor);

/// Clusters tray items, samples one cluster of size >= 2 uniformly and maps its size to a policy.
PolicyChoice select_policy(const WorldState& world, std::uint64_t seed, const ClusterParams& params);

/// Approach the midpoint of the two closest members perpendicular to their
/// center line, then open the fingers along that line. Throws NoAccessiblePoint.
PushAction plan_outsweep(const Cluster& cluster, const WorldState& world, const Gripper& gripper,
                         const PlannerParams& params);

/// Broadside push along the principal axis of the member centers, through the
/// centroid, between two collision-free standoffs. Throws NoAccessiblePoint.
PushAction plan_breakoff(const Cluster& cluster, const WorldState& world, const Gripper& gripper, std::uint64_t seed,
                         const PlannerParams& params);

/// Random start on a circle around a random member, pushed toward it for a random distance.
PushAction plan_baseline_push(const Cluster& cluster, const WorldState& world, const Gripper& gripper,
                              std::uint64_t seed, const PlannerParams& params);

nlohmann::json action_to_json(std::string_view policy, const PushAction& action);

}  // namespace binpick
