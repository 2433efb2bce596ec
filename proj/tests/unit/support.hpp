#pragma once

// Builders and brute-force helpers shared by the unit tests.

#include <cmath>
#include <vector>

#include "binpick/geometry.hpp"
#include "binpick/random.hpp"
#include "binpick/world.hpp"

namespace testing {

using namespace binpick;

inline Item disk_item(int id, Vec2 at, double radius, Location loc = Location::InBin, int category = 1) {
  Item it;
  it.id = id;
  it.category = category;
  it.shape = Disk{radius};
  it.pose = Pose2(at, 0.0);
  it.location = loc;
  return it;
}

inline Item box_item(int id, Vec2 at, double half_len, double half_wid, double theta, Location loc = Location::InBin,
                     int category = 3) {
  Item it;
  it.id = id;
  it.category = category;
  it.shape = ConvexPolygon{{{-half_len, -half_wid}, {half_len, -half_wid}, {half_len, half_wid}, {-half_len, half_wid}}};
  it.pose = Pose2(at, theta);
  it.location = loc;
  return it;
}

inline WorldState world_of(std::vector<Item> items, std::uint64_t seed = 1) {
  WorldState w;
  w.items = std::move(items);
  w.rng_seed = seed;
  return w;
}

/// Label image with the given pixels set to `id`.
inline LabelImage mask_with(int w, int h, const std::vector<Pixel>& px, int id = 1) {
  LabelImage m(w, h, 0);
  for (const Pixel& p : px) m.at(p.row, p.col) = id;
  return m;
}

inline std::size_t count_label(const LabelImage& m, int id) {
  std::size_t n = 0;
  for (auto v : m.data) n += v == id;
  return n;
}

/// Deepest pairwise interpenetration among items sharing a location, by exhaustive scan.
inline double brute_max_overlap(const WorldState& w) {
  double worst = 0.0;
  for (std::size_t i = 0; i < w.items.size(); ++i)
    for (std::size_t j = i + 1; j < w.items.size(); ++j) {
      if (w.items[i].location != w.items[j].location) continue;
      worst = std::max(worst, penetration_depth(world_shape(w.items[i]), world_shape(w.items[j])));
    }
  return worst;
}

inline std::vector<Vec2> random_points(std::size_t n, std::uint64_t seed, double lo = 0.0, double hi = 100.0) {
  Rng rng(seed);
  std::vector<Vec2> p(n);
  for (auto& v : p) v = {rng.uniform(lo, hi), rng.uniform(lo, hi)};
  return p;
}

}  // namespace testing
