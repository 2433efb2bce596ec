#include "binpick/world.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "binpick/error.hpp"

namespace binpick {

// --- shapes ------------------------------------------------------------------

void validate_shape(const Shape& shape) {
  if (const auto* d = std::get_if<Disk>(&shape)) {
    if (!(d->radius >= kMinDiskRadius && d->radius <= kMaxDiskRadius))
      throw Error(ErrorCode::InvalidArgument, "disk radius " + std::to_string(d->radius) + " outside [0.6, 12.5] mm");
    return;
  }
  const auto& v = std::get<ConvexPolygon>(shape).vertices;
  if (v.size() < 3) throw Error(ErrorCode::InvalidArgument, "polygon needs at least 3 vertices");
  for (const Vec2& p : v)
    if (!p.finite()) throw Error(ErrorCode::InvalidArgument, "polygon vertex is not finite");
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Vec2 a = v[i], b = v[(i + 1) % v.size()], c = v[(i + 2) % v.size()];
    if ((b - a).cross(c - b) <= 0.0) throw Error(ErrorCode::InvalidArgument, "polygon is not strictly convex and CCW");
  }
}

double bounding_radius(const Shape& shape) {
  if (const auto* d = std::get_if<Disk>(&shape)) return d->radius;
  double r = 0.0;
  for (const Vec2& p : std::get<ConvexPolygon>(shape).vertices) r = std::max(r, p.norm());
  return r;
}

double max_diameter(const Shape& shape) { return 2.0 * bounding_radius(shape); }

double shape_area(const Shape& shape) {
  if (const auto* d = std::get_if<Disk>(&shape)) return std::numbers::pi * d->radius * d->radius;
  return signed_area(std::get<ConvexPolygon>(shape).vertices);
}

ConvexShape world_shape(const Item& item) {
  if (const auto* d = std::get_if<Disk>(&item.shape)) return Circle{item.pose.position, d->radius};
  Polygon p;
  const auto& body = std::get<ConvexPolygon>(item.shape).vertices;
  p.vertices.reserve(body.size());
  for (const Vec2& v : body) p.vertices.push_back(item.pose.apply(v));
  return p;
}

// --- workspace / gripper ----------------------------------------------------------

const Rect& Workspace::region(Location loc) const {
  switch (loc) {
    case Location::InBin: return bin;
    case Location::OnTray: return tray;
    case Location::Placed: return place;
    case Location::Held: break;
  }
  throw Error(ErrorCode::InvalidArgument, "held items have no region");
}

void validate_workspace(const Workspace& ws) {
  const Rect* rs[] = {&ws.bin, &ws.tray, &ws.place};
  for (const Rect* r : rs)
    if (!(r->width() > 0.0 && r->height() > 0.0)) throw Error(ErrorCode::InvalidConfig, "workspace regions need positive area");
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j)
      if (rs[i]->overlaps(*rs[j])) throw Error(ErrorCode::InvalidConfig, "workspace regions must be disjoint");
}

void validate_gripper(const Gripper& g) {
  const double v[] = {g.finger_footprint_radius, g.max_open_width, g.closed_body_length,
                      g.closed_body_width,       g.capture_radius, g.blade_width};
  for (double x : v)
    if (!(x > 0.0) || !std::isfinite(x)) throw Error(ErrorCode::InvalidConfig, "gripper dimensions must be positive");
  if (!(g.max_open_width > 2.0 * g.finger_footprint_radius))
    throw Error(ErrorCode::InvalidConfig, "max_open_width must exceed twice the fingertip radius");
}

// --- world state --------------------------------------------------------------

const Item* WorldState::find(int id) const {
  auto it = std::lower_bound(items.begin(), items.end(), id, [](const Item& a, int v) { return a.id < v; });
  return it != items.end() && it->id == id ? &*it : nullptr;
}

Item* WorldState::find(int id) {
  return const_cast<Item*>(static_cast<const WorldState*>(this)->find(id));
}

std::size_t WorldState::count(Location loc) const {
  return static_cast<std::size_t>(std::count_if(items.begin(), items.end(), [&](const Item& i) { return i.location == loc; }));
}

std::vector<int> WorldState::ids_at(Location loc) const {
  std::vector<int> out;
  for (const Item& i : items)
    if (i.location == loc) out.push_back(i.id);
  return out;
}

Rng next_rng(WorldState& world, std::uint64_t tag) {
  Rng rng(derive_seed(world.rng_seed, {world.step_counter, tag}));
  ++world.step_counter;
  return rng;
}

// --- sensing -------------------------------------------------------------------

RasterFrame rasterize(const WorldState& world, const Rect& region, double mm_per_px) {
  if (!(mm_per_px > 0.0)) throw Error(ErrorCode::InvalidArgument, "mm_per_px must be positive");
  const int w = static_cast<int>(std::ceil(region.width() / mm_per_px - 1e-9));
  const int h = static_cast<int>(std::ceil(region.height() / mm_per_px - 1e-9));
  if (w <= 0 || h <= 0) throw Error(ErrorCode::EmptyRegion, "raster region has no pixels");

  RasterFrame f;
  f.width = w;
  f.height = h;
  f.mm_per_px = mm_per_px;
  f.origin = region.min + Vec2{0.5 * mm_per_px, 0.5 * mm_per_px};
  f.instance_mask = LabelImage(w, h, 0);
  f.semantic_mask = LabelImage(w, h, 0);

  for (const Item& item : world.items) {
    if (item.location == Location::Held) continue;
    const ConvexShape s = world_shape(item);
    const Rect b = bounds(s);
    const int c0 = std::max(0, static_cast<int>(std::floor((b.min.x - f.origin.x) / mm_per_px)));
    const int c1 = std::min(w - 1, static_cast<int>(std::ceil((b.max.x - f.origin.x) / mm_per_px)));
    const int r0 = std::max(0, static_cast<int>(std::floor((b.min.y - f.origin.y) / mm_per_px)));
    const int r1 = std::min(h - 1, static_cast<int>(std::ceil((b.max.y - f.origin.y) / mm_per_px)));
    for (int r = r0; r <= r1; ++r)
      for (int c = c0; c <= c1; ++c) {
        if (f.instance_mask.at(r, c) != 0) continue;
        if (contains_point(s, f.to_world({static_cast<double>(c), static_cast<double>(r)}))) {
          f.instance_mask.at(r, c) = item.id;
          f.semantic_mask.at(r, c) = item.category;
        }
      }
  }
  return f;
}

// --- pushing -----------------------------------------------------------------------

namespace {

constexpr double kSlop = 1e-7;

void translate(Item& item, Vec2 d) { item.pose.position += d; }

/// Moves the item back inside the region; returns true when it had to move.
bool clamp_to(Item& item, const Rect& region) {
  const Rect b = bounds(world_shape(item));
  Vec2 d;
  if (b.min.x < region.min.x) d.x = region.min.x - b.min.x;
  else if (b.max.x > region.max.x) d.x = region.max.x - b.max.x;
  if (b.min.y < region.min.y) d.y = region.min.y - b.min.y;
  else if (b.max.y > region.max.y) d.y = region.max.y - b.max.y;
  if (d.x == 0.0 && d.y == 0.0) return false;
  translate(item, d);
  return true;
}

void note(std::vector<int>& ids, int id) {
  if (std::find(ids.begin(), ids.end(), id) == ids.end()) ids.push_back(id);
}

Location acting_location(const WorldState& world, const PushAction& action) {
  if (world.workspace.tray.contains(action.start)) return Location::OnTray;
  if (world.workspace.bin.contains(action.start)) return Location::InBin;
  throw Error(ErrorCode::InvalidArgument, "push must start inside the tray or the bin");
}

UnitVec2 motion_direction(const PushAction& action) {
  if (!(action.start == action.end)) return UnitVec2::from(action.end - action.start);
  if (action.finger_open) return action.finger_open->axis.perp();
  return UnitVec2::from_angle(action.gripper_theta);
}

}  // namespace

std::pair<double, double> push_footprint(const PushAction& action, const Gripper& gripper) {
  const UnitVec2 m = motion_direction(action);
  const UnitVec2 heading = UnitVec2::from_angle(action.gripper_theta);
  if (std::abs(heading.dot(m)) >= std::numbers::sqrt2 / 2.0)
    return {gripper.closed_body_length, gripper.closed_body_width};
  return {gripper.closed_body_width, gripper.blade_width};
}

Polygon gripper_footprint_at(Vec2 position, const PushAction& action, const Gripper& gripper) {
  const auto [along, across] = push_footprint(action, gripper);
  return oriented_rect(position, motion_direction(action), along, across);
}

Polygon swept_footprint(const PushAction& action, const Gripper& gripper) {
  const Polygon a = gripper_footprint_at(action.start, action, gripper);
  const Polygon b = gripper_footprint_at(action.end, action, gripper);
  std::vector<Vec2> pts = a.vertices;
  pts.insert(pts.end(), b.vertices.begin(), b.vertices.end());
  return Polygon{convex_hull(std::move(pts))};
}

WorldState apply_push(const WorldState& world, const PushAction& action, const Gripper& gripper,
                      const DynamicsParams& params, PushReport* report) {
  if (!action.start.finite() || !action.end.finite())
    throw Error(ErrorCode::InvalidArgument, "push endpoints must be finite");
  if (action.start == action.end && !action.finger_open)
    throw Error(ErrorCode::InvalidArgument, "a push without finger opening needs distinct endpoints");

  WorldState out = world;
  ++out.step_counter;
  const Location loc = acting_location(world, action);
  const Rect& region = out.workspace.region(loc);
  PushReport local;
  PushReport& rep = report ? *report : local;
  rep = {};

  std::vector<Item*> acting;
  for (Item& item : out.items)
    if (item.location == loc) acting.push_back(&item);

  if (!(action.start == action.end)) {
    const ConvexShape swept = swept_footprint(action, gripper);
    for (Item* item : acting) {
      if (const auto pen = penetration(world_shape(*item), swept)) {
        translate(*item, pen->normal * (pen->depth + kSlop));
        note(rep.moved, item->id);
      }
    }
  }

  if (action.finger_open) {
    const FingerOpen& fo = *action.finger_open;
    const double half = 0.5 * fo.opening;
    for (Item* item : acting) {
      const Vec2 rel = item->pose.position - fo.at;
      if (rel.norm() > gripper.capture_radius) continue;
      const double side = fo.axis.dot(rel);
      if (std::abs(side) >= half) continue;
      const double target = side >= 0.0 ? half : -half;
      translate(*item, fo.axis.vec() * (target - side));
      note(rep.moved, item->id);
    }
  }

  for (int iter = 0;; ++iter) {
    for (Item* item : acting)
      if (clamp_to(*item, region)) note(rep.clamped, item->id);
    bool overlap = false;
    for (std::size_t i = 0; i < acting.size(); ++i) {
      for (std::size_t j = i + 1; j < acting.size(); ++j) {
        const auto pen = penetration(world_shape(*acting[i]), world_shape(*acting[j]));
        if (!pen || pen->depth <= params.tolerance) continue;
        overlap = true;
        const Vec2 half = pen->normal * (0.5 * pen->depth + kSlop);
        translate(*acting[i], half);
        translate(*acting[j], -half);
        note(rep.moved, acting[i]->id);
        note(rep.moved, acting[j]->id);
      }
    }
    if (!overlap) break;
    if (iter + 1 >= params.max_iterations)
      throw Error(ErrorCode::NonConvergence, "overlap resolution exceeded " + std::to_string(params.max_iterations) + " iterations");
  }
  std::sort(rep.moved.begin(), rep.moved.end());
  std::sort(rep.clamped.begin(), rep.clamped.end());
  return out;
}

// --- grabbing and placement ------------------------------------------------------

GrabResult grab_at(const WorldState& world, Vec2 location, double open_width, const Gripper& gripper) {
  if (!world.workspace.bin.contains(location)) throw Error(ErrorCode::InvalidArgument, "grab location outside the bin");
  if (!(open_width > 0.0 && open_width <= gripper.max_open_width))
    throw Error(ErrorCode::InvalidArgument, "grab opening outside (0, max_open_width]");
  GrabResult r{world, {}};
  ++r.world.step_counter;
  const double reach = 0.5 * open_width;
  for (Item& item : r.world.items) {
    if (item.location != Location::InBin) continue;
    if (distance(item.pose.position, location) <= reach) {
      item.location = Location::Held;
      r.captured.push_back(item.id);
    }
  }
  return r;
}

namespace {

bool fits(const WorldState& world, const Item& cand, const Rect& region, double margin) {
  if (!inside_region(cand, region.inset(margin))) return false;
  const ConvexShape s = world_shape(cand);
  for (const Item& other : world.items) {
    if (other.id == cand.id || other.location != cand.location) continue;
    if (penetration(s, world_shape(other))) return false;
  }
  return true;
}

bool place_uniform(WorldState& world, Item& item, Location loc, Rng& rng, const PlacementParams& params) {
  const Rect region = world.workspace.region(loc);
  const double r = bounding_radius(item.shape) + params.wall_margin;
  const Rect area = region.inset(r);
  if (!(area.width() >= 0.0 && area.height() >= 0.0)) return false;
  item.location = loc;
  for (int attempt = 0; attempt < params.max_attempts; ++attempt) {
    item.pose = Pose2({rng.uniform(area.min.x, area.max.x), rng.uniform(area.min.y, area.max.y)},
                      rng.uniform(0.0, 2.0 * std::numbers::pi));
    if (fits(world, item, region, params.wall_margin)) return true;
  }
  return false;
}

/// Smallest center distance along `dir` at which `item` no longer overlaps `member`.
double contact_distance(const Item& member, Item item, UnitVec2 dir) {
  double lo = 0.0, hi = bounding_radius(member.shape) + bounding_radius(item.shape);
  const ConvexShape ms = world_shape(member);
  for (int k = 0; k < 60; ++k) {
    const double mid = 0.5 * (lo + hi);
    item.pose.position = member.pose.position + dir.vec() * mid;
    if (penetration(world_shape(item), ms)) lo = mid;
    else hi = mid;
  }
  return hi;
}

}  // namespace

void place_cluster(WorldState& world, std::span<const int> ids, Location loc, Vec2 anchor, Rng& rng,
                   const PlacementParams& params) {
  const Rect region = world.workspace.region(loc);
  std::vector<int> placed;
  for (int id : ids) {
    Item* item = world.find(id);
    if (!item) throw Error(ErrorCode::InvalidArgument, "unknown item id " + std::to_string(id));
    item->location = loc;
    bool ok = false;
    for (int attempt = 0; attempt < params.max_attempts && !ok; ++attempt) {
      Item cand = *item;
      const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
      if (placed.empty()) {
        const double spread = attempt == 0 ? 0.0 : 2.0 * bounding_radius(item->shape);
        cand.pose = Pose2(anchor + Vec2{rng.uniform(-spread, spread), rng.uniform(-spread, spread)}, theta);
      } else {
        const Item& member = *world.find(placed[rng.index(placed.size())]);
        const UnitVec2 dir = UnitVec2::from_angle(rng.uniform(0.0, 2.0 * std::numbers::pi));
        cand.pose = Pose2(member.pose.position, theta);
        const double gap_max = params.contact_gap_fraction * std::max(max_diameter(member.shape), max_diameter(item->shape));
        const double d = contact_distance(member, cand, dir) + rng.uniform(0.0, gap_max);
        cand.pose.position = member.pose.position + dir.vec() * d;
      }
      if (fits(world, cand, region, params.wall_margin)) {
        *item = cand;
        ok = true;
      }
    }
    if (!ok) throw Error(ErrorCode::PlacementFailure, "could not place item " + std::to_string(id) + " in cluster");
    placed.push_back(id);
  }
}

WorldState place_on_tray(const WorldState& world, std::span<const int> held, const PlacementParams& params) {
  if (held.empty()) throw Error(ErrorCode::InvalidArgument, "place_on_tray needs at least one held item");
  WorldState out = world;
  Rng rng = next_rng(out, 0x7472617950ULL);
  for (int id : held) {
    const Item* it = out.find(id);
    if (!it || it->location != Location::Held) throw Error(ErrorCode::InvalidArgument, "item " + std::to_string(id) + " is not held");
  }
  if (rng.bernoulli(params.p_contact)) {
    double extent = 0.0;
    for (int id : held) extent += max_diameter(out.find(id)->shape);
    const Rect tray = out.workspace.tray;
    const double margin = std::min(std::min(extent, 0.45 * tray.width()), 0.45 * tray.height());
    const Rect area = tray.inset(margin);
    const Vec2 anchor{rng.uniform(area.min.x, area.max.x), rng.uniform(area.min.y, area.max.y)};
    place_cluster(out, held, Location::OnTray, anchor, rng, params);
  } else {
    for (int id : held)
      if (!place_uniform(out, *out.find(id), Location::OnTray, rng, params))
        throw Error(ErrorCode::PlacementFailure, "could not place item " + std::to_string(id) + " on the tray");
  }
  return out;
}

void place_item(WorldState& world, int id) {
  Item* item = world.find(id);
  if (!item) throw Error(ErrorCode::InvalidArgument, "unknown item id " + std::to_string(id));
  const Rect& place = world.workspace.place;
  constexpr double pitch = 26.0;  // clears the largest admissible disk
  const int cols = std::max(1, static_cast<int>(place.width() / pitch));
  const int rows = std::max(1, static_cast<int>(place.height() / pitch));
  const int slot = static_cast<int>(world.count(Location::Placed)) % (cols * rows);
  item->pose.position = place.min + Vec2{(slot % cols + 0.5) * pitch, (slot / cols + 0.5) * pitch};
  item->location = Location::Placed;
}

WorldState reflow(const WorldState& world, const PlacementParams& params) {
  WorldState out = world;
  const std::vector<int> tray = out.ids_at(Location::OnTray);
  if (tray.empty()) return out;
  Rng rng = next_rng(out, 0x7265666c6fULL);
  for (int id : tray) {
    Item& item = *out.find(id);
    item.location = Location::Held;  // excluded from overlap checks until placed
    if (!place_uniform(out, item, Location::InBin, rng, params))
      throw Error(ErrorCode::PlacementFailure, "could not reflow item " + std::to_string(id));
  }
  return out;
}

double max_interpenetration(const WorldState& world) {
  double worst = 0.0;
  for (std::size_t i = 0; i < world.items.size(); ++i) {
    const Item& a = world.items[i];
    if (a.location == Location::Held) continue;
    const ConvexShape sa = world_shape(a);
    for (std::size_t j = i + 1; j < world.items.size(); ++j) {
      const Item& b = world.items[j];
      if (b.location != a.location) continue;
      worst = std::max(worst, penetration_depth(sa, world_shape(b)));
    }
  }
  return worst;
}

bool inside_region(const Item& item, const Rect& region, double tolerance) {
  const Rect b = bounds(world_shape(item));
  return b.min.x >= region.min.x - tolerance && b.max.x <= region.max.x + tolerance &&
         b.min.y >= region.min.y - tolerance && b.max.y <= region.max.y + tolerance;
}

}  // namespace binpick
