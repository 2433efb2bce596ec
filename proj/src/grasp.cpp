#include "binpick/grasp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include "binpick/error.hpp"
#include "binpick/random.hpp"

namespace binpick {

Grasp make_grasp(Vec2 a, Vec2 b) {
  Grasp g;
  const bool a_first = a.y < b.y || (a.y == b.y && a.x <= b.x);
  g.s1 = a_first ? a : b;
  g.s2 = a_first ? b : a;
  g.zeta = {(g.s1.x + g.s2.x) / 2.0, (g.s1.y + g.s2.y) / 2.0};
  const Vec2 d = g.s2 - g.s1;
  g.width_px = d.norm();
  if (g.width_px > 0.0) {
    g.theta = std::acos(std::clamp(d.x / g.width_px, -1.0, 1.0));
    if (g.theta >= std::numbers::pi) g.theta = 0.0;
  }
  return g;
}

Fingertips fingertip_footprints(const Grasp& g, const RasterFrame& frame, const Gripper& gripper, const GraspParams& params) {
  const UnitVec2 u = UnitVec2::from(g.s2 - g.s1);
  const double radius = gripper.finger_footprint_radius / frame.mm_per_px + params.check_margin_px;
  const double offset = radius + params.standoff_px;
  return {g.s1 - u.vec() * offset, g.s2 + u.vec() * offset, radius};
}

namespace {

std::vector<std::int32_t> instance_ids(const LabelImage& mask) {
  std::set<std::int32_t> ids;
  for (std::int32_t v : mask.data)
    if (v != 0) ids.insert(v);
  return {ids.begin(), ids.end()};
}

/// Nearest positive hit of the ray origin + t * dir with the closed polyline.
std::optional<double> ray_hit(const std::vector<Vec2>& poly, Vec2 origin, Vec2 dir) {
  std::optional<double> best;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2 a = poly[i], b = poly[(i + 1) % poly.size()];
    const Vec2 e = b - a;
    const double denom = dir.cross(e);
    if (std::abs(denom) < 1e-15) continue;
    const Vec2 ao = a - origin;
    const double t = ao.cross(e) / denom;
    const double s = ao.cross(dir) / denom;
    if (t > 1e-12 && s >= 0.0 && s <= 1.0 && (!best || t < *best)) best = t;
  }
  return best;
}

bool in_frame(const RasterFrame& f, Vec2 p) {
  return p.x >= -0.5 && p.y >= -0.5 && p.x <= f.width - 0.5 && p.y <= f.height - 0.5;
}

bool disk_clear(const RasterFrame& f, Vec2 c, double radius) {
  if (!in_frame(f, c)) return false;
  const int r0 = std::max(0, static_cast<int>(std::floor(c.y - radius)));
  const int r1 = std::min(f.height - 1, static_cast<int>(std::ceil(c.y + radius)));
  const int c0 = std::max(0, static_cast<int>(std::floor(c.x - radius)));
  const int c1 = std::min(f.width - 1, static_cast<int>(std::ceil(c.x + radius)));
  const double r2 = radius * radius;
  for (int r = r0; r <= r1; ++r)
    for (int col = c0; col <= c1; ++col) {
      if (f.instance_mask.at(r, col) == 0) continue;
      const double dx = col - c.x, dy = r - c.y;
      if (dx * dx + dy * dy < r2) return false;
    }
  return true;
}

/// No pixel of another item strictly inside the rectangle of half-width
/// `half` spanning a to b.
bool corridor_clear(const RasterFrame& f, Vec2 a, Vec2 b, double half, std::int32_t target) {
  const Vec2 d = b - a;
  const double len = d.norm();
  if (!(len > 0.0)) return true;
  const Vec2 u = d / len;
  const int r0 = std::max(0, static_cast<int>(std::floor(std::min(a.y, b.y) - half)));
  const int r1 = std::min(f.height - 1, static_cast<int>(std::ceil(std::max(a.y, b.y) + half)));
  const int c0 = std::max(0, static_cast<int>(std::floor(std::min(a.x, b.x) - half)));
  const int c1 = std::min(f.width - 1, static_cast<int>(std::ceil(std::max(a.x, b.x) + half)));
  for (int r = r0; r <= r1; ++r)
    for (int col = c0; col <= c1; ++col) {
      const std::int32_t v = f.instance_mask.at(r, col);
      if (v == 0 || v == target) continue;
      const Vec2 p = Vec2{static_cast<double>(col), static_cast<double>(r)} - a;
      const double along = p.dot(u);
      if (along > 0.0 && along < len && std::abs(p.cross(u)) < half) return false;
    }
  return true;
}

}  // namespace

std::vector<Grasp> grasp_candidates(const RasterFrame& frame, const Gripper& gripper, double jitter, std::uint64_t seed,
                                    const GraspParams& params) {
  if (!(jitter >= 0.0)) throw Error(ErrorCode::InvalidArgument, "contour jitter must be non-negative");
  if (params.directions < 1) throw Error(ErrorCode::InvalidArgument, "need at least one candidate direction");
  std::vector<Grasp> out;
  const double cone = std::asin(std::clamp(params.cos_tol, 0.0, 1.0)) * (1.0 - 1e-9);

  for (const std::int32_t id : instance_ids(frame.instance_mask)) {
    Contour contour;
    try {
      contour = trace_contour(frame.instance_mask, id);
    } catch (const Error&) {
      continue;  // too small or fragmented: undetectable
    }
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(id)}));
    std::vector<Vec2> pts;
    pts.reserve(contour.points.size());
    for (const Pixel& p : contour.points)
      pts.push_back({p.col + rng.normal(0.0, jitter), p.row + rng.normal(0.0, jitter)});

    PrincipalAxes axes;
    try {
      axes = principal_axes(pts);
    } catch (const Error&) {
      continue;
    }
    const Pixel first = contour.points.front();
    const int category = frame.semantic_mask.at(first.row, first.col);
    const double base = axes.minor.angle();
    for (int k = 0; k < params.directions; ++k) {
      const double delta = params.directions == 1 ? 0.0 : -cone + 2.0 * cone * k / (params.directions - 1);
      const Vec2 q = UnitVec2::from_angle(base + delta).vec();
      const auto fwd = ray_hit(pts, axes.center, q);
      const auto back = ray_hit(pts, axes.center, -q);
      if (!fwd || !back) continue;
      Grasp g = make_grasp(axes.center - q * *back, axes.center + q * *fwd);
      if (!(g.width_px > 0.0)) continue;
      g.item_id = id;
      g.category = category;
      g.candidate = k;
      const double width_mm = g.width_px * frame.mm_per_px;
      g.pressure = width_mm <= gripper.max_open_width ? pressure_from_width(width_mm, gripper) : 0.0;
      out.push_back(g);
    }
  }
  return out;
}

bool collision_check(const RasterFrame& frame, const Grasp& grasp, const Gripper& gripper, const GraspParams& params) {
  const Fingertips ft = fingertip_footprints(grasp, frame, gripper, params);
  return disk_clear(frame, ft.first, ft.radius_px) && disk_clear(frame, ft.second, ft.radius_px) &&
         corridor_clear(frame, ft.first, ft.second, ft.radius_px, grasp.item_id);
}

int clutter_score(const RasterFrame& frame, const Grasp& grasp, const Gripper& gripper, const GraspParams& params) {
  const Fingertips ft = fingertip_footprints(grasp, frame, gripper, params);
  const double reach = distance(ft.first, grasp.zeta) + ft.radius_px;
  const Vec2 c = grasp.zeta;
  const int r0 = std::max(0, static_cast<int>(std::floor(c.y - reach)));
  const int r1 = std::min(frame.height - 1, static_cast<int>(std::ceil(c.y + reach)));
  const int c0 = std::max(0, static_cast<int>(std::floor(c.x - reach)));
  const int c1 = std::min(frame.width - 1, static_cast<int>(std::ceil(c.x + reach)));
  int score = 0;
  for (int r = r0; r <= r1; ++r)
    for (int col = c0; col <= c1; ++col) {
      const std::int32_t v = frame.instance_mask.at(r, col);
      if (v == 0 || v == grasp.item_id) continue;
      const double dx = col - c.x, dy = r - c.y;
      if (dx * dx + dy * dy <= reach * reach) ++score;
    }
  return score;
}

std::vector<Grasp> detect_grasps(const RasterFrame& frame, const Gripper& gripper, double jitter, std::uint64_t seed,
                                 const GraspParams& params) {
  struct Ranked {
    int score;
    Grasp g;
  };
  std::vector<Ranked> kept;
  for (const Grasp& g : grasp_candidates(frame, gripper, jitter, seed, params)) {
    if (g.width_px * frame.mm_per_px > gripper.max_open_width) continue;
    if (!collision_check(frame, g, gripper, params)) continue;
    kept.push_back({clutter_score(frame, g, gripper, params), g});
  }
  // Offset of a candidate from the middle of the cone, in half steps.
  const auto tilt = [&](const Grasp& g) { return std::abs(2 * g.candidate - (params.directions - 1)); };
  std::stable_sort(kept.begin(), kept.end(), [&](const Ranked& a, const Ranked& b) {
    if (a.score != b.score) return a.score < b.score;
    if (a.g.item_id != b.g.item_id) return a.g.item_id < b.g.item_id;
    if (tilt(a.g) != tilt(b.g)) return tilt(a.g) < tilt(b.g);
    return a.g.candidate < b.g.candidate;
  });
  std::vector<Grasp> out;
  out.reserve(kept.size());
  for (Ranked& r : kept) out.push_back(r.g);
  return out;
}

double pressure_from_width(double width_mm, const Gripper& gripper) {
  if (!(width_mm > 0.0 && width_mm <= gripper.max_open_width))
    throw Error(ErrorCode::WidthOutOfRange, "grasp width outside (0, max_open_width]");
  const double a = -1.0 / gripper.max_open_width;
  const double b = 1.0;
  return std::clamp(a * width_mm + b, 0.0, 1.0);
}

PickOutcome execute_grasp(const WorldState& world, Location loc, const RasterFrame& frame, const Grasp& grasp,
                          const Gripper& gripper, const GraspParams& params) {
  const Fingertips ft = fingertip_footprints(grasp, frame, gripper, params);
  const Vec2 c1 = frame.to_world(ft.first);
  const Vec2 c2 = frame.to_world(ft.second);
  const Circle tip1{c1, gripper.finger_footprint_radius};
  const Circle tip2{c2, gripper.finger_footprint_radius};
  const Polygon band = oriented_rect((c1 + c2) * 0.5, UnitVec2::from(c2 - c1), distance(c1, c2),
                                     2.0 * gripper.finger_footprint_radius);
  PickOutcome out;
  for (const Item& item : world.items) {
    if (item.location != loc) continue;
    const ConvexShape s = world_shape(item);
    if (penetration(tip1, s) || penetration(tip2, s)) {
      out.result = PickResult::Collision;
      out.item_id = item.id;
      return out;
    }
    if (penetration(band, s)) out.enclosed.push_back(item.id);
  }
  if (out.enclosed.empty()) out.result = PickResult::NothingEnclosed;
  else if (out.enclosed.size() > 1) out.result = PickResult::MultiCapture;
  else {
    out.result = PickResult::Success;
    out.item_id = out.enclosed.front();
  }
  return out;
}

void write_grasps_csv(std::span<const Grasp> grasps, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << "item_id,category,u1,v1,u2,v2,zeta_u,zeta_v,theta_rad,width_px,pressure\n";
  char buf[512];
  for (const Grasp& g : grasps) {
    std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", g.item_id, g.category,
                  g.s1.x, g.s1.y, g.s2.x, g.s2.y, g.zeta.x, g.zeta.y, g.theta, g.width_px, g.pressure);
    out << buf;
  }
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

}  // namespace binpick
