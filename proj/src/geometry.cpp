#include "binpick/geometry.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <numeric>
#include <queue>

#include "binpick/error.hpp"

namespace binpick {

UnitVec2 UnitVec2::from(Vec2 v) {
  const double n = v.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw Error(ErrorCode::InvalidArgument, "cannot normalize a zero or non-finite vector");
  return UnitVec2(v.x / n, v.y / n);
}

double normalize_angle(double radians) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double t = std::fmod(radians, two_pi);
  if (t < 0.0) t += two_pi;
  if (t >= two_pi) t = 0.0;
  return t;
}

// --- contour tracing ---------------------------------------------------------

namespace {

// Clockwise on screen (row axis pointing down), starting west.
constexpr std::array<Pixel, 8> kRing = {{{0, -1}, {-1, -1}, {-1, 0}, {-1, 1}, {0, 1}, {1, 1}, {1, 0}, {1, -1}}};

bool labeled(const LabelImage& mask, std::int32_t id, int row, int col) {
  return mask.in_bounds(row, col) && mask.at(row, col) == id;
}

int ring_index(Pixel center, Pixel neighbor) {
  const Pixel d{neighbor.row - center.row, neighbor.col - center.col};
  for (int k = 0; k < 8; ++k)
    if (kRing[k] == d) return k;
  return -1;
}

}  // namespace

bool is_boundary_pixel(const LabelImage& mask, std::int32_t instance_id, int row, int col) {
  if (!labeled(mask, instance_id, row, col)) return false;
  return !labeled(mask, instance_id, row - 1, col) || !labeled(mask, instance_id, row + 1, col) ||
         !labeled(mask, instance_id, row, col - 1) || !labeled(mask, instance_id, row, col + 1);
}

Contour trace_contour(const LabelImage& mask, std::int32_t instance_id) {
  std::size_t count = 0;
  std::optional<Pixel> start;
  for (int r = 0; r < mask.height; ++r)
    for (int c = 0; c < mask.width; ++c)
      if (mask.at(r, c) == instance_id) {
        if (!start) start = Pixel{r, c};
        ++count;
      }
  if (count < 3) throw Error(ErrorCode::EmptyInstance, "instance " + std::to_string(instance_id) + " has fewer than 3 pixels");

  // 8-connectivity check.
  {
    Image<std::uint8_t> seen(mask.width, mask.height, 0);
    std::queue<Pixel> open;
    open.push(*start);
    seen.at(start->row, start->col) = 1;
    std::size_t reached = 0;
    while (!open.empty()) {
      const Pixel p = open.front();
      open.pop();
      ++reached;
      for (const Pixel d : kRing) {
        const int r = p.row + d.row, c = p.col + d.col;
        if (labeled(mask, instance_id, r, c) && !seen.at(r, c)) {
          seen.at(r, c) = 1;
          open.push({r, c});
        }
      }
    }
    if (reached != count)
      throw Error(ErrorCode::FragmentedInstance, "instance " + std::to_string(instance_id) + " has several components");
  }

  // Moore-neighbor tracing; stops when the first move (start -> second pixel) repeats.
  const Pixel s = *start;
  Pixel current = s;
  Pixel back{s.row, s.col - 1};
  std::vector<Pixel> pts{s};
  const std::size_t guard = 4 * count + 16;
  while (pts.size() <= guard) {
    const int b = ring_index(current, back);
    Pixel next{-1, -1};
    Pixel next_back = back;
    for (int k = 1; k <= 8; ++k) {
      const Pixel d = kRing[(b + k) % 8];
      const Pixel cand{current.row + d.row, current.col + d.col};
      if (labeled(mask, instance_id, cand.row, cand.col)) {
        next = cand;
        const Pixel pd = kRing[(b + k - 1) % 8];
        next_back = {current.row + pd.row, current.col + pd.col};
        break;
      }
    }
    if (next.row < 0) break;  // isolated pixel; unreachable with >= 3 connected pixels
    if (current == s && pts.size() > 1 && next == pts[1]) break;
    current = next;
    back = next_back;
    pts.push_back(current);
  }
  if (pts.size() > 1 && pts.back() == s) pts.pop_back();

  std::vector<Vec2> as_xy;
  as_xy.reserve(pts.size());
  for (const Pixel& p : pts) as_xy.push_back({static_cast<double>(p.col), static_cast<double>(p.row)});
  if (signed_area(as_xy) < 0.0) std::reverse(pts.begin() + 1, pts.end());
  return Contour{std::move(pts)};
}

// --- principal axes ----------------------------------------------------------

PrincipalAxes principal_axes(std::span<const Vec2> points) {
  bool distinct = false;
  for (std::size_t i = 1; i < points.size() && !distinct; ++i) distinct = !(points[i] == points[0]);
  if (!distinct) throw Error(ErrorCode::DegeneratePointSet, "principal axes need at least two distinct points");

  const double n = static_cast<double>(points.size());
  Vec2 mean;
  for (const Vec2& p : points) mean += p;
  mean = mean / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const Vec2& p : points) {
    const Vec2 d = p - mean;
    sxx += d.x * d.x;
    sxy += d.x * d.y;
    syy += d.y * d.y;
  }
  sxx /= n;
  sxy /= n;
  syy /= n;

  const double half_trace = 0.5 * (sxx + syy);
  const double radius = std::hypot(0.5 * (sxx - syy), sxy);
  const double l1 = half_trace + radius;
  const double l2 = std::max(0.0, half_trace - radius);

  Vec2 v;
  if (sxy == 0.0) {
    v = sxx >= syy ? Vec2{1.0, 0.0} : Vec2{0.0, 1.0};
  } else if (sxx >= syy) {
    v = {l1 - syy, sxy};
  } else {
    v = {sxy, l1 - sxx};
  }
  UnitVec2 major = UnitVec2::from(v);
  if (major.x() < 0.0 || (major.x() == 0.0 && major.y() < 0.0)) major = -major;
  return PrincipalAxes{mean, major, major.perp(), l1, l2};
}

// --- closest pair ------------------------------------------------------------

ClosestPair closest_pair(std::span<const Vec2> points) {
  const std::size_t n = points.size();
  if (n < 2) throw Error(ErrorCode::TooFewItems, "closest pair needs at least two points");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (points[a].x != points[b].x) return points[a].x < points[b].x;
    if (points[a].y != points[b].y) return points[a].y < points[b].y;
    return a < b;
  });

  double best2 = std::numeric_limits<double>::infinity();
  double best = best2;
  std::size_t bi = 0, bj = 0;
  for (std::size_t a = 0; a < n; ++a) {
    const Vec2 pa = points[order[a]];
    for (std::size_t b = a + 1; b < n; ++b) {
      const Vec2 pb = points[order[b]];
      if (pb.x - pa.x > best) break;
      const double dx = pa.x - pb.x, dy = pa.y - pb.y;
      const double d2 = dx * dx + dy * dy;
      const std::size_t i = std::min(order[a], order[b]);
      const std::size_t j = std::max(order[a], order[b]);
      if (d2 < best2 || (d2 == best2 && (i < bi || (i == bi && j < bj)))) {
        best2 = d2;
        best = std::sqrt(d2);
        bi = i;
        bj = j;
      }
    }
  }
  return ClosestPair{bi, bj, best};
}

// --- convex overlap ----------------------------------------------------------

double signed_area(std::span<const Vec2> v) {
  double a = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) a += v[i].cross(v[(i + 1) % v.size()]);
  return 0.5 * a;
}

namespace {

struct Interval {
  double lo, hi;
};

Interval project(const ConvexShape& s, Vec2 axis) {
  if (const auto* c = std::get_if<Circle>(&s)) {
    const double m = c->center.dot(axis);
    return {m - c->radius, m + c->radius};
  }
  const auto& poly = std::get<Polygon>(s);
  Interval out{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const Vec2& v : poly.vertices) {
    const double m = v.dot(axis);
    out.lo = std::min(out.lo, m);
    out.hi = std::max(out.hi, m);
  }
  return out;
}

void push_edge_normals(const ConvexShape& s, std::vector<Vec2>& axes) {
  const auto* poly = std::get_if<Polygon>(&s);
  if (!poly) return;
  const auto& v = poly->vertices;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Vec2 e = v[(i + 1) % v.size()] - v[i];
    const double n = e.norm();
    if (n > 0.0) axes.push_back(Vec2{e.y, -e.x} / n);
  }
}

Vec2 nearest_vertex(const Polygon& p, Vec2 q) {
  Vec2 best = p.vertices.front();
  double bd = (best - q).norm2();
  for (const Vec2& v : p.vertices) {
    const double d = (v - q).norm2();
    if (d < bd) {
      bd = d;
      best = v;
    }
  }
  return best;
}

}  // namespace

std::optional<Penetration> penetration(const ConvexShape& a, const ConvexShape& b) {
  std::vector<Vec2> axes;
  push_edge_normals(a, axes);
  push_edge_normals(b, axes);
  const auto* ca = std::get_if<Circle>(&a);
  const auto* cb = std::get_if<Circle>(&b);
  if (ca && cb) {
    const Vec2 d = ca->center - cb->center;
    const double n = d.norm();
    axes.push_back(n > 0.0 ? d / n : Vec2{1.0, 0.0});
  } else if (ca || cb) {
    const Circle& c = ca ? *ca : *cb;
    const Polygon& p = ca ? std::get<Polygon>(b) : std::get<Polygon>(a);
    const Vec2 d = c.center - nearest_vertex(p, c.center);
    const double n = d.norm();
    if (n > 0.0) axes.push_back(d / n);
  }

  Penetration best{std::numeric_limits<double>::infinity(), {}};
  for (const Vec2& axis : axes) {
    const Interval ia = project(a, axis);
    const Interval ib = project(b, axis);
    const double forward = ib.hi - ia.lo;   // move a along +axis
    const double backward = ia.hi - ib.lo;  // move a along -axis
    if (forward <= 0.0 || backward <= 0.0) return std::nullopt;
    if (forward <= backward) {
      if (forward < best.depth) best = {forward, axis};
    } else if (backward < best.depth) {
      best = {backward, -axis};
    }
  }
  return best;
}

double penetration_depth(const ConvexShape& a, const ConvexShape& b) {
  const auto p = penetration(a, b);
  return p ? p->depth : 0.0;
}

bool contains_point(const ConvexShape& shape, Vec2 p) {
  if (const auto* c = std::get_if<Circle>(&shape)) return (p - c->center).norm2() <= c->radius * c->radius;
  const auto& v = std::get<Polygon>(shape).vertices;
  for (std::size_t i = 0; i < v.size(); ++i)
    if ((v[(i + 1) % v.size()] - v[i]).cross(p - v[i]) < 0.0) return false;
  return true;
}

Vec2 shape_centroid(const ConvexShape& shape) {
  if (const auto* c = std::get_if<Circle>(&shape)) return c->center;
  const auto& v = std::get<Polygon>(shape).vertices;
  const double area = signed_area(v);
  if (area == 0.0) {
    Vec2 m;
    for (const Vec2& p : v) m += p;
    return m / static_cast<double>(v.size());
  }
  Vec2 c;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Vec2 p = v[i], q = v[(i + 1) % v.size()];
    c += (p + q) * p.cross(q);
  }
  return c / (6.0 * area);
}

Rect bounds(const ConvexShape& shape) {
  if (const auto* c = std::get_if<Circle>(&shape))
    return {{c->center.x - c->radius, c->center.y - c->radius}, {c->center.x + c->radius, c->center.y + c->radius}};
  Rect r{{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()},
         {-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()}};
  for (const Vec2& v : std::get<Polygon>(shape).vertices) {
    r.min.x = std::min(r.min.x, v.x);
    r.min.y = std::min(r.min.y, v.y);
    r.max.x = std::max(r.max.x, v.x);
    r.max.y = std::max(r.max.y, v.y);
  }
  return r;
}

ConvexShape translated(const ConvexShape& shape, Vec2 delta) {
  if (const auto* c = std::get_if<Circle>(&shape)) return Circle{c->center + delta, c->radius};
  Polygon p = std::get<Polygon>(shape);
  for (Vec2& v : p.vertices) v += delta;
  return p;
}

std::vector<Vec2> convex_hull(std::vector<Vec2> pts) {
  std::sort(pts.begin(), pts.end(), [](Vec2 a, Vec2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  std::vector<Vec2> hull(2 * pts.size());
  std::size_t k = 0;
  for (const Vec2& p : pts) {
    while (k >= 2 && (hull[k - 1] - hull[k - 2]).cross(p - hull[k - 2]) <= 0.0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i > 0; --i) {
    const Vec2 p = pts[i - 1];
    while (k >= t && (hull[k - 1] - hull[k - 2]).cross(p - hull[k - 2]) <= 0.0) --k;
    hull[k++] = p;
  }
  hull.resize(k - 1);
  return hull;
}

Polygon oriented_rect(Vec2 center, UnitVec2 axis, double along, double across) {
  const Vec2 u = axis.vec() * (0.5 * along);
  const Vec2 v = axis.perp().vec() * (0.5 * across);
  return Polygon{{center - u - v, center + u - v, center + u + v, center - u + v}};
}

}  // namespace binpick
