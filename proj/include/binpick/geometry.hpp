#pragma once

// Planar primitives shared by every module: vectors, poses, label images,
// contour tracing, principal axes, closest pairs and convex overlap tests.
//
// World-space quantities are millimeters. Pixel-space quantities use
// (x = column, y = row) when expressed as Vec2.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <variant>
#include <vector>

namespace binpick {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator-() const { return {-x, -y}; }
  constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
  constexpr Vec2 operator/(double s) const { return {x / s, y / s}; }
  constexpr Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
  constexpr Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
  constexpr bool operator==(const Vec2&) const = default;

  constexpr double dot(Vec2 o) const { return x * o.x + y * o.y; }
  constexpr double cross(Vec2 o) const { return x * o.y - y * o.x; }
  constexpr double norm2() const { return x * x + y * y; }
  double norm() const { return std::hypot(x, y); }
  constexpr Vec2 perp() const { return {-y, x}; }
  bool finite() const { return std::isfinite(x) && std::isfinite(y); }
};

constexpr Vec2 operator*(double s, Vec2 v) { return v * s; }

inline double distance(Vec2 a, Vec2 b) { return (a - b).norm(); }

/// Unit-length direction. Construction normalizes; a zero vector is rejected.
class UnitVec2 {
 public:
  UnitVec2() = default;
  static UnitVec2 from(Vec2 v);
  static UnitVec2 from_angle(double radians) { return UnitVec2(std::cos(radians), std::sin(radians)); }

  double x() const { return x_; }
  double y() const { return y_; }
  Vec2 vec() const { return {x_, y_}; }
  UnitVec2 perp() const { return UnitVec2(-y_, x_); }
  UnitVec2 operator-() const { return UnitVec2(-x_, -y_); }
  double angle() const { return std::atan2(y_, x_); }
  double dot(Vec2 v) const { return x_ * v.x + y_ * v.y; }
  double dot(UnitVec2 u) const { return x_ * u.x_ + y_ * u.y_; }

 private:
  UnitVec2(double x, double y) : x_(x), y_(y) {}
  double x_ = 1.0;
  double y_ = 0.0;
};

/// Wraps an angle into [0, 2π).
double normalize_angle(double radians);

struct Pose2 {
  Vec2 position;
  double theta = 0.0;  // [0, 2π)

  Pose2() = default;
  Pose2(Vec2 p, double t) : position(p), theta(normalize_angle(t)) {}

  Vec2 apply(Vec2 body) const {
    const double c = std::cos(theta), s = std::sin(theta);
    return {position.x + c * body.x - s * body.y, position.y + s * body.x + c * body.y};
  }
};

struct Rect {
  Vec2 min;
  Vec2 max;

  double width() const { return max.x - min.x; }
  double height() const { return max.y - min.y; }
  double area() const { return width() * height(); }
  Vec2 center() const { return (min + max) * 0.5; }
  bool contains(Vec2 p) const { return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y; }
  bool overlaps(const Rect& o) const {
    return min.x < o.max.x && o.min.x < max.x && min.y < o.max.y && o.min.y < max.y;
  }
  Rect inset(double margin) const { return {{min.x + margin, min.y + margin}, {max.x - margin, max.y - margin}}; }
  /// Distance from p to the nearest wall (negative outside).
  double wall_distance(Vec2 p) const {
    return std::min(std::min(p.x - min.x, max.x - p.x), std::min(p.y - min.y, max.y - p.y));
  }
  bool operator==(const Rect&) const = default;
};

struct Pixel {
  int row = 0;
  int col = 0;
  bool operator==(const Pixel&) const = default;
  auto operator<=>(const Pixel&) const = default;
};

/// Row-major image.
template <class T>
struct Image {
  int width = 0;
  int height = 0;
  std::vector<T> data;

  Image() = default;
  Image(int w, int h, T fill = T{}) : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

  bool in_bounds(int row, int col) const { return row >= 0 && col >= 0 && row < height && col < width; }
  T& at(int row, int col) { return data[static_cast<std::size_t>(row) * width + col]; }
  const T& at(int row, int col) const { return data[static_cast<std::size_t>(row) * width + col]; }
  std::size_t size() const { return data.size(); }
  bool operator==(const Image&) const = default;
};

using LabelImage = Image<std::int32_t>;

/// Closed pixel boundary; the last point connects back to the first.
struct Contour {
  std::vector<Pixel> points;
};

struct PrincipalAxes {
  Vec2 center;
  UnitVec2 major;
  UnitVec2 minor;
  double lambda_major = 0.0;
  double lambda_minor = 0.0;
};

struct ClosestPair {
  std::size_t i = 0;
  std::size_t j = 0;
  double distance = 0.0;
};

/// Moore-neighbor trace of the outer boundary of one 8-connected instance.
/// Starts at the lexicographically smallest (row, col) pixel and runs
/// counter-clockwise in (x = col, y = row) coordinates (positive shoelace area).
/// Throws EmptyInstance (< 3 pixels) or FragmentedInstance.
Contour trace_contour(const LabelImage& mask, std::int32_t instance_id);

/// True when the pixel carries the label and a 4-neighbor (or the image edge) does not.
bool is_boundary_pixel(const LabelImage& mask, std::int32_t instance_id, int row, int col);

/// PCA of a planar point set with population covariance. Sign convention:
/// major.x > 0, or major.x == 0 and major.y > 0; minor = major rotated +90°.
PrincipalAxes principal_axes(std::span<const Vec2> points);

/// Minimal Euclidean pair, ties broken by the lexicographically smallest (i, j).
ClosestPair closest_pair(std::span<const Vec2> points);

// --- convex overlap primitives -------------------------------------------

struct Circle {
  Vec2 center;
  double radius = 0.0;
};

/// Convex polygon in world coordinates, counter-clockwise.
struct Polygon {
  std::vector<Vec2> vertices;
};

using ConvexShape = std::variant<Circle, Polygon>;

/// Translating `a` by depth * normal separates it from `b`.
struct Penetration {
  double depth = 0.0;
  Vec2 normal;
};

/// Minimal translation of `a` out of `b` (separating-axis test); nullopt when
/// the interiors are disjoint. Among equal-depth axes the first one tested
/// wins (edges of a, then edges of b, then the circle axis); among the two
/// directions of an axis the positive one wins on a tie.
std::optional<Penetration> penetration(const ConvexShape& a, const ConvexShape& b);

double penetration_depth(const ConvexShape& a, const ConvexShape& b);

bool contains_point(const ConvexShape& shape, Vec2 p);

Vec2 shape_centroid(const ConvexShape& shape);

/// Axis-aligned bounds of the shape.
Rect bounds(const ConvexShape& shape);

ConvexShape translated(const ConvexShape& shape, Vec2 delta);

/// Andrew's monotone chain; result is CCW without collinear points.
std::vector<Vec2> convex_hull(std::vector<Vec2> points);

/// Rectangle centered at `center` with `along` extent in direction `axis` and `across` extent perpendicular.
Polygon oriented_rect(Vec2 center, UnitVec2 axis, double along, double across);

/// Signed polygon area (positive for CCW).
double signed_area(std::span<const Vec2> vertices);

}  // namespace binpick
