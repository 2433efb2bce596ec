#include <algorithm>
#include <array>
#include <numbers>
#include <set>

#include "doctest.h"
#include "binpick/error.hpp"
#include "support.hpp"

using namespace binpick;
using namespace testing;

namespace {

double shoelace(const Contour& c) {
  double a = 0.0;
  for (std::size_t i = 0; i < c.points.size(); ++i) {
    const Pixel p = c.points[i], q = c.points[(i + 1) % c.points.size()];
    a += static_cast<double>(p.col) * q.row - static_cast<double>(q.col) * p.row;
  }
  return a / 2.0;
}

LabelImage disk_mask(int size, double cx, double cy, double r) {
  LabelImage m(size, size, 0);
  for (int row = 0; row < size; ++row)
    for (int col = 0; col < size; ++col)
      if ((col - cx) * (col - cx) + (row - cy) * (row - cy) <= r * r) m.at(row, col) = 1;
  return m;
}

std::set<Pixel> brute_boundary(const LabelImage& m, int id) {
  std::set<Pixel> out;
  for (int r = 0; r < m.height; ++r)
    for (int c = 0; c < m.width; ++c) {
      if (m.at(r, c) != id) continue;
      const std::array<Pixel, 4> n{{{r - 1, c}, {r + 1, c}, {r, c - 1}, {r, c + 1}}};
      for (Pixel p : n)
        if (!m.in_bounds(p.row, p.col) || m.at(p.row, p.col) != id) {
          out.insert({r, c});
          break;
        }
    }
  return out;
}

void check_contour_shape(const Contour& c) {
  REQUIRE(c.points.size() >= 3);
  for (std::size_t i = 0; i < c.points.size(); ++i) {
    const Pixel p = c.points[i], q = c.points[(i + 1) % c.points.size()];
    CHECK_FALSE(p == q);
    CHECK(std::abs(p.row - q.row) <= 1);
    CHECK(std::abs(p.col - q.col) <= 1);
  }
}

// Symmetric 2x2 eigen-solve by explicit quadratic formula.
Vec2 brute_major(std::span<const Vec2> pts) {
  double mx = 0, my = 0;
  for (Vec2 p : pts) mx += p.x, my += p.y;
  mx /= pts.size();
  my /= pts.size();
  double sxx = 0, syy = 0, sxy = 0;
  for (Vec2 p : pts) {
    sxx += (p.x - mx) * (p.x - mx);
    syy += (p.y - my) * (p.y - my);
    sxy += (p.x - mx) * (p.y - my);
  }
  const double tr = sxx + syy, det = sxx * syy - sxy * sxy;
  const double l1 = tr / 2 + std::sqrt(tr * tr / 4 - det);
  Vec2 v = std::abs(sxy) > 1e-12 ? Vec2{l1 - syy, sxy} : (sxx >= syy ? Vec2{1, 0} : Vec2{0, 1});
  v = v / v.norm();
  if (v.x < 0 || (v.x == 0 && v.y < 0)) v = -v;
  return v;
}

ClosestPair brute_pair(std::span<const Vec2> p) {
  ClosestPair best{0, 1, distance(p[0], p[1])};
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = i + 1; j < p.size(); ++j)
      if (distance(p[i], p[j]) < best.distance) best = {i, j, distance(p[i], p[j])};
  return best;
}

}  // namespace

TEST_CASE("3x3 square traces its 8 boundary pixels counter-clockwise") {
  std::vector<Pixel> px;
  for (int r = 2; r < 5; ++r)
    for (int c = 2; c < 5; ++c) px.push_back({r, c});
  const Contour c = trace_contour(mask_with(8, 8, px), 1);
  CHECK(c.points.size() == 8);
  CHECK(c.points.front() == Pixel{2, 2});
  CHECK(shoelace(c) > 0.0);
  check_contour_shape(c);
}

TEST_CASE("degenerate and fragmented instances are rejected") {
  CHECK_THROWS_AS(trace_contour(mask_with(5, 5, {{2, 2}}), 1), Error);
  try {
    trace_contour(mask_with(5, 5, {{2, 2}}), 1);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyInstance);
  }
  try {
    trace_contour(LabelImage(5, 5, 0), 1);
    FAIL("expected EmptyInstance");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyInstance);
  }
  try {
    trace_contour(mask_with(10, 10, {{1, 1}, {1, 2}, {2, 1}, {7, 7}, {7, 8}, {8, 7}}), 1);
    FAIL("expected FragmentedInstance");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::FragmentedInstance);
  }
}

TEST_CASE("diagonal neighbours count as connected") {
  const Contour c = trace_contour(mask_with(6, 6, {{1, 1}, {2, 2}, {3, 3}}), 1);
  check_contour_shape(c);
}

TEST_CASE("rasterized radius-10 disk has a perimeter near 2*pi*10") {
  const LabelImage m = disk_mask(40, 20.0, 20.0, 10.0);
  const Contour c = trace_contour(m, 1);
  const double ideal = 2.0 * std::numbers::pi * 10.0;
  CHECK(static_cast<double>(c.points.size()) >= ideal - 8.0);
  CHECK(static_cast<double>(c.points.size()) <= ideal + 8.0);
  CHECK(c.points.size() == brute_boundary(m, 1).size());
}

TEST_CASE("property: contour pixels are exactly the boundary of random convex blobs") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const double cx = rng.uniform(8, 24), cy = rng.uniform(8, 24);
    const double a = rng.uniform(1.5, 7), b = rng.uniform(1.5, 7), th = rng.uniform(0, std::numbers::pi);
    LabelImage m(32, 32, 0);
    for (int r = 0; r < 32; ++r)
      for (int c = 0; c < 32; ++c) {
        const double dx = c - cx, dy = r - cy;
        const double u = dx * std::cos(th) + dy * std::sin(th), v = -dx * std::sin(th) + dy * std::cos(th);
        if (u * u / (a * a) + v * v / (b * b) <= 1.0) m.at(r, c) = 7;
      }
    if (count_label(m, 7) < 3) continue;
    const Contour c = trace_contour(m, 7);
    check_contour_shape(c);
    const std::set<Pixel> got(c.points.begin(), c.points.end());
    CHECK(got == brute_boundary(m, 7));
    for (Pixel p : c.points) CHECK(is_boundary_pixel(m, 7, p.row, p.col));
    CHECK(shoelace(c) >= 0.0);
  }
}

TEST_CASE("principal axes of collinear points") {
  const std::vector<Vec2> xs{{0, 0}, {1, 0}, {2, 0}, {3, 0}};
  const PrincipalAxes a = principal_axes(xs);
  CHECK(a.major.x() == doctest::Approx(1.0));
  CHECK(a.major.y() == doctest::Approx(0.0));
  CHECK(a.center.x == doctest::Approx(1.5));
  CHECK(a.center.y == doctest::Approx(0.0));

  const std::vector<Vec2> ys{{0, 0}, {0, 1}, {0, 2}};
  const PrincipalAxes b = principal_axes(ys);
  CHECK(std::abs(b.major.x()) < 1e-12);
  CHECK(b.major.y() == doctest::Approx(1.0));

  const std::vector<Vec2> one{{3, 3}, {3, 3}};
  CHECK_THROWS_AS(principal_axes(one), Error);
}

TEST_CASE("principal axis of a rotated 4:1 ellipse sample") {
  Rng rng(5);
  std::vector<Vec2> pts;
  const double th = std::numbers::pi / 6.0;
  for (int i = 0; i < 200; ++i) {
    const double t = rng.uniform(0, 2 * std::numbers::pi);
    const Vec2 body{4.0 * std::cos(t), 1.0 * std::sin(t)};
    pts.push_back({body.x * std::cos(th) - body.y * std::sin(th), body.x * std::sin(th) + body.y * std::cos(th)});
  }
  const PrincipalAxes a = principal_axes(pts);
  const double off = std::acos(std::min(1.0, std::abs(a.major.x() * std::cos(th) + a.major.y() * std::sin(th))));
  CHECK(off < 2.0 * std::numbers::pi / 180.0);
  const Vec2 ref = brute_major(pts);
  CHECK(a.major.x() == doctest::Approx(ref.x).epsilon(1e-9));
  CHECK(a.major.y() == doctest::Approx(ref.y).epsilon(1e-9));
}

TEST_CASE("property: principal axes are orthonormal, translation- and scale-invariant") {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    Rng rng(seed);
    const std::size_t n = 3 + rng.index(40);
    std::vector<Vec2> pts = random_points(n, seed * 7, -20, 20);
    for (auto& p : pts) p.x *= 2.5;  // keep the spectrum separated
    const PrincipalAxes a = principal_axes(pts);
    CHECK(std::abs(a.major.dot(a.minor)) < 1e-9);
    CHECK(a.lambda_major >= a.lambda_minor);
    CHECK(a.lambda_minor >= -1e-12);
    CHECK((a.major.x() > 0 || (a.major.x() == 0 && a.major.y() > 0)));

    const Vec2 t{rng.uniform(-50, 50), rng.uniform(-50, 50)};
    std::vector<Vec2> moved = pts;
    for (auto& p : moved) p += t;
    const PrincipalAxes b = principal_axes(moved);
    CHECK(std::abs(b.major.x() - a.major.x()) < 1e-9);
    CHECK(std::abs(b.major.y() - a.major.y()) < 1e-9);
    CHECK(std::abs(b.center.x - (a.center.x + t.x)) < 1e-9);
    CHECK(std::abs(b.center.y - (a.center.y + t.y)) < 1e-9);

    const double s = rng.uniform(0.1, 10);
    std::vector<Vec2> scaled = pts;
    for (auto& p : scaled) p = p * s;
    const PrincipalAxes c = principal_axes(scaled);
    CHECK(std::abs(c.major.x() - a.major.x()) < 1e-9);
    CHECK(std::abs(c.major.y() - a.major.y()) < 1e-9);
    CHECK(c.lambda_major == doctest::Approx(a.lambda_major * s * s).epsilon(1e-9));
  }
}

TEST_CASE("closest pair examples") {
  const std::vector<Vec2> a{{0, 0}, {1, 0}, {10, 0}};
  const ClosestPair p = closest_pair(a);
  CHECK(p.i == 0);
  CHECK(p.j == 1);
  CHECK(p.distance == doctest::Approx(1.0));

  const std::vector<Vec2> sq{{0, 0}, {2, 0}, {0, 2}, {2, 2}};
  const ClosestPair q = closest_pair(sq);
  CHECK(q.i == 0);
  CHECK(q.j == 1);
  CHECK(q.distance == doctest::Approx(2.0));

  const std::vector<Vec2> one{{0, 0}};
  try {
    closest_pair(one);
    FAIL("expected TooFewItems");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TooFewItems);
  }
}

TEST_CASE("property: closest pair equals the exhaustive scan") {
  const std::vector<Vec2> fifty = random_points(50, 7);
  const ClosestPair f = closest_pair(fifty), fb = brute_pair(fifty);
  CHECK(f.i == fb.i);
  CHECK(f.j == fb.j);
  for (std::uint64_t seed = 1; seed <= 300; ++seed) {
    Rng rng(seed);
    const std::size_t n = 2 + rng.index(99);
    std::vector<Vec2> pts = random_points(n, seed);
    // Integer grids produce plenty of ties.
    if (seed % 3 == 0)
      for (auto& v : pts) v = {std::floor(v.x / 10), std::floor(v.y / 10)};
    const ClosestPair got = closest_pair(pts), want = brute_pair(pts);
    CHECK(got.i == want.i);
    CHECK(got.j == want.j);
    CHECK(got.distance == doctest::Approx(want.distance).epsilon(1e-12));
  }
}

TEST_CASE("angles wrap into [0, 2pi)") {
  CHECK(normalize_angle(-0.5) == doctest::Approx(2 * std::numbers::pi - 0.5));
  CHECK(normalize_angle(2 * std::numbers::pi) == doctest::Approx(0.0));
  CHECK(normalize_angle(7.0) == doctest::Approx(7.0 - 2 * std::numbers::pi));
  CHECK(Pose2({0, 0}, -1.0).theta >= 0.0);
}

TEST_CASE("separating-axis penetration") {
  const ConvexShape a = Circle{{0, 0}, 1.0};
  const ConvexShape b = Circle{{1.5, 0}, 1.0};
  const auto p = penetration(a, b);
  REQUIRE(p);
  CHECK(p->depth == doctest::Approx(0.5));
  CHECK(p->normal.x == doctest::Approx(-1.0));
  CHECK_FALSE(penetration(a, Circle{{2.5, 0}, 1.0}));

  const ConvexShape sq = Polygon{{{-1, -1}, {1, -1}, {1, 1}, {-1, 1}}};
  const auto q = penetration(Circle{{1.5, 0}, 1.0}, sq);
  REQUIRE(q);
  CHECK(q->depth == doctest::Approx(0.5));
  CHECK(q->normal.x == doctest::Approx(1.0));
  CHECK(contains_point(sq, {0.5, 0.5}));
  CHECK_FALSE(contains_point(sq, {1.5, 0.5}));
}

TEST_CASE("property: applying the reported translation separates the shapes") {
  Rng rng(21);
  for (int i = 0; i < 500; ++i) {
    auto make = [&]() -> ConvexShape {
      const Vec2 c{rng.uniform(-3, 3), rng.uniform(-3, 3)};
      if (rng.bernoulli(0.5)) return Circle{c, rng.uniform(0.5, 2)};
      const double hl = rng.uniform(0.3, 2), hw = rng.uniform(0.3, 2), th = rng.uniform(0, 3.2);
      const Pose2 pose(c, th);
      return Polygon{{pose.apply({-hl, -hw}), pose.apply({hl, -hw}), pose.apply({hl, hw}), pose.apply({-hl, hw})}};
    };
    const ConvexShape a = make(), b = make();
    const auto p = penetration(a, b);
    if (!p) continue;
    CHECK(p->depth > 0.0);
    CHECK(p->normal.norm() == doctest::Approx(1.0));
    const ConvexShape moved = translated(a, p->normal * (p->depth + 1e-9));
    CHECK(penetration_depth(moved, b) < 1e-7);
  }
}
