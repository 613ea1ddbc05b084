#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

namespace textspot {

inline constexpr double kPi = 3.14159265358979323846;

struct Point {
  double x = 0.0;
  double y = 0.0;

  Point operator+(const Point& p) const { return {x + p.x, y + p.y}; }
  Point operator-(const Point& p) const { return {x - p.x, y - p.y}; }
  Point operator*(double s) const { return {x * s, y * s}; }
};

inline double dot(const Point& a, const Point& b) { return a.x * b.x + a.y * b.y; }
inline double cross(const Point& a, const Point& b) { return a.x * b.y - a.y * b.x; }
inline double norm(const Point& a) { return std::sqrt(dot(a, a)); }

// Rotation by theta maps (1,0) to (cos theta, sin theta). Image coordinates
// are x right / y down, so positive theta turns the width axis toward +y.
inline Point rotated(const Point& p, double theta) {
  double c = std::cos(theta), s = std::sin(theta);
  return {c * p.x - s * p.y, s * p.x + c * p.y};
}

// Wrap an angle into (-pi/2, pi/2] by half-turn steps. A rectangle is
// invariant under rotation by pi, so this does not change the shape.
inline double normalize_angle(double theta) {
  if (theta > kPi || theta < -kPi) theta = std::fmod(theta, kPi);
  while (theta > kPi / 2) theta -= kPi;
  while (theta <= -kPi / 2) theta += kPi;
  return theta;
}

// Oriented rectangle: the detection unit for both characters and words.
// theta is canonicalized to (-pi/2, pi/2] on construction.
struct RotatedBox {
  Point center;
  double width = 0.0;
  double height = 0.0;
  double theta = 0.0;

  RotatedBox() = default;
  RotatedBox(Point c, double w, double h, double t) : center(c), width(w), height(h) {
    if (!(w > 0.0) || !(h > 0.0) || !std::isfinite(w) || !std::isfinite(h) ||
        !std::isfinite(c.x) || !std::isfinite(c.y) || !std::isfinite(t)) {
      throw std::invalid_argument("RotatedBox: width/height must be > 0 and all fields finite");
    }
    theta = normalize_angle(t);
  }

  double area() const { return width * height; }

  // Unit vector along the width (reading) axis.
  Point axis() const { return {std::cos(theta), std::sin(theta)}; }

  // Counter-clockwise corner list, starting at the local (-w/2, -h/2) corner.
  std::array<Point, 4> corners() const {
    double c = std::cos(theta), s = std::sin(theta);
    double hw = width / 2, hh = height / 2;
    auto rot = [&](double lx, double ly) -> Point {
      return {center.x + c * lx - s * ly, center.y + s * lx + c * ly};
    };
    return {rot(-hw, -hh), rot(hw, -hh), rot(hw, hh), rot(-hw, hh)};
  }

  // Inverse of corners(): edge c0->c1 is taken as the width axis.
  static RotatedBox from_corners(std::span<const Point> pts) {
    if (pts.size() != 4) throw std::invalid_argument("from_corners: need exactly 4 points");
    Point c{(pts[0].x + pts[1].x + pts[2].x + pts[3].x) / 4,
            (pts[0].y + pts[1].y + pts[2].y + pts[3].y) / 4};
    Point e0 = pts[1] - pts[0];
    Point e1 = pts[2] - pts[1];
    return RotatedBox(c, norm(e0), norm(e1), std::atan2(e0.y, e0.x));
  }

  bool contains(const Point& p) const {
    Point q = rotated(p - center, -theta);
    return std::abs(q.x) <= width / 2 && std::abs(q.y) <= height / 2;
  }
};

// Same center and orientation, scaled extents.
inline RotatedBox scaled(const RotatedBox& b, double factor) {
  return RotatedBox(b.center, b.width * factor, b.height * factor, b.theta);
}

inline double polygon_signed_area(std::span<const Point> v) {
  double a = 0.0;
  for (size_t i = 0, n = v.size(); i < n; ++i) {
    a += cross(v[i], v[(i + 1) % n]);
  }
  return a / 2;
}

// Simple polygon, normalized to counter-clockwise orientation on
// construction. Zero-area inputs are tolerated (they intersect nothing and
// are never matched) rather than rejected, so degenerate shapes cannot take
// the pipeline down.
class Polygon {
 public:
  explicit Polygon(std::vector<Point> vertices) : vertices_(std::move(vertices)) {
    if (vertices_.size() < 3) throw std::invalid_argument("Polygon: need >= 3 vertices");
    for (const Point& p : vertices_) {
      if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
        throw std::invalid_argument("Polygon: vertices must be finite");
      }
    }
    double a = polygon_signed_area(vertices_);
    if (a < 0) std::reverse(vertices_.begin(), vertices_.end());
  }

  const std::vector<Point>& vertices() const { return vertices_; }
  size_t size() const { return vertices_.size(); }

  double area() const { return polygon_signed_area(vertices_); }
  bool is_degenerate() const { return area() <= 0.0; }

  Point centroid() const {
    double a = 0.0, cx = 0.0, cy = 0.0;
    for (size_t i = 0, n = vertices_.size(); i < n; ++i) {
      const Point& p = vertices_[i];
      const Point& q = vertices_[(i + 1) % n];
      double w = cross(p, q);
      a += w;
      cx += (p.x + q.x) * w;
      cy += (p.y + q.y) * w;
    }
    if (std::abs(a) < 1e-12) {
      // fall back to vertex mean for degenerate polygons
      double mx = 0, my = 0;
      for (const Point& p : vertices_) { mx += p.x; my += p.y; }
      double n = static_cast<double>(vertices_.size());
      return {mx / n, my / n};
    }
    return {cx / (3 * a), cy / (3 * a)};
  }

  // Crossing-number test. Points exactly on the boundary follow the
  // half-open ray rule; callers that care use strictly-interior regions.
  bool contains(const Point& p) const {
    bool inside = false;
    for (size_t i = 0, n = vertices_.size(), j = n - 1; i < n; j = i++) {
      const Point& a = vertices_[i];
      const Point& b = vertices_[j];
      if ((a.y > p.y) != (b.y > p.y)) {
        double xint = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
        if (p.x < xint) inside = !inside;
      }
    }
    return inside;
  }

  bool is_convex() const {
    size_t n = vertices_.size();
    for (size_t i = 0; i < n; ++i) {
      const Point& a = vertices_[i];
      const Point& b = vertices_[(i + 1) % n];
      const Point& c = vertices_[(i + 2) % n];
      if (cross(b - a, c - b) < -1e-9) return false;
    }
    return true;
  }

 private:
  std::vector<Point> vertices_;
};

inline Polygon to_polygon(const RotatedBox& b) {
  auto c = b.corners();
  return Polygon(std::vector<Point>(c.begin(), c.end()));
}

// Scale about the centroid; used for positive-region shrinking.
inline Polygon scaled(const Polygon& poly, double factor) {
  Point c = poly.centroid();
  std::vector<Point> out;
  out.reserve(poly.size());
  for (const Point& p : poly.vertices()) out.push_back(c + (p - c) * factor);
  return Polygon(std::move(out));
}

namespace detail {

// Sutherland-Hodgman: clip `subject` against one half-plane (left of a->b
// for a CCW clip polygon). The small tolerance keeps vertices that lie on
// the boundary, so clipping a polygon against itself returns it unchanged.
inline void clip_half_plane(std::vector<Point>& subject, const Point& a, const Point& b,
                            std::vector<Point>& out, double eps) {
  out.clear();
  size_t n = subject.size();
  if (n == 0) return;
  Point dir = b - a;
  auto side = [&](const Point& p) { return cross(dir, p - a); };
  double sprev = side(subject[n - 1]);
  for (size_t i = 0; i < n; ++i) {
    double scur = side(subject[i]);
    const Point& prev = subject[(i + n - 1) % n];
    const Point& cur = subject[i];
    bool prev_in = sprev >= -eps;
    bool cur_in = scur >= -eps;
    if (cur_in) {
      if (!prev_in) {
        double t = sprev / (sprev - scur);
        out.push_back(prev + (cur - prev) * t);
      }
      out.push_back(cur);
    } else if (prev_in) {
      double t = sprev / (sprev - scur);
      out.push_back(prev + (cur - prev) * t);
    }
    sprev = scur;
  }
}

// Area of subject ∩ clip where clip must be convex (CCW). Exact for any
// simple subject: pieces cut off by a half-plane get joined along the
// boundary line by zero-area corridors that cancel in the shoelace sum.
inline double clip_area_against_convex(std::span<const Point> subject_in,
                                       std::span<const Point> convex_clip) {
  double scale = 1.0;
  for (const Point& p : convex_clip) scale = std::max({scale, std::abs(p.x), std::abs(p.y)});
  const double eps = 1e-9 * scale;
  std::vector<Point> subject(subject_in.begin(), subject_in.end());
  std::vector<Point> tmp;
  size_t m = convex_clip.size();
  for (size_t i = 0; i < m && !subject.empty(); ++i) {
    clip_half_plane(subject, convex_clip[i], convex_clip[(i + 1) % m], tmp, eps);
    subject.swap(tmp);
  }
  if (subject.size() < 3) return 0.0;
  return std::max(0.0, polygon_signed_area(subject));
}

// Ear-clipping triangulation of a simple CCW polygon. O(n^2); the polygons
// here have a few dozen vertices at most.
inline std::vector<std::array<Point, 3>> triangulate(std::span<const Point> poly) {
  std::vector<std::array<Point, 3>> tris;
  std::vector<Point> v(poly.begin(), poly.end());
  auto inside_tri = [](const Point& a, const Point& b, const Point& c, const Point& p) {
    double d1 = cross(b - a, p - a);
    double d2 = cross(c - b, p - b);
    double d3 = cross(a - c, p - c);
    return d1 >= 0 && d2 >= 0 && d3 >= 0;
  };
  size_t guard = 0;
  while (v.size() > 3 && guard < 10000) {
    ++guard;
    bool clipped = false;
    size_t n = v.size();
    for (size_t i = 0; i < n; ++i) {
      const Point& a = v[(i + n - 1) % n];
      const Point& b = v[i];
      const Point& c = v[(i + 1) % n];
      if (cross(b - a, c - b) <= 1e-12) continue;  // reflex or collinear
      bool ear = true;
      for (size_t j = 0; j < n; ++j) {
        if (j == i || j == (i + n - 1) % n || j == (i + 1) % n) continue;
        if (inside_tri(a, b, c, v[j])) { ear = false; break; }
      }
      if (ear) {
        tris.push_back({a, b, c});
        v.erase(v.begin() + static_cast<std::ptrdiff_t>(i));
        clipped = true;
        break;
      }
    }
    if (!clipped) break;  // numerically stuck; remaining area handled below
  }
  if (v.size() == 3) tris.push_back({v[0], v[1], v[2]});
  return tris;
}

}  // namespace detail

// Area of a ∩ b. Exact when either polygon is convex; a non-convex pair is
// handled exactly as well by triangulating one side, which covers every
// shape this pipeline produces (boxes and arc strips).
inline double polygon_intersection_area(const Polygon& a, const Polygon& b) {
  if (a.area() <= 0.0 || b.area() <= 0.0) return 0.0;
  if (b.is_convex()) return detail::clip_area_against_convex(a.vertices(), b.vertices());
  if (a.is_convex()) return detail::clip_area_against_convex(b.vertices(), a.vertices());
  double total = 0.0;
  for (const auto& t : detail::triangulate(a.vertices())) {
    if (polygon_signed_area(t) <= 0) continue;
    total += detail::clip_area_against_convex(b.vertices(), t);
  }
  return total;
}

inline double intersection_area(const RotatedBox& a, const RotatedBox& b) {
  auto ca = a.corners();
  auto cb = b.corners();
  return detail::clip_area_against_convex(ca, cb);
}

// Shape: a detection/annotation region, either an oriented rectangle or a
// polygon (curved instances).
using Shape = std::variant<RotatedBox, Polygon>;

inline double area(const Shape& s) {
  return std::visit([](const auto& v) { return v.area(); }, s);
}

inline Polygon as_polygon(const Shape& s) {
  if (const auto* b = std::get_if<RotatedBox>(&s)) return to_polygon(*b);
  return std::get<Polygon>(s);
}

inline double intersection_area(const Shape& a, const Shape& b) {
  if (const auto* ba = std::get_if<RotatedBox>(&a)) {
    if (const auto* bb = std::get_if<RotatedBox>(&b)) return intersection_area(*ba, *bb);
  }
  return polygon_intersection_area(as_polygon(a), as_polygon(b));
}

// Areas entering the IoU ratio go through the same corner-shoelace route as
// the clipped intersection, so coincident shapes yield exactly 1.0.
inline double area_of(const RotatedBox& b) {
  auto c = b.corners();
  return polygon_signed_area(c);
}
inline double area_of(const Polygon& p) { return p.area(); }
inline double area_of(const Shape& s) {
  return std::visit([](const auto& v) { return area_of(v); }, s);
}

template <typename A, typename B>
inline double iou_impl(const A& a, const B& b) {
  double inter = intersection_area(a, b);
  if (inter <= 0.0) return 0.0;
  double uni = area_of(a) + area_of(b) - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

inline double iou(const RotatedBox& a, const RotatedBox& b) { return iou_impl(a, b); }
inline double iou(const Shape& a, const Shape& b) { return iou_impl(a, b); }
inline double iou(const Shape& a, const RotatedBox& b) { return iou_impl(a, Shape(b)); }
inline double iou(const RotatedBox& a, const Shape& b) { return iou_impl(Shape(a), b); }

// Axis-aligned bounds, for cheap overlap rejection.
struct Aabb {
  double min_x = 0, min_y = 0, max_x = 0, max_y = 0;
  bool overlaps(const Aabb& o) const {
    return min_x <= o.max_x && o.min_x <= max_x && min_y <= o.max_y && o.min_y <= max_y;
  }
};

inline Aabb aabb_of(const RotatedBox& b) {
  auto c = b.corners();
  Aabb r{c[0].x, c[0].y, c[0].x, c[0].y};
  for (const Point& p : c) {
    r.min_x = std::min(r.min_x, p.x);
    r.min_y = std::min(r.min_y, p.y);
    r.max_x = std::max(r.max_x, p.x);
    r.max_y = std::max(r.max_y, p.y);
  }
  return r;
}

inline Aabb aabb_of(const Polygon& poly) {
  const auto& v = poly.vertices();
  Aabb r{v[0].x, v[0].y, v[0].x, v[0].y};
  for (const Point& p : v) {
    r.min_x = std::min(r.min_x, p.x);
    r.min_y = std::min(r.min_y, p.y);
    r.max_x = std::max(r.max_x, p.x);
    r.max_y = std::max(r.max_y, p.y);
  }
  return r;
}

inline Aabb aabb_of(const Shape& s) {
  return std::visit([](const auto& v) { return aabb_of(v); }, s);
}

inline bool shape_contains(const Shape& s, const Point& p) {
  return std::visit([&](const auto& v) { return v.contains(p); }, s);
}

// Smallest rectangle aligned to the dominant direction of the vertex cloud
// (first principal component). For a RotatedBox shape this is the box
// itself. Used as the 5-parameter stand-in when a polygon instance has to
// be represented as an oriented rectangle.
inline RotatedBox enclosing_box(const Polygon& poly) {
  const auto& v = poly.vertices();
  double mx = 0, my = 0;
  for (const Point& p : v) { mx += p.x; my += p.y; }
  mx /= static_cast<double>(v.size());
  my /= static_cast<double>(v.size());
  double sxx = 0, sxy = 0, syy = 0;
  for (const Point& p : v) {
    double dx = p.x - mx, dy = p.y - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  // principal direction of the 2x2 covariance
  double theta = 0.5 * std::atan2(2 * sxy, sxx - syy);
  if (!std::isfinite(theta)) theta = 0.0;
  double c = std::cos(theta), s = std::sin(theta);
  double lo_u = 1e300, hi_u = -1e300, lo_w = 1e300, hi_w = -1e300;
  for (const Point& p : v) {
    double dx = p.x - mx, dy = p.y - my;
    double u = c * dx + s * dy;
    double w = -s * dx + c * dy;
    lo_u = std::min(lo_u, u);
    hi_u = std::max(hi_u, u);
    lo_w = std::min(lo_w, w);
    hi_w = std::max(hi_w, w);
  }
  double cu = (lo_u + hi_u) / 2, cw = (lo_w + hi_w) / 2;
  Point center{mx + c * cu - s * cw, my + s * cu + c * cw};
  double width = std::max(hi_u - lo_u, 1e-9);
  double height = std::max(hi_w - lo_w, 1e-9);
  return RotatedBox(center, width, height, theta);
}

inline RotatedBox enclosing_box(const Shape& s) {
  if (const auto* b = std::get_if<RotatedBox>(&s)) return *b;
  return enclosing_box(std::get<Polygon>(s));
}

}  // namespace textspot
