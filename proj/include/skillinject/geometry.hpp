// Procedural workpieces (L-shaped slabs and window frames), their top-surface
// point clouds and the raw reference paths a planner would emit over them.
//
// Workpieces are built in a canonical frame: planar, top surface at z = 0,
// outward normal +z. A rigid pose (yaw about z plus translation) places
// them in the world.

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "skillinject/core_math.hpp"
#include "skillinject/error.hpp"
#include "skillinject/random.hpp"
#include "skillinject/segment_class.hpp"

namespace skillinject {

enum class GeometryKind { l_shape, window };

inline std::string_view to_string(GeometryKind k) { return k == GeometryKind::l_shape ? "l_shape" : "window"; }

inline GeometryKind geometry_kind_from_string(std::string_view s) {
    if (s == "l_shape") return GeometryKind::l_shape;
    if (s == "window") return GeometryKind::window;
    throw InvalidArgument("unknown geometry kind '" + std::string(s) + "'");
}

struct RigidTransform {
    double yaw = 0.0;  // rotation about +z, radians
    Vec3 translation{};

    [[nodiscard]] Quat rotation() const { return quat_from_axis_angle({0, 0, 1}, yaw); }
    [[nodiscard]] Vec3 apply(const Vec3& p) const {
        const double c = std::cos(yaw), s = std::sin(yaw);
        return Vec3{c * p.x - s * p.y, s * p.x + c * p.y, p.z} + translation;
    }
    [[nodiscard]] Vec3 apply_inverse(const Vec3& p) const {
        const Vec3 d = p - translation;
        const double c = std::cos(yaw), s = std::sin(yaw);
        return {c * d.x + s * d.y, -s * d.x + c * d.y, d.z};
    }
};

/// Axis-aligned rectangle in the canonical plane.
struct Rect {
    double x0, y0, x1, y1;

    [[nodiscard]] double area() const { return (x1 - x0) * (y1 - y0); }
    [[nodiscard]] bool contains(double x, double y, double tol) const {
        return x >= x0 - tol && x <= x1 + tol && y >= y0 - tol && y <= y1 + tol;
    }
};

struct LShapeParams {
    double leg_a;  // along +x
    double leg_b;  // along +y
    double width;
};

struct WindowParams {
    double outer_w;
    double outer_h;
    double frame_t;
    int mullions;
};

struct Workpiece {
    GeometryKind kind;
    std::variant<LShapeParams, WindowParams> params;
    RigidTransform pose;

    /// Non-overlapping rectangles tiling the top surface, canonical frame.
    [[nodiscard]] std::vector<Rect> regions() const {
        if (kind == GeometryKind::l_shape) {
            const auto& p = std::get<LShapeParams>(params);
            // leg A, corner square, leg B
            return {Rect{0.0, 0.0, p.leg_a, p.width},
                    Rect{p.leg_a, 0.0, p.leg_a + p.width, p.width},
                    Rect{p.leg_a, p.width, p.leg_a + p.width, p.width + p.leg_b}};
        }
        const auto& p = std::get<WindowParams>(params);
        const double w = p.outer_w, h = p.outer_h, t = p.frame_t;
        std::vector<Rect> out{Rect{0.0, 0.0, w, t}, Rect{0.0, h - t, w, h}, Rect{0.0, t, t, h - t},
                              Rect{w - t, t, w, h - t}};
        for (int k = 1; k <= p.mullions; ++k) {
            const double xc = w * k / (p.mullions + 1);
            out.push_back(Rect{xc - 0.5 * t, t, xc + 0.5 * t, h - t});
        }
        return out;
    }

    [[nodiscard]] double area() const {
        double a = 0.0;
        for (const auto& r : regions()) a += r.area();
        return a;
    }

    /// Canonical-frame bounding box (x0, y0, x1, y1).
    [[nodiscard]] Rect bounding_box() const {
        if (kind == GeometryKind::l_shape) {
            const auto& p = std::get<LShapeParams>(params);
            return {0.0, 0.0, p.leg_a + p.width, p.width + p.leg_b};
        }
        const auto& p = std::get<WindowParams>(params);
        return {0.0, 0.0, p.outer_w, p.outer_h};
    }

    [[nodiscard]] Vec3 surface_normal() const { return rotate(pose.rotation(), {0, 0, 1}); }

    /// Membership test for the top surface, world coordinates.
    [[nodiscard]] bool on_surface(const Vec3& world, double tol = 1e-9) const {
        const Vec3 c = pose.apply_inverse(world);
        if (std::abs(c.z) > tol) return false;
        for (const auto& r : regions())
            if (r.contains(c.x, c.y, tol)) return true;
        return false;
    }
};

inline Workpiece make_l_workpiece(double leg_a, double leg_b, double width, RigidTransform pose = {}) {
    if (!(leg_a > 0.0) || !(leg_b > 0.0) || !(width > 0.0))
        throw InvalidArgument("L workpiece dimensions must be strictly positive");
    return {GeometryKind::l_shape, LShapeParams{leg_a, leg_b, width}, pose};
}

inline Workpiece make_window_workpiece(double outer_w, double outer_h, double frame_t, int mullions,
                                       RigidTransform pose = {}) {
    if (!(frame_t > 0.0) || !(outer_w > 0.0) || !(outer_h > 0.0))
        throw InvalidArgument("window dimensions must be strictly positive");
    if (!(outer_w > 2.0 * frame_t) || !(outer_h > 2.0 * frame_t))
        throw InvalidArgument("window inner opening must be positive (outer > 2 * frame_t)");
    if (mullions < 0) throw InvalidArgument("mullion count must be >= 0");
    if (!(outer_w - 2.0 * frame_t > mullions * frame_t))
        throw InvalidArgument("mullions do not fit inside the window opening");
    return {GeometryKind::window, WindowParams{outer_w, outer_h, frame_t, mullions}, pose};
}

// ---------------------------------------------------------------------------
// Point clouds
// ---------------------------------------------------------------------------

struct PointCloud {
    std::vector<Vec3> points;
};

/// Area-uniform samples over the top surface; deterministic for a fixed seed.
inline PointCloud sample_point_cloud(const Workpiece& w, std::size_t k, std::uint64_t seed) {
    if (k < 64) throw InvalidArgument("point cloud needs K >= 64");
    const auto rects = w.regions();
    std::vector<double> cumulative;
    double total = 0.0;
    for (const auto& r : rects) cumulative.push_back(total += r.area());

    Rng rng(seed);
    PointCloud cloud;
    cloud.points.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        const double pick = rng.uniform01() * total;
        std::size_t idx = 0;
        while (idx + 1 < cumulative.size() && pick >= cumulative[idx]) ++idx;
        const Rect& r = rects[idx];
        const double x = rng.uniform(r.x0, r.x1);
        const double y = rng.uniform(r.y0, r.y1);
        cloud.points.push_back(w.pose.apply({x, y, 0.0}));
    }
    return cloud;
}

// ---------------------------------------------------------------------------
// Raw reference paths
// ---------------------------------------------------------------------------

struct Waypoint {
    Vec3 position;
    Euler euler;  // intrinsic Z-Y-X, radians
    int part_id = 0;
};

struct RawPath {
    std::vector<Waypoint> waypoints;
    double nominal_speed = 1.0;
    /// Straight/corner label known at construction time (arc membership).
    /// Empty for paths that were loaded from disk.
    std::vector<SegmentClass> construction_labels;

    [[nodiscard]] std::size_t size() const { return waypoints.size(); }
    [[nodiscard]] int part_count() const { return waypoints.empty() ? 0 : waypoints.back().part_id + 1; }
};

struct PathOptions {
    double spacing = 0.01;        // m, upper bound on waypoint spacing
    double standoff = 0.1;        // m above the surface
    double nominal_speed = 1.0;   // m/s
    double corner_radius = 0.25;  // m, centerline fillet radius
};

/// One straight or circular piece of a stroke centerline, canonical plane.
struct StrokePiece {
    bool is_arc = false;
    Vec3 start{};  // line start
    Vec3 end{};    // line end
    Vec3 center{}; // arc center
    double radius = 0.0;
    double start_angle = 0.0;
    double sweep = 0.0;  // signed, radians

    [[nodiscard]] double length() const { return is_arc ? std::abs(sweep) * radius : norm(end - start); }

    [[nodiscard]] Vec3 point_at(double s) const {
        if (!is_arc) {
            const double len = length();
            return len > 0.0 ? start + (end - start) * (s / len) : start;
        }
        const double a = start_angle + std::copysign(s / radius, sweep);
        return center + Vec3{radius * std::cos(a), radius * std::sin(a), 0.0};
    }

    [[nodiscard]] Vec3 tangent_at(double s) const {
        if (!is_arc) return normalized(end - start);
        const double a = start_angle + std::copysign(s / radius, sweep);
        const double dir = sweep >= 0.0 ? 1.0 : -1.0;
        return Vec3{-std::sin(a), std::cos(a), 0.0} * dir;
    }
};

struct Stroke {
    std::vector<StrokePiece> pieces;

    [[nodiscard]] double length() const {
        double l = 0.0;
        for (const auto& p : pieces) l += p.length();
        return l;
    }
};

/// Polyline through `corners` with every interior vertex replaced by a
/// tangent circular fillet of the given radius.
inline Stroke rounded_polyline(const std::vector<Vec3>& corners, double radius) {
    if (corners.size() < 2) throw InvalidArgument("stroke needs at least two vertices");
    Stroke stroke;
    Vec3 cursor = corners.front();
    for (std::size_t i = 1; i + 1 < corners.size(); ++i) {
        const Vec3 din = normalized(corners[i] - corners[i - 1]);
        const Vec3 dout = normalized(corners[i + 1] - corners[i]);
        const double turn = std::acos(std::clamp(dot(din, dout), -1.0, 1.0));
        if (turn < 1e-12 || radius <= 0.0) continue;
        const double cut = radius * std::tan(0.5 * turn);
        if (cut > norm(corners[i] - cursor) + 1e-12 || cut > 0.5 * norm(corners[i + 1] - corners[i]) + 1e-12)
            throw InvalidArgument("corner radius too large for the member lengths");
        const Vec3 a = corners[i] - din * cut;
        const Vec3 b = corners[i] + dout * cut;
        stroke.pieces.push_back(StrokePiece{false, cursor, a});
        const double side = cross(din, dout).z >= 0.0 ? 1.0 : -1.0;  // left turn -> +1
        const Vec3 left{-din.y, din.x, 0.0};
        StrokePiece arc;
        arc.is_arc = true;
        arc.radius = radius;
        arc.center = a + left * (side * radius);
        const Vec3 ra = a - arc.center;
        arc.start_angle = std::atan2(ra.y, ra.x);
        arc.sweep = side * turn;
        stroke.pieces.push_back(arc);
        cursor = b;
    }
    stroke.pieces.push_back(StrokePiece{false, cursor, corners.back()});
    return stroke;
}

/// Sample a stroke at uniform arc-length steps no longer than `spacing`:
/// ceil(L / spacing) + 1 points including both ends.
struct StrokeSample {
    Vec3 position;
    Vec3 tangent;
    bool on_arc;
};

inline std::vector<StrokeSample> sample_stroke(const Stroke& stroke, double spacing) {
    if (!(spacing > 0.0)) throw InvalidArgument("spacing must be > 0");
    const double total = stroke.length();
    const auto n = static_cast<std::size_t>(std::ceil(total / spacing - 1e-9));
    std::vector<StrokeSample> out;
    out.reserve(n + 1);
    std::size_t piece = 0;
    double piece_start = 0.0;
    for (std::size_t k = 0; k <= n; ++k) {
        const double s = n == 0 ? 0.0 : total * static_cast<double>(k) / static_cast<double>(n);
        while (piece + 1 < stroke.pieces.size() && s > piece_start + stroke.pieces[piece].length() + 1e-12) {
            piece_start += stroke.pieces[piece].length();
            ++piece;
        }
        const auto& pc = stroke.pieces[piece];
        const double local = std::clamp(s - piece_start, 0.0, pc.length());
        const bool on_arc = pc.is_arc && local > 1e-12 && local < pc.length() - 1e-12;
        out.push_back({pc.point_at(local), pc.tangent_at(local), on_arc});
    }
    return out;
}

/// Centerline strokes of a workpiece in its canonical frame (z = 0).
inline std::vector<Stroke> workpiece_strokes(const Workpiece& w, double corner_radius) {
    if (w.kind == GeometryKind::l_shape) {
        const auto& p = std::get<LShapeParams>(w.params);
        const double hw = 0.5 * p.width;
        const std::vector<Vec3> pts{{0.0, hw, 0.0}, {p.leg_a + hw, hw, 0.0}, {p.leg_a + hw, p.width + p.leg_b, 0.0}};
        return {rounded_polyline(pts, corner_radius)};
    }
    const auto& p = std::get<WindowParams>(w.params);
    const double ht = 0.5 * p.frame_t;
    const double x0 = ht, x1 = p.outer_w - ht, y0 = ht, y1 = p.outer_h - ht;
    const double ym = 0.5 * (y0 + y1);
    // frame loop from the middle of the left stile, counter-clockwise; starting
    // there keeps the loop end away from every mullion start
    std::vector<Stroke> strokes{rounded_polyline(
        {{x0, ym, 0.0}, {x0, y0, 0.0}, {x1, y0, 0.0}, {x1, y1, 0.0}, {x0, y1, 0.0}, {x0, ym, 0.0}}, corner_radius)};
    for (int k = 1; k <= p.mullions; ++k) {
        const double xc = p.outer_w * k / (p.mullions + 1);
        strokes.push_back(rounded_polyline({{xc, y0, 0.0}, {xc, y1, 0.0}}, corner_radius));
    }
    return strokes;
}

/// Tool pose for a waypoint: tool z anti-parallel to the surface normal,
/// tool x along the path tangent.
inline Quat tool_orientation(const Vec3& tangent, const Vec3& normal) {
    const Vec3 z = -normalized(normal);
    const Vec3 x = normalized(tangent - dot(tangent, z) * z);
    return matrix_to_quat(Mat3::from_columns(x, cross(z, x), z));
}

inline RawPath make_reference_path(const Workpiece& w, const PathOptions& opt = {}) {
    if (!(opt.spacing > 0.0)) throw InvalidArgument("spacing must be > 0");
    if (!(opt.standoff >= 0.0)) throw InvalidArgument("standoff must be >= 0");
    if (!(opt.nominal_speed > 0.0)) throw InvalidArgument("nominal speed must be > 0");

    const auto strokes = workpiece_strokes(w, opt.corner_radius);
    for (const auto& s : strokes)
        for (const auto& pc : s.pieces)
            if (!pc.is_arc && pc.length() > 1e-12 && opt.spacing > pc.length())
                throw InvalidArgument("spacing is larger than the shortest member");

    const Quat pose_rot = w.pose.rotation();
    RawPath path;
    path.nominal_speed = opt.nominal_speed;
    int part = 0;
    for (const auto& s : strokes) {
        for (const auto& smp : sample_stroke(s, opt.spacing)) {
            const Vec3 local{smp.position.x, smp.position.y, opt.standoff};
            const Quat q = pose_rot * tool_orientation(smp.tangent, {0, 0, 1});
            path.waypoints.push_back({w.pose.apply(local), quat_to_euler(q), part});
            path.construction_labels.push_back(smp.on_arc ? SegmentClass::corner : SegmentClass::straight);
        }
        ++part;
    }
    return path;
}

/// Path polyline length, summed within parts.
inline double path_length(const RawPath& path) {
    double len = 0.0;
    for (std::size_t i = 1; i < path.size(); ++i)
        if (path.waypoints[i].part_id == path.waypoints[i - 1].part_id)
            len += norm(path.waypoints[i].position - path.waypoints[i - 1].position);
    return len;
}

}  // namespace skillinject
