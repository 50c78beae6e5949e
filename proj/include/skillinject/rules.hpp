// Parametric execution rules and their composition onto a reference path.
//
// A rule targets one segment class and overrides either the target speed
// (multiplicative scale) or the tool orientation (tilt about the local
// path tangent). Rules never move waypoints.

#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "skillinject/core_math.hpp"
#include "skillinject/error.hpp"
#include "skillinject/geometry.hpp"
#include "skillinject/segment_class.hpp"
#include "skillinject/segmentation.hpp"

namespace skillinject {

enum class RuleKind { velocity_scale, orientation_offset };

inline std::string_view to_string(RuleKind k) {
    return k == RuleKind::velocity_scale ? "velocity_scale" : "orientation_offset";
}

inline RuleKind rule_kind_from_string(std::string_view s) {
    if (s == "velocity_scale") return RuleKind::velocity_scale;
    if (s == "orientation_offset") return RuleKind::orientation_offset;
    throw InvalidArgument("unknown rule kind '" + std::string(s) + "'");
}

inline constexpr double kVelocityScaleMin = 0.1;
inline constexpr double kVelocityScaleMax = 3.0;
inline constexpr double kTiltMax = 0.6;  // rad

struct Rule {
    RuleKind kind = RuleKind::velocity_scale;
    SegmentClass target_class = SegmentClass::none;
    double param = 0.0;

    [[nodiscard]] bool active() const { return target_class != SegmentClass::none; }

    /// Throws if an active rule's parameter is outside its kind's range.
    void validate() const {
        if (!active()) return;
        if (!std::isfinite(param)) throw InvalidArgument("rule parameter must be finite");
        if (kind == RuleKind::velocity_scale && (param < kVelocityScaleMin || param > kVelocityScaleMax))
            throw InvalidArgument("velocity_scale parameter outside [0.1, 3.0]");
        if (kind == RuleKind::orientation_offset && std::abs(param) > kTiltMax)
            throw InvalidArgument("orientation_offset parameter outside [-0.6, 0.6] rad");
    }

    friend bool operator==(const Rule&, const Rule&) = default;
};

/// Ordered rules, at most one per kind; order is application order.
struct RuleSet {
    std::vector<Rule> rules;

    void validate() const {
        bool seen_vel = false, seen_ori = false;
        for (const auto& r : rules) {
            r.validate();
            bool& seen = r.kind == RuleKind::velocity_scale ? seen_vel : seen_ori;
            if (seen) throw InvalidArgument("rule set holds two rules of kind " + std::string(to_string(r.kind)));
            seen = true;
        }
    }

    /// Rule of the given kind, or an inactive placeholder.
    [[nodiscard]] Rule get(RuleKind kind) const {
        for (const auto& r : rules)
            if (r.kind == kind) return r;
        return Rule{kind, SegmentClass::none, 0.0};
    }
};

inline bool rule_is_active(const Rule& r, SegmentClass segment_class) {
    return r.target_class != SegmentClass::none && r.target_class == segment_class;
}

struct ProfilePoint {
    Vec3 position;
    Quat orientation;
    double speed = 0.0;  // m/s
    int part_id = 0;
    SegmentClass cls = SegmentClass::straight;
};

struct TargetProfile {
    std::vector<ProfilePoint> points;

    [[nodiscard]] std::size_t size() const { return points.size(); }
    [[nodiscard]] bool empty() const { return points.empty(); }
};

/// Unit path tangent per waypoint from neighbouring positions in the same part.
inline std::vector<Vec3> path_tangents(const RawPath& path) {
    std::vector<Vec3> out(path.size(), Vec3{1, 0, 0});
    for (const auto& [begin, end] : part_ranges(path)) {
        for (std::size_t i = begin; i < end; ++i) {
            const std::size_t lo = i > begin ? i - 1 : i;
            const std::size_t hi = i + 1 < end ? i + 1 : i;
            const Vec3 d = path.waypoints[hi].position - path.waypoints[lo].position;
            if (norm(d) > 1e-15) out[i] = normalized(d);
            else if (i > begin) out[i] = out[i - 1];
        }
    }
    return out;
}

inline Quat waypoint_orientation(const Waypoint& w) {
    return quat_from_euler(w.euler.roll, w.euler.pitch, w.euler.yaw);
}

struct InjectionParams {
    int blend_len = 5;  // waypoints centred on each segment boundary
};

namespace detail {

struct Override {
    double speed;
    Quat orientation;
};

inline Override override_for(const RuleSet& rules, SegmentClass cls, double nominal, const Quat& base,
                             const Vec3& tangent) {
    Override o{nominal, base};
    for (const auto& r : rules.rules) {
        if (!rule_is_active(r, cls)) continue;
        if (r.kind == RuleKind::velocity_scale)
            o.speed *= r.param;
        else
            o.orientation = quat_from_axis_angle(tangent, r.param) * o.orientation;
    }
    return o;
}

}  // namespace detail

/// Identity profile modified by every active rule at the waypoints whose
/// segment class it targets, with linear speed / spherical orientation
/// blending across segment boundaries.
inline TargetProfile apply_rules(const RawPath& path, const Segmentation& seg, const RuleSet& rules,
                                 const InjectionParams& params = {}) {
    if (seg.labels.size() != path.size())
        throw InvalidArgument("segmentation length does not match the path");
    if (path.waypoints.empty()) throw InvalidArgument("empty path");
    rules.validate();

    const auto tangents = path_tangents(path);
    const double nominal = path.nominal_speed;
    const std::size_t n = path.size();

    TargetProfile profile;
    profile.points.resize(n);
    std::vector<Quat> base(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& w = path.waypoints[i];
        base[i] = waypoint_orientation(w);
        const auto o = detail::override_for(rules, seg.labels[i], nominal, base[i], tangents[i]);
        profile.points[i] = {w.position, o.orientation, o.speed, w.part_id, seg.labels[i]};
    }

    const int half = params.blend_len / 2;
    if (half <= 0) return profile;

    // nearest class boundary within `half` waypoints, same part only
    std::vector<std::size_t> boundaries;
    for (std::size_t b = 1; b < n; ++b)
        if (seg.labels[b] != seg.labels[b - 1] && path.waypoints[b].part_id == path.waypoints[b - 1].part_id)
            boundaries.push_back(b);

    for (std::size_t i = 0; i < n; ++i) {
        std::ptrdiff_t best = -1;
        std::ptrdiff_t best_dist = half + 1;
        for (const auto b : boundaries) {
            const std::ptrdiff_t dist = std::abs(static_cast<std::ptrdiff_t>(i) - static_cast<std::ptrdiff_t>(b));
            if (dist < best_dist && path.waypoints[b].part_id == path.waypoints[i].part_id) {
                best_dist = dist;
                best = static_cast<std::ptrdiff_t>(b);
            }
        }
        if (best < 0) continue;
        const auto b = static_cast<std::size_t>(best);
        const auto pre = detail::override_for(rules, seg.labels[b - 1], nominal, base[i], tangents[i]);
        const auto post = detail::override_for(rules, seg.labels[b], nominal, base[i], tangents[i]);
        // 2*half+1 points centred on the first waypoint of the new segment
        const double alpha = static_cast<double>(static_cast<std::ptrdiff_t>(i) - best + half + 1) /
                             static_cast<double>(2 * half + 2);
        auto& pt = profile.points[i];
        if (pre.speed != post.speed) pt.speed = (1.0 - alpha) * pre.speed + alpha * post.speed;
        if (!(pre.orientation == post.orientation)) pt.orientation = slerp(pre.orientation, post.orientation, alpha);
    }
    return profile;
}

/// Same as above; the workpiece is accepted for rules that condition on
/// geometry, which the current vocabulary does not.
inline TargetProfile apply_rules(const RawPath& path, const Segmentation& seg, const RuleSet& rules,
                                 const Workpiece& /*workpiece*/, const InjectionParams& params = {}) {
    return apply_rules(path, seg, rules, params);
}

/// Profile with no rules applied.
inline TargetProfile nominal_profile(const RawPath& path, const Segmentation& seg) {
    return apply_rules(path, seg, RuleSet{}, InjectionParams{0});
}

}  // namespace skillinject
