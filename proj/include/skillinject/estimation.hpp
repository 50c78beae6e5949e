// Closed-form recovery of rule classes and parameters from an executed
// trajectory, plus the classification / regression metrics used to score
// any estimator (analytic or learned).

#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "skillinject/core_math.hpp"
#include "skillinject/dynamics.hpp"
#include "skillinject/error.hpp"
#include "skillinject/rules.hpp"
#include "skillinject/segment_class.hpp"

namespace skillinject {

struct AlignmentParams {
    int blend_len = 5;            // exclusion radius around class boundaries, waypoints
    int end_margin = 10;          // exclusion at both ends of every part, waypoints
    double search_ahead = 0.5;    // m of arc length scanned past the last match
    double jump_threshold = 0.1;  // m between consecutive samples => next part
};

struct AlignedSample {
    std::size_t index = 0;  // profile waypoint
    SegmentClass cls = SegmentClass::straight;
    bool excluded = false;
};

/// Map each trajectory sample to its nearest profile waypoint, scanning
/// forward only so indices never decrease. A position jump larger than
/// `jump_threshold` between consecutive samples moves the scan to the next
/// part whose first waypoint is closest.
inline std::vector<AlignedSample> align_to_path(const Trajectory& traj, const TargetProfile& profile,
                                                const AlignmentParams& params = {}) {
    if (traj.empty() || profile.empty()) throw InvalidArgument("align_to_path needs non-empty inputs");
    const std::size_t n = profile.size();

    std::vector<std::size_t> part_end(n);  // exclusive end of the part containing i
    std::vector<std::size_t> part_begin(n);
    for (std::size_t b = 0; b < n;) {
        std::size_t e = b + 1;
        while (e < n && profile.points[e].part_id == profile.points[b].part_id) ++e;
        for (std::size_t i = b; i < e; ++i) {
            part_begin[i] = b;
            part_end[i] = e;
        }
        b = e;
    }

    // distance (in waypoints) to the nearest class boundary / part end
    std::vector<bool> excluded(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        const auto from_start = i - part_begin[i];
        const auto to_end = part_end[i] - 1 - i;
        if (from_start < static_cast<std::size_t>(params.end_margin) ||
            to_end < static_cast<std::size_t>(params.end_margin))
            excluded[i] = true;
        if (i > part_begin[i] && profile.points[i].cls != profile.points[i - 1].cls) {
            const auto r = static_cast<std::size_t>(params.blend_len);
            const std::size_t lo = i >= part_begin[i] + r ? i - r : part_begin[i];
            const std::size_t hi = std::min(part_end[i] - 1, i + r - 1);
            for (std::size_t k = lo; k <= hi; ++k) excluded[k] = true;
        }
    }

    std::vector<AlignedSample> out;
    out.reserve(traj.size());
    std::size_t cur = 0;
    for (std::size_t j = 0; j < traj.size(); ++j) {
        const Vec3& p = traj.samples[j].p;
        if (j > 0 && norm(p - traj.samples[j - 1].p) > params.jump_threshold && part_end[cur] < n) {
            // pick the closest upcoming part start
            std::size_t best = part_end[cur];
            double best_d = std::numeric_limits<double>::infinity();
            for (std::size_t b = part_end[cur]; b < n; b = part_end[b]) {
                const double d = norm(p - profile.points[b].position);
                if (d < best_d) {
                    best_d = d;
                    best = b;
                }
            }
            cur = best;
        }
        std::size_t best = cur;
        double best_d = norm(p - profile.points[cur].position);
        double arc = 0.0;
        for (std::size_t k = cur + 1; k < part_end[cur]; ++k) {
            arc += norm(profile.points[k].position - profile.points[k - 1].position);
            if (arc > params.search_ahead) break;
            const double d = norm(p - profile.points[k].position);
            if (d < best_d) {
                best_d = d;
                best = k;
            }
        }
        cur = best;
        out.push_back({cur, profile.points[cur].cls, excluded[cur]});
    }
    return out;
}

struct ClassStats {
    double mean = 0.0;
    double stddev = 0.0;
    std::size_t count = 0;
};

/// Estimated class and parameter for one rule kind, with the per-class
/// statistics the decision was made from.
struct KindEstimate {
    SegmentClass cls = SegmentClass::none;
    double param = 0.0;
    ClassStats straight;
    ClassStats corner;
};

struct RuleEstimate {
    KindEstimate velocity;
    KindEstimate orientation;

    [[nodiscard]] RuleSet as_rules() const {
        return {{Rule{RuleKind::velocity_scale, velocity.cls, velocity.param},
                 Rule{RuleKind::orientation_offset, orientation.cls, orientation.param}}};
    }
};

struct EstimationParams {
    std::size_t min_samples = 20;
    double velocity_threshold = 0.1;      // |ratio - 1| above this => active
    double orientation_threshold = 0.02;  // rad
};

namespace detail {

inline ClassStats stats_of(const std::vector<double>& xs) {
    ClassStats s;
    s.count = xs.size();
    if (xs.empty()) return s;
    double sum = 0.0;
    for (double x : xs) sum += x;
    s.mean = sum / static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(xs.size()));
    return s;
}

/// Pick the class whose statistic deviates most from `neutral`, if beyond threshold.
inline KindEstimate decide(const std::vector<double>& straight, const std::vector<double>& corner, double neutral,
                           double threshold, std::size_t min_samples, bool report_deviation) {
    if (straight.size() < min_samples || corner.size() < min_samples)
        throw InsufficientSamples("need at least " + std::to_string(min_samples) +
                                  " interior samples per class (straight: " + std::to_string(straight.size()) +
                                  ", corner: " + std::to_string(corner.size()) + ")");
    KindEstimate e;
    e.straight = stats_of(straight);
    e.corner = stats_of(corner);
    const double ds = std::abs(e.straight.mean - neutral);
    const double dc = std::abs(e.corner.mean - neutral);
    const bool pick_straight = ds >= dc;
    const double dev = pick_straight ? ds : dc;
    if (dev > threshold) {
        e.cls = pick_straight ? SegmentClass::straight : SegmentClass::corner;
        const double m = pick_straight ? e.straight.mean : e.corner.mean;
        e.param = report_deviation ? m - neutral : m;
    }
    return e;
}

}  // namespace detail

/// Velocity rule: ratio of executed speed to nominal target speed per class.
inline KindEstimate estimate_velocity_rule(const Trajectory& traj, const TargetProfile& nominal,
                                           std::span<const AlignedSample> alignment,
                                           const EstimationParams& params = {}) {
    if (alignment.size() != traj.size()) throw InvalidArgument("alignment does not match trajectory");
    std::vector<double> straight, corner;
    for (std::size_t j = 0; j < traj.size(); ++j) {
        const auto& a = alignment[j];
        if (a.excluded) continue;
        const double ratio = traj.samples[j].v / nominal.points[a.index].speed;
        (a.cls == SegmentClass::corner ? corner : straight).push_back(ratio);
    }
    return detail::decide(straight, corner, 1.0, params.velocity_threshold, params.min_samples, false);
}

/// Orientation rule: signed tilt about the local path tangent between the
/// executed and nominal orientation, averaged per class.
inline KindEstimate estimate_orientation_rule(const Trajectory& traj, const TargetProfile& nominal,
                                              std::span<const AlignedSample> alignment,
                                              const EstimationParams& params = {}) {
    if (alignment.size() != traj.size()) throw InvalidArgument("alignment does not match trajectory");
    // tangents of the nominal profile, per part
    std::vector<Vec3> tangent(nominal.size(), Vec3{1, 0, 0});
    for (std::size_t i = 0; i < nominal.size(); ++i) {
        const bool has_prev = i > 0 && nominal.points[i - 1].part_id == nominal.points[i].part_id;
        const bool has_next = i + 1 < nominal.size() && nominal.points[i + 1].part_id == nominal.points[i].part_id;
        const Vec3 d = nominal.points[has_next ? i + 1 : i].position - nominal.points[has_prev ? i - 1 : i].position;
        if (norm(d) > 1e-15) tangent[i] = normalized(d);
    }
    std::vector<double> straight, corner;
    for (std::size_t j = 0; j < traj.size(); ++j) {
        const auto& a = alignment[j];
        if (a.excluded) continue;
        const Quat delta = canonical(traj.samples[j].q * conjugate(nominal.points[a.index].orientation));
        const double angle = dot(quat_log(delta), tangent[a.index]);
        (a.cls == SegmentClass::corner ? corner : straight).push_back(angle);
    }
    return detail::decide(straight, corner, 0.0, params.orientation_threshold, params.min_samples, true);
}

inline RuleEstimate estimate_rules(const Trajectory& traj, const TargetProfile& nominal,
                                   const AlignmentParams& align = {}, const EstimationParams& params = {}) {
    const auto alignment = align_to_path(traj, nominal, align);
    return {estimate_velocity_rule(traj, nominal, alignment, params),
            estimate_orientation_rule(traj, nominal, alignment, params)};
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

struct ClassScore {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t support = 0;  // occurrences in truth
};

struct F1Report {
    std::array<ClassScore, 3> per_class{};  // indexed by SegmentClass
    double macro = 0.0;  // unweighted over classes present in truth
    double micro = 0.0;  // equals accuracy for single-label multiclass
    std::size_t n = 0;

    [[nodiscard]] const ClassScore& of(SegmentClass c) const { return per_class[static_cast<std::size_t>(c)]; }
};

inline F1Report f1_multiclass(std::span<const SegmentClass> pred, std::span<const SegmentClass> truth) {
    if (pred.size() != truth.size()) throw InvalidArgument("prediction / truth length mismatch");
    if (pred.empty()) throw InvalidArgument("f1_multiclass needs at least one entry");
    std::array<std::size_t, 3> tp{}, fp{}, fn{};
    std::size_t correct = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const auto p = static_cast<std::size_t>(pred[i]);
        const auto t = static_cast<std::size_t>(truth[i]);
        if (p == t) {
            ++tp[p];
            ++correct;
        } else {
            ++fp[p];
            ++fn[t];
        }
    }
    F1Report r;
    r.n = pred.size();
    double sum = 0.0;
    std::size_t present = 0;
    for (std::size_t c = 0; c < 3; ++c) {
        auto& s = r.per_class[c];
        s.support = tp[c] + fn[c];
        s.precision = tp[c] + fp[c] > 0 ? static_cast<double>(tp[c]) / static_cast<double>(tp[c] + fp[c]) : 0.0;
        s.recall = s.support > 0 ? static_cast<double>(tp[c]) / static_cast<double>(s.support) : 0.0;
        s.f1 = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
        if (s.support > 0) {
            sum += s.f1;
            ++present;
        }
    }
    r.macro = sum / static_cast<double>(present);
    r.micro = static_cast<double>(correct) / static_cast<double>(r.n);
    return r;
}

/// Mean absolute error over entries whose mask flag is set.
inline double mae(std::span<const double> pred, std::span<const double> truth, const std::vector<bool>& mask) {
    if (pred.size() != truth.size() || pred.size() != mask.size())
        throw InvalidArgument("mae: length mismatch");
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (!mask[i]) continue;
        sum += std::abs(pred[i] - truth[i]);
        ++n;
    }
    if (n == 0) throw InvalidArgument("mae: no active entries");
    return sum / static_cast<double>(n);
}

}  // namespace skillinject
