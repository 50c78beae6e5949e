// Trajectory execution as a damped rigid body chasing a lookahead pose.
//
// A virtual target advances along the profile's arc length at the profile's
// (rule-modified) target speed. The body is pulled toward the pose that lies
// `lookahead_dist` further along by independent proportional force and
// torque laws, and the coupled translational/rotational ODE is integrated
// with classical fourth-order Runge-Kutta.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "skillinject/core_math.hpp"
#include "skillinject/error.hpp"
#include "skillinject/rules.hpp"

namespace skillinject {

struct BodyParams {
    double mass = 1.0;                       // kg
    Vec3 inertia{0.01, 0.01, 0.01};          // principal diagonal, kg m^2
    double linear_damping = 200.0;           // N s / m
    double angular_damping = 2.0;            // N m s / rad

    void validate() const {
        if (!(mass > 0.0)) throw InvalidArgument("mass must be > 0");
        if (!(inertia.x > 0.0 && inertia.y > 0.0 && inertia.z > 0.0))
            throw InvalidArgument("inertia components must be > 0");
        if (!(linear_damping >= 0.0 && angular_damping >= 0.0)) throw InvalidArgument("damping must be >= 0");
    }
};

struct ControllerParams {
    double kp_pos = 10000.0;      // N / m
    double kp_ori = 100.0;        // N m / rad
    double lookahead_dist = 0.05; // m

    void validate() const {
        if (!(kp_pos > 0.0 && kp_ori > 0.0 && lookahead_dist > 0.0))
            throw InvalidArgument("controller gains and lookahead must be > 0");
    }
};

struct SimParams {
    double dt = 0.005;             // s
    std::size_t max_steps = 0;     // 0: derived from the profile duration
    double end_tolerance = 0.01;   // m
};

struct RigidBodyState {
    Vec3 position{};
    Quat orientation{};
    Vec3 linear_velocity{};   // world frame
    Vec3 angular_velocity{};  // world frame
};

struct TrajectorySample {
    double t = 0.0;
    Vec3 p{};
    Quat q{};
    double v = 0.0;  // |linear velocity|
    Vec3 velocity{};
    int part_id = 0;
};

struct Trajectory {
    std::vector<TrajectorySample> samples;

    [[nodiscard]] std::size_t size() const { return samples.size(); }
    [[nodiscard]] bool empty() const { return samples.empty(); }
};

class SimulationIncomplete : public Error {
public:
    SimulationIncomplete(const std::string& what, Trajectory partial)
        : Error(what), partial_(std::move(partial)) {}
    [[nodiscard]] const Trajectory& partial() const noexcept { return partial_; }

private:
    Trajectory partial_;
};

struct Pose {
    Vec3 position{};
    Quat orientation{};
};

struct LookaheadTarget {
    Pose pose;
    double speed = 0.0;
};

struct Wrench {
    Vec3 force{};
    Vec3 torque{};
};

/// Arc-length parameterisation of one contiguous stretch of a profile.
class ProfileTrack {
public:
    ProfileTrack(const TargetProfile& profile, std::size_t begin, std::size_t end)
        : profile_(&profile), begin_(begin), end_(end) {
        if (begin >= end || end > profile.size()) throw InvalidArgument("empty profile range");
        arc_.reserve(end - begin);
        arc_.push_back(0.0);
        for (std::size_t i = begin + 1; i < end; ++i)
            arc_.push_back(arc_.back() + norm(profile.points[i].position - profile.points[i - 1].position));
    }

    explicit ProfileTrack(const TargetProfile& profile) : ProfileTrack(profile, 0, profile.size()) {}

    [[nodiscard]] double total_length() const { return arc_.back(); }
    [[nodiscard]] std::size_t size() const { return end_ - begin_; }
    [[nodiscard]] const ProfilePoint& point(std::size_t local) const { return profile_->points[begin_ + local]; }
    [[nodiscard]] double arc_at(std::size_t local) const { return arc_[local]; }

    /// Interpolated profile state at arc length s (clamped to the track).
    [[nodiscard]] LookaheadTarget at(double s) const {
        if (size() == 1 || s <= 0.0) return from_point(point(0));
        if (s >= total_length()) return from_point(point(size() - 1));
        const auto it = std::upper_bound(arc_.begin(), arc_.end(), s);
        const auto hi = static_cast<std::size_t>(it - arc_.begin());
        const std::size_t lo = hi - 1;
        const double span = arc_[hi] - arc_[lo];
        const double u = span > 0.0 ? (s - arc_[lo]) / span : 0.0;
        const auto& a = point(lo);
        const auto& b = point(hi);
        return {{a.position + (b.position - a.position) * u, slerp(a.orientation, b.orientation, u)},
                a.speed + (b.speed - a.speed) * u};
    }

private:
    static LookaheadTarget from_point(const ProfilePoint& p) { return {{p.position, p.orientation}, p.speed}; }

    const TargetProfile* profile_;
    std::size_t begin_;
    std::size_t end_;
    std::vector<double> arc_;
};

/// Pure-pursuit target: the profile pose `lookahead` beyond `progress`.
inline LookaheadTarget lookahead_target(const ProfileTrack& track, double progress, double lookahead) {
    return track.at(std::min(progress + lookahead, track.total_length()));
}

inline LookaheadTarget lookahead_target(const TargetProfile& profile, double progress, double lookahead) {
    if (profile.empty()) throw InvalidArgument("empty profile");
    return lookahead_target(ProfileTrack(profile), progress, lookahead);
}

inline Wrench compute_wrench(const RigidBodyState& s, const LookaheadTarget& target, const BodyParams& body,
                             const ControllerParams& ctrl) {
    return {ctrl.kp_pos * (target.pose.position - s.position) - body.linear_damping * s.linear_velocity,
            ctrl.kp_ori * quat_error_rotvec(target.pose.orientation, s.orientation) -
                body.angular_damping * s.angular_velocity};
}

inline double kinetic_energy(const RigidBodyState& s, const BodyParams& body) {
    const Mat3 r = quat_to_matrix(s.orientation);
    const Vec3 wb = r.transposed() * s.angular_velocity;  // body frame
    const double rot = body.inertia.x * wb.x * wb.x + body.inertia.y * wb.y * wb.y + body.inertia.z * wb.z * wb.z;
    return 0.5 * body.mass * dot(s.linear_velocity, s.linear_velocity) + 0.5 * rot;
}

namespace detail {

struct StateRate {
    Vec3 dp, dv, dw;
    Quat dq;
};

inline StateRate state_rate(const RigidBodyState& s, const Wrench& w, const BodyParams& body) {
    StateRate r;
    r.dp = s.linear_velocity;
    r.dv = w.force / body.mass;
    const Quat omega{0.0, s.angular_velocity.x, s.angular_velocity.y, s.angular_velocity.z};
    const Quat half = omega * s.orientation;
    r.dq = {0.5 * half.w, 0.5 * half.x, 0.5 * half.y, 0.5 * half.z};
    // Euler's equations in the world frame, I_w = R diag(I) R^T
    const Mat3 rot = quat_to_matrix(quat_normalize(s.orientation));
    const Mat3 rt = rot.transposed();
    const Vec3 wb = rt * s.angular_velocity;
    const Vec3 iw = rot * Vec3{body.inertia.x * wb.x, body.inertia.y * wb.y, body.inertia.z * wb.z};
    const Vec3 rhs_b = rt * (w.torque - cross(s.angular_velocity, iw));
    r.dw = rot * Vec3{rhs_b.x / body.inertia.x, rhs_b.y / body.inertia.y, rhs_b.z / body.inertia.z};
    return r;
}

inline RigidBodyState advance(const RigidBodyState& s, const StateRate& r, double h) {
    return {s.position + r.dp * h,
            {s.orientation.w + r.dq.w * h, s.orientation.x + r.dq.x * h, s.orientation.y + r.dq.y * h,
             s.orientation.z + r.dq.z * h},
            s.linear_velocity + r.dv * h,
            s.angular_velocity + r.dw * h};
}

}  // namespace detail

/// One classical RK4 step. `wrench(state, tau)` is re-evaluated at every
/// stage, tau being the stage time offset within the step. Orientation is
/// renormalised afterwards.
template <typename WrenchFn>
RigidBodyState rk4_integrate(const RigidBodyState& s, double dt, const BodyParams& body, WrenchFn&& wrench) {
    if (!(dt > 0.0)) throw InvalidArgument("dt must be > 0");
    using detail::advance;
    using detail::state_rate;
    const auto k1 = state_rate(s, wrench(s, 0.0), body);
    const auto s2 = advance(s, k1, 0.5 * dt);
    const auto k2 = state_rate(s2, wrench(s2, 0.5 * dt), body);
    const auto s3 = advance(s, k2, 0.5 * dt);
    const auto k3 = state_rate(s3, wrench(s3, 0.5 * dt), body);
    const auto s4 = advance(s, k3, dt);
    const auto k4 = state_rate(s4, wrench(s4, dt), body);

    const double h6 = dt / 6.0;
    auto comb = [&](const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) { return (a + 2.0 * b + 2.0 * c + d) * h6; };
    RigidBodyState out;
    out.position = s.position + comb(k1.dp, k2.dp, k3.dp, k4.dp);
    out.linear_velocity = s.linear_velocity + comb(k1.dv, k2.dv, k3.dv, k4.dv);
    out.angular_velocity = s.angular_velocity + comb(k1.dw, k2.dw, k3.dw, k4.dw);
    const Quat q{s.orientation.w + (k1.dq.w + 2.0 * k2.dq.w + 2.0 * k3.dq.w + k4.dq.w) * h6,
                 s.orientation.x + (k1.dq.x + 2.0 * k2.dq.x + 2.0 * k3.dq.x + k4.dq.x) * h6,
                 s.orientation.y + (k1.dq.y + 2.0 * k2.dq.y + 2.0 * k3.dq.y + k4.dq.y) * h6,
                 s.orientation.z + (k1.dq.z + 2.0 * k2.dq.z + 2.0 * k3.dq.z + k4.dq.z) * h6};
    out.orientation = std::isfinite(quat_norm(q)) ? quat_normalize(q) : q;
    return out;
}

inline bool is_finite(const RigidBodyState& s) {
    return is_finite(s.position) && is_finite(s.linear_velocity) && is_finite(s.angular_velocity) &&
           std::isfinite(s.orientation.w) && std::isfinite(s.orientation.x) && std::isfinite(s.orientation.y) &&
           std::isfinite(s.orientation.z);
}

struct StepResult {
    RigidBodyState state;
    double progress;
};

/// Advance the body by dt. The virtual target moves along the profile at
/// the target speed read at step start; each RK4 stage chases the lookahead
/// pose at that stage's time.
inline StepResult rk4_step(const RigidBodyState& s, const ProfileTrack& track, double progress,
                           const BodyParams& body, const ControllerParams& ctrl, double dt,
                           std::size_t step_index = 0) {
    const double rate = std::max(0.0, lookahead_target(track, progress, ctrl.lookahead_dist).speed);
    const auto next = rk4_integrate(s, dt, body, [&](const RigidBodyState& x, double tau) {
        const double at = std::min(progress + rate * tau, track.total_length());
        return compute_wrench(x, lookahead_target(track, at, ctrl.lookahead_dist), body, ctrl);
    });
    if (!is_finite(next)) throw Divergence("non-finite state at step " + std::to_string(step_index), step_index);
    const double advanced = progress + rate * dt;
    return {next, std::min(advanced, track.total_length())};
}

/// Nominal traversal time of the profile at its own target speeds.
inline double profile_duration(const TargetProfile& profile) {
    double t = 0.0;
    for (std::size_t i = 1; i < profile.size(); ++i) {
        const auto& a = profile.points[i - 1];
        const auto& b = profile.points[i];
        if (a.part_id != b.part_id) continue;
        const double v = 0.5 * (a.speed + b.speed);
        if (v > 0.0) t += norm(b.position - a.position) / v;
    }
    return t;
}

/// Execute every part of the profile in order, each from rest at its first
/// pose. Samples are recorded every step on one global clock t_j = j * dt.
inline Trajectory simulate(const TargetProfile& profile, const BodyParams& body = {},
                           const ControllerParams& ctrl = {}, const SimParams& sim = {}) {
    if (profile.empty()) throw InvalidArgument("empty profile");
    if (!(sim.dt > 0.0)) throw InvalidArgument("dt must be > 0");
    body.validate();
    ctrl.validate();
    for (const auto& p : profile.points)
        if (!(p.speed > 0.0)) throw InvalidArgument("profile target speed must be > 0");

    const std::size_t max_steps =
        sim.max_steps > 0 ? sim.max_steps
                          : static_cast<std::size_t>(std::ceil(20.0 * profile_duration(profile) / sim.dt)) + 2000;

    Trajectory traj;
    std::size_t j = 0;
    auto record = [&](const RigidBodyState& s, int part) {
        traj.samples.push_back({static_cast<double>(j) * sim.dt, s.position, s.orientation, norm(s.linear_velocity),
                                s.linear_velocity, part});
        ++j;
    };

    std::size_t begin = 0;
    std::size_t steps = 0;
    while (begin < profile.size()) {
        std::size_t end = begin + 1;
        while (end < profile.size() && profile.points[end].part_id == profile.points[begin].part_id) ++end;
        const ProfileTrack track(profile, begin, end);
        const int part = profile.points[begin].part_id;
        const Vec3 goal = profile.points[end - 1].position;

        RigidBodyState state{profile.points[begin].position, profile.points[begin].orientation, {}, {}};
        double progress = 0.0;
        record(state, part);
        while (!(progress >= track.total_length() && norm(state.position - goal) <= sim.end_tolerance)) {
            if (steps >= max_steps)
                throw SimulationIncomplete("simulation reached max_steps (" + std::to_string(max_steps) +
                                               ") before completing the profile",
                                           std::move(traj));
            const auto r = rk4_step(state, track, progress, body, ctrl, sim.dt, steps);
            state = r.state;
            progress = r.progress;
            ++steps;
            record(state, part);
        }
        begin = end;
    }
    return traj;
}

}  // namespace skillinject
