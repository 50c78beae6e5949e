#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "skillinject/dynamics.hpp"
#include "skillinject/geometry.hpp"
#include "skillinject/rules.hpp"
#include "skillinject/segmentation.hpp"

using namespace skillinject;

namespace {

TargetProfile line_profile(double length, double spacing, double speed) {
    TargetProfile p;
    const int n = static_cast<int>(std::lround(length / spacing));
    for (int i = 0; i <= n; ++i)
        p.points.push_back({{length * i / n, 0, 0.1}, {1, 0, 0, 0}, speed, 0, SegmentClass::straight});
    return p;
}

// Fixed-target pursuit from a perturbed state, integrated for T seconds.
RigidBodyState pursue_fixed(double dt, double T, const BodyParams& b, const ControllerParams& c) {
    const LookaheadTarget tgt{{{0.3, -0.2, 0.1}, quat_from_axis_angle(normalized(Vec3{1, 2, 3}), 0.8)}, 0.0};
    RigidBodyState s{{0, 0, 0}, {1, 0, 0, 0}, {0.5, 0, 0}, {0, 0, 1}};
    const auto n = std::llround(T / dt);
    for (long long i = 0; i < n; ++i)
        s = rk4_integrate(s, dt, b, [&](const RigidBodyState& x, double) { return compute_wrench(x, tgt, b, c); });
    return s;
}

double state_distance(const RigidBodyState& a, const RigidBodyState& b) {
    return norm(a.position - b.position) + norm(a.linear_velocity - b.linear_velocity) +
           geodesic_distance(a.orientation, b.orientation) + norm(a.angular_velocity - b.angular_velocity);
}

}  // namespace

TEST(Lookahead, InterpolatesAlongLine) {
    const auto p = line_profile(1.0, 0.01, 1.0);
    const auto t = lookahead_target(p, 0.0, 0.05);
    EXPECT_NEAR(t.pose.position.x, 0.05, 1e-12);
    EXPECT_NEAR(t.pose.position.y, 0.0, 1e-15);
}

TEST(Lookahead, ClampsAtEnd) {
    auto p = line_profile(1.0, 0.01, 1.0);
    p.points.back().speed = 0.7;
    const auto t = lookahead_target(p, 1.0, 0.05);
    EXPECT_NEAR(t.pose.position.x, 1.0, 1e-12);
    EXPECT_DOUBLE_EQ(t.speed, 0.7);
}

TEST(Lookahead, SpeedLinearlyInterpolated) {
    TargetProfile p;
    p.points.push_back({{0, 0, 0}, {1, 0, 0, 0}, 1.0, 0, SegmentClass::straight});
    p.points.push_back({{0.01, 0, 0}, {1, 0, 0, 0}, 2.0, 0, SegmentClass::straight});
    EXPECT_NEAR(lookahead_target(p, 0.0, 0.005).speed, 1.5, 1e-12);
    EXPECT_THROW(lookahead_target(TargetProfile{}, 0.0, 0.05), InvalidArgument);
}

TEST(Wrench, ProportionalLaw) {
    BodyParams b;
    ControllerParams c;
    const RigidBodyState at{{1, 2, 3}, {1, 0, 0, 0}, {}, {}};
    const auto zero = compute_wrench(at, {{{1, 2, 3}, {1, 0, 0, 0}}, 1.0}, b, c);
    EXPECT_EQ(norm(zero.force), 0.0);
    EXPECT_EQ(norm(zero.torque), 0.0);

    c.kp_pos = 50;
    const auto f = compute_wrench({{0, 0, 0}, {1, 0, 0, 0}, {}, {}}, {{{1, 0, 0}, {1, 0, 0, 0}}, 1.0}, b, c);
    EXPECT_NEAR(f.force.x, 50.0, 1e-12);

    c.kp_ori = 2;
    const auto t = compute_wrench({{0, 0, 0}, {1, 0, 0, 0}, {}, {}},
                                  {{{0, 0, 0}, quat_from_axis_angle({0, 0, 1}, std::numbers::pi / 2)}, 1.0}, b, c);
    EXPECT_NEAR(t.torque.x, 0.0, 1e-12);
    EXPECT_NEAR(t.torque.y, 0.0, 1e-12);
    EXPECT_NEAR(t.torque.z, std::numbers::pi, 1e-12);
}

TEST(Rk4, ExactForLinearMotion) {
    const RigidBodyState s{{0, 0, 0}, {1, 0, 0, 0}, {1, 0, 0}, {}};
    const auto n = rk4_integrate(s, 0.01, BodyParams{}, [](const RigidBodyState&, double) { return Wrench{}; });
    EXPECT_NEAR(n.position.x, 0.01, 1e-17);
    EXPECT_EQ(n.position.y, 0.0);
    EXPECT_EQ(n.linear_velocity.x, 1.0);
}

TEST(Rk4, DampingDecayMatchesExponential) {
    // v' = -(c/m) v, one step
    BodyParams b;
    b.mass = 1.0;
    b.linear_damping = 10.0;
    const double dt = 0.005;
    const RigidBodyState s{{0, 0, 0}, {1, 0, 0, 0}, {1, 0, 0}, {}};
    const auto n = rk4_integrate(s, dt, b, [&](const RigidBodyState& x, double) {
        return Wrench{-b.linear_damping * x.linear_velocity, {}};
    });
    EXPECT_NEAR(n.linear_velocity.x, std::exp(-b.linear_damping * dt / b.mass), 1e-8);
}

TEST(Rk4, DampingErrorFollowsFifthOrderTerm) {
    // local error of RK4 on v' = -k v is (k dt)^5 / 120 to leading order
    for (double k : {10.0, 20.0, 50.0}) {
        for (double dt : {0.01, 0.005, 0.0025}) {
            BodyParams b;
            b.linear_damping = k;
            const RigidBodyState s{{0, 0, 0}, {1, 0, 0, 0}, {1, 0, 0}, {}};
            const auto n = rk4_integrate(s, dt, b, [&](const RigidBodyState& x, double) {
                return Wrench{-k * x.linear_velocity, {}};
            });
            const double err = std::abs(n.linear_velocity.x - std::exp(-k * dt));
            const double predicted = std::pow(k * dt, 5) / 120.0;
            EXPECT_NEAR(err / predicted, 1.0, 0.2) << "k " << k << " dt " << dt;
        }
    }
}

TEST(Rk4, FourthOrderSelfConvergence) {
    BodyParams b;
    b.inertia = {0.01, 0.02, 0.03};
    ControllerParams c;
    // the default gains
    {
        const double dt = 0.005;
        const auto ref = pursue_fixed(dt / 64, 0.5, b, c);
        const double factor =
            state_distance(pursue_fixed(dt, 0.5, b, c), ref) / state_distance(pursue_fixed(dt / 2, 0.5, b, c), ref);
        EXPECT_GE(factor, 12.0);
    }
    // softer gains, deep in the asymptotic range
    b.linear_damping = 20;
    b.angular_damping = 0.5;
    c.kp_pos = 100;
    c.kp_ori = 5;
    for (double dt : {0.005, 0.0025, 0.00125}) {
        const auto ref = pursue_fixed(dt / 64, 0.5, b, c);
        const double factor =
            state_distance(pursue_fixed(dt, 0.5, b, c), ref) / state_distance(pursue_fixed(dt / 2, 0.5, b, c), ref);
        EXPECT_NEAR(factor, 16.0, 2.0) << "dt " << dt;
    }
}

TEST(Rk4, TorqueFreeSpinConservesAngularMomentum) {
    BodyParams b;
    b.inertia = {0.01, 0.02, 0.03};
    b.angular_damping = 0;
    RigidBodyState s{{}, {1, 0, 0, 0}, {}, {1.0, 0.2, 0.5}};
    auto momentum = [&](const RigidBodyState& x) {
        const Mat3 r = quat_to_matrix(x.orientation);
        const Vec3 wb = r.transposed() * x.angular_velocity;
        return r * Vec3{b.inertia.x * wb.x, b.inertia.y * wb.y, b.inertia.z * wb.z};
    };
    const Vec3 l0 = momentum(s);
    const double e0 = kinetic_energy(s, b);
    for (int i = 0; i < 2000; ++i)
        s = rk4_integrate(s, 0.001, b, [](const RigidBodyState&, double) { return Wrench{}; });
    EXPECT_LT(norm(momentum(s) - l0), 1e-8);
    EXPECT_NEAR(kinetic_energy(s, b), e0, 1e-8);
}

TEST(Rk4, StepRejectsNonPositiveDt) {
    EXPECT_THROW(rk4_integrate(RigidBodyState{}, 0.0, BodyParams{}, [](const RigidBodyState&, double) { return Wrench{}; }),
                 InvalidArgument);
}

TEST(Simulate, StraightMeterCompletionTime) {
    const auto traj = simulate(line_profile(1.0, 0.01, 1.0));
    const double t_end = traj.samples.back().t;
    EXPECT_GE(t_end, 1.0);
    EXPECT_LE(t_end, 1.6);
}

TEST(Simulate, TimestampsQuaternionNormAndDeterminism) {
    const auto path = make_reference_path(make_window_workpiece(1.0, 1.3, 0.1, 1));
    const auto seg = segment_path(path);
    RuleSet rules{{Rule{RuleKind::velocity_scale, SegmentClass::corner, 2.5},
                   Rule{RuleKind::orientation_offset, SegmentClass::straight, -0.4}}};
    const auto profile = apply_rules(path, seg, rules);
    SimParams sim;
    const auto a = simulate(profile, {}, {}, sim);
    const auto b = simulate(profile, {}, {}, sim);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t j = 0; j < a.size(); ++j) {
        EXPECT_EQ(a.samples[j].t, static_cast<double>(j) * sim.dt);
        EXPECT_NEAR(quat_norm(a.samples[j].q), 1.0, 1e-9);
        EXPECT_EQ(a.samples[j].p.x, b.samples[j].p.x);
        EXPECT_EQ(a.samples[j].q.w, b.samples[j].q.w);
        EXPECT_EQ(a.samples[j].v, b.samples[j].v);
        EXPECT_DOUBLE_EQ(a.samples[j].v, norm(a.samples[j].velocity));
    }
}

TEST(Simulate, SpeedContinuityBound) {
    const auto path = make_reference_path(make_l_workpiece(1.0, 1.0, 0.2));
    const auto seg = segment_path(path);
    const auto profile = apply_rules(path, seg, RuleSet{{Rule{RuleKind::velocity_scale, SegmentClass::straight, 3.0}}});
    const BodyParams body;
    const ControllerParams ctrl;
    const SimParams sim;
    const auto traj = simulate(profile, body, ctrl, sim);
    const ProfileTrack track(profile);
    // replay the controller to bound the applied force at each step
    RigidBodyState s{profile.points[0].position, profile.points[0].orientation, {}, {}};
    double progress = 0.0;
    for (std::size_t j = 1; j < traj.size(); ++j) {
        const auto target = lookahead_target(track, progress, ctrl.lookahead_dist);
        const double err = norm(target.pose.position - s.position);
        const auto r = rk4_step(s, track, progress, body, ctrl, sim.dt);
        const double bound =
            (ctrl.kp_pos * (err + target.speed * sim.dt + 1e-12) + body.linear_damping * norm(s.linear_velocity)) *
            sim.dt / body.mass;
        EXPECT_LE(std::abs(traj.samples[j].v - traj.samples[j - 1].v), bound) << "step " << j;
        EXPECT_GE(r.progress, progress);
        s = r.state;
        progress = r.progress;
        EXPECT_EQ(s.position.x, traj.samples[j].p.x);
    }
}

TEST(Simulate, SingleRepeatedPoseConverges) {
    TargetProfile p;
    for (int i = 0; i < 5; ++i) p.points.push_back({{0.2, 0.1, 0.3}, {1, 0, 0, 0}, 1.0, 0, SegmentClass::straight});
    const ProfileTrack track(p);
    RigidBodyState s{{0.25, 0.05, 0.3}, quat_from_axis_angle({0, 1, 0}, 0.3), {0.4, 0, 0}, {0, 1, 0}};
    double progress = 0.0;
    BodyParams body;
    ControllerParams ctrl;
    double peak = 0.0, prev = 0.0;
    bool past_peak = false;
    for (int i = 0; i < 2000; ++i) {
        const auto r = rk4_step(s, track, progress, body, ctrl, 0.005);
        s = r.state;
        progress = r.progress;
        const double e = kinetic_energy(s, body);
        if (e >= peak && !past_peak) {
            peak = e;
        } else {
            if (past_peak) { EXPECT_LE(e, prev + 1e-12) << "step " << i; }
            past_peak = true;
        }
        prev = e;
    }
    EXPECT_LT(norm(s.linear_velocity), 1e-3);
    EXPECT_LT(norm(s.position - Vec3{0.2, 0.1, 0.3}), 1e-6);
    EXPECT_LT(geodesic_distance(s.orientation, {1, 0, 0, 0}), 1e-6);
}

TEST(Simulate, DoubledStraightSpeedIsTracked) {
    const auto path = make_reference_path(make_l_workpiece(1.0, 1.0, 0.2));
    const auto seg = segment_path(path);
    const auto profile = apply_rules(path, seg, RuleSet{{Rule{RuleKind::velocity_scale, SegmentClass::straight, 2.0}}});
    const auto traj = simulate(profile);
    // straight interiors: more than 0.2 m from the fillet and from both ends
    double sum = 0.0;
    int n = 0;
    const Vec3 start = path.waypoints.front().position, end = path.waypoints.back().position;
    for (const auto& s : traj.samples) {
        const bool first_leg = std::abs(s.p.y - start.y) < 1e-3 && s.p.x > start.x + 0.2 && s.p.x < 1.1 - 0.25 - 0.2;
        const bool second_leg = std::abs(s.p.x - end.x) < 1e-3 && s.p.y > 0.1 + 0.25 + 0.2 && s.p.y < end.y - 0.2;
        if (first_leg || second_leg) {
            sum += s.v;
            ++n;
        }
    }
    ASSERT_GT(n, 50);
    EXPECT_GE(sum / n, 1.9);
    EXPECT_LE(sum / n, 2.1);
}

TEST(Simulate, IncompleteCarriesPartialTrajectory) {
    SimParams sim;
    sim.max_steps = 10;
    try {
        simulate(line_profile(1.0, 0.01, 1.0), {}, {}, sim);
        FAIL() << "expected SimulationIncomplete";
    } catch (const SimulationIncomplete& e) {
        EXPECT_EQ(e.partial().size(), 11u);
    }
}

TEST(Simulate, DivergenceReportsStep) {
    ControllerParams ctrl;
    ctrl.kp_pos = 1e9;
    try {
        simulate(line_profile(1.0, 0.01, 1.0), {}, ctrl);
        FAIL() << "expected Divergence";
    } catch (const Divergence& e) {
        EXPECT_GT(e.step(), 0u);
    }
}

TEST(Simulate, PartsRunSequentiallyOnOneClock) {
    const auto path = make_reference_path(make_window_workpiece(1.2, 1.4, 0.1, 2));
    const auto traj = simulate(nominal_profile(path, segment_path(path)));
    int part = 0;
    for (std::size_t j = 1; j < traj.size(); ++j) {
        const int d = traj.samples[j].part_id - traj.samples[j - 1].part_id;
        EXPECT_TRUE(d == 0 || d == 1);
        part = traj.samples[j].part_id;
    }
    EXPECT_EQ(part, 2);
}

TEST(Simulate, Validation) {
    EXPECT_THROW(simulate(TargetProfile{}), InvalidArgument);
    SimParams sim;
    sim.dt = 0;
    EXPECT_THROW(simulate(line_profile(1.0, 0.01, 1.0), {}, {}, sim), InvalidArgument);
    BodyParams b;
    b.mass = 0;
    EXPECT_THROW(simulate(line_profile(1.0, 0.01, 1.0), b), InvalidArgument);
}
