#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <vector>

#include "skillinject/dynamics.hpp"
#include "skillinject/estimation.hpp"
#include "skillinject/geometry.hpp"
#include "skillinject/rules.hpp"
#include "skillinject/segmentation.hpp"

using namespace skillinject;
using C = SegmentClass;

namespace {

struct RoundTrip {
    RuleEstimate estimate;
    Trajectory traj;
    TargetProfile nominal;
};

RoundTrip round_trip(const Workpiece& w, const RuleSet& rules) {
    const auto path = make_reference_path(w);
    const auto seg = segment_path(path);
    RoundTrip r;
    r.nominal = nominal_profile(path, seg);
    r.traj = simulate(apply_rules(path, seg, rules));
    r.estimate = estimate_rules(r.traj, r.nominal);
    return r;
}

const Workpiece& l_piece() {
    static const Workpiece w = make_l_workpiece(1.0, 1.1, 0.2, RigidTransform{0.7, {0.1, -0.05, 0.0}});
    return w;
}

const Workpiece& window_piece() {
    static const Workpiece w = make_window_workpiece(1.0, 1.4, 0.1, 1);
    return w;
}

}  // namespace

TEST(EstimateRules, StraightVelocity) {
    const auto r = round_trip(l_piece(), RuleSet{{Rule{RuleKind::velocity_scale, C::straight, 2.0}}});
    EXPECT_EQ(r.estimate.velocity.cls, C::straight);
    EXPECT_NEAR(r.estimate.velocity.param, 2.0, 0.1);
    EXPECT_EQ(r.estimate.orientation.cls, C::none);
}

TEST(EstimateRules, CornerVelocity) {
    const auto r = round_trip(l_piece(), RuleSet{{Rule{RuleKind::velocity_scale, C::corner, 0.5}}});
    EXPECT_EQ(r.estimate.velocity.cls, C::corner);
    EXPECT_NEAR(r.estimate.velocity.param, 0.5, 0.1);
}

TEST(EstimateRules, CornerTilt) {
    const auto r = round_trip(l_piece(), RuleSet{{Rule{RuleKind::orientation_offset, C::corner, 0.3}}});
    EXPECT_EQ(r.estimate.orientation.cls, C::corner);
    EXPECT_NEAR(r.estimate.orientation.param, 0.3, 0.03);
    EXPECT_EQ(r.estimate.velocity.cls, C::none);
}

TEST(EstimateRules, NegativeStraightTiltOnWindow) {
    const auto r = round_trip(window_piece(), RuleSet{{Rule{RuleKind::orientation_offset, C::straight, -0.4}}});
    EXPECT_EQ(r.estimate.orientation.cls, C::straight);
    EXPECT_NEAR(r.estimate.orientation.param, -0.4, 0.03);
}

TEST(EstimateRules, BothKinds) {
    const auto r = round_trip(window_piece(), RuleSet{{Rule{RuleKind::orientation_offset, C::corner, 0.2},
                                                       Rule{RuleKind::velocity_scale, C::straight, 1.6}}});
    EXPECT_EQ(r.estimate.velocity.cls, C::straight);
    EXPECT_NEAR(r.estimate.velocity.param, 1.6, 0.1);
    EXPECT_EQ(r.estimate.orientation.cls, C::corner);
    EXPECT_NEAR(r.estimate.orientation.param, 0.2, 0.03);
}

TEST(EstimateRules, NoRulesGivesNone) {
    for (const auto* w : {&l_piece(), &window_piece()}) {
        const auto r = round_trip(*w, RuleSet{});
        EXPECT_EQ(r.estimate.velocity.cls, C::none);
        EXPECT_EQ(r.estimate.orientation.cls, C::none);
        EXPECT_NEAR(r.estimate.velocity.straight.mean, 1.0, 0.05);
        EXPECT_NEAR(r.estimate.orientation.straight.mean, 0.0, 0.02);
        EXPECT_NEAR(r.estimate.orientation.corner.mean, 0.0, 0.02);
    }
}

TEST(EstimateRules, RigidMotionOfWorkpieceDoesNotChangeEstimate) {
    const RuleSet rules{{Rule{RuleKind::velocity_scale, C::corner, 0.6}}};
    const auto a = round_trip(make_l_workpiece(1.0, 1.0, 0.2), rules);
    const auto b = round_trip(make_l_workpiece(1.0, 1.0, 0.2, RigidTransform{-2.0, {0.2, 0.1, 0.0}}), rules);
    EXPECT_EQ(a.estimate.velocity.cls, b.estimate.velocity.cls);
    EXPECT_NEAR(a.estimate.velocity.param, b.estimate.velocity.param, 1e-6);
}

TEST(EstimateRules, InsufficientSamples) {
    const auto path = make_reference_path(l_piece());
    const auto seg = segment_path(path);
    const auto nominal = nominal_profile(path, seg);
    const auto traj = simulate(nominal);
    EstimationParams p;
    p.min_samples = 100000;
    EXPECT_THROW(estimate_rules(traj, nominal, {}, p), InsufficientSamples);
}

TEST(AlignToPath, ResidualBelowLookaheadAndMonotone) {
    const auto r = round_trip(window_piece(), RuleSet{});
    const auto a = align_to_path(r.traj, r.nominal);
    ASSERT_EQ(a.size(), r.traj.size());
    double sum = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        sum += norm(r.traj.samples[j].p - r.nominal.points[a[j].index].position);
        if (j > 0) { EXPECT_GE(a[j].index, a[j - 1].index); }
        EXPECT_EQ(a[j].cls, r.nominal.points[a[j].index].cls);
    }
    EXPECT_LT(sum / static_cast<double>(a.size()), 0.05);
    // every part is visited
    EXPECT_EQ(r.nominal.points[a.back().index].part_id, r.nominal.points.back().part_id);
}

TEST(AlignToPath, SingleSampleOnWaypoint) {
    const auto path = make_reference_path(l_piece());
    const auto nominal = nominal_profile(path, segment_path(path));
    Trajectory t;
    TrajectorySample s;
    s.p = nominal.points[0].position;
    t.samples.push_back(s);
    const auto a = align_to_path(t, nominal);
    ASSERT_EQ(a.size(), 1u);
    EXPECT_EQ(a[0].index, 0u);
    EXPECT_TRUE(a[0].excluded);
    EXPECT_THROW(align_to_path(Trajectory{}, nominal), InvalidArgument);
}

TEST(AlignToPath, ExclusionZones) {
    const auto path = make_reference_path(l_piece());
    const auto seg = segment_path(path);
    const auto nominal = nominal_profile(path, seg);
    Trajectory t;
    for (const auto& p : nominal.points) {
        TrajectorySample s;
        s.p = p.position;
        t.samples.push_back(s);
    }
    AlignmentParams ap;
    const auto a = align_to_path(t, nominal, ap);
    const std::size_t n = nominal.size();
    for (std::size_t i = 0; i < n; ++i) {
        EXPECT_EQ(a[i].index, i);
        bool near_boundary = false;
        for (std::size_t b = 1; b < n; ++b)
            if (seg.labels[b] != seg.labels[b - 1] && i + ap.blend_len >= b && i < b + ap.blend_len)
                near_boundary = true;
        const bool near_end = i < 10 || i + 10 >= n;
        EXPECT_EQ(a[i].excluded, near_boundary || near_end) << i;
    }
}

TEST(F1, ThreeSampleExample) {
    const std::vector<C> truth{C::straight, C::straight, C::corner};
    const std::vector<C> pred{C::straight, C::corner, C::corner};
    const auto r = f1_multiclass(pred, truth);
    EXPECT_DOUBLE_EQ(r.of(C::straight).f1, 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(r.of(C::corner).f1, 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(r.macro, 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(r.micro, 2.0 / 3.0);
}

TEST(F1, AllNoneTruthCornerPred) {
    const std::vector<C> truth(5, C::none);
    const std::vector<C> pred(5, C::corner);
    const auto r = f1_multiclass(pred, truth);
    EXPECT_EQ(r.macro, 0.0);
    EXPECT_EQ(r.micro, 0.0);
}

TEST(F1, PerfectAndErrors) {
    const std::vector<C> v{C::none, C::corner, C::straight, C::straight};
    EXPECT_DOUBLE_EQ(f1_multiclass(v, v).macro, 1.0);
    EXPECT_THROW(f1_multiclass(std::vector<C>{C::none}, std::vector<C>{}), InvalidArgument);
    EXPECT_THROW(f1_multiclass(std::vector<C>{}, std::vector<C>{}), InvalidArgument);
}

TEST(F1, PermutationInvariant) {
    std::mt19937_64 gen(11);
    std::uniform_int_distribution<int> d(0, 2);
    std::vector<C> truth(200), pred(200);
    for (std::size_t i = 0; i < truth.size(); ++i) {
        truth[i] = static_cast<C>(d(gen));
        pred[i] = static_cast<C>(d(gen));
    }
    const auto base = f1_multiclass(pred, truth);
    std::vector<std::size_t> perm(truth.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    for (int trial = 0; trial < 5; ++trial) {
        std::shuffle(perm.begin(), perm.end(), gen);
        std::vector<C> t2, p2;
        for (auto i : perm) {
            t2.push_back(truth[i]);
            p2.push_back(pred[i]);
        }
        const auto r = f1_multiclass(p2, t2);
        EXPECT_DOUBLE_EQ(r.macro, base.macro);
        EXPECT_DOUBLE_EQ(r.micro, base.micro);
    }
}

TEST(Mae, Examples) {
    const std::vector<double> pred{1.0, 2.0}, truth{1.1, 1.8};
    EXPECT_NEAR(mae(pred, truth, {true, true}), 0.15, 1e-15);
    EXPECT_NEAR(mae(pred, truth, {false, true}), 0.2, 1e-15);
    EXPECT_THROW(mae(pred, truth, {false, false}), InvalidArgument);
    EXPECT_THROW(mae(pred, truth, {true}), InvalidArgument);
}
