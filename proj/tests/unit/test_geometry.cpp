#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "skillinject/geometry.hpp"

using namespace skillinject;

namespace {

double overlap(double a0, double a1, double b0, double b1) { return std::max(0.0, std::min(a1, b1) - std::max(a0, b0)); }

}  // namespace

TEST(LWorkpiece, BoundingBoxAndArea) {
    const auto w = make_l_workpiece(1.0, 1.0, 0.2);
    const Rect bb = w.bounding_box();
    EXPECT_DOUBLE_EQ(bb.x1 - bb.x0, 1.2);
    EXPECT_DOUBLE_EQ(bb.y1 - bb.y0, 1.2);

    const auto a = make_l_workpiece(0.5, 1.5, 0.1);
    EXPECT_NEAR(a.area(), (0.5 + 1.5 + 0.1) * 0.1, 1e-15);
}

TEST(LWorkpiece, RejectsNonPositiveDimensions) {
    EXPECT_THROW(make_l_workpiece(1.0, 0.0, 0.2), InvalidArgument);
    EXPECT_THROW(make_l_workpiece(-1.0, 1.0, 0.2), InvalidArgument);
    EXPECT_THROW(make_l_workpiece(1.0, 1.0, 0.0), InvalidArgument);
}

TEST(WindowWorkpiece, MembersAndValidation) {
    EXPECT_EQ(make_window_workpiece(1.0, 1.5, 0.1, 0).regions().size(), 4u);
    EXPECT_EQ(make_window_workpiece(1.0, 1.5, 0.1, 1).regions().size(), 5u);
    EXPECT_THROW(make_window_workpiece(0.15, 1.0, 0.1, 0), InvalidArgument);
    EXPECT_THROW(make_window_workpiece(1.0, 0.2, 0.1, 0), InvalidArgument);
    EXPECT_THROW(make_window_workpiece(1.0, 1.5, 0.1, -1), InvalidArgument);
    // frame area: outer minus opening, plus the mullion
    const auto w = make_window_workpiece(1.0, 1.5, 0.1, 1);
    EXPECT_NEAR(w.area(), 1.0 * 1.5 - 0.8 * 1.3 + 0.1 * 1.3, 1e-12);
}

TEST(ReferencePath, LShapeWaypointCountFromArcLength) {
    const auto w = make_l_workpiece(1.0, 1.0, 0.2);
    PathOptions opt;
    const auto path = make_reference_path(w, opt);
    // centerline: two 1.1 m legs meeting at a right angle, corner replaced by a fillet
    const double r = opt.corner_radius;
    const double length = 2.0 * (1.1 - r) + 0.5 * std::numbers::pi * r;
    EXPECT_EQ(path.part_count(), 1);
    EXPECT_EQ(path.size(), static_cast<std::size_t>(std::ceil(length / opt.spacing)) + 1);
    EXPECT_NEAR(path_length(path), length, 2 * opt.spacing);
    for (const auto& wp : path.waypoints) EXPECT_EQ(wp.part_id, 0);
}

TEST(ReferencePath, SpacingBound) {
    const auto path = make_reference_path(make_window_workpiece(1.1, 1.4, 0.1, 2));
    for (std::size_t i = 1; i < path.size(); ++i)
        if (path.waypoints[i].part_id == path.waypoints[i - 1].part_id) {
            EXPECT_LE(norm(path.waypoints[i].position - path.waypoints[i - 1].position), 0.01 + 1e-12);
        }
}

TEST(ReferencePath, StraightMemberSampling) {
    const Stroke s = rounded_polyline({{0, 0, 0}, {1, 0, 0}}, 0.05);
    const auto samples = sample_stroke(s, 0.5);
    ASSERT_EQ(samples.size(), 3u);
    EXPECT_NEAR(samples[0].position.x, 0.0, 1e-15);
    EXPECT_NEAR(samples[1].position.x, 0.5, 1e-15);
    EXPECT_NEAR(samples[2].position.x, 1.0, 1e-15);
}

TEST(ReferencePath, WindowStrokeDecomposition) {
    const auto one = make_reference_path(make_window_workpiece(1.0, 1.5, 0.1, 1));
    EXPECT_GE(one.part_count(), 2);
    const auto two = make_reference_path(make_window_workpiece(1.2, 1.5, 0.1, 2));
    EXPECT_EQ(two.part_count(), 3);
    // part ids are contiguous and non-decreasing
    for (std::size_t i = 1; i < two.size(); ++i) {
        const int d = two.waypoints[i].part_id - two.waypoints[i - 1].part_id;
        EXPECT_TRUE(d == 0 || d == 1);
    }
}

TEST(ReferencePath, WindowLengthMatchesAnalytic) {
    const double W = 1.0, H = 1.5, t = 0.1;
    PathOptions opt;
    const double r = opt.corner_radius;
    const auto path = make_reference_path(make_window_workpiece(W, H, t, 1), opt);
    const double loop = 2 * (W - t) + 2 * (H - t) - 8 * r + 2 * std::numbers::pi * r;
    const double mullion = H - t;
    EXPECT_NEAR(path_length(path), loop + mullion, 2 * opt.spacing * 2);
}

TEST(ReferencePath, RejectsSpacingLongerThanMember) {
    PathOptions opt;
    opt.spacing = 2.0;
    EXPECT_THROW(make_reference_path(make_l_workpiece(1.0, 1.0, 0.2), opt), InvalidArgument);
    opt.spacing = 0.0;
    EXPECT_THROW(make_reference_path(make_l_workpiece(1.0, 1.0, 0.2), opt), InvalidArgument);
}

TEST(ReferencePath, ToolAxesFollowSurfaceAndTangent) {
    Workpiece w = make_window_workpiece(1.0, 1.4, 0.1, 1, RigidTransform{0.7, {0.1, -0.2, 0.05}});
    const auto path = make_reference_path(w);
    const Vec3 n = w.surface_normal();
    for (std::size_t i = 0; i < path.size(); ++i) {
        const auto& wp = path.waypoints[i];
        const Quat q = quat_from_euler(wp.euler.roll, wp.euler.pitch, wp.euler.yaw);
        const Vec3 tool_z = rotate(q, {0, 0, 1});
        if (path.construction_labels[i] == SegmentClass::straight) { EXPECT_LT(dot(tool_z, n), -0.99); }
        EXPECT_LT(dot(tool_z, n), 0.0);
        // standoff above the surface
        EXPECT_NEAR(dot(wp.position - w.pose.translation, n), 0.1, 1e-12);
        // tool x along the direction of travel
        const bool has_next = i + 1 < path.size() && path.waypoints[i + 1].part_id == wp.part_id;
        if (has_next) {
            const Vec3 d = normalized(path.waypoints[i + 1].position - wp.position);
            EXPECT_GT(dot(rotate(q, {1, 0, 0}), d), 0.99);
        }
    }
}

TEST(ReferencePath, ConstructionLabelsMarkArcs) {
    const auto path = make_reference_path(make_l_workpiece(1.0, 1.0, 0.2));
    const auto corners = std::count(path.construction_labels.begin(), path.construction_labels.end(),
                                    SegmentClass::corner);
    // quarter arc of radius 0.25 at 1 cm spacing
    EXPECT_NEAR(static_cast<double>(corners), 0.5 * std::numbers::pi * 0.25 / 0.01, 2.0);
}

TEST(PointCloud, DeterministicAndOnSurface) {
    const Workpiece w = make_l_workpiece(1.0, 1.2, 0.2, RigidTransform{-1.3, {0.2, 0.1, -0.1}});
    const auto a = sample_point_cloud(w, 1024, 77);
    const auto b = sample_point_cloud(w, 1024, 77);
    ASSERT_EQ(a.points.size(), 1024u);
    for (std::size_t i = 0; i < a.points.size(); ++i) {
        EXPECT_EQ(a.points[i].x, b.points[i].x);
        EXPECT_EQ(a.points[i].y, b.points[i].y);
        EXPECT_EQ(a.points[i].z, b.points[i].z);
        EXPECT_TRUE(w.on_surface(a.points[i], 1e-9));
    }
    EXPECT_THROW(sample_point_cloud(w, 63, 1), InvalidArgument);
}

TEST(PointCloud, LegFractionMatchesAreaRatio) {
    const Workpiece w = make_l_workpiece(1.0, 1.0, 0.2);
    const auto cloud = sample_point_cloud(w, 10000, 5);
    int on_a = 0;
    for (const auto& p : cloud.points)
        if (p.x < 1.0) ++on_a;
    EXPECT_NEAR(on_a / 10000.0, (1.0 * 0.2) / w.area(), 0.02);
}

TEST(PointCloud, ChiSquareUniformOverGrid) {
    for (const Workpiece& w : {make_l_workpiece(1.0, 1.0, 0.2), make_window_workpiece(1.0, 1.4, 0.1, 1)}) {
        const std::size_t k = 10000;
        const auto cloud = sample_point_cloud(w, k, 2024);
        const Rect bb = w.bounding_box();
        const int g = 8;
        const double cw = (bb.x1 - bb.x0) / g, ch = (bb.y1 - bb.y0) / g;
        std::vector<double> observed(g * g, 0.0), expected(g * g, 0.0);
        for (const auto& p : cloud.points) {
            const int i = std::min(g - 1, static_cast<int>((p.x - bb.x0) / cw));
            const int j = std::min(g - 1, static_cast<int>((p.y - bb.y0) / ch));
            observed[j * g + i] += 1;
        }
        for (int j = 0; j < g; ++j)
            for (int i = 0; i < g; ++i) {
                double a = 0.0;
                for (const auto& r : w.regions())
                    a += overlap(r.x0, r.x1, bb.x0 + i * cw, bb.x0 + (i + 1) * cw) *
                         overlap(r.y0, r.y1, bb.y0 + j * ch, bb.y0 + (j + 1) * ch);
                expected[j * g + i] = static_cast<double>(k) * a / w.area();
            }
        double chi2 = 0.0;
        int cells = 0;
        for (int c = 0; c < g * g; ++c) {
            if (expected[c] < 1e-9) {
                EXPECT_EQ(observed[c], 0.0);
                continue;
            }
            chi2 += (observed[c] - expected[c]) * (observed[c] - expected[c]) / expected[c];
            ++cells;
        }
        const boost::math::chi_squared dist(cells - 1);
        EXPECT_GT(1.0 - boost::math::cdf(dist, chi2), 0.01) << "chi2 " << chi2 << " over " << cells << " cells";
    }
}

TEST(RigidTransform, InverseUndoesApply) {
    const RigidTransform t{2.1, {0.3, -0.1, 0.2}};
    const Vec3 p{0.4, -0.7, 0.9};
    const Vec3 back = t.apply_inverse(t.apply(p));
    EXPECT_NEAR(back.x, p.x, 1e-15);
    EXPECT_NEAR(back.y, p.y, 1e-15);
    EXPECT_NEAR(back.z, p.z, 1e-15);
}
