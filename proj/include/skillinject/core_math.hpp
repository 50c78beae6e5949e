// Small fixed-size math for the skill-injection toolkit: 3-vectors,
// scalar-first quaternions, the continuous 6D rotation encoding and a
// principal-axis line fit over point windows.
//
// Everything here is a pure function over value types.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <span>

#include "skillinject/error.hpp"

namespace skillinject {

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    constexpr Vec3& operator+=(const Vec3& o) {
        x += o.x;
        y += o.y;
        z += o.z;
        return *this;
    }
    constexpr Vec3& operator-=(const Vec3& o) {
        x -= o.x;
        y -= o.y;
        z -= o.z;
        return *this;
    }
    constexpr Vec3& operator*=(double s) {
        x *= s;
        y *= s;
        z *= s;
        return *this;
    }
    friend constexpr bool operator==(const Vec3&, const Vec3&) = default;
};

constexpr Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
constexpr Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
constexpr Vec3 operator-(const Vec3& a) { return {-a.x, -a.y, -a.z}; }
constexpr Vec3 operator*(Vec3 a, double s) { return a *= s; }
constexpr Vec3 operator*(double s, Vec3 a) { return a *= s; }
constexpr Vec3 operator/(const Vec3& a, double s) { return {a.x / s, a.y / s, a.z / s}; }

constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline bool is_finite(const Vec3& a) {
    return std::isfinite(a.x) && std::isfinite(a.y) && std::isfinite(a.z);
}

/// Unit vector along `a`; throws on a (near) zero vector.
inline Vec3 normalized(const Vec3& a) {
    const double n = norm(a);
    if (!(n > 1e-15)) throw InvalidArgument("cannot normalize a zero-length vector");
    return a / n;
}

/// Row-major 3x3 matrix.
struct Mat3 {
    std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

    constexpr double& operator()(int r, int c) { return m[static_cast<std::size_t>(3 * r + c)]; }
    constexpr double operator()(int r, int c) const { return m[static_cast<std::size_t>(3 * r + c)]; }

    static constexpr Mat3 from_columns(const Vec3& c0, const Vec3& c1, const Vec3& c2) {
        Mat3 out;
        out.m = {c0.x, c1.x, c2.x, c0.y, c1.y, c2.y, c0.z, c1.z, c2.z};
        return out;
    }
    [[nodiscard]] constexpr Vec3 column(int c) const { return {(*this)(0, c), (*this)(1, c), (*this)(2, c)}; }
    [[nodiscard]] constexpr Mat3 transposed() const {
        Mat3 t;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) t(r, c) = (*this)(c, r);
        return t;
    }
};

constexpr Vec3 operator*(const Mat3& a, const Vec3& v) {
    return {a(0, 0) * v.x + a(0, 1) * v.y + a(0, 2) * v.z,
            a(1, 0) * v.x + a(1, 1) * v.y + a(1, 2) * v.z,
            a(2, 0) * v.x + a(2, 1) * v.y + a(2, 2) * v.z};
}

constexpr Mat3 operator*(const Mat3& a, const Mat3& b) {
    Mat3 out;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) {
            double s = 0.0;
            for (int k = 0; k < 3; ++k) s += a(r, k) * b(k, c);
            out(r, c) = s;
        }
    return out;
}

// ---------------------------------------------------------------------------
// Quaternions, scalar first (w, x, y, z). Rotations act as q v q*.
// ---------------------------------------------------------------------------

struct Quat {
    double w = 1.0;
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    [[nodiscard]] constexpr Vec3 vec() const { return {x, y, z}; }
    friend constexpr bool operator==(const Quat&, const Quat&) = default;
};

constexpr Quat operator*(const Quat& a, const Quat& b) {
    return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

constexpr Quat conjugate(const Quat& q) { return {q.w, -q.x, -q.y, -q.z}; }
constexpr double quat_dot(const Quat& a, const Quat& b) { return a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z; }
inline double quat_norm(const Quat& q) { return std::sqrt(quat_dot(q, q)); }
constexpr Quat negated(const Quat& q) { return {-q.w, -q.x, -q.y, -q.z}; }

/// Flip sign so that w >= 0.
constexpr Quat canonical(const Quat& q) { return q.w < 0.0 ? negated(q) : q; }

inline Quat quat_normalize(const Quat& q) {
    const double n = quat_norm(q);
    if (!(n > 1e-12) || !std::isfinite(n)) throw DegenerateRotation("quaternion norm too small to normalize");
    return {q.w / n, q.x / n, q.y / n, q.z / n};
}

inline Quat quat_from_axis_angle(const Vec3& axis, double angle) {
    const Vec3 u = normalized(axis);
    const double s = std::sin(0.5 * angle);
    return {std::cos(0.5 * angle), u.x * s, u.y * s, u.z * s};
}

/// Quaternion of the rotation vector `r` (axis * angle).
inline Quat quat_exp(const Vec3& r) {
    const double angle = norm(r);
    if (angle < 1e-12) {
        // second-order series keeps exp/log consistent for tiny rotations
        const Quat q{1.0 - angle * angle / 8.0, 0.5 * r.x, 0.5 * r.y, 0.5 * r.z};
        return quat_normalize(q);
    }
    const double s = std::sin(0.5 * angle) / angle;
    return {std::cos(0.5 * angle), r.x * s, r.y * s, r.z * s};
}

/// Rotation vector of `q` on the shortest arc, |r| <= pi.
inline Vec3 quat_log(const Quat& q_in) {
    const Quat q = canonical(q_in);
    const double vn = norm(q.vec());
    if (vn < 1e-15) return {2.0 * q.x, 2.0 * q.y, 2.0 * q.z};
    const double angle = 2.0 * std::atan2(vn, q.w);
    return q.vec() * (angle / vn);
}

inline Vec3 rotate(const Quat& q, const Vec3& v) {
    // v' = v + 2 u x (u x v + w v)
    const Vec3 u = q.vec();
    const Vec3 t = 2.0 * cross(u, v);
    return v + q.w * t + cross(u, t);
}

inline Mat3 quat_to_matrix(const Quat& q) {
    const double w = q.w, x = q.x, y = q.y, z = q.z;
    Mat3 r;
    r.m = {1 - 2 * (y * y + z * z), 2 * (x * y - w * z),     2 * (x * z + w * y),
           2 * (x * y + w * z),     1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
           2 * (x * z - w * y),     2 * (y * z + w * x),     1 - 2 * (x * x + y * y)};
    return r;
}

/// Rotation matrix to unit quaternion (Shepperd's method), w >= 0.
inline Quat matrix_to_quat(const Mat3& r) {
    const double tr = r(0, 0) + r(1, 1) + r(2, 2);
    Quat q;
    if (tr > 0.0) {
        const double s = 2.0 * std::sqrt(1.0 + tr);
        q = {0.25 * s, (r(2, 1) - r(1, 2)) / s, (r(0, 2) - r(2, 0)) / s, (r(1, 0) - r(0, 1)) / s};
    } else if (r(0, 0) > r(1, 1) && r(0, 0) > r(2, 2)) {
        const double s = 2.0 * std::sqrt(1.0 + r(0, 0) - r(1, 1) - r(2, 2));
        q = {(r(2, 1) - r(1, 2)) / s, 0.25 * s, (r(0, 1) + r(1, 0)) / s, (r(0, 2) + r(2, 0)) / s};
    } else if (r(1, 1) > r(2, 2)) {
        const double s = 2.0 * std::sqrt(1.0 + r(1, 1) - r(0, 0) - r(2, 2));
        q = {(r(0, 2) - r(2, 0)) / s, (r(0, 1) + r(1, 0)) / s, 0.25 * s, (r(1, 2) + r(2, 1)) / s};
    } else {
        const double s = 2.0 * std::sqrt(1.0 + r(2, 2) - r(0, 0) - r(1, 1));
        q = {(r(1, 0) - r(0, 1)) / s, (r(0, 2) + r(2, 0)) / s, (r(1, 2) + r(2, 1)) / s, 0.25 * s};
    }
    return canonical(quat_normalize(q));
}

/// Intrinsic Z-Y-X composition: R = Rz(yaw) * Ry(pitch) * Rx(roll).
inline Quat quat_from_euler(double roll, double pitch, double yaw) {
    const double cr = std::cos(0.5 * roll), sr = std::sin(0.5 * roll);
    const double cp = std::cos(0.5 * pitch), sp = std::sin(0.5 * pitch);
    const double cy = std::cos(0.5 * yaw), sy = std::sin(0.5 * yaw);
    return {cy * cp * cr + sy * sp * sr,
            cy * cp * sr - sy * sp * cr,
            cy * sp * cr + sy * cp * sr,
            sy * cp * cr - cy * sp * sr};
}

struct Euler {
    double roll = 0.0;
    double pitch = 0.0;
    double yaw = 0.0;
};

/// Inverse of quat_from_euler; pitch is clamped into [-pi/2, pi/2].
inline Euler quat_to_euler(const Quat& q) {
    const Mat3 r = quat_to_matrix(q);
    const double sp = std::clamp(-r(2, 0), -1.0, 1.0);
    Euler e;
    e.pitch = std::asin(sp);
    if (std::abs(sp) < 1.0 - 1e-12) {
        e.roll = std::atan2(r(2, 1), r(2, 2));
        e.yaw = std::atan2(r(1, 0), r(0, 0));
    } else {
        // gimbal lock: fold everything into yaw
        e.roll = 0.0;
        e.yaw = std::atan2(-r(0, 1), r(1, 1));
    }
    return e;
}

/// Angle of the rotation carrying a onto b, in [0, pi]; sign-agnostic.
inline double geodesic_distance(const Quat& a, const Quat& b_in) {
    // 4*atan2(|a - b|, |a + b|) on the sign-aligned pair; well conditioned near 0.
    const Quat b = quat_dot(a, b_in) < 0.0 ? negated(b_in) : b_in;
    const Quat diff{a.w - b.w, a.x - b.x, a.y - b.y, a.z - b.z};
    const Quat sum{a.w + b.w, a.x + b.x, a.y + b.y, a.z + b.z};
    return 4.0 * std::atan2(quat_norm(diff), quat_norm(sum));
}

/// Spherical interpolation on the shortest arc.
inline Quat slerp(const Quat& a, const Quat& b_in, double t) {
    Quat b = b_in;
    double d = quat_dot(a, b);
    if (d < 0.0) {
        b = negated(b);
        d = -d;
    }
    if (d > 1.0 - 1e-12) {
        const Quat lin{a.w + t * (b.w - a.w), a.x + t * (b.x - a.x), a.y + t * (b.y - a.y), a.z + t * (b.z - a.z)};
        return quat_normalize(lin);
    }
    const double theta = std::acos(d);
    const double s = std::sin(theta);
    const double wa = std::sin((1.0 - t) * theta) / s;
    const double wb = std::sin(t * theta) / s;
    return quat_normalize({wa * a.w + wb * b.w, wa * a.x + wb * b.x, wa * a.y + wb * b.y, wa * a.z + wb * b.z});
}

/// Rotation vector r with exp(r) * current == target, shortest path (|r| <= pi).
inline Vec3 quat_error_rotvec(const Quat& target, const Quat& current) {
    if (target == current || target == negated(current)) return {};
    return quat_log(canonical(target * conjugate(current)));
}

// ---------------------------------------------------------------------------
// Continuous 6D rotation encoding: first two columns of the rotation matrix.
// ---------------------------------------------------------------------------

struct Rot6D {
    std::array<double, 6> v{1, 0, 0, 0, 1, 0};
};

inline Rot6D quat_to_6d(const Quat& q) {
    const Mat3 r = quat_to_matrix(q);
    return {{r(0, 0), r(1, 0), r(2, 0), r(0, 1), r(1, 1), r(2, 1)}};
}

/// Gram-Schmidt on the two stored columns, third column by cross product.
inline Mat3 sixd_to_matrix(const Rot6D& r) {
    const Vec3 a1{r.v[0], r.v[1], r.v[2]};
    const Vec3 a2{r.v[3], r.v[4], r.v[5]};
    const double n1 = norm(a1);
    const double n2 = norm(a2);
    if (!(n1 > 1e-12) || !(n2 > 1e-12)) throw DegenerateRotation("6D rotation has a near-zero column");
    const Vec3 b1 = a1 / n1;
    const Vec3 ortho = a2 - dot(b1, a2) * b1;
    const double no = norm(ortho);
    if (!(no > 1e-9 * n2)) throw DegenerateRotation("6D rotation columns are parallel");
    const Vec3 b2 = ortho / no;
    return Mat3::from_columns(b1, b2, cross(b1, b2));
}

inline Quat sixd_to_quat(const Rot6D& r) { return matrix_to_quat(sixd_to_matrix(r)); }

// ---------------------------------------------------------------------------
// Principal-axis line fit.
// ---------------------------------------------------------------------------

struct SymEigen3 {
    std::array<double, 3> values{};  // descending
    std::array<Vec3, 3> vectors{};   // unit, matching values
};

/// Cyclic Jacobi eigen-solve of a symmetric 3x3 matrix.
inline SymEigen3 symmetric_eigen3(const Mat3& a_in, double tol = 1e-12, int max_sweeps = 100) {
    Mat3 a = a_in;
    Mat3 v;  // identity
    const double scale = std::max({std::abs(a(0, 0)), std::abs(a(1, 1)), std::abs(a(2, 2)),
                                   std::abs(a(0, 1)), std::abs(a(0, 2)), std::abs(a(1, 2))});
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        const double off = std::abs(a(0, 1)) + std::abs(a(0, 2)) + std::abs(a(1, 2));
        if (off <= tol * scale || off == 0.0) break;
        for (int p = 0; p < 2; ++p) {
            for (int q = p + 1; q < 3; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < 3; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < 3; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (int k = 0; k < 3; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    std::array<int, 3> order{0, 1, 2};
    std::sort(order.begin(), order.end(), [&](int i, int j) { return a(i, i) > a(j, j); });
    SymEigen3 out;
    for (std::size_t i = 0; i < 3; ++i) {
        out.values[i] = a(order[i], order[i]);
        out.vectors[i] = v.column(order[i]);
    }
    return out;
}

struct PrincipalAxis {
    Vec3 axis;            // unit, largest-magnitude component positive
    double residual_rms;  // RMS perpendicular distance to the fitted line, meters
    Vec3 centroid;
};

/// Sign convention: the component with the largest magnitude is made positive.
inline Vec3 canonical_axis_sign(const Vec3& a) {
    const double ax = std::abs(a.x), ay = std::abs(a.y), az = std::abs(a.z);
    const double big = ax >= ay && ax >= az ? a.x : (ay >= az ? a.y : a.z);
    return big < 0.0 ? -a : a;
}

/// Dominant direction of a point set and the RMS distance of the points to
/// the line through their centroid along that direction.
inline PrincipalAxis principal_axis(std::span<const Vec3> points) {
    if (points.size() < 2) throw InvalidArgument("principal_axis needs at least 2 points");
    Vec3 c{};
    for (const auto& p : points) c += p;
    c = c / static_cast<double>(points.size());

    Mat3 cov;
    cov.m.fill(0.0);
    double spread = 0.0;
    for (const auto& p : points) {
        const Vec3 d = p - c;
        spread = std::max(spread, norm(d));
        cov(0, 0) += d.x * d.x;
        cov(0, 1) += d.x * d.y;
        cov(0, 2) += d.x * d.z;
        cov(1, 1) += d.y * d.y;
        cov(1, 2) += d.y * d.z;
        cov(2, 2) += d.z * d.z;
    }
    if (!(spread > 1e-12)) throw ZeroSpread("principal_axis: all points coincide");
    cov(1, 0) = cov(0, 1);
    cov(2, 0) = cov(0, 2);
    cov(2, 1) = cov(1, 2);

    const SymEigen3 eig = symmetric_eigen3(cov);
    const Vec3 axis = canonical_axis_sign(normalized(eig.vectors[0]));

    double sum_sq = 0.0;
    for (const auto& p : points) {
        const Vec3 d = p - c;
        const Vec3 perp = d - dot(d, axis) * axis;
        sum_sq += dot(perp, perp);
    }
    return {axis, std::sqrt(sum_sq / static_cast<double>(points.size())), c};
}

}  // namespace skillinject
