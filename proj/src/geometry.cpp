#include "phast/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace phast {

double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }

bool is_finite(const Vec3& v) {
    return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z);
}

double component(const Vec3& v, Axis axis) {
    switch (axis) {
        case Axis::X:
            return v.x;
        case Axis::Y:
            return v.y;
        case Axis::Z:
            return v.z;
    }
    return 0.0;
}

double Quaternion::norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }

Quaternion Quaternion::normalized() const {
    const double n = norm();
    if (!(n > 0.0) || !std::isfinite(n)) {
        throw GeometryError(GeometryError::Kind::NonFinite, "cannot normalize quaternion");
    }
    return {w / n, x / n, y / n, z / n};
}

Vec3 Quaternion::rotate(const Vec3& v) const {
    // v' = v + 2w (q x v) + 2 q x (q x v), q the vector part
    const Vec3 q{x, y, z};
    const Vec3 t = 2.0 * cross(q, v);
    return v + w * t + cross(q, t);
}

Quaternion operator*(const Quaternion& a, const Quaternion& b) {
    return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

bool is_finite(const Quaternion& q) {
    return std::isfinite(q.w) && std::isfinite(q.x) && std::isfinite(q.y) && std::isfinite(q.z);
}

bool is_finite(const Pose& p) { return is_finite(p.position) && is_finite(p.orientation); }

Pose compose(const Pose& parent, const Pose& child) {
    return {parent.position + parent.orientation.rotate(child.position),
            parent.orientation * child.orientation};
}

Pose inverse(const Pose& p) {
    const Quaternion inv = p.orientation.conjugate();
    return {-inv.rotate(p.position), inv};
}

HomogeneousTransform::HomogeneousTransform() : m_{} {
    for (std::size_t i = 0; i < 4; ++i) {
        m_[i * 4 + i] = 1.0;
    }
}

HomogeneousTransform HomogeneousTransform::translation(const Vec3& t) {
    HomogeneousTransform out;
    out(0, 3) = t.x;
    out(1, 3) = t.y;
    out(2, 3) = t.z;
    return out;
}

Vec3 HomogeneousTransform::apply_point(const Vec3& p) const {
    const auto& m = m_;
    return {m[0] * p.x + m[1] * p.y + m[2] * p.z + m[3],
            m[4] * p.x + m[5] * p.y + m[6] * p.z + m[7],
            m[8] * p.x + m[9] * p.y + m[10] * p.z + m[11]};
}

Vec3 HomogeneousTransform::apply_vector(const Vec3& v) const {
    const auto& m = m_;
    return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
            m[4] * v.x + m[5] * v.y + m[6] * v.z,
            m[8] * v.x + m[9] * v.y + m[10] * v.z};
}

HomogeneousTransform operator*(const HomogeneousTransform& a, const HomogeneousTransform& b) {
    HomogeneousTransform out;
    for (std::size_t r = 0; r < 4; ++r) {
        for (std::size_t c = 0; c < 4; ++c) {
            double sum = 0.0;
            for (std::size_t k = 0; k < 4; ++k) {
                sum += a(r, k) * b(k, c);
            }
            out(r, c) = sum;
        }
    }
    return out;
}

Vec3 commanded_point(const Vec3& l_b, const UserInput& u, double gain_trans, double dt) {
    if (!is_finite(l_b) || !is_finite(u) || !std::isfinite(gain_trans) || !std::isfinite(dt)) {
        throw GeometryError(GeometryError::Kind::NonFinite, "commanded_point: non-finite input");
    }
    if (!(dt > 0.0) || !(gain_trans > 0.0)) {
        throw GeometryError(GeometryError::Kind::InvalidArgument,
                            "commanded_point: gain and dt must be positive");
    }
    return l_b + (gain_trans * dt) * u;
}

Vec3 project_to(const Vec3& l_b, const Vec3& l_c, const Vec3& l_u) {
    const Vec3 line = l_c - l_b;
    const double length = norm(line);
    if (!(length > kLengthEpsilon)) {
        throw GeometryError(GeometryError::Kind::DegenerateLine,
                            "project_to: line endpoints coincide");
    }
    const Vec3 direction = (1.0 / length) * line;
    return l_b + dot(l_u - l_b, direction) * direction;
}

Vec3 rotation_axis(const Vec3& l_c, const Vec3& l_b, const Vec3& p_c) {
    const Vec3 r = cross(l_c - p_c, l_b - p_c);
    const double length = norm(r);
    if (!(length > kLengthEpsilon)) {
        throw GeometryError(GeometryError::Kind::DegenerateAxis,
                            "rotation_axis: points are collinear");
    }
    return (1.0 / length) * r;
}

HomogeneousTransform rotation_matrix(const Vec3& axis, double theta) {
    if (!is_finite(axis) || !std::isfinite(theta)) {
        throw GeometryError(GeometryError::Kind::NonFinite, "rotation_matrix: non-finite input");
    }
    if (std::abs(norm(axis) - 1.0) > kUnitTolerance) {
        throw GeometryError(GeometryError::Kind::NonUnitAxis, "rotation_matrix: axis is not unit");
    }
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    const double t = 1.0 - c;
    const auto [x, y, z] = axis;

    HomogeneousTransform r;
    r(0, 0) = c + x * x * t;
    r(0, 1) = x * y * t - z * s;
    r(0, 2) = x * z * t + y * s;
    r(1, 0) = x * y * t + z * s;
    r(1, 1) = c + y * y * t;
    r(1, 2) = y * z * t - x * s;
    r(2, 0) = x * z * t - y * s;
    r(2, 1) = y * z * t + x * s;
    r(2, 2) = c + z * z * t;
    return r;
}

Pose rotate_about_pivot(const Pose& pose, const Vec3& pivot, const Vec3& axis, double theta) {
    const HomogeneousTransform r = rotation_matrix(axis, theta);
    if (theta == 0.0) {
        return pose;
    }
    const HomogeneousTransform m =
        HomogeneousTransform::translation(pivot) * r * HomogeneousTransform::translation(-pivot);
    return {m.apply_point(pose.position),
            (quaternion_from_matrix(r) * pose.orientation).normalized()};
}

double input_to_angle(const UserInput& u, Axis axis, double gain_rot, double dt) {
    return gain_rot * component(u, axis) * dt;
}

double distance(const Vec3& a, const Vec3& b) { return norm(a - b); }

double tilt_degrees(const Quaternion& orientation, const Vec3& body_axis) {
    const Vec3 a = orientation.rotate(body_axis);
    const double radians = std::atan2(std::abs(a.z), std::hypot(a.x, a.y));
    return radians * (180.0 / std::numbers::pi);
}

Quaternion quaternion_from_matrix(const HomogeneousTransform& m) {
    // Shepperd: pivot on the largest of trace and diagonal entries.
    const double trace = m(0, 0) + m(1, 1) + m(2, 2);
    Quaternion q;
    if (trace >= m(0, 0) && trace >= m(1, 1) && trace >= m(2, 2)) {
        const double s = 2.0 * std::sqrt(1.0 + trace);
        q = {0.25 * s, (m(2, 1) - m(1, 2)) / s, (m(0, 2) - m(2, 0)) / s, (m(1, 0) - m(0, 1)) / s};
    } else if (m(0, 0) >= m(1, 1) && m(0, 0) >= m(2, 2)) {
        const double s = 2.0 * std::sqrt(1.0 + m(0, 0) - m(1, 1) - m(2, 2));
        q = {(m(2, 1) - m(1, 2)) / s, 0.25 * s, (m(0, 1) + m(1, 0)) / s, (m(0, 2) + m(2, 0)) / s};
    } else if (m(1, 1) >= m(2, 2)) {
        const double s = 2.0 * std::sqrt(1.0 + m(1, 1) - m(0, 0) - m(2, 2));
        q = {(m(0, 2) - m(2, 0)) / s, (m(0, 1) + m(1, 0)) / s, 0.25 * s, (m(1, 2) + m(2, 1)) / s};
    } else {
        const double s = 2.0 * std::sqrt(1.0 + m(2, 2) - m(0, 0) - m(1, 1));
        q = {(m(1, 0) - m(0, 1)) / s, (m(0, 2) + m(2, 0)) / s, (m(1, 2) + m(2, 1)) / s, 0.25 * s};
    }
    if (q.w < 0.0) {
        q = {-q.w, -q.x, -q.y, -q.z};
    }
    return q.normalized();
}

}  // namespace phast
