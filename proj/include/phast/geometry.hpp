#pragma once

// Value types and the pose arithmetic used by shared-control action nodes
// and condition nodes. Everything here is a pure function over values.

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace phast {

/// Degeneracy threshold for lengths (meters).
inline constexpr double kLengthEpsilon = 1e-9;

/// Tolerance on |axis| - 1 accepted by rotation_matrix.
inline constexpr double kUnitTolerance = 1e-9;

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    friend bool operator==(const Vec3&, const Vec3&) = default;

    Vec3& operator+=(const Vec3& o) {
        x += o.x;
        y += o.y;
        z += o.z;
        return *this;
    }
    Vec3& operator-=(const Vec3& o) {
        x -= o.x;
        y -= o.y;
        z -= o.z;
        return *this;
    }
};

inline Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
inline Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
inline Vec3 operator-(const Vec3& a) { return {-a.x, -a.y, -a.z}; }
inline Vec3 operator*(double s, const Vec3& v) { return {s * v.x, s * v.y, s * v.z}; }
inline Vec3 operator*(const Vec3& v, double s) { return s * v; }

double dot(const Vec3& a, const Vec3& b);
Vec3 cross(const Vec3& a, const Vec3& b);
double norm(const Vec3& v);
bool is_finite(const Vec3& v);

/// The operator's raw three-component command. Components are expected in
/// [-1, 1]; gains are applied by the consuming action node.
using UserInput = Vec3;

enum class Axis { X, Y, Z };

double component(const Vec3& v, Axis axis);

/// Unit quaternion, Hamilton convention, serialized as [w, x, y, z].
struct Quaternion {
    double w = 1.0;
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    friend bool operator==(const Quaternion&, const Quaternion&) = default;

    static Quaternion identity() { return {}; }
    double norm() const;
    Quaternion conjugate() const { return {w, -x, -y, -z}; }
    Quaternion normalized() const;
    Vec3 rotate(const Vec3& v) const;
};

Quaternion operator*(const Quaternion& a, const Quaternion& b);
bool is_finite(const Quaternion& q);

struct Pose {
    Vec3 position;
    Quaternion orientation;

    friend bool operator==(const Pose&, const Pose&) = default;
};

bool is_finite(const Pose& p);

/// Rigid composition: the frame `child` expressed in `parent`'s frame.
Pose compose(const Pose& parent, const Pose& child);
Pose inverse(const Pose& p);

/// Row-major 4x4 homogeneous transform.
class HomogeneousTransform {
public:
    HomogeneousTransform();  // identity

    static HomogeneousTransform translation(const Vec3& t);

    double operator()(std::size_t row, std::size_t col) const { return m_[row * 4 + col]; }
    double& operator()(std::size_t row, std::size_t col) { return m_[row * 4 + col]; }

    Vec3 apply_point(const Vec3& p) const;
    Vec3 apply_vector(const Vec3& v) const;

    friend HomogeneousTransform operator*(const HomogeneousTransform& a,
                                          const HomogeneousTransform& b);
    friend bool operator==(const HomogeneousTransform&, const HomogeneousTransform&) = default;

    const std::array<double, 16>& data() const { return m_; }

private:
    std::array<double, 16> m_;
};

class GeometryError : public std::runtime_error {
public:
    enum class Kind { DegenerateLine, DegenerateAxis, NonUnitAxis, NonFinite, InvalidArgument };

    GeometryError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

/// Where the raw input would put the point: l_b + gain * u * dt.
Vec3 commanded_point(const Vec3& l_b, const UserInput& u, double gain_trans, double dt);

/// Closest point to `l_u` on the line through `l_b` and `l_c`.
/// Throws GeometryError(DegenerateLine) when the two points coincide.
Vec3 project_to(const Vec3& l_b, const Vec3& l_c, const Vec3& l_u);

/// normalize((l_c - p_c) x (l_b - p_c)). Throws GeometryError(DegenerateAxis)
/// for collinear points.
Vec3 rotation_axis(const Vec3& l_c, const Vec3& l_b, const Vec3& p_c);

/// Axis-angle rotation (Rodrigues form). `axis` must already be unit length.
HomogeneousTransform rotation_matrix(const Vec3& axis, double theta);

/// Applies T(pivot) * R(axis, theta) * T(-pivot) to position and orientation.
Pose rotate_about_pivot(const Pose& pose, const Vec3& pivot, const Vec3& axis, double theta);

/// theta = gain_rot * u[component] * dt.
double input_to_angle(const UserInput& u, Axis component, double gain_rot, double dt);

double distance(const Vec3& a, const Vec3& b);

/// Elevation of the world image of `body_axis` above the horizontal plane,
/// in degrees within [0, 90]. World vertical is +z.
double tilt_degrees(const Quaternion& orientation, const Vec3& body_axis);

/// Rotation block of `t` as a unit quaternion with w >= 0.
Quaternion quaternion_from_matrix(const HomogeneousTransform& t);

}  // namespace phast
