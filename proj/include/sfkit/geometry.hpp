#ifndef SFKIT_GEOMETRY_HPP
#define SFKIT_GEOMETRY_HPP

#include <array>
#include <cmath>

namespace sfkit {

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm() const { return std::sqrt(dot(*this)); }
    Vec3 normalized() const {
        const double n = norm();
        return n > 0.0 ? Vec3{x / n, y / n, z / n} : Vec3{};
    }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

/// Row-major 3x3 matrix.
struct Mat3 {
    std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

    static Mat3 identity() { return Mat3{}; }

    double operator()(int r, int c) const { return m[r * 3 + c]; }
    double& operator()(int r, int c) { return m[r * 3 + c]; }

    Vec3 operator*(const Vec3& v) const {
        return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
                m[3] * v.x + m[4] * v.y + m[5] * v.z,
                m[6] * v.x + m[7] * v.y + m[8] * v.z};
    }

    Mat3 operator*(const Mat3& o) const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double s = 0.0;
                for (int k = 0; k < 3; ++k) s += (*this)(i, k) * o(k, j);
                r(i, j) = s;
            }
        return r;
    }

    Mat3 transposed() const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) r(i, j) = (*this)(j, i);
        return r;
    }

    double det() const {
        return m[0] * (m[4] * m[8] - m[5] * m[7]) -
               m[1] * (m[3] * m[8] - m[5] * m[6]) +
               m[2] * (m[3] * m[7] - m[4] * m[6]);
    }
};

/// Rotation matrix from an axis-angle vector (Rodrigues). Angle is the
/// vector norm in radians; zero vector gives identity.
inline Mat3 rotation_from_axis_angle(const Vec3& axis_angle) {
    const double theta = axis_angle.norm();
    if (theta < 1e-12) return Mat3::identity();
    const Vec3 a = axis_angle * (1.0 / theta);
    const double c = std::cos(theta), s = std::sin(theta), t = 1.0 - c;
    Mat3 r;
    r(0, 0) = c + a.x * a.x * t;
    r(0, 1) = a.x * a.y * t - a.z * s;
    r(0, 2) = a.x * a.z * t + a.y * s;
    r(1, 0) = a.y * a.x * t + a.z * s;
    r(1, 1) = c + a.y * a.y * t;
    r(1, 2) = a.y * a.z * t - a.x * s;
    r(2, 0) = a.z * a.x * t - a.y * s;
    r(2, 1) = a.z * a.y * t + a.x * s;
    r(2, 2) = c + a.z * a.z * t;
    return r;
}

} // namespace sfkit

#endif
