#pragma once

#include <algorithm>
#include <array>
#include <cmath>

namespace qpgamma {

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    constexpr Vec3& operator+=(const Vec3& o) noexcept
    {
        x += o.x;
        y += o.y;
        z += o.z;
        return *this;
    }
    friend constexpr Vec3 operator+(Vec3 a, const Vec3& b) noexcept { return a += b; }
    friend constexpr Vec3 operator-(const Vec3& a, const Vec3& b) noexcept
    {
        return {a.x - b.x, a.y - b.y, a.z - b.z};
    }
    friend constexpr Vec3 operator*(double s, const Vec3& v) noexcept
    {
        return {s * v.x, s * v.y, s * v.z};
    }
    friend constexpr bool operator==(const Vec3&, const Vec3&) = default;
};

constexpr double dot(const Vec3& a, const Vec3& b) noexcept
{
    return a.x * b.x + a.y * b.y + a.z * b.z;
}

inline double norm(const Vec3& v) noexcept { return std::sqrt(dot(v, v)); }

inline Vec3 normalized(const Vec3& v) noexcept { return (1.0 / norm(v)) * v; }

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
    friend constexpr bool operator==(const Vec2&, const Vec2&) = default;
};

/// Axis-aligned box [lo, hi].
struct Box {
    Vec3 lo;
    Vec3 hi;

    bool contains(const Vec3& p, double tol = 0.0) const noexcept
    {
        return p.x >= lo.x - tol && p.x <= hi.x + tol && p.y >= lo.y - tol
               && p.y <= hi.y + tol && p.z >= lo.z - tol && p.z <= hi.z + tol;
    }
};

/// Ray parameter interval [enter, exit] of a ray against a box; enter > exit
/// means no intersection.
struct RayInterval {
    double enter;
    double exit;
    bool hit() const noexcept { return enter <= exit; }
};

RayInterval intersect(const Box& box, const Vec3& origin, const Vec3& dir) noexcept;

/// Finite cylinder with its axis along z.
struct ZCylinder {
    Vec3 center;
    double radius = 0.0;
    double half_length = 0.0;

    bool contains(const Vec3& p, double tol = 0.0) const noexcept
    {
        const double dx = p.x - center.x;
        const double dy = p.y - center.y;
        return std::abs(p.z - center.z) <= half_length + tol
               && dx * dx + dy * dy <= (radius + tol) * (radius + tol);
    }
};

RayInterval intersect(const ZCylinder& cyl, const Vec3& origin, const Vec3& dir) noexcept;

/// Unit vector from polar cosine and azimuth about +z.
inline Vec3 direction_from(double cos_theta, double phi) noexcept
{
    const double sin_theta = std::sqrt(std::max(0.0, 1.0 - cos_theta * cos_theta));
    return {sin_theta * std::cos(phi), sin_theta * std::sin(phi), cos_theta};
}

/// Rotate `dir` by polar angle (cos_theta) and azimuth phi about itself.
Vec3 rotate(const Vec3& dir, double cos_theta, double phi) noexcept;

}  // namespace qpgamma
