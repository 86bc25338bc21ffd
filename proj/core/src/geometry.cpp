#include "qpgamma/geometry.hpp"

#include <algorithm>
#include <limits>

namespace qpgamma {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void clip_axis(double o, double d, double lo, double hi, double& enter, double& exit) noexcept
{
    if (d == 0.0) {
        if (o < lo || o > hi) {
            enter = kInf;
            exit = -kInf;
        }
        return;
    }
    double t0 = (lo - o) / d;
    double t1 = (hi - o) / d;
    if (t0 > t1)
        std::swap(t0, t1);
    enter = std::max(enter, t0);
    exit = std::min(exit, t1);
}

}  // namespace

RayInterval intersect(const Box& box, const Vec3& origin, const Vec3& dir) noexcept
{
    double enter = -kInf;
    double exit = kInf;
    clip_axis(origin.x, dir.x, box.lo.x, box.hi.x, enter, exit);
    clip_axis(origin.y, dir.y, box.lo.y, box.hi.y, enter, exit);
    clip_axis(origin.z, dir.z, box.lo.z, box.hi.z, enter, exit);
    return {enter, exit};
}

RayInterval intersect(const ZCylinder& cyl, const Vec3& origin, const Vec3& dir) noexcept
{
    double enter = -kInf;
    double exit = kInf;
    clip_axis(origin.z, dir.z, cyl.center.z - cyl.half_length, cyl.center.z + cyl.half_length,
              enter, exit);

    const double ox = origin.x - cyl.center.x;
    const double oy = origin.y - cyl.center.y;
    const double a = dir.x * dir.x + dir.y * dir.y;
    const double c = ox * ox + oy * oy - cyl.radius * cyl.radius;
    if (a == 0.0) {
        if (c > 0.0)
            return {kInf, -kInf};
        return {enter, exit};
    }
    const double b = ox * dir.x + oy * dir.y;
    const double disc = b * b - a * c;
    if (disc < 0.0)
        return {kInf, -kInf};
    const double sq = std::sqrt(disc);
    enter = std::max(enter, (-b - sq) / a);
    exit = std::min(exit, (-b + sq) / a);
    return {enter, exit};
}

Vec3 rotate(const Vec3& dir, double cos_theta, double phi) noexcept
{
    const double sin_theta = std::sqrt(std::max(0.0, 1.0 - cos_theta * cos_theta));
    const double cp = std::cos(phi);
    const double sp = std::sin(phi);
    const double perp = std::sqrt(dir.x * dir.x + dir.y * dir.y);
    if (perp < 1e-10) {
        const double sign = dir.z >= 0.0 ? 1.0 : -1.0;
        return {sin_theta * cp, sin_theta * sp, sign * cos_theta};
    }
    // Orthonormal frame (u, v, dir)
    const Vec3 u{dir.x * dir.z / perp, dir.y * dir.z / perp, -perp};
    const Vec3 v{-dir.y / perp, dir.x / perp, 0.0};
    return normalized((sin_theta * cp) * u + (sin_theta * sp) * v + cos_theta * dir);
}

}  // namespace qpgamma
