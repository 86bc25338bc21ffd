#include "qpgamma/footprint_contour.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "qpgamma/units.hpp"

namespace qpgamma {

double GridField::sample(double x, double y) const noexcept
{
    const double nan = std::numeric_limits<double>::quiet_NaN();
    if (xs.size() < 2 || ys.size() < 2 || x < xs.front() || x > xs.back() || y < ys.front() || y > ys.back())
        return nan;
    auto cell = [](const std::vector<double>& a, double v) {
        auto it = std::upper_bound(a.begin(), a.end(), v);
        std::size_t i = static_cast<std::size_t>(it - a.begin());
        return std::clamp<std::size_t>(i, 1, a.size() - 1) - 1;
    };
    const std::size_t i = cell(xs, x), j = cell(ys, y);
    const double fx = (x - xs[i]) / (xs[i + 1] - xs[i]);
    const double fy = (y - ys[j]) / (ys[j + 1] - ys[j]);
    const double a = at(i, j) + fx * (at(i + 1, j) - at(i, j));
    const double b = at(i, j + 1) + fx * (at(i + 1, j + 1) - at(i, j + 1));
    return a + fy * (b - a);
}

std::vector<std::vector<Vec2>> iso_contours(const GridField& f, double level)
{
    const std::size_t nx = f.xs.size(), ny = f.ys.size();
    std::vector<std::vector<Vec2>> out;
    if (nx < 2 || ny < 2)
        return out;

    auto inside = [&](std::size_t i, std::size_t j) { return f.at(i, j) >= level; };
    auto hid = [&](std::size_t i, std::size_t j) { return 2 * (j * nx + i); };
    auto vid = [&](std::size_t i, std::size_t j) { return 2 * (j * nx + i) + 1; };
    auto point = [&](std::size_t id) {
        const std::size_t base = id / 2;
        const std::size_t i = base % nx, j = base / nx;
        const bool vertical = id % 2 == 1;
        const std::size_t i2 = vertical ? i : i + 1, j2 = vertical ? j + 1 : j;
        const double va = f.at(i, j), vb = f.at(i2, j2);
        double t = (va == vb) ? 0.5 : (level - va) / (vb - va);
        t = std::clamp(t, 0.0, 1.0);
        return Vec2{f.xs[i] + t * (f.xs[i2] - f.xs[i]), f.ys[j] + t * (f.ys[j2] - f.ys[j])};
    };

    std::vector<std::pair<std::size_t, std::size_t>> segs;
    for (std::size_t j = 0; j + 1 < ny; ++j) {
        for (std::size_t i = 0; i + 1 < nx; ++i) {
            const int c = (inside(i, j) ? 1 : 0) | (inside(i + 1, j) ? 2 : 0) | (inside(i + 1, j + 1) ? 4 : 0)
                          | (inside(i, j + 1) ? 8 : 0);
            if (c == 0 || c == 15)
                continue;
            const std::size_t e0 = hid(i, j), e1 = vid(i + 1, j), e2 = hid(i, j + 1), e3 = vid(i, j);
            const double centre = 0.25 * (f.at(i, j) + f.at(i + 1, j) + f.at(i + 1, j + 1) + f.at(i, j + 1));
            switch (c) {
            case 1: case 14: segs.emplace_back(e3, e0); break;
            case 2: case 13: segs.emplace_back(e0, e1); break;
            case 3: case 12: segs.emplace_back(e3, e1); break;
            case 4: case 11: segs.emplace_back(e1, e2); break;
            case 6: case 9: segs.emplace_back(e0, e2); break;
            case 7: case 8: segs.emplace_back(e3, e2); break;
            case 5:
                if (centre >= level) {
                    segs.emplace_back(e0, e1);
                    segs.emplace_back(e2, e3);
                } else {
                    segs.emplace_back(e3, e0);
                    segs.emplace_back(e1, e2);
                }
                break;
            case 10:
                if (centre >= level) {
                    segs.emplace_back(e3, e0);
                    segs.emplace_back(e1, e2);
                } else {
                    segs.emplace_back(e0, e1);
                    segs.emplace_back(e2, e3);
                }
                break;
            default: break;
            }
        }
    }

    std::unordered_multimap<std::size_t, std::size_t> by_edge;
    for (std::size_t s = 0; s < segs.size(); ++s) {
        by_edge.emplace(segs[s].first, s);
        by_edge.emplace(segs[s].second, s);
    }
    std::vector<bool> used(segs.size(), false);
    auto next_seg = [&](std::size_t edge, std::size_t from) -> std::size_t {
        auto [lo, hi] = by_edge.equal_range(edge);
        for (auto it = lo; it != hi; ++it)
            if (it->second != from && !used[it->second])
                return it->second;
        return segs.size();
    };
    auto walk = [&](std::size_t s, std::size_t start_edge) {
        std::vector<Vec2> line{point(start_edge)};
        std::size_t edge = start_edge;
        while (s < segs.size()) {
            used[s] = true;
            edge = segs[s].first == edge ? segs[s].second : segs[s].first;
            line.push_back(point(edge));
            s = next_seg(edge, s);
        }
        out.push_back(std::move(line));
    };
    // Open lines start at edges used once
    for (std::size_t s = 0; s < segs.size(); ++s) {
        if (used[s])
            continue;
        for (std::size_t e : {segs[s].first, segs[s].second}) {
            if (!used[s] && by_edge.count(e) == 1)
                walk(s, e);
        }
    }
    for (std::size_t s = 0; s < segs.size(); ++s)
        if (!used[s])
            walk(s, segs[s].first);
    return out;
}

double mean_contour_radius(const GridField& f, double level, int n_rays)
{
    if (f.xs.size() < 2 || f.ys.size() < 2 || n_rays < 1)
        return 0.0;
    const double r_max = std::min({-f.xs.front(), f.xs.back(), -f.ys.front(), f.ys.back()});
    if (!(r_max > 0))
        return 0.0;
    const double step = 0.25 * std::min(f.xs[1] - f.xs[0], f.ys[1] - f.ys[0]);
    const int n_steps = static_cast<int>(r_max / step);
    double sum = 0.0;
    for (int a = 0; a < n_rays; ++a) {
        const double phi = 2.0 * units::pi * a / n_rays;
        const double c = std::cos(phi), s = std::sin(phi);
        auto value = [&](int k) {
            const double r = std::min(k * step, r_max);
            return f.sample(r * c, r * s);
        };
        int last = -1;
        for (int k = 0; k <= n_steps; ++k)
            if (value(k) >= level)
                last = k;
        if (last < 0)
            continue;
        double r = last * step;
        if (last < n_steps) {
            const double va = value(last), vb = value(last + 1);
            r += step * std::clamp((va - level) / (va - vb), 0.0, 1.0);
        }
        sum += std::min(r, r_max);
    }
    return sum / n_rays;
}

}  // namespace qpgamma
