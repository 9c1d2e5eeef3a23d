#include "polyvem/geometry.hpp"

#include "polyvem/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace polyvem {

namespace {

double cross(const Point& a, const Point& b, const Point& c)
{
    return (b(0) - a(0)) * (c(1) - a(1)) - (b(1) - a(1)) * (c(0) - a(0));
}

bool on_segment(const Point& p, const Point& a, const Point& b, double tol)
{
    return std::abs(cross(a, b, p)) <= tol && p(0) >= std::min(a(0), b(0)) - tol &&
           p(0) <= std::max(a(0), b(0)) + tol && p(1) >= std::min(a(1), b(1)) - tol &&
           p(1) <= std::max(a(1), b(1)) + tol;
}

bool segments_meet(const Point& a, const Point& b, const Point& c, const Point& d, double tol)
{
    const double d1 = cross(c, d, a);
    const double d2 = cross(c, d, b);
    const double d3 = cross(a, b, c);
    const double d4 = cross(a, b, d);
    if (((d1 > tol && d2 < -tol) || (d1 < -tol && d2 > tol)) &&
        ((d3 > tol && d4 < -tol) || (d3 < -tol && d4 > tol))) {
        return true;
    }
    return on_segment(a, c, d, tol) || on_segment(b, c, d, tol) || on_segment(c, a, b, tol) ||
           on_segment(d, a, b, tol);
}

bool point_in_triangle(const Point& p, const Point& a, const Point& b, const Point& c)
{
    return cross(a, b, p) >= 0.0 && cross(b, c, p) >= 0.0 && cross(c, a, p) >= 0.0;
}

}  // namespace

double signed_area(const Eigen::Matrix2Xd& v)
{
    const Eigen::Index n = v.cols();
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index j = (i + 1) % n;
        s += v(0, i) * v(1, j) - v(0, j) * v(1, i);
    }
    return 0.5 * s;
}

Point area_centroid(const Eigen::Matrix2Xd& v)
{
    const Eigen::Index n = v.cols();
    // shift to the first vertex to limit cancellation
    const Point o = v.col(0);
    double a = 0.0;
    Point c = Point::Zero();
    for (Eigen::Index i = 0; i < n; ++i) {
        const Point p = v.col(i) - o;
        const Point q = v.col((i + 1) % n) - o;
        const double w = p(0) * q(1) - q(0) * p(1);
        a += w;
        c += w * (p + q);
    }
    return o + c / (3.0 * a);
}

double polygon_diameter(const Eigen::Matrix2Xd& v)
{
    double d = 0.0;
    for (Eigen::Index i = 0; i < v.cols(); ++i) {
        for (Eigen::Index j = i + 1; j < v.cols(); ++j) {
            d = std::max(d, (v.col(i) - v.col(j)).norm());
        }
    }
    return d;
}

bool is_simple_polygon(const Eigen::Matrix2Xd& v)
{
    const int n = static_cast<int>(v.cols());
    if (n < 3) {
        return false;
    }
    const double scale = polygon_diameter(v);
    const double tol = 1e-13 * scale * scale;
    for (int i = 0; i < n; ++i) {
        const Point a = v.col(i);
        const Point b = v.col((i + 1) % n);
        for (int j = i + 1; j < n; ++j) {
            const Point c = v.col(j);
            const Point d = v.col((j + 1) % n);
            const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
            if (adjacent) {
                // shared vertex; reject folding back onto the previous edge
                const Point shared = (j == i + 1) ? b : a;
                const Point p = (j == i + 1) ? a : b;
                const Point q = (j == i + 1) ? d : c;
                if (std::abs(cross(shared, p, q)) <= tol && (p - shared).dot(q - shared) > 0.0) {
                    return false;
                }
                continue;
            }
            if (segments_meet(a, b, c, d, tol)) {
                return false;
            }
        }
    }
    return true;
}

bool is_star_shaped_wrt(const Eigen::Matrix2Xd& v, const Point& p)
{
    const Eigen::Index n = v.cols();
    const double scale = polygon_diameter(v);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (cross(p, v.col(i), v.col((i + 1) % n)) <= 1e-12 * scale * scale) {
            return false;
        }
    }
    return true;
}

std::vector<std::array<Point, 3>> sub_triangulate(const Eigen::Matrix2Xd& v)
{
    const int n = static_cast<int>(v.cols());
    std::vector<std::array<Point, 3>> tris;
    if (n == 3) {
        tris.push_back({v.col(0), v.col(1), v.col(2)});
        return tris;
    }
    const Point c = area_centroid(v);
    if (is_star_shaped_wrt(v, c)) {
        tris.reserve(n);
        for (int i = 0; i < n; ++i) {
            tris.push_back({c, v.col(i), v.col((i + 1) % n)});
        }
        return tris;
    }
    // ear clipping
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    const double scale = polygon_diameter(v);
    const double tol = 1e-14 * scale * scale;
    while (idx.size() > 3) {
        const int m = static_cast<int>(idx.size());
        bool clipped = false;
        for (int i = 0; i < m; ++i) {
            const Point a = v.col(idx[(i + m - 1) % m]);
            const Point b = v.col(idx[i]);
            const Point d = v.col(idx[(i + 1) % m]);
            if (cross(a, b, d) <= tol) {
                continue;
            }
            bool ear = true;
            for (int j = 0; j < m && ear; ++j) {
                if (j == i || j == (i + m - 1) % m || j == (i + 1) % m) {
                    continue;
                }
                const Point p = v.col(idx[j]);
                if ((p - a).norm() == 0.0 || (p - d).norm() == 0.0) {
                    continue;
                }
                ear = !point_in_triangle(p, a, b, d);
            }
            if (ear) {
                tris.push_back({a, b, d});
                idx.erase(idx.begin() + i);
                clipped = true;
                break;
            }
        }
        if (!clipped) {
            throw GeometryError("ear clipping failed: polygon is not simple");
        }
    }
    tris.push_back({v.col(idx[0]), v.col(idx[1]), v.col(idx[2])});
    return tris;
}

PolygonGeometry make_polygon(const Eigen::Matrix2Xd& vertices)
{
    if (vertices.cols() < 3) {
        throw GeometryError("polygon needs at least 3 vertices");
    }
    const double diam = polygon_diameter(vertices);
    for (Eigen::Index i = 0; i < vertices.cols(); ++i) {
        if ((vertices.col((i + 1) % vertices.cols()) - vertices.col(i)).norm() <= 1e-14 * diam) {
            throw GeometryError("zero-length edge");
        }
    }
    const double area = signed_area(vertices);
    if (!(area > 1e-14 * diam * diam)) {
        throw GeometryError("polygon has non-positive signed area");
    }
    if (!is_simple_polygon(vertices)) {
        throw GeometryError("polygon is self-intersecting");
    }
    PolygonGeometry g;
    g.vertices = vertices;
    g.area = area;
    g.centroid = area_centroid(vertices);
    g.diameter = diam;
    return g;
}

}  // namespace polyvem
