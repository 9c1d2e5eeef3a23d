#pragma once

// Planar polygon geometry: measures, simplicity, sub-triangulation.

#include <Eigen/Dense>

#include <array>
#include <vector>

namespace polyvem {

using Point = Eigen::Vector2d;

double signed_area(const Eigen::Matrix2Xd& vertices);
Point area_centroid(const Eigen::Matrix2Xd& vertices);
/// Max pairwise vertex distance.
double polygon_diameter(const Eigen::Matrix2Xd& vertices);
/// True when no two non-adjacent edges meet and adjacent edges share only their vertex.
bool is_simple_polygon(const Eigen::Matrix2Xd& vertices);
/// True when every triangle (p, v_i, v_{i+1}) has positive area.
bool is_star_shaped_wrt(const Eigen::Matrix2Xd& vertices, const Point& p);

/// Triangles covering a simple counterclockwise polygon: fan from the
/// centroid if the polygon is star-shaped with respect to it, ear clipping
/// otherwise. Triangles are given as vertex triples.
std::vector<std::array<Point, 3>> sub_triangulate(const Eigen::Matrix2Xd& vertices);

/// Validated geometry of one polygonal cell.
struct PolygonGeometry {
    Eigen::Matrix2Xd vertices;  // counterclockwise, one column per vertex
    double area = 0.0;
    Point centroid = Point::Zero();
    double diameter = 0.0;

    [[nodiscard]] int num_vertices() const noexcept { return static_cast<int>(vertices.cols()); }
    [[nodiscard]] Point vertex(int i) const { return vertices.col((i % num_vertices() + num_vertices()) % num_vertices()); }
};

/// Throws GeometryError for < 3 vertices, non-positive area, zero-length
/// edges or self-intersection.
PolygonGeometry make_polygon(const Eigen::Matrix2Xd& vertices);

}  // namespace polyvem
