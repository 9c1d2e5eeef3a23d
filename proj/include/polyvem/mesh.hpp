#pragma once

// Polygonal meshes: topology, generators for the structured, distorted,
// concave and Voronoi families, the Gamma-shaped domain, and ASCII IO.

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "polyvem/geometry.hpp"

namespace polyvem {

enum class MeshKind { Triangular, DistortedQuad, ConcaveQuad, VoronoiCVT, GammaTriangular };
enum class Domain { UnitSquare, GammaShape };

struct MeshFamily {
    MeshKind kind = MeshKind::Triangular;
    int resolution = 1;
    std::uint64_t seed = 0;
};

std::string to_string(MeshKind kind);
MeshKind parse_mesh_kind(const std::string& name);
std::string to_string(Domain domain);

struct Edge {
    std::array<int, 2> vertices{};    // stored direction; carries no meaning for signs
    std::array<int, 2> cells{-1, -1};  // cells[0] is the owner (lower index), cells[1] = -1 on the boundary

    [[nodiscard]] bool boundary() const noexcept { return cells[1] < 0; }
};

class PolygonalMesh {
public:
    PolygonalMesh() = default;
    /// Validates every cell (counterclockwise, simple, positive area) and builds the topology.
    PolygonalMesh(std::vector<Point> vertices, std::vector<std::vector<int>> cells);

    [[nodiscard]] int num_vertices() const noexcept { return static_cast<int>(vertices_.size()); }
    [[nodiscard]] int num_cells() const noexcept { return static_cast<int>(cells_.size()); }
    [[nodiscard]] int num_edges() const noexcept { return static_cast<int>(edges_.size()); }

    [[nodiscard]] const std::vector<Point>& vertices() const noexcept { return vertices_; }
    [[nodiscard]] const Point& vertex(int i) const { return vertices_[i]; }
    [[nodiscard]] const std::vector<std::vector<int>>& cells() const noexcept { return cells_; }
    [[nodiscard]] const std::vector<int>& cell(int c) const { return cells_[c]; }
    [[nodiscard]] const std::vector<Edge>& edges() const noexcept { return edges_; }
    [[nodiscard]] const Edge& edge(int e) const { return edges_[e]; }

    /// Global edge index of local edge i of cell c (from local vertex i to i+1).
    [[nodiscard]] int cell_edge(int c, int i) const { return cell_edges_[c][i]; }
    [[nodiscard]] const std::vector<int>& cell_edges(int c) const { return cell_edges_[c]; }
    /// +1 when c owns the edge, -1 otherwise.
    [[nodiscard]] int edge_sign(int c, int e) const { return edges_[e].cells[0] == c ? 1 : -1; }

    [[nodiscard]] bool boundary_vertex(int v) const { return boundary_vertex_[v]; }
    [[nodiscard]] bool boundary_edge(int e) const { return edges_[e].boundary(); }

    [[nodiscard]] const PolygonGeometry& geometry(int c) const { return geometry_[c]; }
    [[nodiscard]] Eigen::Matrix2Xd cell_vertices(int c) const;

    /// Max cell diameter.
    [[nodiscard]] double h() const noexcept { return h_; }
    /// Generator spacing (1/resolution); falls back to h() for loaded meshes.
    [[nodiscard]] double nominal_h() const noexcept { return nominal_h_ > 0.0 ? nominal_h_ : h_; }
    void set_nominal_h(double h) noexcept { nominal_h_ = h; }
    [[nodiscard]] double total_area() const;

    /// Swap the stored vertex order of edge e. Used to check that nothing depends on it.
    void reverse_edge(int e);

private:
    void build_topology();

    std::vector<Point> vertices_;
    std::vector<std::vector<int>> cells_;
    std::vector<Edge> edges_;
    std::vector<std::vector<int>> cell_edges_;
    std::vector<bool> boundary_vertex_;
    std::vector<PolygonGeometry> geometry_;
    double h_ = 0.0;
    double nominal_h_ = 0.0;
};

PolygonalMesh generate(const MeshFamily& family, Domain domain = Domain::UnitSquare);

/// Reads the `polymesh 1` format. Clockwise cells are reoriented; a message is
/// appended to `warnings` (or printed to stderr when null).
PolygonalMesh load_mesh(const std::string& path, std::vector<std::string>* warnings = nullptr);
PolygonalMesh parse_mesh(const std::string& text, std::vector<std::string>* warnings = nullptr);
void save_mesh(const PolygonalMesh& mesh, const std::string& path);
std::string format_mesh(const PolygonalMesh& mesh);

struct MeshDiagnostics {
    double h = 0.0;
    double min_edge_ratio = 0.0;          // min over cells of shortest edge / h_K
    double quasi_uniformity_ratio = 0.0;  // min over cells of h_K / h
    double min_area = 0.0;
    double total_area = 0.0;
    int num_nonconvex = 0;
    int num_not_star_shaped = 0;  // w.r.t. the centroid
};

MeshDiagnostics mesh_diagnostics(const PolygonalMesh& mesh);

}  // namespace polyvem
