#include "polyvem/mesh.hpp"

#include "polyvem/errors.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>

using namespace polyvem;

namespace {

int euler_characteristic(const PolygonalMesh& m)
{
    return m.num_vertices() - m.num_edges() + m.num_cells();
}

int count_boundary_edges(const PolygonalMesh& m)
{
    int n = 0;
    for (int e = 0; e < m.num_edges(); ++e) {
        n += m.boundary_edge(e) ? 1 : 0;
    }
    return n;
}

}  // namespace

TEST(Generate, CrissCrossResolutionTwo)
{
    const auto m = generate({MeshKind::Triangular, 2});
    EXPECT_EQ(m.num_cells(), 16);
    // longest side of each triangle is the square side 1/2
    EXPECT_NEAR(m.h(), 0.5, 1e-15);
    EXPECT_EQ(euler_characteristic(m), 1);
    EXPECT_NEAR(m.total_area(), 1.0, 1e-14);
    EXPECT_NEAR(mesh_diagnostics(m).quasi_uniformity_ratio, 1.0, 1e-14);
}

TEST(Generate, DistortedSingleCell)
{
    const auto m = generate({MeshKind::DistortedQuad, 1});
    ASSERT_EQ(m.num_cells(), 1);
    EXPECT_EQ(m.num_edges(), 4);
    EXPECT_EQ(count_boundary_edges(m), 4);
    EXPECT_NEAR(m.geometry(0).area, 1.0, 1e-15);
    const auto d = mesh_diagnostics(m);
    EXPECT_NEAR(d.h, std::numbers::sqrt2, 1e-15);
    EXPECT_NEAR(d.min_edge_ratio, 1.0 / std::numbers::sqrt2, 1e-15);
}

TEST(Generate, DistortionMovesOnlyInteriorVertices)
{
    const auto m = generate({MeshKind::DistortedQuad, 4});
    int moved = 0;
    for (int v = 0; v < m.num_vertices(); ++v) {
        const Point p = m.vertex(v) * 4.0;
        const bool on_grid = std::abs(p(0) - std::round(p(0))) < 1e-12 && std::abs(p(1) - std::round(p(1))) < 1e-12;
        if (m.boundary_vertex(v)) {
            EXPECT_TRUE(on_grid);
        } else {
            moved += on_grid ? 0 : 1;
        }
    }
    EXPECT_EQ(moved, 9);
}

TEST(Generate, GammaDomains)
{
    for (MeshKind kind : {MeshKind::Triangular, MeshKind::DistortedQuad, MeshKind::ConcaveQuad}) {
        const auto m = generate({kind, 2}, Domain::GammaShape);
        EXPECT_NEAR(m.total_area(), 3.0, 1e-12) << to_string(kind);
        EXPECT_EQ(euler_characteristic(m), 1);
        // perimeter 8 split into segments of 1/2
        int bv = 0;
        for (int v = 0; v < m.num_vertices(); ++v) {
            bv += m.boundary_vertex(v) ? 1 : 0;
        }
        EXPECT_EQ(bv, 16);
        EXPECT_EQ(count_boundary_edges(m), 16);
    }
    const auto g = generate({MeshKind::GammaTriangular, 2}, Domain::UnitSquare);
    EXPECT_NEAR(g.total_area(), 3.0, 1e-12);
    EXPECT_THROW(generate({MeshKind::VoronoiCVT, 2}, Domain::GammaShape), UnsupportedError);
}

TEST(Generate, ConcaveTemplateHasNonconvexCells)
{
    const auto m = generate({MeshKind::ConcaveQuad, 3});
    const auto d = mesh_diagnostics(m);
    EXPECT_EQ(m.num_cells(), 18);
    EXPECT_EQ(d.num_nonconvex, 9);
    EXPECT_NEAR(d.total_area, 1.0, 1e-14);
}

TEST(Generate, CvtIsDeterministicAndValid)
{
    const auto a = generate({MeshKind::VoronoiCVT, 4, 7});
    const auto b = generate({MeshKind::VoronoiCVT, 4, 7});
    EXPECT_EQ(format_mesh(a), format_mesh(b));
    EXPECT_NEAR(a.total_area(), 1.0, 1e-10);
    EXPECT_EQ(euler_characteristic(a), 1);
    const auto d = mesh_diagnostics(a);
    EXPECT_GT(d.min_edge_ratio, 0.0);
    EXPECT_GT(d.quasi_uniformity_ratio, 0.0);
    const auto c = generate({MeshKind::VoronoiCVT, 4, 8});
    EXPECT_NE(format_mesh(a), format_mesh(c));
}

TEST(Generate, RefinementHalvesH)
{
    for (MeshKind kind : {MeshKind::Triangular, MeshKind::DistortedQuad, MeshKind::ConcaveQuad, MeshKind::VoronoiCVT}) {
        for (int r : {4, 8}) {
            const auto coarse = generate({kind, r, 1});
            const auto fine = generate({kind, 2 * r, 1});
            EXPECT_NEAR(fine.nominal_h() / coarse.nominal_h(), 0.5, 1e-15);
            if (kind != MeshKind::VoronoiCVT) {
                EXPECT_NEAR(fine.h() / coarse.h(), 0.5, 0.025) << to_string(kind) << " r=" << r;
            }
        }
    }
}

TEST(Topology, InteriorEdgesHaveOppositeOrientation)
{
    const auto m = generate({MeshKind::ConcaveQuad, 3}, Domain::GammaShape);
    for (int e = 0; e < m.num_edges(); ++e) {
        const auto& edge = m.edge(e);
        if (edge.boundary()) {
            continue;
        }
        EXPECT_LT(edge.cells[0], edge.cells[1]);
        int seen = 0;
        for (int c : edge.cells) {
            const auto& cell = m.cell(c);
            for (std::size_t i = 0; i < cell.size(); ++i) {
                if (m.cell_edge(c, static_cast<int>(i)) == e) {
                    ++seen;
                    const int a = cell[i];
                    EXPECT_TRUE(a == edge.vertices[c == edge.cells[0] ? 0 : 1]);
                }
            }
        }
        EXPECT_EQ(seen, 2);
    }
}

TEST(Topology, NonManifoldRejected)
{
    std::vector<Point> v{Point(0, 0), Point(1, 0), Point(0, 1), Point(1, 1), Point(0, -1)};
    // three triangles on edge 0-1
    std::vector<std::vector<int>> cells{{0, 1, 2}, {1, 0, 4}, {0, 1, 3}};
    EXPECT_THROW(PolygonalMesh(v, cells), ValidationError);
}

TEST(MeshIO, RoundTrip)
{
    const auto m = generate({MeshKind::DistortedQuad, 3});
    const auto path = (std::filesystem::temp_directory_path() / "polyvem_roundtrip.mesh").string();
    save_mesh(m, path);
    const auto l = load_mesh(path);
    std::remove(path.c_str());
    ASSERT_EQ(l.num_vertices(), m.num_vertices());
    for (int v = 0; v < m.num_vertices(); ++v) {
        EXPECT_EQ(l.vertex(v)(0), m.vertex(v)(0));
        EXPECT_EQ(l.vertex(v)(1), m.vertex(v)(1));
    }
    EXPECT_EQ(l.cells(), m.cells());
}

TEST(MeshIO, Errors)
{
    EXPECT_THROW(parse_mesh("polymesh 1\nV 3\n0 0\n1 0\n0 1\nC 1\n3 0 1 5\n"), ValidationError);
    try {
        parse_mesh("polymesh 1\nV 2\n0 0\n1 zero\n");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 4);
    }
    EXPECT_THROW(parse_mesh("polymesh 2\n"), ParseError);
    EXPECT_THROW(parse_mesh("polymesh 1\nV 1\n0 0\n"), ParseError);
}

TEST(MeshIO, ClockwiseCellReoriented)
{
    std::vector<std::string> warnings;
    const auto m = parse_mesh("polymesh 1\nV 3\n0 0\n1 0\n0 1\nC 1\n3 0 2 1\n", &warnings);
    ASSERT_EQ(warnings.size(), 1u);
    EXPECT_GT(m.geometry(0).area, 0.0);
    EXPECT_NEAR(m.geometry(0).area, 0.5, 1e-15);
}

TEST(Topology, ReverseEdgeKeepsCells)
{
    auto m = generate({MeshKind::Triangular, 1});
    const auto before = m.edge(5).cells;
    m.reverse_edge(5);
    EXPECT_EQ(m.edge(5).cells, before);
}
