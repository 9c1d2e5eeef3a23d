#include <gtest/gtest.h>

#include "polyvem/assembly.hpp"
#include "polyvem/errors.hpp"
#include "polyvem/mesh.hpp"

#include <cmath>
#include <random>

using namespace polyvem;

namespace {

PolygonalMesh single_square()
{
    return PolygonalMesh({Point(0, 0), Point(1, 0), Point(1, 1), Point(0, 1)}, {{0, 1, 2, 3}});
}

// Two unit squares side by side; the shared edge is owned by cell 0.
PolygonalMesh two_squares()
{
    return PolygonalMesh({Point(0, 0), Point(1, 0), Point(2, 0), Point(2, 1), Point(1, 1), Point(0, 1)},
                         {{0, 1, 4, 5}, {1, 2, 3, 4}});
}

SmoothFunction polynomial(double c0, double cx, double cy, double cxx, double cxy, double cyy)
{
    SmoothFunction f;
    f.value = [=](const Eigen::Vector2d& p) {
        return c0 + cx * p.x() + cy * p.y() + cxx * p.x() * p.x() + cxy * p.x() * p.y() + cyy * p.y() * p.y();
    };
    f.gradient = [=](const Eigen::Vector2d& p) {
        return Eigen::Vector2d(cx + 2 * cxx * p.x() + cxy * p.y(), cy + cxy * p.x() + 2 * cyy * p.y());
    };
    f.hessian = [=](const Eigen::Vector2d&) { return Eigen::Vector3d(2 * cxx, cxy, 2 * cyy); };
    return f;
}

struct Case {
    MeshKind kind;
    SpaceKind space;
    int k;
};

std::vector<Case> cases()
{
    return {{MeshKind::Triangular, SpaceKind::Morley, 2},   {MeshKind::Triangular, SpaceKind::C0NC, 2},
            {MeshKind::DistortedQuad, SpaceKind::C0NC, 3},  {MeshKind::DistortedQuad, SpaceKind::Morley, 3},
            {MeshKind::ConcaveQuad, SpaceKind::C0NC, 2},    {MeshKind::VoronoiCVT, SpaceKind::Morley, 2},
            {MeshKind::VoronoiCVT, SpaceKind::C0NC, 3}};
}

double quad_form(const SparseMatrix& A, const Eigen::VectorXd& u, const Eigen::VectorXd& v)
{
    return u.dot(A * v);
}

}  // namespace

TEST(DofMap, SingleSquareCounts)
{
    const auto mesh = single_square();
    const DofLayout morley(SpaceKind::Morley, 2);
    const auto cp = build_dof_map(mesh, morley, BoundaryCondition::CP);
    EXPECT_EQ(cp.total, 8);
    EXPECT_EQ(cp.num_free, 0);
    EXPECT_EQ(build_dof_map(mesh, morley, BoundaryCondition::CH).num_free, 4);
    EXPECT_EQ(build_dof_map(mesh, morley, BoundaryCondition::NC).num_free, 4);

    const DofLayout c0(SpaceKind::C0NC, 2);
    const auto nc = build_dof_map(mesh, c0, BoundaryCondition::NC);
    EXPECT_EQ(nc.total, 12);
    EXPECT_EQ(nc.num_free, 4);
    for (int d : nc.free_dofs) {
        EXPECT_GE(d, 4 + 0);
        EXPECT_EQ((d - 4) % 2, 1);  // the dn-moment of each edge
    }
}

TEST(DofMap, FreeCountsAreNestedAcrossConditions)
{
    for (const auto& c : cases()) {
        const auto mesh = generate({c.kind, 4, 3});
        const DofLayout layout(c.space, c.k);
        const int cp = build_dof_map(mesh, layout, BoundaryCondition::CP).num_free;
        const int nc = build_dof_map(mesh, layout, BoundaryCondition::NC).num_free;
        const int ch = build_dof_map(mesh, layout, BoundaryCondition::CH).num_free;
        EXPECT_LE(cp, nc);
        EXPECT_LE(nc, ch);
        const auto map = build_dof_map(mesh, layout, BoundaryCondition::CH);
        EXPECT_EQ(map.num_free + map.num_constrained, map.total);
    }
}

TEST(DofMap, SignsFollowEdgeOwnership)
{
    const auto mesh = two_squares();
    const DofLayout layout(SpaceKind::C0NC, 3);
    const auto map = build_dof_map(mesh, layout, BoundaryCondition::CH);
    // local edge 1 of cell 0 and local edge 3 of cell 1 are the shared edge
    const int shared = mesh.cell_edge(0, 1);
    ASSERT_EQ(shared, mesh.cell_edge(1, 3));
    for (int i = 0; i < 2; ++i) {
        EXPECT_EQ(map.cell_signs[0][layout.edge0_dof(4, 1, i)], 1.0);
        EXPECT_EQ(map.cell_signs[0][layout.edge1_dof(4, 1, i)], 1.0);
        EXPECT_EQ(map.cell_signs[1][layout.edge0_dof(4, 3, i)], i == 0 ? 1.0 : -1.0);
        EXPECT_EQ(map.cell_signs[1][layout.edge1_dof(4, 3, i)], i == 0 ? -1.0 : 1.0);
        EXPECT_EQ(map.cell_dofs[1][layout.edge0_dof(4, 3, i)], map.edge0_dof(shared, i));
    }
}

TEST(Assembly, InterpolantIsConsistentWithLocalFunctionals)
{
    const auto u = polynomial(0.3, -1.0, 0.5, 2.0, -0.7, 1.1);
    for (const auto& c : cases()) {
        const auto mesh = generate({c.kind, 3, 5});
        const DofLayout layout(c.space, c.k);
        const auto map = build_dof_map(mesh, layout, BoundaryCondition::CP);
        const auto U = interpolate(mesh, layout, map, u);
        for (int cell = 0; cell < mesh.num_cells(); ++cell) {
            const auto loc = dof_functionals(layout, mesh.geometry(cell), u);
            for (Eigen::Index i = 0; i < loc.size(); ++i) {
                EXPECT_NEAR(map.cell_signs[cell][i] * U(map.cell_dofs[cell][i]), loc(i), 1e-12);
            }
        }
        const auto bv = boundary_values(mesh, layout, map, u);
        EXPECT_LT((bv - restrict_constrained(map, U)).lpNorm<Eigen::Infinity>(), 1e-14);
    }
}

// Energies of interpolated quadratics against exact integrals; a wrong
// orientation sign on any shared edge breaks these.
TEST(Assembly, QuadraticEnergiesAreExact)
{
    for (const auto& c : cases()) {
        const auto mesh = generate({c.kind, 4, 7});
        const DofLayout layout(c.space, c.k);
        const auto map = build_dof_map(mesh, layout, BoundaryCondition::CH);
        const auto elements = compute_elements(mesh, layout);
        const auto M = assemble_operator(map, elements, OperatorKind::Mass);
        const auto A = assemble_operator(map, elements, OperatorKind::Stiffness4);
        const auto B = assemble_operator(map, elements, OperatorKind::Stiffness2);

        const auto one = interpolate(mesh, layout, map, polynomial(1, 0, 0, 0, 0, 0));
        const auto x = interpolate(mesh, layout, map, polynomial(0, 1, 0, 0, 0, 0));
        const auto lin = interpolate(mesh, layout, map, polynomial(0.5, 1, -2, 0, 0, 0));
        const auto xx = interpolate(mesh, layout, map, polynomial(0, 0, 0, 1, 0, 0));
        const auto xy = interpolate(mesh, layout, map, polynomial(0, 0, 0, 0, 1, 0));

        EXPECT_NEAR(quad_form(M, one, one), 1.0, 1e-11);
        EXPECT_NEAR(quad_form(M, one, x), 0.5, 1e-11);
        EXPECT_NEAR(quad_form(M, xx, one), 1.0 / 3.0, 1e-11);
        EXPECT_NEAR(quad_form(M, xy, xy), 1.0 / 9.0, 1e-11);
        EXPECT_LT((A * lin).lpNorm<Eigen::Infinity>(), 1e-9);
        EXPECT_LT((B * one).lpNorm<Eigen::Infinity>(), 1e-9);
        EXPECT_NEAR(quad_form(B, x, x), 1.0, 1e-10);
        EXPECT_NEAR(quad_form(B, lin, lin), 5.0, 1e-10);
        EXPECT_NEAR(quad_form(B, xx, xx), 4.0 / 3.0, 1e-10);
        EXPECT_NEAR(quad_form(B, xy, xy), 2.0 / 3.0, 1e-10);
        EXPECT_NEAR(quad_form(A, xx, xx), 4.0, 1e-9);
        EXPECT_NEAR(quad_form(A, xy, xy), 2.0, 1e-9);
        EXPECT_NEAR(quad_form(A, xx, xy), 0.0, 1e-9);
    }
}

TEST(Assembly, TwoSquaresMatchLocalSum)
{
    const auto mesh = two_squares();
    const DofLayout layout(SpaceKind::C0NC, 2);
    const auto map = build_dof_map(mesh, layout, BoundaryCondition::CH);
    const auto elements = compute_elements(mesh, layout, 1);
    const Eigen::MatrixXd A = Eigen::MatrixXd(assemble_operator(map, elements, OperatorKind::Stiffness4));
    Eigen::MatrixXd ref = Eigen::MatrixXd::Zero(map.total, map.total);
    for (int c = 0; c < 2; ++c) {
        // scatter matrix with the orientation signs
        Eigen::MatrixXd S = Eigen::MatrixXd::Zero(map.total, map.cell_dofs[c].size());
        for (std::size_t i = 0; i < map.cell_dofs[c].size(); ++i) {
            S(map.cell_dofs[c][i], i) = map.cell_signs[c][i];
        }
        ref += S * elements[c].Ah * S.transpose();
    }
    EXPECT_LT((A - ref).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_EQ(map.total, 6 + 7 * 2);
}

TEST(Assembly, ElementLoopIsDeterministicAcrossThreadCounts)
{
    const auto mesh = generate({MeshKind::VoronoiCVT, 5, 11});
    const DofLayout layout(SpaceKind::C0NC, 3);
    const auto map = build_dof_map(mesh, layout, BoundaryCondition::CP);
    const auto a = assemble_operator(map, compute_elements(mesh, layout, 1), OperatorKind::Stiffness4);
    const auto b = assemble_operator(map, compute_elements(mesh, layout, 4), OperatorKind::Stiffness4);
    EXPECT_EQ(Eigen::MatrixXd(a), Eigen::MatrixXd(b));
}

TEST(Assembly, EdgeVertexOrderDoesNotMatter)
{
    auto mesh = generate({MeshKind::DistortedQuad, 3, 1});
    const DofLayout layout(SpaceKind::Morley, 3);
    const auto map = build_dof_map(mesh, layout, BoundaryCondition::NC);
    const auto before = assemble_operator(map, compute_elements(mesh, layout), OperatorKind::Stiffness4);
    for (int e = 0; e < mesh.num_edges(); e += 2) {
        mesh.reverse_edge(e);
    }
    const auto map2 = build_dof_map(mesh, layout, BoundaryCondition::NC);
    const auto after = assemble_operator(map2, compute_elements(mesh, layout), OperatorKind::Stiffness4);
    EXPECT_EQ(Eigen::MatrixXd(before), Eigen::MatrixXd(after));
}

TEST(Assembly, BlocksAreSymmetricAndMassIsDefinite)
{
    for (const auto& c : cases()) {
        const auto mesh = generate({c.kind, 3, 2});
        const DofLayout layout(c.space, c.k);
        for (auto bc : {BoundaryCondition::CP, BoundaryCondition::NC, BoundaryCondition::CH}) {
            const auto map = build_dof_map(mesh, layout, bc);
            const auto elements = compute_elements(mesh, layout);
            const Eigen::MatrixXd M = Eigen::MatrixXd(free_block(assemble_operator(map, elements, OperatorKind::Mass), map));
            EXPECT_LT((M - M.transpose()).cwiseAbs().maxCoeff(), 1e-15);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(M);
            EXPECT_GT(eig.eigenvalues().minCoeff(), 0.0);
            const auto K = coupling_block(assemble_operator(map, elements, OperatorKind::Mass), map);
            EXPECT_EQ(K.rows(), map.num_free);
            EXPECT_EQ(K.cols(), map.num_constrained);
        }
    }
}

TEST(Assembly, CombineAndRestrictRoundTrip)
{
    const auto mesh = generate({MeshKind::Triangular, 2, 0});
    const DofLayout layout(SpaceKind::C0NC, 2);
    const auto map = build_dof_map(mesh, layout, BoundaryCondition::NC);
    const Eigen::VectorXd U = Eigen::VectorXd::LinSpaced(map.total, -1.0, 1.0);
    const auto back = combine(map, restrict_free(map, U), restrict_constrained(map, U));
    EXPECT_EQ(back, U);
}

TEST(Assembly, NonlinearJacobianMatchesFiniteDifferences)
{
    const auto mesh = generate({MeshKind::DistortedQuad, 2, 0});
    const DofLayout layout(SpaceKind::C0NC, 3);
    const auto map = build_dof_map(mesh, layout, BoundaryCondition::CH);
    const auto elements = compute_elements(mesh, layout);
    const Nonlinearity f{[](double u) { return u - u * u * u; }, [](double u) { return 1.0 - 3.0 * u * u; }};
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Eigen::VectorXd U(map.total);
    for (Eigen::Index i = 0; i < U.size(); ++i) {
        U(i) = dist(rng);
    }
    const auto base = assemble_nonlinear(map, elements, U, f);
    const Eigen::MatrixXd J = Eigen::MatrixXd(base.J);
    const double eps = 1e-6;
    for (int j = 0; j < map.total; j += 3) {
        Eigen::VectorXd up = U, um = U;
        up(j) += eps;
        um(j) -= eps;
        const Eigen::VectorXd col = (assemble_nonlinear(map, elements, up, f, false).F -
                                     assemble_nonlinear(map, elements, um, f, false).F) / (2 * eps);
        EXPECT_LT((col - J.col(j)).lpNorm<Eigen::Infinity>(), 1e-7 * (1.0 + J.col(j).lpNorm<Eigen::Infinity>()));
    }
}

TEST(Assembly, LoadOfConstantIsMassTimesOne)
{
    const auto mesh = generate({MeshKind::ConcaveQuad, 3, 0});
    const DofLayout layout(SpaceKind::Morley, 2);
    const auto map = build_dof_map(mesh, layout, BoundaryCondition::CH);
    const auto elements = compute_elements(mesh, layout);
    const auto M = assemble_operator(map, elements, OperatorKind::Mass);
    const auto one = interpolate(mesh, layout, map, polynomial(1, 0, 0, 0, 0, 0));
    const Eigen::VectorXd load = assemble_load(map, elements, [](const Point&) { return 1.0; });
    EXPECT_LT((load - M * one).lpNorm<Eigen::Infinity>(), 1e-12);
}

TEST(SparseSolve, SmallExamples)
{
    SparseMatrix I(3, 3);
    I.setIdentity();
    const Eigen::Vector3d b(1, 2, 3);
    EXPECT_LT((solve_sparse(I, b) - b).norm(), 1e-15);

    SparseMatrix A(2, 2);
    A.insert(0, 0) = 2;
    A.insert(0, 1) = 1;
    A.insert(1, 0) = 1;
    A.insert(1, 1) = 2;
    const auto x = solve_sparse(A, Eigen::Vector2d(1, 1));
    EXPECT_NEAR(x(0), 1.0 / 3.0, 1e-15);
    EXPECT_NEAR(x(1), 1.0 / 3.0, 1e-15);
}

TEST(SparseSolve, IndefiniteAndNonsymmetricFallBackToLU)
{
    SparseMatrix A(2, 2);
    A.insert(0, 1) = 1;
    A.insert(1, 0) = 3;
    const auto x = solve_sparse(A, Eigen::Vector2d(2, 6));
    EXPECT_NEAR(x(0), 2.0, 1e-14);
    EXPECT_NEAR(x(1), 2.0, 1e-14);
}

TEST(SparseSolve, SingularThrows)
{
    SparseMatrix A(2, 2);
    A.insert(0, 0) = 1;
    A.insert(0, 1) = 1;
    A.insert(1, 0) = 1;
    A.insert(1, 1) = 1;
    EXPECT_THROW(solve_sparse(A, Eigen::Vector2d(1, 0)), SolverError);
}

TEST(SparseSolve, ReusesAnalysisAcrossValues)
{
    const auto mesh = generate({MeshKind::Triangular, 3, 0});
    const DofLayout layout(SpaceKind::Morley, 2);
    const auto map = build_dof_map(mesh, layout, BoundaryCondition::CP);
    const auto elements = compute_elements(mesh, layout);
    const auto M = free_block(assemble_operator(map, elements, OperatorKind::Mass), map);
    const auto A = free_block(assemble_operator(map, elements, OperatorKind::Stiffness4), map);
    SparseSolver solver;
    const Eigen::VectorXd b = Eigen::VectorXd::Ones(map.num_free);
    for (double dt : {0.1, 0.01}) {
        const SparseMatrix K = M + dt * A;
        solver.compute(K);
        const auto x = solver.solve(b);
        EXPECT_LT((K * x - b).lpNorm<Eigen::Infinity>(), 1e-10);
    }
}
