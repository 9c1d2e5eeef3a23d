#include "polyvem/vem_element.hpp"

#include "polyvem/errors.hpp"

#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "test_support.hpp"

using namespace polyvem;
using polyvem::testing::random_polygon;
using polyvem::testing::regular_polygon;
using polyvem::testing::unit_square;

namespace {

double max_abs(const Eigen::MatrixXd& m)
{
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

SmoothFunction polynomial_field(double c0, double cx, double cy, double cxx, double cxy, double cyy)
{
    SmoothFunction f;
    f.value = [=](const Eigen::Vector2d& p) {
        return c0 + cx * p(0) + cy * p(1) + cxx * p(0) * p(0) + cxy * p(0) * p(1) + cyy * p(1) * p(1);
    };
    f.gradient = [=](const Eigen::Vector2d& p) {
        return Eigen::Vector2d(cx + 2 * cxx * p(0) + cxy * p(1), cy + cxy * p(0) + 2 * cyy * p(1));
    };
    return f;
}

struct Case {
    SpaceKind space;
    int k;
};

std::vector<Eigen::Matrix2Xd> sample_polygons()
{
    std::mt19937_64 rng(2024);
    std::vector<Eigen::Matrix2Xd> out{unit_square(), regular_polygon(3), regular_polygon(5)};
    for (int i = 0; i < 8; ++i) {
        out.push_back(random_polygon(rng, 3 + i % 6, i % 2 ? 0.25 : 0.6));
    }
    // arrow-shaped: not star-shaped about its centroid
    Eigen::Matrix2Xd arrow(2, 6);
    arrow << 0, 4, 4, 0, 3.9, 3.9,
             0, 0, 1, 1, 0.9, 0.1;
    out.push_back(arrow * 0.3);
    return out;
}

}  // namespace

TEST(DofLayout, DimensionFormulas)
{
    for (int k = 2; k <= 5; ++k) {
        for (int n = 3; n <= 7; ++n) {
            const DofLayout c0(SpaceKind::C0NC, k);
            const DofLayout mo(SpaceKind::Morley, k);
            EXPECT_EQ(c0.local_count(n), n * (2 * k - 1) + (k - 2) * (k - 3) / 2);
            EXPECT_EQ(mo.local_count(n), 2 * n * (k - 1) + (k - 2) * (k - 3) / 2);
        }
    }
    const auto pentagon = make_polygon(regular_polygon(5));
    EXPECT_EQ(local_dof_count(DofLayout(SpaceKind::Morley, 2), pentagon), 10);
    EXPECT_EQ(local_dof_count(DofLayout(SpaceKind::C0NC, 2), pentagon), 15);
    EXPECT_EQ(local_dof_count(DofLayout(SpaceKind::Morley, 4), make_polygon(regular_polygon(3))), 19);
    EXPECT_THROW(DofLayout(SpaceKind::Morley, 1), InputError);
}

TEST(DofFunctionals, HandComputedExamples)
{
    const auto sq = make_polygon(unit_square());
    const DofLayout c0(SpaceKind::C0NC, 2);
    const auto v = dof_functionals(c0, sq, polynomial_field(0, 1, 0, 0, 0, 0));
    // bottom edge is edge 0, right edge is edge 1
    EXPECT_NEAR(v(c0.edge0_dof(4, 0, 0)), 0.5, 1e-15);
    EXPECT_NEAR(v(c0.edge1_dof(4, 1, 0)), 1.0, 1e-15);
    EXPECT_NEAR(v(c0.edge1_dof(4, 3, 0)), -1.0, 1e-15);

    const DofLayout mo(SpaceKind::Morley, 2);
    const auto pentagon = make_polygon(regular_polygon(5));
    const auto one = dof_functionals(mo, pentagon, polynomial_field(1, 0, 0, 0, 0, 0));
    ASSERT_EQ(one.size(), 10);
    EXPECT_LT(max_abs(one.head(5).array() - 1.0), 1e-15);
    EXPECT_LT(max_abs(one.tail(5)), 1e-15);
}

TEST(DofFunctionals, MorleyBlocksAreSubsetOfC0NC)
{
    const auto cell = make_polygon(regular_polygon(6));
    const auto f = polynomial_field(0.3, -1, 2, 0.5, 1.5, -0.7);
    for (int k = 3; k <= 4; ++k) {
        const DofLayout c0(SpaceKind::C0NC, k);
        const DofLayout mo(SpaceKind::Morley, k);
        const auto a = dof_functionals(c0, cell, f);
        const auto b = dof_functionals(mo, cell, f);
        for (int e = 0; e < 6; ++e) {
            for (int i = 0; i < mo.edge0_count(); ++i) {
                EXPECT_EQ(a(c0.edge0_dof(6, e, i)), b(mo.edge0_dof(6, e, i)));
            }
            for (int i = 0; i < mo.edge1_count(); ++i) {
                EXPECT_EQ(a(c0.edge1_dof(6, e, i)), b(mo.edge1_dof(6, e, i)));
            }
        }
    }
}

TEST(Projectors, ReproducePolynomials)
{
    for (const auto& verts : sample_polygons()) {
        const auto cell = make_polygon(verts);
        for (Case c : {Case{SpaceKind::C0NC, 2}, Case{SpaceKind::C0NC, 3}, Case{SpaceKind::C0NC, 4},
                       Case{SpaceKind::Morley, 2}, Case{SpaceKind::Morley, 3}, Case{SpaceKind::Morley, 4}}) {
            if (c.k == 4 && !is_star_shaped_wrt(cell.vertices, cell.centroid)) {
                continue;  // the monomial Gram matrix of the arrow reaches cond 1e10 at k = 4
            }
            const DofLayout layout(c.space, c.k);
            const auto ops = build_element(layout, cell);
            const int nk = monomial_count(c.k);
            const int nk1 = monomial_count(c.k - 1);
            const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(nk, nk);
            const std::string tag = to_string(c.space) + " k=" + std::to_string(c.k) + " N=" +
                                    std::to_string(cell.num_vertices());
            EXPECT_LT(max_abs(ops.P_H2 * ops.D - I), 1e-10) << tag;
            EXPECT_LT(max_abs(ops.P_L2 * ops.D - I), 1e-10) << tag;
            EXPECT_LT(max_abs(ops.P_H1 * ops.D - I), 1e-10) << tag;
            const ScaledMonomialBasis<double> basis(c.k, cell.centroid, cell.diameter);
            for (int d = 0; d < 2; ++d) {
                const Eigen::MatrixXd expect = basis.derivative_matrix(d).topRows(nk1);
                EXPECT_LT(max_abs(ops.P_grad[d] * ops.D - expect) * cell.diameter, 1e-10) << tag;
            }
        }
    }
}

TEST(Projectors, IdempotentInDofSpace)
{
    std::mt19937_64 rng(9);
    const auto cell = make_polygon(random_polygon(rng, 7, 0.3));
    for (SpaceKind s : {SpaceKind::C0NC, SpaceKind::Morley}) {
        const auto ops = build_element(DofLayout(s, 3), cell);
        for (const Eigen::MatrixXd* P : {&ops.P_H2, &ops.P_L2, &ops.P_H1}) {
            const Eigen::MatrixXd DP = ops.D * *P;
            EXPECT_LT(max_abs(DP * DP - DP), 1e-10);
        }
    }
}

TEST(LocalMatrices, KConsistency)
{
    for (const auto& verts : sample_polygons()) {
        const auto cell = make_polygon(verts);
        for (Case c : {Case{SpaceKind::C0NC, 2}, Case{SpaceKind::C0NC, 3}, Case{SpaceKind::Morley, 2},
                       Case{SpaceKind::Morley, 3}}) {
            const DofLayout layout(c.space, c.k);
            const auto ctx = make_element_context(layout, cell);
            const auto ops = build_element(layout, cell);
            // the arrow's Gram matrices are far worse conditioned than any mesh cell
            const double tol = is_star_shaped_wrt(cell.vertices, cell.centroid) ? 1e-10 : 1e-8;
            EXPECT_LT(max_abs(ops.D.transpose() * ops.Mh * ops.D - ctx.G0), tol * max_abs(ctx.G0));
            EXPECT_LT(max_abs(ops.D.transpose() * ops.Bh * ops.D - ctx.GB), tol * max_abs(ctx.GB));
            EXPECT_LT(max_abs(ops.D.transpose() * ops.Ah * ops.D - ctx.GA), tol * max_abs(ctx.GA));
        }
    }
}

TEST(LocalMatrices, UnitSquareExamples)
{
    const auto sq = make_polygon(unit_square());
    const DofLayout layout(SpaceKind::Morley, 2);
    const auto ops = build_element(layout, sq);
    const auto one = dof_functionals(layout, sq, polynomial_field(1, 0, 0, 0, 0, 0));
    EXPECT_NEAR(one.dot(ops.Mh * one), 1.0, 1e-12);
    EXPECT_NEAR(max_abs(ops.Bh * one), 0.0, 1e-12);
    // scaled (2,0) monomial: ((x - 1/2)/sqrt 2)^2, hessian entries 1 (xx)
    const auto m20 = dof_functionals(layout, sq, polynomial_field(0.125, -0.5, 0, 0.5, 0, 0));
    EXPECT_NEAR(m20.dot(ops.Ah * m20), 1.0, 1e-12);
}

TEST(LocalMatrices, SymmetricSemidefiniteWithKernels)
{
    std::mt19937_64 rng(21);
    const auto cell = make_polygon(random_polygon(rng, 6, 0.3));
    for (SpaceKind s : {SpaceKind::C0NC, SpaceKind::Morley}) {
        for (int k : {2, 3}) {
            const auto ops = build_element(DofLayout(s, k), cell);
            for (const Eigen::MatrixXd* M : {&ops.Mh, &ops.Ah, &ops.Bh}) {
                EXPECT_EQ(max_abs(*M - M->transpose()), 0.0);
                const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(*M);
                EXPECT_GT(es.eigenvalues().minCoeff(), -1e-10 * es.eigenvalues().maxCoeff());
            }
            const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> mass(ops.Mh);
            EXPECT_GT(mass.eigenvalues().minCoeff(), 0.0);
            const double scale = max_abs(ops.Ah);
            EXPECT_LT(max_abs(ops.Ah * ops.D.leftCols(3)), 1e-10 * scale);
            EXPECT_LT(max_abs(ops.Bh * ops.D.col(0)), 1e-10 * max_abs(ops.Bh));
        }
    }
}

TEST(LocalMatrices, ScaleCovariance)
{
    std::mt19937_64 rng(31);
    const Eigen::Matrix2Xd v = random_polygon(rng, 5, 0.4);
    const DofLayout layout(SpaceKind::C0NC, 3);
    const auto big = build_element(layout, make_polygon(v));
    for (double s : {0.5, 0.125, 1.0 / 64}) {
        const auto small = build_element(layout, make_polygon(s * v));
        // every DoF scales like v itself, so the forms scale like the exact ones
        EXPECT_LT(max_abs(small.Mh / (s * s) - big.Mh), 1e-9 * max_abs(big.Mh));
        EXPECT_LT(max_abs(small.Bh - big.Bh), 1e-9 * max_abs(big.Bh));
        EXPECT_LT(max_abs(small.Ah * (s * s) - big.Ah), 1e-9 * max_abs(big.Ah));
    }
}

TEST(H2Projector, MorleyTriangleIsClassicalMorley)
{
    // on triangles the k=2 Morley space is P2, so the projector inverts D
    std::mt19937_64 rng(41);
    for (int t = 0; t < 4; ++t) {
        const auto cell = make_polygon(random_polygon(rng, 3, 0.5));
        const auto ops = build_element(DofLayout(SpaceKind::Morley, 2), cell);
        ASSERT_EQ(ops.D.rows(), 6);
        const Eigen::MatrixXd Dinv = ops.D.inverse();
        EXPECT_LT(max_abs(ops.P_H2 - Dinv), 1e-10 * max_abs(Dinv));
        EXPECT_LT(max_abs(ops.P_L2 - Dinv), 1e-10 * max_abs(Dinv));
        EXPECT_LT(max_abs(ops.D * ops.P_H2 - Eigen::MatrixXd::Identity(6, 6)), 1e-10);
    }
}

TEST(H2Projector, MorleySquareAgainstSaddlePointOracle)
{
    // independent route: Lagrange-multiplier system with hand-coded constant hessians
    const auto sq = make_polygon(unit_square());
    const DofLayout layout(SpaceKind::Morley, 2);
    const auto ops = build_element(layout, sq);
    const double h2 = 2.0;  // h_K^2
    // hessians (xx, xy, yy) of the scaled quadratics x^2, xy, y^2
    const double H[3][3] = {{2 / h2, 0, 0}, {0, 1 / h2, 0}, {0, 0, 2 / h2}};
    const Eigen::Vector2d normals[4] = {{0, -1}, {1, 0}, {0, 1}, {-1, 0}};
    const Eigen::Vector2d tangents[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
    // A^K(m_alpha, v) for the 8 canonical basis functions (4 vertex, 4 normal moments)
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(3, 8);
    for (int a = 0; a < 3; ++a) {
        Eigen::Matrix2d Hm;
        Hm << H[a][0], H[a][1], H[a][1], H[a][2];
        for (int e = 0; e < 4; ++e) {
            const double mnn = normals[e].dot(Hm * normals[e]);
            const double mnt = normals[e].dot(Hm * tangents[e]);
            rhs(a, 4 + e) += mnn;
            rhs(a, (e + 1) % 4) += mnt;
            rhs(a, e) -= mnt;
        }
    }
    // Hessian Gram on the quadratic block is |K| * H:H
    Eigen::Matrix3d GA;
    for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
            GA(a, b) = H[a][0] * H[b][0] + 2 * H[a][1] * H[b][1] + H[a][2] * H[b][2];
        }
    }
    // constraints: vertex mean and boundary integral of the gradient
    Eigen::MatrixXd Cv = Eigen::MatrixXd::Zero(3, 8);
    Cv.row(0).head(4).setConstant(0.25);
    for (int e = 0; e < 4; ++e) {
        Cv(1, 4 + e) += normals[e](0);
        Cv(2, 4 + e) += normals[e](1);
        Cv(1, (e + 1) % 4) += tangents[e](0);
        Cv(1, e) -= tangents[e](0);
        Cv(2, (e + 1) % 4) += tangents[e](1);
        Cv(2, e) -= tangents[e](1);
    }
    const Eigen::MatrixXd Cp = Cv * ops.D;  // 3 x 6
    // minimize 1/2 c^T GA6 c - c^T rhs6 subject to Cp c = Cv
    Eigen::MatrixXd GA6 = Eigen::MatrixXd::Zero(6, 6);
    GA6.bottomRightCorner(3, 3) = GA;
    Eigen::MatrixXd rhs6 = Eigen::MatrixXd::Zero(6, 8);
    rhs6.bottomRows(3) = rhs;
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(9, 9);
    K.topLeftCorner(6, 6) = GA6;
    K.topRightCorner(6, 3) = Cp.transpose();
    K.bottomLeftCorner(3, 6) = Cp;
    Eigen::MatrixXd R(9, 8);
    R.topRows(6) = rhs6;
    R.bottomRows(3) = Cv;
    const Eigen::MatrixXd sol = K.colPivHouseholderQr().solve(R);
    EXPECT_LT(max_abs(sol.topRows(6) - ops.P_H2), 1e-10);
}

TEST(Reconstruction, InteriorMeanMatchesQuadrature)
{
    std::mt19937_64 rng(51);
    const auto cell = make_polygon(random_polygon(rng, 5, 0.5));
    const DofLayout layout(SpaceKind::C0NC, 3);
    const auto ctx = make_element_context(layout, cell);
    const auto h2 = compute_H2_projector(layout, ctx);
    const auto R = reconstruct_moments(layout, ctx, h2.P);
    const Eigen::VectorXd U = Eigen::VectorXd::Random(layout.local_count(5));
    const Eigen::VectorXd coeffs = h2.P * U;
    const auto rule = polygon_quadrature(cell.vertices, 8);
    double integral = 0.0;
    for (int q = 0; q < rule.size(); ++q) {
        integral += rule.weights(q) * ctx.basis.values(rule.points.col(q)).dot(coeffs);
    }
    const FullMomentIndex idx{5, 3};
    EXPECT_NEAR((R.row(idx.cell(0)) * U)(0), integral / (cell.diameter * cell.diameter), 1e-12);
    // zero DoFs give zero moments
    EXPECT_EQ(max_abs(R * Eigen::VectorXd::Zero(U.size())), 0.0);
}

TEST(Reconstruction, PolynomialMomentsAreExact)
{
    const auto cell = make_polygon(regular_polygon(5));
    for (SpaceKind s : {SpaceKind::C0NC, SpaceKind::Morley}) {
        const DofLayout layout(s, 2);
        const auto ctx = make_element_context(layout, cell);
        const auto h2 = compute_H2_projector(layout, ctx);
        const auto R = reconstruct_moments(layout, ctx, h2.P);
        EXPECT_LT(max_abs(R * ctx.D - ctx.Dfull), 1e-12);
    }
}

TEST(EdgeTrace, RecoversPolynomialOnSegment)
{
    for (int k = 2; k <= 5; ++k) {
        const Eigen::MatrixXd T = edge_trace_operator(k);
        const Eigen::VectorXd a = Eigen::VectorXd::Random(k + 1);
        const auto p = [&](double s) {
            double v = 0.0;
            for (int j = 0; j <= k; ++j) {
                v += a(j) * std::pow(s, j);
            }
            return v;
        };
        Eigen::VectorXd data(k + 1);
        data(0) = p(-0.5);
        data(1) = p(0.5);
        const auto [x, w] = gauss_legendre<double>(k + 2);
        for (int i = 0; i <= k - 2; ++i) {
            double m = 0.0;
            for (int q = 0; q < x.size(); ++q) {
                m += 0.5 * w(q) * p(0.5 * x(q)) * std::pow(0.5 * x(q), i);
            }
            data(2 + i) = m;
        }
        EXPECT_LT((T * data - a).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(Nonlinear, ZeroAndLinearCases)
{
    const auto sq = make_polygon(unit_square());
    const DofLayout layout(SpaceKind::Morley, 2);
    const auto ops = build_element(layout, sq);
    const Eigen::VectorXd U = Eigen::VectorXd::Random(8);
    const auto zero = local_nonlinear(ops, U, {[](double) { return 0.0; }, [](double) { return 0.0; }});
    EXPECT_EQ(max_abs(zero.F), 0.0);
    EXPECT_EQ(max_abs(zero.J), 0.0);
    const auto one = dof_functionals(layout, sq, polynomial_field(1, 0, 0, 0, 0, 0));
    const auto lin = local_nonlinear(ops, one, {[](double u) { return u; }, [](double) { return 1.0; }});
    EXPECT_NEAR(one.dot(lin.F), 1.0, 1e-12);
}

TEST(Nonlinear, JacobianMatchesFiniteDifferences)
{
    std::mt19937_64 rng(61);
    const auto cell = make_polygon(random_polygon(rng, 6, 0.4));
    const Nonlinearity f{[](double u) { return u - u * u * u; }, [](double u) { return 1.0 - 3.0 * u * u; }};
    for (SpaceKind s : {SpaceKind::C0NC, SpaceKind::Morley}) {
        const auto ops = build_element(DofLayout(s, 2), cell);
        const Eigen::VectorXd U = Eigen::VectorXd::Random(ops.D.rows());
        const Eigen::VectorXd dir = Eigen::VectorXd::Random(U.size());
        const double eps = 1e-6;
        const auto base = local_nonlinear(ops, U, f);
        const Eigen::VectorXd fd =
            (local_nonlinear(ops, U + eps * dir, f).F - local_nonlinear(ops, U - eps * dir, f).F) / (2 * eps);
        EXPECT_LT((fd - base.J * dir).norm(), 1e-6 * (base.J * dir).norm());
    }
}

TEST(Nonlinear, NonFiniteValueReportsCell)
{
    auto ops = build_element(DofLayout(SpaceKind::Morley, 2), make_polygon(unit_square()), 17);
    try {
        local_nonlinear(ops, Eigen::VectorXd::Ones(8), {[](double) { return NAN; }, [](double) { return 0.0; }});
        FAIL();
    } catch (const ElementError& e) {
        EXPECT_EQ(e.cell(), 17);
    }
}
