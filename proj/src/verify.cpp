#include "polyvem/verify.hpp"

#include "polyvem/assembly.hpp"
#include "polyvem/errors.hpp"
#include "polyvem/geometry.hpp"
#include "polyvem/mesh.hpp"
#include "polyvem/polybasis.hpp"
#include "polyvem/problems.hpp"
#include "polyvem/timestepper.hpp"
#include "polyvem/vem_element.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace polyvem {

namespace {

double max_abs(const Eigen::MatrixXd& m)
{
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

CheckResult check(std::string name, double value, double threshold, std::string detail = {})
{
    return {std::move(name), std::isfinite(value) && value <= threshold, value, threshold, std::move(detail)};
}

Eigen::Matrix2Xd regular(int n)
{
    Eigen::Matrix2Xd v(2, n);
    for (int i = 0; i < n; ++i) {
        const double t = 2.0 * std::numbers::pi * i / n;
        v.col(i) << std::cos(t), std::sin(t);
    }
    return v;
}

// Star-shaped about the origin with sorted jittered angles, hence simple;
// small radii on alternate vertices make many of them nonconvex.
std::vector<PolygonGeometry> random_polygons(int count, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<PolygonGeometry> out;
    while (static_cast<int>(out.size()) < count) {
        const int n = 3 + static_cast<int>(out.size()) % 6;
        const double rmin = out.size() % 2 == 0 ? 0.6 : 0.3;
        Eigen::Matrix2Xd v(2, n);
        const double step = 2.0 * std::numbers::pi / n;
        for (int i = 0; i < n; ++i) {
            const double theta = step * (i + 0.6 * (unit(rng) - 0.5));
            const double r = rmin + (1.0 - rmin) * unit(rng);
            v.col(i) << r * std::cos(theta), r * std::sin(theta);
        }
        try {
            out.push_back(make_polygon(v));
        } catch (const GeometryError&) {
        }
    }
    return out;
}

SmoothFunction monomial(const ScaledMonomialBasis<double>& basis, int j)
{
    SmoothFunction f;
    f.value = [basis, j](const Eigen::Vector2d& x) { return basis.values(x)(j); };
    f.gradient = [basis, j](const Eigen::Vector2d& x) { return Eigen::Vector2d(basis.gradients(x).row(j)); };
    f.hessian = [basis, j](const Eigen::Vector2d& x) { return Eigen::Vector3d(basis.hessians(x).row(j)); };
    return f;
}

// DoF vectors of all scaled monomials of degree <= k, one per column.
Eigen::MatrixXd monomial_dofs(const DofLayout& layout, const PolygonGeometry& cell)
{
    const auto basis = build_element_basis(cell, layout.order());
    Eigen::MatrixXd D(local_dof_count(layout, cell), basis.size());
    for (int j = 0; j < basis.size(); ++j) {
        D.col(j) = dof_functionals(layout, cell, monomial(basis, j));
    }
    return D;
}

struct Case {
    SpaceKind space;
    int k;
};

const std::vector<Case>& sweep_cases()
{
    static const std::vector<Case> cases{{SpaceKind::C0NC, 2}, {SpaceKind::C0NC, 3}, {SpaceKind::Morley, 2},
                                         {SpaceKind::Morley, 3}};
    return cases;
}

std::string tag(const Case& c)
{
    return to_string(c.space) + " k=" + std::to_string(c.k);
}

}  // namespace

std::vector<CheckResult> verify_dims()
{
    std::vector<CheckResult> out;
    const std::vector<std::pair<std::string, Eigen::Matrix2Xd>> shapes{
        {"triangle", regular(3)}, {"square", regular(4)}, {"pentagon", regular(5)}};
    for (const auto& [name, verts] : shapes) {
        const auto cell = make_polygon(verts);
        const int N = cell.num_vertices();
        for (SpaceKind space : {SpaceKind::C0NC, SpaceKind::Morley}) {
            for (int k = 2; k <= 4; ++k) {
                const DofLayout layout(space, k);
                // enumerate the functionals one by one from the tuple
                const DofTuple t = dof_tuple(space, k);
                int enumerated = N;
                for (int e = 0; e < N; ++e) {
                    for (int i = 0; i <= t.d_edge0; ++i) ++enumerated;
                    for (int i = 0; i <= t.d_edge1; ++i) ++enumerated;
                }
                for (int d = 0; d <= t.d_cell0; ++d) {
                    for (int a = 0; a <= d; ++a) ++enumerated;
                }
                const int closed = space == SpaceKind::C0NC ? N * (2 * k - 1) + (k - 2) * (k - 3) / 2
                                                            : 2 * N * (k - 1) + (k - 2) * (k - 3) / 2;
                const auto functionals = dof_functionals(layout, cell, SmoothFunction{
                    [](const Eigen::Vector2d&) { return 1.0; },
                    [](const Eigen::Vector2d&) { return Eigen::Vector2d::Zero().eval(); }, {}});
                const double diff = std::abs(enumerated - closed) + std::abs(local_dof_count(layout, cell) - closed) +
                                    std::abs(static_cast<int>(functionals.size()) - closed);
                std::ostringstream d;
                d << "enumerated " << enumerated << ", closed form " << closed;
                out.push_back(check("dims " + name + " " + to_string(space) + " k=" + std::to_string(k), diff, 0.0,
                                    d.str()));
            }
        }
    }
    return out;
}

std::vector<CheckResult> verify_projectors(int polygons, std::uint64_t seed)
{
    std::vector<CheckResult> out;
    const auto cells = random_polygons(polygons, seed);
    for (const auto& c : sweep_cases()) {
        const DofLayout layout(c.space, c.k);
        double err[4] = {0, 0, 0, 0};
        int nonconvex = 0;
        for (const auto& cell : cells) {
            const auto ops = build_element(layout, cell);
            const Eigen::MatrixXd D = monomial_dofs(layout, cell);
            const int nk = monomial_count(c.k);
            const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(nk, nk);
            const auto basis = build_element_basis(cell, c.k);
            err[0] = std::max(err[0], max_abs(ops.P_H2 * D - I));
            err[1] = std::max(err[1], max_abs(ops.P_L2 * D - I));
            for (int d = 0; d < 2; ++d) {
                // gradient coefficients carry 1/h_K; compare them in units of h_K
                const Eigen::MatrixXd expect = basis.derivative_matrix(d).topRows(monomial_count(c.k - 1));
                err[2] = std::max(err[2], max_abs(ops.P_grad[d] * D - expect) * cell.diameter);
            }
            err[3] = std::max(err[3], max_abs(ops.P_H1 * D - I));
            for (int i = 0; i < cell.num_vertices(); ++i) {
                const Point a = cell.vertex(i - 1), b = cell.vertex(i), n = cell.vertex(i + 1);
                const Point u = b - a, w = n - b;
                if (u(0) * w(1) - u(1) * w(0) < 0.0) {
                    ++nonconvex;
                    break;
                }
            }
        }
        const std::string detail = std::to_string(cells.size()) + " polygons, " + std::to_string(nonconvex) +
                                   " nonconvex";
        out.push_back(check("projector H2 " + tag(c), err[0], 1e-9, detail));
        out.push_back(check("projector L2 " + tag(c), err[1], 1e-9, detail));
        out.push_back(check("projector grad " + tag(c), err[2], 1e-9, detail));
        out.push_back(check("projector H1 " + tag(c), err[3], 1e-9, detail));
    }
    return out;
}

std::vector<CheckResult> verify_consistency(int polygons, std::uint64_t seed)
{
    std::vector<CheckResult> out;
    const auto cells = random_polygons(polygons, seed);
    for (const auto& c : sweep_cases()) {
        const DofLayout layout(c.space, c.k);
        double err[3] = {0, 0, 0};
        for (const auto& cell : cells) {
            const auto ops = build_element(layout, cell);
            const Eigen::MatrixXd D = monomial_dofs(layout, cell);
            // exact Gram matrices by a separate high-order rule
            const auto basis = build_element_basis(cell, c.k);
            const auto quad = polygon_quadrature(cell.vertices, 2 * c.k + 2);
            const int nk = basis.size();
            Eigen::MatrixXd G0 = Eigen::MatrixXd::Zero(nk, nk), GA = G0, GB = G0;
            for (int q = 0; q < quad.size(); ++q) {
                const Point x = quad.points.col(q);
                const Eigen::VectorXd v = basis.values(x);
                const Eigen::MatrixXd g = basis.gradients(x);
                const Eigen::MatrixXd h = basis.hessians(x);
                const double w = quad.weights(q);
                G0 += w * v * v.transpose();
                GB += w * g * g.transpose();
                GA += w * (h.col(0) * h.col(0).transpose() + 2.0 * h.col(1) * h.col(1).transpose() +
                           h.col(2) * h.col(2).transpose());
            }
            err[0] = std::max(err[0], max_abs(D.transpose() * ops.Mh * D - G0) / max_abs(G0));
            err[1] = std::max(err[1], max_abs(D.transpose() * ops.Ah * D - GA) / max_abs(GA));
            err[2] = std::max(err[2], max_abs(D.transpose() * ops.Bh * D - GB) / max_abs(GB));
        }
        out.push_back(check("consistency mass " + tag(c), err[0], 1e-9));
        out.push_back(check("consistency hessian " + tag(c), err[1], 1e-9));
        out.push_back(check("consistency gradient " + tag(c), err[2], 1e-9));
    }
    return out;
}

std::vector<CheckResult> verify_patch(int resolution)
{
    std::vector<CheckResult> out;
    const double dt = 0.1;
    for (MeshKind kind : {MeshKind::Triangular, MeshKind::DistortedQuad, MeshKind::ConcaveQuad, MeshKind::VoronoiCVT}) {
        const PolygonalMesh mesh = generate({kind, resolution, 3});
        for (const auto& c : sweep_cases()) {
            const DofLayout layout(c.space, c.k);
            for (BoundaryCondition bc : {BoundaryCondition::CP, BoundaryCondition::CH}) {
                // Clamped: any polynomial of degree k. Cahn-Hilliard: p(x) + q(y) of
                // degree 2, which satisfies the natural conditions of the weak form.
                std::mt19937_64 rng(static_cast<std::uint64_t>(31 * c.k + static_cast<int>(bc)));
                std::uniform_real_distribution<double> coef(-1.0, 1.0);
                Polynomial2 p0, p1;
                const int n = monomial_count(bc == BoundaryCondition::CP ? c.k : 2);
                p0.coeffs.resize(n);
                p1.coeffs.resize(n);
                for (int j = 0; j < n; ++j) {
                    const bool keep = bc == BoundaryCondition::CP || monomial_exponent(j).a == 0 ||
                                      monomial_exponent(j).b == 0;
                    p0.coeffs[j] = keep ? coef(rng) : 0.0;
                    p1.coeffs[j] = keep ? coef(rng) : 0.0;
                }
                const Problem problem =
                    make_polynomial_problem(p0, p1, 1.0, 0.0, zero_nonlinearity(), 1.0, bc, dt);
                const Discretization disc = discretize(mesh, layout, problem.spec);
                const Eigen::VectorXd U0 = interpolate_initial(disc, problem.exact.at(0.0));
                const auto step = newton_solve(disc, problem, U0, Eigen::VectorXd::Zero(U0.size()), dt, dt,
                                               NewtonConfig{});
                const Eigen::VectorXd expect = interpolate(mesh, layout, disc.map, problem.exact.at(dt));
                const double rel = (step.U - expect).lpNorm<Eigen::Infinity>() / expect.lpNorm<Eigen::Infinity>();
                out.push_back(check("patch " + to_string(kind) + " " + tag(c) + " " + to_string(bc), rel, 1e-8,
                                    std::to_string(step.iterations) + " newton iteration(s)"));
            }
        }
    }
    return out;
}

std::vector<CheckResult> verify_jacobian(int directions, std::uint64_t seed)
{
    std::vector<CheckResult> out;
    const Problem problem = make_test1(BoundaryCondition::CP);
    const PolygonalMesh mesh = generate({MeshKind::Triangular, 4, 1});
    const DofLayout layout(SpaceKind::Morley, 2);
    const Discretization disc = discretize(mesh, layout, problem.spec);
    const double dt = 0.25;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    const auto random_free = [&] {
        Eigen::VectorXd v(disc.map.num_free);
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            v(i) = unit(rng);
        }
        return v;
    };
    // O(1) states so the cubic term matters
    const Eigen::VectorXd lifted = boundary_values(mesh, layout, disc.map, problem.exact.at(dt));
    const Eigen::VectorXd U = combine(disc.map, random_free(), lifted);
    const Eigen::VectorXd U_prev = combine(disc.map, random_free(), lifted);
    const Eigen::VectorXd load =
        assemble_load(disc.map, disc.elements, [&](const Point& x) { return problem.load(x, dt); });
    const SparseMatrix J = newton_jacobian(disc, problem, U, dt);
    double worst = 0.0;
    const double eps = 1e-6;
    for (int i = 0; i < directions; ++i) {
        const Eigen::VectorXd d = random_free();
        const Eigen::VectorXd up = U + combine(disc.map, eps * d, Eigen::VectorXd::Zero(lifted.size()));
        const Eigen::VectorXd um = U - combine(disc.map, eps * d, Eigen::VectorXd::Zero(lifted.size()));
        const Eigen::VectorXd fd = (newton_residual(disc, problem, up, U_prev, load, dt) -
                                    newton_residual(disc, problem, um, U_prev, load, dt)) / (2.0 * eps);
        const Eigen::VectorXd Jd = J * d;
        worst = std::max(worst, (fd - Jd).norm() / Jd.norm());
    }
    out.push_back(check("jacobian test1 morley k=2 triangular res 4", worst, 1e-5,
                        std::to_string(directions) + " random directions"));
    return out;
}

std::vector<CheckResult> verify_bc_unification()
{
    std::vector<CheckResult> out;
    const PolygonalMesh mesh = generate({MeshKind::VoronoiCVT, 4, 5});
    for (const auto& c : sweep_cases()) {
        const DofLayout layout(c.space, c.k);
        ProblemSpec spec;
        spec.bc = BoundaryCondition::CP;
        const auto cp = discretize(mesh, layout, spec, 1);
        spec.bc = BoundaryCondition::NC;
        const auto nc = discretize(mesh, layout, spec, 2);
        spec.bc = BoundaryCondition::CH;
        const auto ch = discretize(mesh, layout, spec, 3);
        int mismatches = 0;
        for (int e = 0; e < mesh.num_cells(); ++e) {
            for (const auto* other : {&nc, &ch}) {
                const auto& a = cp.elements[e];
                const auto& b = other->elements[e];
                mismatches += !(a.Mh == b.Mh && a.Ah == b.Ah && a.Bh == b.Bh && a.P_H2 == b.P_H2 &&
                                a.P_L2 == b.P_L2 && a.P_H1 == b.P_H1);
            }
        }
        out.push_back(check("bc-independent element matrices " + tag(c), mismatches, 0.0,
                            std::to_string(mesh.num_cells()) + " cells, CP vs NC vs CH"));

        int boundary_vertices = 0, ch_free_boundary_vertices = 0;
        for (int v = 0; v < mesh.num_vertices(); ++v) {
            if (mesh.boundary_vertex(v)) {
                ++boundary_vertices;
                ch_free_boundary_vertices += ch.map.free_index[ch.map.vertex_dof(v)] >= 0;
            }
        }
        const bool maps_differ = cp.map.num_free < nc.map.num_free && nc.map.num_free <= ch.map.num_free;
        out.push_back(check("CH keeps boundary vertex values free " + tag(c),
                            boundary_vertices - ch_free_boundary_vertices, 0.0,
                            std::to_string(ch_free_boundary_vertices) + " of " + std::to_string(boundary_vertices)));
        std::ostringstream d;
        d << "free DoFs CP " << cp.map.num_free << ", NC " << nc.map.num_free << ", CH " << ch.map.num_free;
        out.push_back(check("DoF maps differ by condition " + tag(c), maps_differ ? 0.0 : 1.0, 0.0, d.str()));
    }
    return out;
}

const std::vector<std::string>& verify_suites()
{
    static const std::vector<std::string> suites{"dims", "projectors", "consistency", "patch", "jacobian", "bc"};
    return suites;
}

std::vector<CheckResult> run_verify(const std::string& suite)
{
    if (suite == "dims") return verify_dims();
    if (suite == "projectors") return verify_projectors();
    if (suite == "consistency") return verify_consistency();
    if (suite == "patch") return verify_patch();
    if (suite == "jacobian") return verify_jacobian();
    if (suite == "bc") return verify_bc_unification();
    std::string valid;
    for (const auto& s : verify_suites()) {
        valid += (valid.empty() ? "" : ", ") + s;
    }
    throw ConfigError("unknown verification suite '" + suite + "' (valid: " + valid + ")");
}

}  // namespace polyvem
