#include "polyvem/vem_element.hpp"

#include "polyvem/errors.hpp"

#include <cmath>

namespace polyvem {

std::string to_string(SpaceKind space)
{
    return space == SpaceKind::C0NC ? "c0nc" : "morley";
}

SpaceKind parse_space(const std::string& name)
{
    if (name == "c0nc" || name == "C0NC") return SpaceKind::C0NC;
    if (name == "morley" || name == "Morley") return SpaceKind::Morley;
    throw ConfigError("unknown space '" + name + "' (valid: c0nc, morley)");
}

DofTuple dof_tuple(SpaceKind space, int k)
{
    if (space == SpaceKind::C0NC) {
        return {0, k - 2, k - 2, k - 4};
    }
    return {0, k - 3, k - 2, k - 4};
}

DofLayout::DofLayout(SpaceKind space, int k) : space_(space), k_(k), tuple_(dof_tuple(space, k))
{
    if (k < 2) {
        throw InputError("polynomial order k must be >= 2");
    }
}

int local_dof_count(const DofLayout& layout, const PolygonGeometry& cell)
{
    return layout.local_count(cell.num_vertices());
}

namespace {

struct EdgeFrame {
    Point a, b, t, n;
    double length;
};

EdgeFrame edge_frame(const PolygonGeometry& g, int e)
{
    EdgeFrame f;
    f.a = g.vertex(e);
    f.b = g.vertex(e + 1);
    f.length = (f.b - f.a).norm();
    f.t = (f.b - f.a) / f.length;
    f.n = Point(f.t(1), -f.t(0));
    return f;
}

Eigen::VectorXd powers(double s, int n)
{
    Eigen::VectorXd p(n);
    double v = 1.0;
    for (int i = 0; i < n; ++i) {
        p(i) = v;
        v *= s;
    }
    return p;
}

// Gauss nodes on [-1/2, 1/2] and the inverse Vandermonde mapping nodal values
// to coefficients in powers of s_hat.
struct EdgeFit {
    Eigen::VectorXd nodes;
    Eigen::MatrixXd inverse;
};

EdgeFit edge_fit(int n)
{
    EdgeFit fit;
    if (n <= 0) {
        return fit;
    }
    fit.nodes = gauss_legendre<double>(n).first / 2.0;
    Eigen::MatrixXd V(n, n);
    for (int q = 0; q < n; ++q) {
        V.row(q) = powers(fit.nodes(q), n).transpose();
    }
    fit.inverse = V.inverse();
    return fit;
}

Eigen::MatrixXd solve_checked(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const char* what, int cell_id)
{
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
    const double rc = lu.rcond();
    if (!(rc > 1e-14)) {
        throw ElementError(std::string(what) + ": singular local system (rcond " + std::to_string(rc) + ")", cell_id);
    }
    return lu.solve(B);
}

double perimeter(const PolygonGeometry& g)
{
    double p = 0.0;
    for (int e = 0; e < g.num_vertices(); ++e) {
        p += (g.vertex(e + 1) - g.vertex(e)).norm();
    }
    return p;
}

TableFn monomial_table(const ScaledMonomialBasis<double>& basis, int component)
{
    return [basis, component](const Eigen::Matrix2Xd& pts) {
        const int order = component == 0 ? 0 : 1;
        const auto t = eval_basis(basis, Eigen::Matrix<double, 2, Eigen::Dynamic>(pts), order);
        return Eigen::MatrixXd(component == 0 ? t[0] : t[component - 1]);
    };
}

}  // namespace

Eigen::MatrixXd moment_functionals(const PolygonGeometry& cell, const DofTuple& orders, const TableFn& values,
                                   const TableFn& grad_x, const TableFn& grad_y, int quad_degree)
{
    const int N = cell.num_vertices();
    const int ne0 = orders.d_edge0 + 1;
    const int ne1 = orders.d_edge1 + 1;
    const int nc = monomial_count(orders.d_cell0);
    const Eigen::MatrixXd at_vertices = values(cell.vertices);
    const Eigen::Index m = at_vertices.cols();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(N * (1 + ne0 + ne1) + nc, m);
    out.topRows(N) = at_vertices;
    for (int e = 0; e < N; ++e) {
        const auto f = edge_frame(cell, e);
        const auto rule = edge_quadrature<double>(f.a, f.b, quad_degree);
        const Eigen::Matrix2Xd pts = rule.points;
        if (ne0 > 0) {
            const Eigen::MatrixXd v = values(pts);
            for (int i = 0; i < ne0; ++i) {
                const Eigen::VectorXd w = rule.weights.cwiseProduct(rule.params.array().pow(i).matrix());
                out.row(N + e * ne0 + i) = w.transpose() * v / f.length;
            }
        }
        if (ne1 > 0) {
            const Eigen::MatrixXd dn = f.n(0) * grad_x(pts) + f.n(1) * grad_y(pts);
            for (int i = 0; i < ne1; ++i) {
                const Eigen::VectorXd w = rule.weights.cwiseProduct(rule.params.array().pow(i).matrix());
                out.row(N * (1 + ne0) + e * ne1 + i) = w.transpose() * dn;
            }
        }
    }
    if (nc > 0) {
        const ScaledMonomialBasis<double> basis(orders.d_cell0, cell.centroid, cell.diameter);
        const auto rule = polygon_quadrature(cell.vertices, quad_degree);
        const Eigen::Matrix2Xd pts = rule.points;
        const Eigen::MatrixXd v = values(pts);
        const Eigen::MatrixXd mb = eval_basis(basis, rule.points, 0)[0];
        const double h2 = cell.diameter * cell.diameter;
        out.bottomRows(nc) = mb.transpose() * rule.weights.asDiagonal() * v / h2;
    }
    return out;
}

Eigen::VectorXd dof_functionals(const DofLayout& layout, const PolygonGeometry& cell, const SmoothFunction& v,
                                int quad_degree)
{
    if (quad_degree < 0) {
        quad_degree = element_quadrature_degree(layout.order()) + 4;
    }
    const auto table = [](const auto& fn) {
        return [&fn](const Eigen::Matrix2Xd& pts) {
            Eigen::MatrixXd out(pts.cols(), 1);
            for (Eigen::Index q = 0; q < pts.cols(); ++q) {
                out(q, 0) = fn(Point(pts.col(q)));
            }
            return out;
        };
    };
    const auto gx = [&v](const Point& x) { return v.gradient(x)(0); };
    const auto gy = [&v](const Point& x) { return v.gradient(x)(1); };
    return moment_functionals(cell, layout.tuple(), table(v.value), table(gx), table(gy), quad_degree).col(0);
}

ElementContext make_element_context(const DofLayout& layout, const PolygonGeometry& cell, int cell_id)
{
    const int k = layout.order();
    const int N = cell.num_vertices();
    ScaledMonomialBasis<double> basis(k, cell.centroid, cell.diameter);
    auto quad = polygon_quadrature(cell.vertices, element_quadrature_degree(k));
    ElementContext ctx{cell, basis, quad, {}, {}, {}, {}, {}, {}, {}, {}, {}};
    const auto v = eval_basis(basis, quad.points, 0);
    const auto g = eval_basis(basis, quad.points, 1);
    const auto h = eval_basis(basis, quad.points, 2);
    ctx.values = v[0];
    ctx.grads = {g[0], g[1]};
    ctx.hess = {h[0], h[1], h[2]};
    const auto W = quad.weights.asDiagonal();
    ctx.G0 = ctx.values.transpose() * W * ctx.values;
    ctx.GB = g[0].transpose() * W * g[0] + g[1].transpose() * W * g[1];
    ctx.GA = h[0].transpose() * W * h[0] + 2.0 * (h[1].transpose() * W * h[1]) + h[2].transpose() * W * h[2];

    const DofTuple full{0, k - 2, k - 2, k};
    ctx.Dfull = moment_functionals(cell, full, monomial_table(basis, 0), monomial_table(basis, 1),
                                   monomial_table(basis, 2), element_quadrature_degree(k));
    const FullMomentIndex idx{N, k};
    ctx.dof_rows.reserve(layout.local_count(N));
    for (int i = 0; i < N; ++i) {
        ctx.dof_rows.push_back(idx.vertex(i));
    }
    for (int e = 0; e < N; ++e) {
        for (int i = 0; i < layout.edge0_count(); ++i) {
            ctx.dof_rows.push_back(idx.edge0(e, i));
        }
    }
    for (int e = 0; e < N; ++e) {
        for (int i = 0; i < layout.edge1_count(); ++i) {
            ctx.dof_rows.push_back(idx.edge1(e, i));
        }
    }
    for (int b = 0; b < layout.cell_count(); ++b) {
        ctx.dof_rows.push_back(idx.cell(b));
    }
    ctx.D = ctx.Dfull(ctx.dof_rows, Eigen::all);
    if (!ctx.D.allFinite()) {
        throw ElementError("non-finite DoF matrix", cell_id);
    }
    return ctx;
}

H2Projection compute_H2_projector(const DofLayout& layout, const ElementContext& ctx, int cell_id)
{
    const auto& g = ctx.geometry;
    const auto& basis = ctx.basis;
    const int k = layout.order();
    const int N = g.num_vertices();
    const int nk = basis.size();
    const int ndof = layout.local_count(N);
    const double hK = g.diameter;

    Eigen::MatrixXd A = ctx.GA * (hK * hK);
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(nk, ndof);

    // boundary averages of v and grad v
    Eigen::RowVectorXd L0 = Eigen::RowVectorXd::Zero(ndof);
    Eigen::RowVectorXd Lx = Eigen::RowVectorXd::Zero(ndof);
    Eigen::RowVectorXd Ly = Eigen::RowVectorXd::Zero(ndof);
    const double per = perimeter(g);
    for (int e = 0; e < N; ++e) {
        const auto f = edge_frame(g, e);
        if (layout.edge0_count() > 0) {
            L0(layout.edge0_dof(N, e, 0)) += f.length / per;
        } else {
            L0(DofLayout::vertex_dof(e)) += 1.0 / N;
        }
        const int dn0 = layout.edge1_dof(N, e, 0);
        const int v0 = DofLayout::vertex_dof(e);
        const int v1 = DofLayout::vertex_dof((e + 1) % N);
        Lx(dn0) += f.n(0);
        Ly(dn0) += f.n(1);
        Lx(v1) += f.t(0);
        Lx(v0) -= f.t(0);
        Ly(v1) += f.t(1);
        Ly(v0) -= f.t(1);
    }
    A.row(0) = L0 * ctx.D;
    A.row(1) = Lx * ctx.D;
    A.row(2) = Ly * ctx.D;
    B.row(0) = L0;
    B.row(1) = Lx;
    B.row(2) = Ly;

    const Eigen::MatrixXd Dx = basis.derivative_matrix(0);
    const Eigen::MatrixXd Dy = basis.derivative_matrix(1);
    const Eigen::MatrixXd Lap = Dx * Dx + Dy * Dy;
    const Eigen::MatrixXd GLx = Dx * Lap;
    const Eigen::MatrixXd GLy = Dy * Lap;
    const EdgeFit fit2 = edge_fit(k - 1);  // degree k-2: hessian traces
    const EdgeFit fit3 = edge_fit(k - 2);  // degree k-3: dn Laplacian trace

    Eigen::MatrixXd Bb = Eigen::MatrixXd::Zero(nk, ndof);
    const auto nn_nt = [&](const Point& x, const EdgeFrame& f, Eigen::VectorXd& mnn, Eigen::VectorXd& mnt) {
        const auto H = basis.hessians(x);
        const Point& n = f.n;
        const Point& t = f.t;
        mnn = H.col(0) * n(0) * n(0) + 2.0 * H.col(1) * n(0) * n(1) + H.col(2) * n(1) * n(1);
        mnt = H.col(0) * n(0) * t(0) + H.col(1) * (n(0) * t(1) + n(1) * t(0)) + H.col(2) * n(1) * t(1);
    };
    for (int e = 0; e < N; ++e) {
        const auto f = edge_frame(g, e);
        const Point mid = 0.5 * (f.a + f.b);
        const int n2 = k - 1;
        Eigen::MatrixXd Mnn(n2, nk), Mnt(n2, nk);
        for (int q = 0; q < n2; ++q) {
            Eigen::VectorXd a, b;
            nn_nt(mid + fit2.nodes(q) * (f.b - f.a), f, a, b);
            Mnn.row(q) = a.transpose();
            Mnt.row(q) = b.transpose();
        }
        const Eigen::MatrixXd Cnn = fit2.inverse * Mnn;
        const Eigen::MatrixXd Cnt = fit2.inverse * Mnt;
        for (int i = 0; i < n2; ++i) {
            Bb.col(layout.edge1_dof(N, e, i)) += Cnn.row(i).transpose();
        }
        // int_e M_nt dt v, integrated by parts along the edge
        Eigen::VectorXd unused, end_nt, start_nt;
        nn_nt(f.b, f, unused, end_nt);
        nn_nt(f.a, f, unused, start_nt);
        Bb.col(DofLayout::vertex_dof((e + 1) % N)) += end_nt;
        Bb.col(DofLayout::vertex_dof(e)) -= start_nt;
        for (int i = 1; i < n2; ++i) {
            Bb.col(layout.edge0_dof(N, e, i - 1)) -= static_cast<double>(i) * Cnt.row(i).transpose();
        }
        const int n3 = k - 2;
        if (n3 > 0) {
            Eigen::MatrixXd Mdl(n3, nk);
            for (int q = 0; q < n3; ++q) {
                const Eigen::VectorXd m = basis.values(mid + fit3.nodes(q) * (f.b - f.a));
                Mdl.row(q) = f.n(0) * (GLx.transpose() * m).transpose() + f.n(1) * (GLy.transpose() * m).transpose();
            }
            const Eigen::MatrixXd Cdl = fit3.inverse * Mdl;
            for (int i = 0; i < n3; ++i) {
                Bb.col(layout.edge0_dof(N, e, i)) -= f.length * Cdl.row(i).transpose();
            }
        }
    }
    if (layout.cell_count() > 0) {
        const Eigen::MatrixXd Bilap = Lap * Lap;
        for (int b = 0; b < layout.cell_count(); ++b) {
            Bb.col(layout.cell_dof(N, b)) += hK * hK * Bilap.row(b).transpose();
        }
    }
    B.bottomRows(nk - 3) = Bb.bottomRows(nk - 3) * (hK * hK);

    return {solve_checked(A, B, "H2 projector", cell_id), ctx.D};
}

Eigen::MatrixXd reconstruct_moments(const DofLayout& layout, const ElementContext& ctx, const Eigen::MatrixXd& P_H2)
{
    Eigen::MatrixXd R = ctx.Dfull * P_H2;
    const int ndof = layout.local_count(ctx.geometry.num_vertices());
    for (int j = 0; j < ndof; ++j) {
        R.row(ctx.dof_rows[j]).setZero();
        R(ctx.dof_rows[j], j) = 1.0;
    }
    return R;
}

Eigen::MatrixXd edge_trace_operator(int k)
{
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(k + 1, k + 1);
    M.row(0) = powers(-0.5, k + 1).transpose();
    M.row(1) = powers(0.5, k + 1).transpose();
    for (int i = 0; i <= k - 2; ++i) {
        for (int j = 0; j <= k; ++j) {
            const int p = i + j;
            M(2 + i, j) = p % 2 == 1 ? 0.0 : 2.0 * std::pow(0.5, p + 1) / (p + 1);
        }
    }
    return M.inverse();
}

LowerProjections compute_L2_and_grad_projectors(const DofLayout& layout, const ElementContext& ctx,
                                                const Eigen::MatrixXd& moments, int cell_id)
{
    const auto& g = ctx.geometry;
    const auto& basis = ctx.basis;
    const int k = layout.order();
    const int N = g.num_vertices();
    const int nk = basis.size();
    const int nk1 = monomial_count(k - 1);
    const int ndof = layout.local_count(N);
    const double hK = g.diameter;
    const FullMomentIndex idx{N, k};
    const Eigen::MatrixXd mu = moments.bottomRows(nk);

    LowerProjections out;
    out.P_L2 = solve_checked(ctx.G0, hK * hK * mu, "L2 projector", cell_id);

    // boundary integrals against the edge traces
    const Eigen::MatrixXd T = edge_trace_operator(k);
    std::array<Eigen::MatrixXd, 2> bnd_normal{Eigen::MatrixXd::Zero(nk, ndof), Eigen::MatrixXd::Zero(nk, ndof)};
    Eigen::MatrixXd bnd_dn = Eigen::MatrixXd::Zero(nk, ndof);
    Eigen::RowVectorXd trace_integral = Eigen::RowVectorXd::Zero(ndof);
    Eigen::RowVectorXd monomial_integral = Eigen::RowVectorXd::Zero(nk);
    for (int e = 0; e < N; ++e) {
        const auto f = edge_frame(g, e);
        Eigen::MatrixXd data(k + 1, ndof);
        data.row(0) = moments.row(idx.vertex(e));
        data.row(1) = moments.row(idx.vertex((e + 1) % N));
        for (int i = 0; i <= k - 2; ++i) {
            data.row(2 + i) = moments.row(idx.edge0(e, i));
        }
        const Eigen::MatrixXd coeff = T * data;
        const auto rule = edge_quadrature<double>(f.a, f.b, 2 * k);
        Eigen::MatrixXd S(rule.size(), k + 1);
        for (int q = 0; q < rule.size(); ++q) {
            S.row(q) = powers(rule.params(q), k + 1).transpose();
        }
        const Eigen::MatrixXd trace = S * coeff;  // nq x ndof
        const auto tab = eval_basis(basis, rule.points, 0)[0];
        const auto grad = eval_basis(basis, rule.points, 1);
        const auto W = rule.weights.asDiagonal();
        const Eigen::MatrixXd mv = tab.transpose() * W * trace;
        bnd_normal[0] += f.n(0) * mv;
        bnd_normal[1] += f.n(1) * mv;
        bnd_dn += (f.n(0) * grad[0] + f.n(1) * grad[1]).transpose() * W * trace;
        trace_integral += rule.weights.transpose() * trace;
        monomial_integral += rule.weights.transpose() * tab;
    }

    for (int d = 0; d < 2; ++d) {
        const Eigen::MatrixXd Dd = basis.derivative_matrix(d);
        const Eigen::MatrixXd rhs = (-(hK * hK) * (Dd.transpose() * mu) + bnd_normal[d]).topRows(nk1);
        out.P_grad[d] = solve_checked(ctx.G0.topLeftCorner(nk1, nk1), rhs, "gradient projector", cell_id);
    }

    const Eigen::MatrixXd Lap = basis.laplacian_matrix();
    Eigen::MatrixXd A = ctx.GB;
    Eigen::MatrixXd rhs = -(hK * hK) * (Lap.transpose() * mu) + bnd_dn;
    const double per = perimeter(g);
    A.row(0) = monomial_integral / per;
    rhs.row(0) = trace_integral / per;
    out.P_H1 = solve_checked(A, rhs, "H1 projector", cell_id);
    return out;
}

LocalMatrices local_matrices(const ElementContext& ctx, const H2Projection& h2, const LowerProjections& low)
{
    const double hK = ctx.geometry.diameter;
    const Eigen::Index n = ctx.D.rows();
    const Eigen::Index nk1 = low.P_grad[0].rows();
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
    const auto symmetric = [](const Eigen::MatrixXd& X) { return Eigen::MatrixXd(0.5 * (X + X.transpose())); };

    const Eigen::MatrixXd S0 = I - ctx.D * low.P_L2;
    const Eigen::MatrixXd S2 = I - ctx.D * h2.P;
    const Eigen::MatrixXd S1 = I - ctx.D * low.P_H1;
    LocalMatrices m;
    m.Mh = symmetric(low.P_L2.transpose() * ctx.G0 * low.P_L2 + hK * hK * S0.transpose() * S0);
    m.Ah = symmetric(h2.P.transpose() * ctx.GA * h2.P + S2.transpose() * S2 / (hK * hK));
    Eigen::MatrixXd B = S1.transpose() * S1;
    const Eigen::MatrixXd G = ctx.G0.topLeftCorner(nk1, nk1);
    for (int d = 0; d < 2; ++d) {
        B += low.P_grad[d].transpose() * G * low.P_grad[d];
    }
    m.Bh = symmetric(B);
    return m;
}

ElementOperators build_element(const DofLayout& layout, const PolygonGeometry& cell, int cell_id)
{
    const ElementContext ctx = make_element_context(layout, cell, cell_id);
    const H2Projection h2 = compute_H2_projector(layout, ctx, cell_id);
    const Eigen::MatrixXd R = reconstruct_moments(layout, ctx, h2.P);
    const LowerProjections low = compute_L2_and_grad_projectors(layout, ctx, R, cell_id);
    LocalMatrices mats = local_matrices(ctx, h2, low);

    ElementOperators ops;
    ops.cell_id = cell_id;
    ops.n_vertices = cell.num_vertices();
    ops.diameter = cell.diameter;
    ops.D = ctx.D;
    ops.P_H2 = h2.P;
    ops.P_L2 = low.P_L2;
    ops.P_grad = low.P_grad;
    ops.P_H1 = low.P_H1;
    ops.Mh = std::move(mats.Mh);
    ops.Ah = std::move(mats.Ah);
    ops.Bh = std::move(mats.Bh);
    ops.Phi = ctx.values * low.P_L2;
    ops.weights = ctx.quad.weights;
    ops.points = ctx.quad.points;
    return ops;
}

LocalNonlinear local_nonlinear(const ElementOperators& ops, const Eigen::VectorXd& U, const Nonlinearity& f)
{
    const Eigen::VectorXd u = ops.Phi * U;
    Eigen::VectorXd fw(u.size()), dfw(u.size());
    for (Eigen::Index q = 0; q < u.size(); ++q) {
        fw(q) = ops.weights(q) * f.f(u(q));
        dfw(q) = ops.weights(q) * f.df(u(q));
    }
    if (!fw.allFinite() || !dfw.allFinite()) {
        throw ElementError("non-finite nonlinearity value", ops.cell_id);
    }
    LocalNonlinear out;
    out.F = ops.Phi.transpose() * fw;
    out.J = ops.Phi.transpose() * dfw.asDiagonal() * ops.Phi;
    return out;
}

}  // namespace polyvem
