#pragma once

// Scaled monomial bases on polygons and edges, Gauss rules, and polygon
// quadrature by sub-triangulation.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "polyvem/errors.hpp"
#include "polyvem/geometry.hpp"

namespace polyvem {

/// Dimension of bivariate polynomials of total degree <= order (0 for order < 0).
constexpr int monomial_count(int order) noexcept
{
    return order < 0 ? 0 : (order + 1) * (order + 2) / 2;
}

struct Exponent {
    int a = 0;  // power of x
    int b = 0;  // power of y
    [[nodiscard]] int degree() const noexcept { return a + b; }
};

// Graded lexicographic ordering: by total degree, then by the x-exponent
// descending. Index 0 is the constant, 1 is x, 2 is y, 3 is x^2, ...
constexpr int monomial_index(int a, int b) noexcept
{
    const int deg = a + b;
    return monomial_count(deg - 1) + b;
}

constexpr Exponent monomial_exponent(int index) noexcept
{
    int deg = 0;
    while (monomial_count(deg) <= index) {
        ++deg;
    }
    const int b = index - monomial_count(deg - 1);
    return {deg - b, b};
}

/// Scaled monomials ((x - x_K)/h_K)^beta, |beta| <= order.
template <typename Scalar = double>
class ScaledMonomialBasis {
public:
    using Point = Eigen::Matrix<Scalar, 2, 1>;
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

    ScaledMonomialBasis(int order, const Point& centroid, Scalar diameter)
        : order_(order), centroid_(centroid), diameter_(diameter)
    {
        if (order < 0) {
            throw InputError("scaled monomial basis: order must be >= 0");
        }
        if (!(diameter > Scalar(0))) {
            throw GeometryError("scaled monomial basis: diameter must be positive");
        }
    }

    [[nodiscard]] int order() const noexcept { return order_; }
    [[nodiscard]] int size() const noexcept { return monomial_count(order_); }
    [[nodiscard]] const Point& centroid() const noexcept { return centroid_; }
    [[nodiscard]] Scalar diameter() const noexcept { return diameter_; }

    [[nodiscard]] Point scaled(const Point& x) const { return (x - centroid_) / diameter_; }

    [[nodiscard]] Vector values(const Point& x) const
    {
        const auto p = powers(scaled(x));
        Vector out(size());
        for (int j = 0; j < size(); ++j) {
            const auto e = monomial_exponent(j);
            out(j) = p[0][e.a] * p[1][e.b];
        }
        return out;
    }

    /// Row j holds (d/dx, d/dy) of member j.
    [[nodiscard]] Eigen::Matrix<Scalar, Eigen::Dynamic, 2> gradients(const Point& x) const
    {
        const auto p = powers(scaled(x));
        Eigen::Matrix<Scalar, Eigen::Dynamic, 2> out(size(), 2);
        for (int j = 0; j < size(); ++j) {
            const auto e = monomial_exponent(j);
            out(j, 0) = e.a > 0 ? Scalar(e.a) * p[0][e.a - 1] * p[1][e.b] / diameter_ : Scalar(0);
            out(j, 1) = e.b > 0 ? Scalar(e.b) * p[0][e.a] * p[1][e.b - 1] / diameter_ : Scalar(0);
        }
        return out;
    }

    /// Row j holds (d2/dxx, d2/dxy, d2/dyy) of member j.
    [[nodiscard]] Eigen::Matrix<Scalar, Eigen::Dynamic, 3> hessians(const Point& x) const
    {
        const auto p = powers(scaled(x));
        const Scalar h2 = diameter_ * diameter_;
        Eigen::Matrix<Scalar, Eigen::Dynamic, 3> out(size(), 3);
        for (int j = 0; j < size(); ++j) {
            const auto [a, b] = monomial_exponent(j);
            out(j, 0) = a > 1 ? Scalar(a * (a - 1)) * p[0][a - 2] * p[1][b] / h2 : Scalar(0);
            out(j, 1) = (a > 0 && b > 0) ? Scalar(a * b) * p[0][a - 1] * p[1][b - 1] / h2 : Scalar(0);
            out(j, 2) = b > 1 ? Scalar(b * (b - 1)) * p[0][a] * p[1][b - 2] / h2 : Scalar(0);
        }
        return out;
    }

    /// Matrix D with coeffs(d p / d x_dir) = D * coeffs(p), both in this basis.
    [[nodiscard]] Matrix derivative_matrix(int dir) const
    {
        Matrix d = Matrix::Zero(size(), size());
        for (int j = 0; j < size(); ++j) {
            const auto [a, b] = monomial_exponent(j);
            if (dir == 0 && a > 0) {
                d(monomial_index(a - 1, b), j) = Scalar(a) / diameter_;
            } else if (dir == 1 && b > 0) {
                d(monomial_index(a, b - 1), j) = Scalar(b) / diameter_;
            }
        }
        return d;
    }

    [[nodiscard]] Matrix laplacian_matrix() const
    {
        const Matrix dx = derivative_matrix(0);
        const Matrix dy = derivative_matrix(1);
        return dx * dx + dy * dy;
    }

private:
    [[nodiscard]] std::array<std::vector<Scalar>, 2> powers(const Point& s) const
    {
        std::array<std::vector<Scalar>, 2> p;
        for (int c = 0; c < 2; ++c) {
            p[c].resize(order_ + 1);
            p[c][0] = Scalar(1);
            for (int i = 1; i <= order_; ++i) {
                p[c][i] = p[c][i - 1] * s(c);
            }
        }
        return p;
    }

    int order_;
    Point centroid_;
    Scalar diameter_;
};

/// Edge monomials ((s - s_e)/h_e)^j, j = 0..order, in the edge's own arclength
/// coordinate. Order -1 is the empty basis.
template <typename Scalar = double>
class EdgeMonomialBasis {
public:
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    EdgeMonomialBasis(int order, Scalar midpoint, Scalar length)
        : order_(order), midpoint_(midpoint), length_(length)
    {
        if (order < -1) {
            throw InputError("edge monomial basis: order must be >= -1");
        }
        if (!(length > Scalar(0))) {
            throw GeometryError("edge monomial basis: zero-length edge");
        }
    }

    [[nodiscard]] int order() const noexcept { return order_; }
    [[nodiscard]] int size() const noexcept { return order_ + 1; }
    [[nodiscard]] Scalar midpoint() const noexcept { return midpoint_; }
    [[nodiscard]] Scalar length() const noexcept { return length_; }

    [[nodiscard]] Vector values(Scalar s) const
    {
        Vector out(size());
        const Scalar t = (s - midpoint_) / length_;
        Scalar p(1);
        for (int j = 0; j < size(); ++j) {
            out(j) = p;
            p *= t;
        }
        return out;
    }

private:
    int order_;
    Scalar midpoint_;
    Scalar length_;
};

template <typename Scalar = double>
struct QuadratureRule {
    Eigen::Matrix<Scalar, 2, Eigen::Dynamic> points;
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> weights;
    int exactness_degree = 0;

    [[nodiscard]] int size() const noexcept { return static_cast<int>(weights.size()); }
};

/// Segment rule; `params` holds the scaled coordinate (s - s_mid)/h_e in [-1/2, 1/2].
template <typename Scalar = double>
struct EdgeQuadratureRule : QuadratureRule<Scalar> {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> params;
};

/// n-point Gauss-Legendre nodes and weights on [-1, 1].
template <typename Scalar = double>
std::pair<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>, Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>
gauss_legendre(int n)
{
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> x(n), w(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        Scalar z = std::cos(std::numbers::pi_v<Scalar> * (Scalar(i) + Scalar(0.75)) / (Scalar(n) + Scalar(0.5)));
        Scalar dp(0);
        for (int it = 0; it < 100; ++it) {
            Scalar p0(1), p1(z);
            for (int j = 2; j <= n; ++j) {
                const Scalar p2 = ((2 * j - 1) * z * p1 - (j - 1) * p0) / Scalar(j);
                p0 = p1;
                p1 = p2;
            }
            dp = Scalar(n) * (z * p1 - p0) / (z * z - Scalar(1));
            const Scalar dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < Scalar(1e-16)) {
                break;
            }
        }
        // refresh derivative at the converged node
        Scalar p0(1), p1(z);
        for (int j = 2; j <= n; ++j) {
            const Scalar p2 = ((2 * j - 1) * z * p1 - (j - 1) * p0) / Scalar(j);
            p0 = p1;
            p1 = p2;
        }
        dp = Scalar(n) * (z * p1 - p0) / (z * z - Scalar(1));
        x(i) = -z;
        x(n - 1 - i) = z;
        w(i) = Scalar(2) / ((Scalar(1) - z * z) * dp * dp);
        w(n - 1 - i) = w(i);
    }
    if (n % 2 == 1) {
        x(n / 2) = Scalar(0);
    }
    return {x, w};
}

/// Gauss rule on the segment a -> b exact for polynomials of the given degree.
template <typename Scalar = double>
EdgeQuadratureRule<Scalar> edge_quadrature(const Eigen::Matrix<Scalar, 2, 1>& a,
                                           const Eigen::Matrix<Scalar, 2, 1>& b, int degree)
{
    if (degree < 0) {
        throw InputError("edge quadrature: degree must be >= 0");
    }
    const int n = degree / 2 + 1;
    const auto [x, w] = gauss_legendre<Scalar>(n);
    const Scalar len = (b - a).norm();
    EdgeQuadratureRule<Scalar> rule;
    rule.points.resize(2, n);
    rule.weights.resize(n);
    rule.params.resize(n);
    rule.exactness_degree = 2 * n - 1;
    for (int q = 0; q < n; ++q) {
        const Scalar t = x(q) / Scalar(2);
        rule.params(q) = t;
        rule.points.col(q) = (a + b) / Scalar(2) + t * (b - a);
        rule.weights(q) = w(q) * len / Scalar(2);
    }
    return rule;
}

/// Collapsed-Gauss rule on the triangle (p0, p1, p2) exact to the given degree.
template <typename Scalar = double>
QuadratureRule<Scalar> triangle_quadrature(const Eigen::Matrix<Scalar, 2, 1>& p0,
                                           const Eigen::Matrix<Scalar, 2, 1>& p1,
                                           const Eigen::Matrix<Scalar, 2, 1>& p2, int degree)
{
    // the collapsed direction carries the (1 - u) Jacobian: one extra degree
    const int nu = (degree + 3) / 2;
    const int nv = (degree + 2) / 2;
    const auto [xu, wu] = gauss_legendre<Scalar>(nu);
    const auto [xv, wv] = gauss_legendre<Scalar>(nv);
    const Eigen::Matrix<Scalar, 2, 1> e1 = p1 - p0;
    const Eigen::Matrix<Scalar, 2, 1> e2 = p2 - p0;
    const Scalar jac = std::abs(e1(0) * e2(1) - e1(1) * e2(0));
    QuadratureRule<Scalar> rule;
    rule.points.resize(2, nu * nv);
    rule.weights.resize(nu * nv);
    rule.exactness_degree = degree;
    int q = 0;
    for (int i = 0; i < nu; ++i) {
        const Scalar u = (xu(i) + Scalar(1)) / Scalar(2);
        for (int j = 0; j < nv; ++j) {
            const Scalar v = (xv(j) + Scalar(1)) / Scalar(2) * (Scalar(1) - u);
            rule.points.col(q) = p0 + u * e1 + v * e2;
            rule.weights(q) = wu(i) * wv(j) / Scalar(4) * (Scalar(1) - u) * jac;
            ++q;
        }
    }
    return rule;
}

/// Rule on a simple polygon (counterclockwise vertex columns) exact to the
/// given degree: centroid fan when every fan triangle is positive, otherwise
/// ear clipping.
inline QuadratureRule<double> polygon_quadrature(const Eigen::Matrix2Xd& vertices, int degree)
{
    if (degree < 0) {
        throw InputError("polygon quadrature: degree must be >= 0");
    }
    const auto tris = sub_triangulate(vertices);
    QuadratureRule<double> rule;
    rule.exactness_degree = degree;
    std::vector<QuadratureRule<double>> parts;
    parts.reserve(tris.size());
    int total = 0;
    for (const auto& t : tris) {
        parts.push_back(triangle_quadrature<double>(t[0], t[1], t[2], degree));
        total += parts.back().size();
    }
    rule.points.resize(2, total);
    rule.weights.resize(total);
    int off = 0;
    for (const auto& p : parts) {
        rule.points.middleCols(off, p.size()) = p.points;
        rule.weights.segment(off, p.size()) = p.weights;
        off += p.size();
    }
    return rule;
}

/// Value table of a basis: one matrix (points x members) per component;
/// 1 component for values, 2 for gradients (x, y), 3 for Hessians (xx, xy, yy).
template <typename Scalar>
std::vector<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>>
eval_basis(const ScaledMonomialBasis<Scalar>& basis, const Eigen::Matrix<Scalar, 2, Eigen::Dynamic>& points,
           int derivative_order)
{
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    if (derivative_order < 0 || derivative_order > 2) {
        throw InputError("eval_basis: derivative order must be 0, 1 or 2");
    }
    const int ncomp = derivative_order + 1;
    std::vector<Matrix> out(ncomp, Matrix(points.cols(), basis.size()));
    for (Eigen::Index q = 0; q < points.cols(); ++q) {
        const Eigen::Matrix<Scalar, 2, 1> x = points.col(q);
        if (derivative_order == 0) {
            out[0].row(q) = basis.values(x).transpose();
        } else if (derivative_order == 1) {
            const auto g = basis.gradients(x);
            out[0].row(q) = g.col(0).transpose();
            out[1].row(q) = g.col(1).transpose();
        } else {
            const auto hs = basis.hessians(x);
            for (int c = 0; c < 3; ++c) {
                out[c].row(q) = hs.col(c).transpose();
            }
        }
    }
    return out;
}

inline ScaledMonomialBasis<double> build_element_basis(const PolygonGeometry& polygon, int order)
{
    return ScaledMonomialBasis<double>(order, polygon.centroid, polygon.diameter);
}

}  // namespace polyvem
