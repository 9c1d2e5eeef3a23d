#pragma once

// Model problems  u_t + a1 Lap^2 u - a2 Lap u = f(u)  with manufactured
// solutions and their analytic loads.

#include <Eigen/Dense>

#include <functional>
#include <string>
#include <vector>

#include "polyvem/assembly.hpp"
#include "polyvem/field.hpp"
#include "polyvem/mesh.hpp"

namespace polyvem {

/// u(x, t) with derivatives through the bilaplacian.
struct ManufacturedSolution {
    std::function<double(const Point&, double)> value;
    std::function<Eigen::Vector2d(const Point&, double)> gradient;
    std::function<Eigen::Vector3d(const Point&, double)> hessian;  // xx, xy, yy
    std::function<double(const Point&, double)> bilaplacian;
    std::function<double(const Point&, double)> time_derivative;

    [[nodiscard]] double laplacian(const Point& x, double t) const
    {
        const Eigen::Vector3d h = hessian(x, t);
        return h(0) + h(2);
    }
    /// Snapshot at time t as a smooth spatial field.
    [[nodiscard]] SmoothFunction at(double t) const;
};

struct ProblemSpec {
    std::string name;
    double alpha1 = 1.0;
    double alpha2 = 1.0;
    Nonlinearity f;
    /// Bound M on |u| used for the Lipschitz estimate of f.
    double solution_bound = 1.0;
    double lipschitz = 1.0;
    BoundaryCondition bc = BoundaryCondition::CP;
    Domain domain = Domain::UnitSquare;
    double T_final = 1.0;
};

struct Problem {
    ProblemSpec spec;
    ManufacturedSolution exact;

    /// u_t + a1 Lap^2 u - a2 Lap u - f(u)
    [[nodiscard]] double load(const Point& x, double t) const;
};

/// f(u) = u - u^3.
Nonlinearity efk_nonlinearity();
Nonlinearity zero_nonlinearity();
/// sup |f'| over |u| <= M for f(u) = u - u^3.
double efk_lipschitz(double bound);

/// sin(t) x^6 y^6 (1-x)^6 (1-y)^6 on the unit square, a1 = a2 = 1, T = 1.
Problem make_test1(BoundaryCondition bc = BoundaryCondition::CP);
/// Same solution with Cahn-Hilliard conditions, T = 2.
Problem make_test2();
/// sin(t) r^{4/3} sin(4 theta / 3) on the Gamma-shaped domain, a1 = 1, a2 = 0, clamped.
/// theta is measured in (-pi/4, 7pi/4], so the cut runs through the removed quadrant.
Problem make_test3();

/// Polynomial in x, y with coefficients on x^a y^b in graded order
/// (1, x, y, x^2, xy, y^2, ...).
struct Polynomial2 {
    std::vector<double> coeffs;

    [[nodiscard]] int degree() const;
    /// d^i/dx^i d^j/dy^j at x.
    [[nodiscard]] double derivative(const Point& x, int i, int j) const;
};

/// u(x, t) = p0(x) + t p1(x).
ManufacturedSolution polynomial_solution(const Polynomial2& p0, const Polynomial2& p1);

/// Problem with the solution p0 + t p1 and the given coefficients.
Problem make_polynomial_problem(const Polynomial2& p0, const Polynomial2& p1, double alpha1, double alpha2,
                                const Nonlinearity& f, double solution_bound, BoundaryCondition bc,
                                double T_final);

/// test1_cp, test1_nc, test2_ch, test3_gamma, custom
const std::vector<std::string>& problem_names();
/// Named problem; `custom` is built by the driver from its coefficients.
Problem make_problem(const std::string& name);

}  // namespace polyvem
