#include "polyvem/problems.hpp"

#include "polyvem/errors.hpp"

#include <cmath>
#include <complex>
#include <numbers>

namespace polyvem {

SmoothFunction ManufacturedSolution::at(double t) const
{
    SmoothFunction s;
    s.value = [v = value, t](const Eigen::Vector2d& x) { return v(x, t); };
    s.gradient = [g = gradient, t](const Eigen::Vector2d& x) { return g(x, t); };
    s.hessian = [h = hessian, t](const Eigen::Vector2d& x) { return h(x, t); };
    return s;
}

double Problem::load(const Point& x, double t) const
{
    const double u = exact.value(x, t);
    double g = exact.time_derivative(x, t) + spec.alpha1 * exact.bilaplacian(x, t) - spec.f.f(u);
    if (spec.alpha2 != 0.0) {
        g -= spec.alpha2 * exact.laplacian(x, t);
    }
    return g;
}

Nonlinearity efk_nonlinearity()
{
    return {[](double u) { return u - u * u * u; }, [](double u) { return 1.0 - 3.0 * u * u; }};
}

Nonlinearity zero_nonlinearity()
{
    return {[](double) { return 0.0; }, [](double) { return 0.0; }};
}

double efk_lipschitz(double bound)
{
    return 1.0 + 3.0 * bound * bound;
}

namespace {

// a(s) = w^6 with w = s - s^2, and its derivatives through order 4
std::array<double, 5> profile(double s)
{
    const double w = s - s * s;
    const double w1 = 1.0 - 2.0 * s;
    const double w2 = -2.0;
    const double w_2 = w * w;
    const double w_3 = w_2 * w;
    const double w_4 = w_3 * w;
    return {w_3 * w_3,
            6.0 * w_4 * w * w1,
            30.0 * w_4 * w1 * w1 + 6.0 * w_4 * w * w2,
            120.0 * w_3 * w1 * w1 * w1 + 90.0 * w_4 * w1 * w2,
            360.0 * w_2 * w1 * w1 * w1 * w1 + 720.0 * w_3 * w1 * w1 * w2 + 90.0 * w_4 * w2 * w2};
}

ManufacturedSolution test1_solution()
{
    ManufacturedSolution u;
    u.value = [](const Point& x, double t) { return std::sin(t) * profile(x(0))[0] * profile(x(1))[0]; };
    u.gradient = [](const Point& x, double t) {
        const auto a = profile(x(0));
        const auto b = profile(x(1));
        return Eigen::Vector2d(std::sin(t) * a[1] * b[0], std::sin(t) * a[0] * b[1]);
    };
    u.hessian = [](const Point& x, double t) {
        const auto a = profile(x(0));
        const auto b = profile(x(1));
        return Eigen::Vector3d(std::sin(t) * a[2] * b[0], std::sin(t) * a[1] * b[1], std::sin(t) * a[0] * b[2]);
    };
    u.bilaplacian = [](const Point& x, double t) {
        const auto a = profile(x(0));
        const auto b = profile(x(1));
        return std::sin(t) * (a[4] * b[0] + 2.0 * a[2] * b[2] + a[0] * b[4]);
    };
    u.time_derivative = [](const Point& x, double t) {
        return std::cos(t) * profile(x(0))[0] * profile(x(1))[0];
    };
    return u;
}

// z^p on the branch arg z in (-pi/4, 7pi/4]
std::complex<double> branch_power(const Point& x, double p)
{
    const double r = x.norm();
    if (r == 0.0) {
        return {0.0, 0.0};
    }
    double theta = std::atan2(x(1), x(0));
    if (theta <= -std::numbers::pi / 4.0) {
        theta += 2.0 * std::numbers::pi;
    }
    return std::polar(std::pow(r, p), p * theta);
}

// Im z^a with a = 4/3 is r^a sin(a theta); harmonic, so the bilaplacian vanishes.
constexpr double singular_exponent = 4.0 / 3.0;

ManufacturedSolution test3_solution()
{
    ManufacturedSolution u;
    u.value = [](const Point& x, double t) { return std::sin(t) * branch_power(x, singular_exponent).imag(); };
    u.gradient = [](const Point& x, double t) {
        const auto d = singular_exponent * branch_power(x, singular_exponent - 1.0);
        return Eigen::Vector2d(std::sin(t) * d.imag(), std::sin(t) * d.real());
    };
    u.hessian = [](const Point& x, double t) {
        const auto d = singular_exponent * (singular_exponent - 1.0) * branch_power(x, singular_exponent - 2.0);
        return Eigen::Vector3d(std::sin(t) * d.imag(), std::sin(t) * d.real(), -std::sin(t) * d.imag());
    };
    u.bilaplacian = [](const Point&, double) { return 0.0; };
    u.time_derivative = [](const Point& x, double t) { return std::cos(t) * branch_power(x, singular_exponent).imag(); };
    return u;
}

}  // namespace

Problem make_test1(BoundaryCondition bc)
{
    if (bc == BoundaryCondition::CH) {
        throw ConfigError("test1 is posed with clamped or Navier conditions; use test2_ch for Cahn-Hilliard");
    }
    Problem p;
    p.spec.name = bc == BoundaryCondition::CP ? "test1_cp" : "test1_nc";
    p.spec.alpha1 = 1.0;
    p.spec.alpha2 = 1.0;
    p.spec.f = efk_nonlinearity();
    p.spec.solution_bound = std::pow(0.25, 12);
    p.spec.lipschitz = efk_lipschitz(p.spec.solution_bound);
    p.spec.bc = bc;
    p.spec.domain = Domain::UnitSquare;
    p.spec.T_final = 1.0;
    p.exact = test1_solution();
    return p;
}

Problem make_test2()
{
    Problem p = make_test1(BoundaryCondition::CP);
    p.spec.name = "test2_ch";
    p.spec.bc = BoundaryCondition::CH;
    p.spec.T_final = 2.0;
    return p;
}

Problem make_test3()
{
    Problem p;
    p.spec.name = "test3_gamma";
    p.spec.alpha1 = 1.0;
    p.spec.alpha2 = 0.0;
    p.spec.f = efk_nonlinearity();
    p.spec.solution_bound = std::pow(2.0, 2.0 / 3.0);  // r^{4/3} at the far corners
    p.spec.lipschitz = efk_lipschitz(p.spec.solution_bound);
    p.spec.bc = BoundaryCondition::CP;
    p.spec.domain = Domain::GammaShape;
    p.spec.T_final = 1.0;
    p.exact = test3_solution();
    return p;
}

int Polynomial2::degree() const
{
    int d = 0;
    while (monomial_count(d) < static_cast<int>(coeffs.size())) {
        ++d;
    }
    return d;
}

double Polynomial2::derivative(const Point& x, int i, int j) const
{
    double sum = 0.0;
    for (std::size_t m = 0; m < coeffs.size(); ++m) {
        if (coeffs[m] == 0.0) {
            continue;
        }
        const auto [a, b] = monomial_exponent(static_cast<int>(m));
        if (a < i || b < j) {
            continue;
        }
        double c = coeffs[m];
        for (int q = 0; q < i; ++q) {
            c *= a - q;
        }
        for (int q = 0; q < j; ++q) {
            c *= b - q;
        }
        sum += c * std::pow(x(0), a - i) * std::pow(x(1), b - j);
    }
    return sum;
}

ManufacturedSolution polynomial_solution(const Polynomial2& p0, const Polynomial2& p1)
{
    ManufacturedSolution u;
    const auto d = [p0, p1](const Point& x, double t, int i, int j) {
        return p0.derivative(x, i, j) + t * p1.derivative(x, i, j);
    };
    u.value = [d](const Point& x, double t) { return d(x, t, 0, 0); };
    u.gradient = [d](const Point& x, double t) { return Eigen::Vector2d(d(x, t, 1, 0), d(x, t, 0, 1)); };
    u.hessian = [d](const Point& x, double t) {
        return Eigen::Vector3d(d(x, t, 2, 0), d(x, t, 1, 1), d(x, t, 0, 2));
    };
    u.bilaplacian = [d](const Point& x, double t) {
        return d(x, t, 4, 0) + 2.0 * d(x, t, 2, 2) + d(x, t, 0, 4);
    };
    u.time_derivative = [p1](const Point& x, double) { return p1.derivative(x, 0, 0); };
    return u;
}

Problem make_polynomial_problem(const Polynomial2& p0, const Polynomial2& p1, double alpha1, double alpha2,
                                const Nonlinearity& f, double solution_bound, BoundaryCondition bc,
                                double T_final)
{
    if (!(alpha1 > 0.0) || alpha2 < 0.0) {
        throw ConfigError("coefficients must satisfy alpha1 > 0 and alpha2 >= 0");
    }
    Problem p;
    p.spec.name = "custom";
    p.spec.alpha1 = alpha1;
    p.spec.alpha2 = alpha2;
    p.spec.f = f;
    p.spec.solution_bound = solution_bound;
    p.spec.lipschitz = efk_lipschitz(solution_bound);
    p.spec.bc = bc;
    p.spec.domain = Domain::UnitSquare;
    p.spec.T_final = T_final;
    p.exact = polynomial_solution(p0, p1);
    return p;
}

const std::vector<std::string>& problem_names()
{
    static const std::vector<std::string> names{"test1_cp", "test1_nc", "test2_ch", "test3_gamma", "custom"};
    return names;
}

Problem make_problem(const std::string& name)
{
    if (name == "test1_cp") return make_test1(BoundaryCondition::CP);
    if (name == "test1_nc") return make_test1(BoundaryCondition::NC);
    if (name == "test2_ch") return make_test2();
    if (name == "test3_gamma") return make_test3();
    std::string valid;
    for (const auto& n : problem_names()) {
        valid += (valid.empty() ? "" : ", ") + n;
    }
    if (name == "custom") {
        throw ConfigError("problem 'custom' needs polynomial coefficients (keys custom_p0, custom_p1)");
    }
    throw ConfigError("unknown problem '" + name + "' (valid: " + valid + ")");
}

}  // namespace polyvem
