#pragma once

#include <Eigen/Dense>

#include <functional>

namespace polyvem {

/// A smooth scalar field in the plane with derivatives through second order.
/// `hessian` returns (xx, xy, yy) and may be left empty when not needed.
struct SmoothFunction {
    std::function<double(const Eigen::Vector2d&)> value;
    std::function<Eigen::Vector2d(const Eigen::Vector2d&)> gradient;
    std::function<Eigen::Vector3d(const Eigen::Vector2d&)> hessian;
};

/// Scalar nonlinearity u -> f(u) and its derivative.
struct Nonlinearity {
    std::function<double(double)> f;
    std::function<double(double)> df;
};

}  // namespace polyvem
