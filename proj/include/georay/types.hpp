#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace georay {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

// Evaluation outside a model's validity region, or of an undefined quantity.
struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad user input (config values, file contents). Maps to exit status 2.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Integration, quadrature or solver accuracy failures.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline constexpr double pi = 3.14159265358979323846;

}  // namespace georay
