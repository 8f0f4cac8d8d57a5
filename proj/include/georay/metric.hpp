#pragma once

#include "georay/types.hpp"

#include <functional>
#include <memory>
#include <string>

namespace georay {

enum class MetricKind { euclidean, radial_herglotz, general_diagonal };

std::string to_string(MetricKind k);

// Dual metric F(x,y) xi^2 + eta^T H(x,y) eta in coordinates adapted to the
// level sets of x, together with first partial derivatives.
struct MetricCoeffs {
    double F = 1.0;
    Mat2 H = Mat2::Identity();
    double F_x = 0.0;
    Vec2 F_y = Vec2::Zero();
    Mat2 H_x = Mat2::Zero();
    Mat2 H_y[2] = {Mat2::Zero(), Mat2::Zero()};
};

class MetricModel {
public:
    virtual ~MetricModel() = default;

    virtual MetricKind kind() const = 0;
    // Hot path: no validity check.
    virtual MetricCoeffs coeffs(double x, const Vec2& y) const = 0;
    virtual bool inside(double x, const Vec2& y) const = 0;

    // Ambient embedding of chart points, where one exists (oracles, phantoms).
    virtual bool has_embedding() const { return false; }
    virtual Vec3 to_ambient(double x, const Vec2& y) const;

    virtual std::string describe() const = 0;

    // Checked evaluation; throws DomainError outside the validity region.
    MetricCoeffs checked(double x, const Vec2& y) const;
};

using MetricPtr = std::shared_ptr<const MetricModel>;

// c(r) = c0 + c1 r, travel-time metric c^{-2} |du|^2.
struct RadialProfile {
    double c0 = 1.0;
    double c1 = 0.0;
    double operator()(double r) const { return c0 + c1 * r; }
    double deriv(double) const { return c1; }
};

// Identity chart: F = 1, H = I. Ambient point (y1, y2, x).
MetricPtr make_flat_euclidean(double x_min = -1e3, double x_max = 1e3, double y_radius = 1e3);

// Sphere-adapted chart of a radial medium in the ball of radius R.
// x = r - (R - c); y = stereographic coordinates about the north pole, scaled
// so that y is arclength on r = R at y = 0.
class RadialChart : public MetricModel {
public:
    RadialChart(RadialProfile prof, double R, double c);

    MetricKind kind() const override;
    MetricCoeffs coeffs(double x, const Vec2& y) const override;
    bool inside(double x, const Vec2& y) const override;
    bool has_embedding() const override { return true; }
    Vec3 to_ambient(double x, const Vec2& y) const override;
    std::string describe() const override;

    double radius_of(double x) const { return R_ - c_ + x; }
    double ball_radius() const { return R_; }
    double offset() const { return c_; }
    const RadialProfile& profile() const { return prof_; }
    // Inverse of to_ambient (u must not be the south pole direction).
    void from_ambient(const Vec3& u, double& x, Vec2& y) const;

private:
    RadialProfile prof_;
    double R_, c_;
};

MetricPtr make_radial_chart(RadialProfile prof, double R, double c);

// General block-diagonal model from coefficient callables; derivatives by
// central differences with step h_fd.
struct DiagonalCallables {
    std::function<double(double, const Vec2&)> F;
    std::function<Mat2(double, const Vec2&)> H;
    std::function<bool(double, const Vec2&)> inside;
    std::function<Vec3(double, const Vec2&)> embed;  // optional
    std::string label = "general_diagonal";
};
MetricPtr make_general_diagonal(DiagonalCallables fns, double h_fd = 1e-5);

// Conformal perturbation F, H -> (1 + a b) F, (1 + a b) H with a Gaussian bump
// b centred at `center` (chart coordinates) of width `width`.
MetricPtr perturb_metric(MetricPtr base, double amplitude, const Vec3& center, double width);

double hamiltonian_eval(const MetricModel& m, double x, const Vec2& y, double xi, const Vec2& eta);

// alpha = x''/2 along the tangent geodesic with dy/dt = omega (|omega| = 1).
double alpha_eval(const MetricModel& m, double x, const Vec2& y, const Vec2& omega);

// Smallest alpha over sampled points and directions.
double alpha_lower_bound(const MetricModel& m, double x0, double x1, double y_half, int nx, int ny, int nw);

struct HerglotzReport {
    double min_value = 0.0;
    bool ok = false;
};
HerglotzReport herglotz_check(const std::function<double(double)>& c, double r0, double r1, int n_samples);

}  // namespace georay
