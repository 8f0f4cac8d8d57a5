#pragma once

#include "georay/field.hpp"

#include <string>

namespace georay {

enum class PhantomKind { zero, gaussian_bump, poly_bump, shell, two_shell, oscillatory };

std::string to_string(PhantomKind k);
PhantomKind phantom_kind_from_string(const std::string& s);

struct PhantomSpec {
    PhantomKind kind = PhantomKind::gaussian_bump;
    double amplitude = 1.0;
    Vec3 center = Vec3(0.05, 0.0, 0.0);  // (x, y1, y2)
    // gaussian_bump: exp(-|z - z0|^2 / 2 sigma^2), smooth cutoff to radius `support`
    double sigma = 0.02;
    double support = 0.06;
    // poly_bump / oscillatory: (1 - |D^{-1}(z - z0)|^2)^3, D = diag(radii)
    Vec3 radii = Vec3(0.02, 0.2, 0.2);
    double k = 4.0;  // oscillatory: sin(k y1) * poly_bump
    // shell kinds: depth rho = c - x; profile (1 - ((rho - rho_c)/w)^2)^3 times
    // a lateral window (1 - |y|^2 / L^2)^3
    double c = 0.1;
    double rho_c1 = 0.03;
    double rho_c2 = 0.08;
    double rho_w = 0.015;
    double lateral = 0.3;
    double amplitude2 = 1.0;
};

class Phantom {
public:
    explicit Phantom(PhantomSpec spec);
    double operator()(const Vec3& z) const;
    // Components of two_shell (index 0 outer, 1 inner); other kinds ignore idx.
    double component(const Vec3& z, int idx) const;
    // Axis-aligned bounding box of the support: lo, hi.
    void support_box(Vec3& lo, Vec3& hi) const;
    const PhantomSpec& spec() const { return spec_; }

private:
    PhantomSpec spec_;
};

// Samples the phantom on the grid after checking that its support lies in
// {x_floor <= x <= c} and inside the box.
GridField make_phantom(const PhantomSpec& spec, const GridBox& box, double x_floor, double c);

// Quintic smooth step from 1 (u <= 0) to 0 (u >= 1).
double smooth_step_down(double u);

}  // namespace georay
