#pragma once

#include "georay/normal_op.hpp"

#include <complex>
#include <string>
#include <vector>

namespace georay {

using cplx = std::complex<double>;

// Quadratic form alpha(0, y, 0, .) of the metric as a 2x2 matrix.
Mat2 alpha_form(const MetricModel& m, const Vec2& y);

// Gaussian parameter of the cutoff for direction Y^ with Q(Y^, Y^) = qhat.
double symbol_nu(const CutoffSpec& cs, double F, double qhat);

// chi^(w) = int chi(s) e^{-i w s} ds for complex w.
cplx chi_hat(const CutoffSpec& cs, double nu, cplx w);

// K~(X, Y) = e^{-F X} |Y|^{1-n} chi((X - Q(Y^,Y^)|Y|^2) / |Y|), n = 3.
double frontface_kernel(const Vec2& y, double X, const Vec2& Y, const CutoffSpec& cs, double F, const Mat2& Q);

// Closed-form X-transform of K~:
// |Y|^{2-n} e^{-(F + i xi) Q(Y,Y)} chi^((xi - i F)|Y|).
cplx frontface_xft(const CutoffSpec& cs, double F, const Mat2& Q, double xi, const Vec2& Y);

struct SymbolScanSpec {
    int n_xi = 129;
    int n_eta = 129;
    double half = 40.0;  // grid on [-half, half]^3
    double tail_tol = 1e-10;  // relative kernel magnitude at the window edge
};

struct SymbolGrid {
    Vec2 y = Vec2::Zero();
    double F = 1.0;
    Mat2 Q = Mat2::Identity();
    std::vector<double> xi, eta1, eta2;
    std::vector<cplx> values;  // index (i_xi * n_eta + i_eta1) * n_eta + i_eta2
    double window = 0.0;       // largest |Y| retained at xi = 0

    std::size_t index(std::size_t i, std::size_t j, std::size_t k) const {
        return (i * eta1.size() + j) * eta2.size() + k;
    }
    cplx at(std::size_t i, std::size_t j, std::size_t k) const { return values[index(i, j, k)]; }
};

// |Y| beyond which the X-transformed kernel is below tol relative to Y -> 0
// (at xi = 0, worst direction). Grows without bound as F -> 0.
double frontface_window(const CutoffSpec& cs, double F, const Mat2& Q, double tol = 1e-10);

// Y-transform of the X-transformed front-face kernel in polar form: the
// |Y|^{-1} singularity is absorbed by the polar Jacobian, each angular slice is
// a 1D FFT of a smooth even profile, and slices are summed by the periodic
// trapezoid rule in angle.
SymbolGrid boundary_symbol_fft(const Vec2& y, const CutoffSpec& cs, double F, const Mat2& Q,
                               const SymbolScanSpec& spec = SymbolScanSpec{});

// Unnormalized <xi>^{-1} phi(eta / <xi>), phi = |.|^{-1} * (det Q)^{-1/2} F e^{-F Q^{-1}(.,.)/2},
// by 2D quadrature of the convolution.
double boundary_symbol_analytic(double F, const Mat2& Q, double xi, const Vec2& eta);

// Fast isotropic evaluator: phi tabulated in |u| from boundary_symbol_analytic.
class IsotropicAnalyticSymbol {
public:
    IsotropicAnalyticSymbol(double F, double q, double u_max, int n = 1024);
    double operator()(double xi, const Vec2& eta) const;

private:
    double F_, du_;
    std::vector<double> phi_;
};

struct EllipticityReport {
    double c_min = 0.0;
    double xi = 0.0, eta1 = 0.0, eta2 = 0.0;  // argmin
    double peak = 0.0;
    double noise_floor = 0.0;  // 1e-8 * peak
    double margin = 1e4;       // required c_min / noise_floor
    bool ok = false;
};

// c_min = min |sigma| <(xi, eta)> over nodes with |(xi, eta)| <= half,
// <.> = (F^2 + xi^2 + |eta|^2)^{1/2}.
EllipticityReport ellipticity_scan(const SymbolGrid& sg, double half, double margin = 1e4);

// CSV rows xi, eta1, eta2, Re, Im, |sigma| <zeta>; every `stride`-th node per axis.
void write_symbol_csv(const std::string& path, const SymbolGrid& sg, int stride = 4);
void write_ellipticity_report(const std::string& path, const EllipticityReport& r);

struct InteriorSymbolSpec {
    double probe_radius = 0.1;
    int n_lambda = 16;
    double t_span = 0.5;
};

// |zeta| times the symbol of A at interior point z: A applied to the probe
// e^{i zeta.(z' - z)} psi(|z' - z| / R) and evaluated at z, over the continuous
// curve family (fine lambda and omega quadrature).
cplx interior_symbol(const MetricModel& m, const CutoffSpec& cs, double kappa, const Vec3& z, const Vec3& zeta,
                     const InteriorSymbolSpec& spec = InteriorSymbolSpec{});

}  // namespace georay
