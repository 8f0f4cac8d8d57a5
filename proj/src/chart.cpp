#include "georay/chart.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

namespace georay {

Vec3 BoundaryChart::grad_rho(const Vec3& z) const {
    const double d = 1e-4;
    Vec3 g;
    for (int k = 0; k < 3; ++k) {
        Vec3 e = Vec3::Zero();
        e[k] = d;
        g[k] = (-rho(z + 2 * e) + 8 * rho(z + e) - 8 * rho(z - e) + rho(z - 2 * e)) / (12 * d);
    }
    return g;
}

Vec3 BoundaryChart::grad_x_c(const Vec3& z) const { return -grad_rho(z) - 2 * epsilon * (z - p); }

BoundaryChart ball_boundary(double R, double epsilon, double c) {
    BoundaryChart b;
    b.p = Vec3(0, 0, R);
    b.rho = [R](const Vec3& z) { return R - z.norm(); };
    b.epsilon = epsilon;
    b.c = c;
    return b;
}

BoundaryChartCheck check_boundary_chart(const BoundaryChart& b) {
    BoundaryChartCheck chk;
    chk.x_tilde_at_p = b.x_tilde(b.p);
    const double d = 1e-5;
    Vec3 gx;
    for (int k = 0; k < 3; ++k) {
        Vec3 e = Vec3::Zero();
        e[k] = d;
        gx[k] = (b.x_tilde(b.p + e) - b.x_tilde(b.p - e)) / (2 * d);
    }
    chk.grad_mismatch = (gx + b.grad_rho(b.p)).norm();
    chk.ok = std::abs(chk.x_tilde_at_p) < 1e-12 && chk.grad_mismatch < 1e-8;
    return chk;
}

AdaptedChart::AdaptedChart(AmbientSpeed speed, BoundaryChart b, double flow_step)
    : speed_(std::move(speed)), b_(std::move(b)), step_(flow_step) {
    scale_ = b_.p.norm();
    if (!(scale_ > 0.0)) throw ValidationError("adapted chart needs p away from the origin");
    rot_ = Eigen::Quaterniond::FromTwoVectors(Vec3(0, 0, 1), b_.p / scale_).toRotationMatrix();
}

Vec3 AdaptedChart::surface_point(const Vec2& y) const {
    const Vec2 q = y / (2 * scale_);
    const double q2 = q.squaredNorm();
    const Vec3 n = rot_ * (Vec3(2 * q[0], 2 * q[1], 1.0 - q2) / (1.0 + q2));
    double s = scale_ - b_.c;
    for (int it = 0; it < 60; ++it) {
        const double f = b_.x_c(s * n);
        if (std::abs(f) < 1e-15) break;
        const double df = b_.grad_x_c(s * n).dot(n);
        if (!(std::abs(df) > 1e-12)) {
            std::ostringstream os;
            os << "adapted chart: grad x_c degenerate along the radial line at y = (" << y[0] << ", " << y[1] << ")";
            throw DomainError(os.str());
        }
        s -= f / df;
    }
    return s * n;
}

Vec3 AdaptedChart::flow_field(const Vec3& u) const {
    const Vec3 g = b_.grad_x_c(u);
    const double g2 = g.squaredNorm();
    if (!(g2 > 1e-24)) throw DomainError("adapted chart: grad x_c vanishes");
    return g / g2;
}

Vec3 AdaptedChart::map(double x, const Vec2& y) const {
    Vec3 u = surface_point(y);
    const int n = std::max(4, static_cast<int>(std::ceil(std::abs(x) / step_)));
    const double h = x / n;
    for (int i = 0; i < n; ++i) {
        const Vec3 k1 = flow_field(u);
        const Vec3 k2 = flow_field(u + 0.5 * h * k1);
        const Vec3 k3 = flow_field(u + 0.5 * h * k2);
        const Vec3 k4 = flow_field(u + h * k3);
        u += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    return u;
}

Vec3 AdaptedChart::dmap_dy(double x, const Vec2& y, int k) const {
    const double d = 1e-3;
    Vec2 e = Vec2::Zero();
    e[k] = d;
    return (-map(x, y + 2 * e) + 8 * map(x, y + e) - 8 * map(x, y - e) + map(x, y - 2 * e)) / (12 * d);
}

Mat3 AdaptedChart::metric_matrix(double x, const Vec2& y) const {
    const Vec3 u = map(x, y);
    Mat3 J;
    J.col(0) = flow_field(u);
    J.col(1) = dmap_dy(x, y, 0);
    J.col(2) = dmap_dy(x, y, 1);
    const double c = speed_(u);
    return (J.transpose() * J) / (c * c);
}

double AdaptedChart::dual_cross_term(double x, const Vec2& y) const {
    const Mat3 G = metric_matrix(x, y).inverse();
    return std::max(std::abs(G(0, 1)), std::abs(G(0, 2)));
}

double AdaptedChart::jacobian(double x, const Vec2& y) const {
    const Vec3 u = map(x, y);
    Mat3 J;
    J.col(0) = flow_field(u);
    J.col(1) = dmap_dy(x, y, 0);
    J.col(2) = dmap_dy(x, y, 1);
    return J.determinant();
}

namespace {

// Catmull-Rom weights for fractional offset t in [0, 1).
inline void cr_weights(double t, double w[4], double dw[4]) {
    const double t2 = t * t, t3 = t2 * t;
    w[0] = 0.5 * (-t3 + 2 * t2 - t);
    w[1] = 0.5 * (3 * t3 - 5 * t2 + 2);
    w[2] = 0.5 * (-3 * t3 + 4 * t2 + t);
    w[3] = 0.5 * (t3 - t2);
    dw[0] = 0.5 * (-3 * t2 + 4 * t - 1);
    dw[1] = 0.5 * (9 * t2 - 10 * t);
    dw[2] = 0.5 * (-9 * t2 + 8 * t + 1);
    dw[3] = 0.5 * (3 * t2 - 2 * t);
}

class TabulatedChart : public MetricModel {
public:
    TabulatedChart(AdaptedChart chart, AdaptedChartBox box, std::vector<std::array<double, 4>> tab)
        : chart_(std::move(chart)), box_(box), tab_(std::move(tab)) {
        for (int a = 0; a < 3; ++a) n_[a] = box_.dims[a];
        lo_[0] = box_.x_min;
        lo_[1] = lo_[2] = -box_.y_half;
        d_[0] = (box_.x_max - box_.x_min) / (n_[0] - 1);
        d_[1] = d_[2] = 2 * box_.y_half / (n_[1] - 1);
        d_[2] = 2 * box_.y_half / (n_[2] - 1);
    }

    MetricKind kind() const override { return MetricKind::general_diagonal; }

    // Tricubic values and first derivatives of the tabulated (F, H11, H12, H22).
    void interp(const double z[3], double v[4], double dv[3][4]) const {
        int i0[3];
        double w[3][4], dw[3][4];
        for (int a = 0; a < 3; ++a) {
            const double s = (z[a] - lo_[a]) / d_[a];
            int i = static_cast<int>(std::floor(s));
            i = std::clamp(i, 0, n_[a] - 2);
            cr_weights(s - i, w[a], dw[a]);
            for (int k = 0; k < 4; ++k) dw[a][k] /= d_[a];
            i0[a] = i - 1;
        }
        for (int q = 0; q < 4; ++q) {
            v[q] = 0;
            for (int a = 0; a < 3; ++a) dv[a][q] = 0;
        }
        for (int a = 0; a < 4; ++a) {
            const int ia = std::clamp(i0[0] + a, 0, n_[0] - 1);
            for (int b = 0; b < 4; ++b) {
                const int ib = std::clamp(i0[1] + b, 0, n_[1] - 1);
                for (int c = 0; c < 4; ++c) {
                    const int ic = std::clamp(i0[2] + c, 0, n_[2] - 1);
                    const auto& t = tab_[(static_cast<std::size_t>(ia) * n_[1] + ib) * n_[2] + ic];
                    const double wv = w[0][a] * w[1][b] * w[2][c];
                    const double w0 = dw[0][a] * w[1][b] * w[2][c];
                    const double w1 = w[0][a] * dw[1][b] * w[2][c];
                    const double w2 = w[0][a] * w[1][b] * dw[2][c];
                    for (int q = 0; q < 4; ++q) {
                        v[q] += wv * t[q];
                        dv[0][q] += w0 * t[q];
                        dv[1][q] += w1 * t[q];
                        dv[2][q] += w2 * t[q];
                    }
                }
            }
        }
    }

    MetricCoeffs coeffs(double x, const Vec2& y) const override {
        const double z[3] = {x, y[0], y[1]};
        double v[4], dv[3][4];
        interp(z, v, dv);
        auto mat = [](const double* e) {
            Mat2 m;
            m << e[1], e[2], e[2], e[3];
            return m;
        };
        MetricCoeffs c;
        c.F = v[0];
        c.H = mat(v);
        c.F_x = dv[0][0];
        c.H_x = mat(dv[0]);
        for (int k = 0; k < 2; ++k) {
            c.F_y[k] = dv[1 + k][0];
            c.H_y[k] = mat(dv[1 + k]);
        }
        return c;
    }

    bool inside(double x, const Vec2& y) const override {
        return x >= box_.x_min && x <= box_.x_max && std::abs(y[0]) <= box_.y_half && std::abs(y[1]) <= box_.y_half;
    }
    bool has_embedding() const override { return true; }
    Vec3 to_ambient(double x, const Vec2& y) const override { return chart_.map(x, y); }
    std::string describe() const override { return "general_diagonal(tabulated adapted chart)"; }

private:
    AdaptedChart chart_;
    AdaptedChartBox box_;
    std::vector<std::array<double, 4>> tab_;
    int n_[3];
    double lo_[3], d_[3];
};

}  // namespace

MetricPtr build_adapted_chart(AmbientSpeed speed, const BoundaryChart& b, const AdaptedChartBox& box,
                              AdaptedChartReport* report) {
    for (int a = 0; a < 3; ++a)
        if (box.dims[a] < 4) throw ValidationError("adapted chart tabulation needs at least 4 nodes per axis");
    if (!(box.x_max > box.x_min) || !(box.y_half > 0.0)) throw ValidationError("adapted chart box is empty");

    AdaptedChart chart(speed, b);
    const int nx = box.dims[0], n1 = box.dims[1], n2 = box.dims[2];
    std::vector<std::array<double, 4>> tab(static_cast<std::size_t>(nx) * n1 * n2);
    AdaptedChartReport rep;
    rep.min_jacobian = std::numeric_limits<double>::infinity();
    double ref_jac = 0.0;
    for (int i = 0; i < nx; ++i) {
        const double x = box.x_min + (box.x_max - box.x_min) * i / (nx - 1);
        for (int j = 0; j < n1; ++j)
            for (int k = 0; k < n2; ++k) {
                const Vec2 y(-box.y_half + 2 * box.y_half * j / (n1 - 1), -box.y_half + 2 * box.y_half * k / (n2 - 1));
                const Mat3 g = chart.metric_matrix(x, y);
                const Mat3 G = g.inverse();
                const double jac = std::sqrt(std::max(0.0, g.determinant())) * speed(chart.map(x, y));
                if (ref_jac == 0.0) ref_jac = jac;
                if (!(jac > 1e-6 * ref_jac)) {
                    std::ostringstream os;
                    os << "adapted chart fold-over: Jacobian degenerates at (x, y) = (" << x << ", " << y[0] << ", "
                       << y[1] << ")";
                    throw DomainError(os.str());
                }
                rep.min_jacobian = std::min(rep.min_jacobian, jac);
                rep.max_cross_term = std::max(rep.max_cross_term, std::max(std::abs(G(0, 1)), std::abs(G(0, 2))));
                const Mat2 hy = g.block<2, 2>(1, 1);
                const Mat2 H = hy.inverse();
                tab[(static_cast<std::size_t>(i) * n1 + j) * n2 + k] = {1.0 / g(0, 0), H(0, 0), 0.5 * (H(0, 1) + H(1, 0)),
                                                                        H(1, 1)};
            }
    }
    if (report) *report = rep;
    return std::make_shared<TabulatedChart>(std::move(chart), box, std::move(tab));
}

}  // namespace georay
