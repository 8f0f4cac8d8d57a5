#include "georay/metric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace georay {

std::string to_string(MetricKind k) {
    switch (k) {
        case MetricKind::euclidean: return "euclidean";
        case MetricKind::radial_herglotz: return "radial_herglotz";
        case MetricKind::general_diagonal: return "general_diagonal";
    }
    return "unknown";
}

Vec3 MetricModel::to_ambient(double, const Vec2&) const {
    throw DomainError("metric model has no ambient embedding: " + describe());
}

MetricCoeffs MetricModel::checked(double x, const Vec2& y) const {
    if (!inside(x, y)) {
        std::ostringstream os;
        os << "point (" << x << ", " << y[0] << ", " << y[1] << ") outside validity region of " << describe();
        throw DomainError(os.str());
    }
    return coeffs(x, y);
}

namespace {

class FlatEuclidean : public MetricModel {
public:
    FlatEuclidean(double x_min, double x_max, double y_radius)
        : x_min_(x_min), x_max_(x_max), y_radius_(y_radius) {}
    MetricKind kind() const override { return MetricKind::euclidean; }
    MetricCoeffs coeffs(double, const Vec2&) const override { return MetricCoeffs{}; }
    bool inside(double x, const Vec2& y) const override {
        return x >= x_min_ && x <= x_max_ && std::abs(y[0]) <= y_radius_ && std::abs(y[1]) <= y_radius_;
    }
    bool has_embedding() const override { return true; }
    Vec3 to_ambient(double x, const Vec2& y) const override { return Vec3(y[0], y[1], x); }
    std::string describe() const override { return "euclidean(flat chart)"; }

private:
    double x_min_, x_max_, y_radius_;
};

class GeneralDiagonal : public MetricModel {
public:
    GeneralDiagonal(DiagonalCallables f, double h) : f_(std::move(f)), h_(h) {}
    MetricKind kind() const override { return MetricKind::general_diagonal; }

    MetricCoeffs coeffs(double x, const Vec2& y) const override {
        MetricCoeffs c;
        c.F = f_.F(x, y);
        c.H = f_.H(x, y);
        const double ih = 0.5 / h_;
        c.F_x = (f_.F(x + h_, y) - f_.F(x - h_, y)) * ih;
        c.H_x = (f_.H(x + h_, y) - f_.H(x - h_, y)) * ih;
        for (int k = 0; k < 2; ++k) {
            Vec2 yp = y, ym = y;
            yp[k] += h_;
            ym[k] -= h_;
            c.F_y[k] = (f_.F(x, yp) - f_.F(x, ym)) * ih;
            c.H_y[k] = (f_.H(x, yp) - f_.H(x, ym)) * ih;
        }
        return c;
    }
    bool inside(double x, const Vec2& y) const override { return f_.inside ? f_.inside(x, y) : true; }
    bool has_embedding() const override { return static_cast<bool>(f_.embed); }
    Vec3 to_ambient(double x, const Vec2& y) const override {
        if (!f_.embed) return MetricModel::to_ambient(x, y);
        return f_.embed(x, y);
    }
    std::string describe() const override { return f_.label; }

private:
    DiagonalCallables f_;
    double h_;
};

class Perturbed : public MetricModel {
public:
    Perturbed(MetricPtr base, double a, const Vec3& center, double width)
        : base_(std::move(base)), a_(a), z0_(center), w_(width) {}
    MetricKind kind() const override { return MetricKind::general_diagonal; }

    MetricCoeffs coeffs(double x, const Vec2& y) const override {
        MetricCoeffs c = base_->coeffs(x, y);
        const Vec3 d(x - z0_[0], y[0] - z0_[1], y[1] - z0_[2]);
        const double b = std::exp(-d.squaredNorm() / (2 * w_ * w_));
        const double p = 1.0 + a_ * b;
        const Vec3 gp = -a_ * b / (w_ * w_) * d;  // gradient of p
        MetricCoeffs o;
        o.F = p * c.F;
        o.H = p * c.H;
        o.F_x = gp[0] * c.F + p * c.F_x;
        o.H_x = gp[0] * c.H + p * c.H_x;
        for (int k = 0; k < 2; ++k) {
            o.F_y[k] = gp[1 + k] * c.F + p * c.F_y[k];
            o.H_y[k] = gp[1 + k] * c.H + p * c.H_y[k];
        }
        return o;
    }
    bool inside(double x, const Vec2& y) const override { return base_->inside(x, y); }
    bool has_embedding() const override { return base_->has_embedding(); }
    Vec3 to_ambient(double x, const Vec2& y) const override { return base_->to_ambient(x, y); }
    std::string describe() const override {
        std::ostringstream os;
        os << "perturbed(" << base_->describe() << ", a=" << a_ << ")";
        return os.str();
    }

private:
    MetricPtr base_;
    double a_;
    Vec3 z0_;
    double w_;
};

}  // namespace

MetricPtr make_flat_euclidean(double x_min, double x_max, double y_radius) {
    return std::make_shared<FlatEuclidean>(x_min, x_max, y_radius);
}

RadialChart::RadialChart(RadialProfile prof, double R, double c) : prof_(prof), R_(R), c_(c) {
    if (!(R > 0.0) || c < 0.0 || c >= R) throw ValidationError("radial chart needs R > 0 and 0 <= c < R");
}

MetricKind RadialChart::kind() const {
    return (prof_.c0 == 1.0 && prof_.c1 == 0.0) ? MetricKind::euclidean : MetricKind::radial_herglotz;
}

MetricCoeffs RadialChart::coeffs(double x, const Vec2& y) const {
    const double r = R_ - c_ + x;
    const double cr = prof_(r);
    const double dc = prof_.deriv(r);
    const Vec2 q = y / (2 * R_);
    const double w = 1.0 + q.squaredNorm();
    const double R2 = R_ * R_;

    MetricCoeffs m;
    m.F = cr * cr;
    m.F_x = 2 * cr * dc;
    const double s = cr * cr * R2 * w * w / (r * r);
    const double s_x = R2 * w * w * (2 * cr * dc / (r * r) - 2 * cr * cr / (r * r * r));
    m.H = s * Mat2::Identity();
    m.H_x = s_x * Mat2::Identity();
    for (int k = 0; k < 2; ++k) {
        const double s_y = cr * cr * R2 / (r * r) * 2 * w * (q[k] / R_);
        m.H_y[k] = s_y * Mat2::Identity();
    }
    return m;
}

bool RadialChart::inside(double x, const Vec2& y) const {
    const double r = R_ - c_ + x;
    if (!(r > 1e-3 * R_)) return false;
    if (!(prof_(r) > 0.0)) return false;
    return (y / (2 * R_)).squaredNorm() < 2.25;
}

Vec3 RadialChart::to_ambient(double x, const Vec2& y) const {
    const double r = R_ - c_ + x;
    const Vec2 q = y / (2 * R_);
    const double q2 = q.squaredNorm();
    const Vec3 n(2 * q[0], 2 * q[1], 1.0 - q2);
    return r * n / (1.0 + q2);
}

void RadialChart::from_ambient(const Vec3& u, double& x, Vec2& y) const {
    const double r = u.norm();
    const Vec3 n = u / r;
    if (n[2] <= -1.0 + 1e-12) throw DomainError("stereographic chart undefined at the south pole");
    x = r - (R_ - c_);
    y = 2 * R_ * Vec2(n[0], n[1]) / (1.0 + n[2]);
}

std::string RadialChart::describe() const {
    std::ostringstream os;
    os << (kind() == MetricKind::euclidean ? "euclidean" : "radial_herglotz") << "(sphere chart, R=" << R_
       << ", c=" << c_ << ", c(r)=" << prof_.c0 << "+" << prof_.c1 << "r)";
    return os.str();
}

MetricPtr make_radial_chart(RadialProfile prof, double R, double c) {
    return std::make_shared<RadialChart>(prof, R, c);
}

MetricPtr make_general_diagonal(DiagonalCallables fns, double h_fd) {
    if (!fns.F || !fns.H) throw ValidationError("general_diagonal metric needs F and H callables");
    return std::make_shared<GeneralDiagonal>(std::move(fns), h_fd);
}

MetricPtr perturb_metric(MetricPtr base, double amplitude, const Vec3& center, double width) {
    if (!(width > 0.0)) throw ValidationError("perturbation width must be positive");
    return std::make_shared<Perturbed>(std::move(base), amplitude, center, width);
}

double hamiltonian_eval(const MetricModel& m, double x, const Vec2& y, double xi, const Vec2& eta) {
    const MetricCoeffs c = m.checked(x, y);
    return c.F * xi * xi + eta.dot(c.H * eta);
}

double alpha_eval(const MetricModel& m, double x, const Vec2& y, const Vec2& omega) {
    const MetricCoeffs c = m.checked(x, y);
    const Vec2 v = c.H.inverse() * omega;
    return -0.25 * c.F * v.dot(c.H_x * v);
}

double alpha_lower_bound(const MetricModel& m, double x0, double x1, double y_half, int nx, int ny, int nw) {
    double lo = std::numeric_limits<double>::infinity();
    for (int i = 0; i < nx; ++i) {
        const double x = nx > 1 ? x0 + (x1 - x0) * i / (nx - 1) : x0;
        for (int j1 = 0; j1 < ny; ++j1)
            for (int j2 = 0; j2 < ny; ++j2) {
                const Vec2 y(ny > 1 ? -y_half + 2 * y_half * j1 / (ny - 1) : 0.0,
                             ny > 1 ? -y_half + 2 * y_half * j2 / (ny - 1) : 0.0);
                for (int k = 0; k < nw; ++k) {
                    const double th = pi * k / nw;  // alpha is even in omega
                    lo = std::min(lo, alpha_eval(m, x, y, Vec2(std::cos(th), std::sin(th))));
                }
            }
    }
    return lo;
}

HerglotzReport herglotz_check(const std::function<double(double)>& c, double r0, double r1, int n_samples) {
    if (n_samples < 2 || !(r1 > r0)) throw ValidationError("herglotz_check needs r1 > r0 and n_samples >= 2");
    HerglotzReport rep;
    rep.min_value = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n_samples; ++i) {
        const double r = r0 + (r1 - r0) * i / (n_samples - 1);
        const double d = 1e-5 * std::max(1.0, std::abs(r));
        const double cp = c(r + d), cm = c(r - d), c0 = c(r);
        if (!(cp > 0.0) || !(cm > 0.0) || !(c0 > 0.0)) {
            std::ostringstream os;
            os << "sound speed not positive near r = " << r;
            throw DomainError(os.str());
        }
        const double deriv = ((r + d) / cp - (r - d) / cm) / (2 * d);
        rep.min_value = std::min(rep.min_value, deriv);
    }
    rep.ok = rep.min_value > 0.0;
    return rep;
}

}  // namespace georay
