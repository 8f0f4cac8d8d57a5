#include "georay/layer_strip.hpp"

#include <cmath>
#include <sstream>

namespace georay {

std::vector<LayerInterval> parse_layer_intervals(const std::string& s) {
    std::vector<LayerInterval> out;
    std::istringstream is(s);
    std::string item;
    while (std::getline(is, item, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw ValidationError("layer interval '" + item + "' is not of the form t':t''");
        try {
            out.push_back({std::stod(item.substr(0, colon)), std::stod(item.substr(colon + 1))});
        } catch (const std::logic_error&) {
            throw ValidationError("layer interval '" + item + "' is not numeric");
        }
    }
    if (out.empty()) throw ValidationError("no layer intervals given");
    return out;
}

double layer_blend(double rho, double s, double w) { return smooth_step_down((rho - s) / w); }

LayerSetup synthetic_layer_setup(const SlabConfig& slab, const std::vector<LayerInterval>& intervals,
                                 const PhantomSpec& phantom) {
    LayerSetup ls;
    ls.slab = slab;
    ls.intervals = intervals;
    auto truth = [phantom](const GridBox& box, double c) {
        PhantomSpec ps = phantom;
        ps.c = c;
        const Phantom ph(ps);
        GridField f(box);
        for (std::size_t i = 0; i < box.size(); ++i) f[i] = ph(box.node(i));
        return f;
    };
    ls.truth = truth;
    ls.data = [truth](int, const ConjugatedOp& op) {
        const GridField f = truth(op.box(), op.box().hi(0));
        return xray_batch(op.metric(), f, op.rays());
    };
    return ls;
}

namespace {

// Copy a field from a shallower layer grid (fewer x nodes, same depth step)
// to a deeper one.
GridField shift_to(const GridField& f, const GridBox& to) {
    GridField out(to);
    const GridBox& from = f.box();
    const int shift = to.n[0] - from.n[0];
    for (int i = 0; i < to.n[0]; ++i) {
        const int ip = i - shift;
        if (ip < 0 || ip >= from.n[0]) continue;
        for (int j = 0; j < to.n[1]; ++j)
            for (int k = 0; k < to.n[2]; ++k) out.at(i, j, k) = f.at(ip, j, k);
    }
    return out;
}

}  // namespace

LayerStripReport layer_strip(const LayerSetup& setup, const SolveConfig& cfg) {
    const auto& iv = setup.intervals;
    if (iv.empty()) throw ValidationError("layer_strip needs at least one interval");
    if (!setup.data) throw ValidationError("layer_strip needs a data source");
    for (std::size_t j = 0; j < iv.size(); ++j) {
        if (!(iv[j].t_lo >= 0 && iv[j].t_hi > iv[j].t_lo))
            throw ValidationError("layer interval " + std::to_string(j + 1) + " must satisfy 0 <= t' < t''");
        if (j > 0 && !(iv[j].t_lo > iv[j - 1].t_lo && iv[j].t_lo < iv[j - 1].t_hi && iv[j].t_hi > iv[j - 1].t_hi))
            throw ValidationError("layer intervals must overlap as t_j' < t_{j+1}' < t_j'' < t_{j+1}''");
    }
    if (iv[0].t_lo != 0.0) throw ValidationError("the first layer interval must start at depth 0");

    const double d_rho = setup.d_rho > 0 ? setup.d_rho : iv[0].t_hi / (setup.slab.dims[0] - 1);
    const double w = setup.blend_width > 0 ? setup.blend_width : 2 * d_rho;

    // Foliation check: every layer's level sets must be strictly convex.
    for (const auto& L : iv) {
        const double r_in = setup.slab.R - L.t_hi;
        if (!(r_in > 0)) throw ValidationError("layer depth reaches the centre of the ball");
        const RadialProfile pr = setup.slab.profile;
        const auto rep = herglotz_check([pr](double r) { return pr(r); }, r_in, setup.slab.R, 64);
        if (!rep.ok) throw ValidationError("level sets are not strictly convex (Herglotz condition fails) in a layer");
    }

    LayerStripReport out;
    GridField known;  // recovered part so far, on the previous layer grid
    double first_residual = 0.0;
    for (std::size_t j = 0; j < iv.size(); ++j) {
        const double c = iv[j].t_hi;
        const double steps = c / d_rho;
        if (std::abs(steps - std::round(steps)) > 1e-6)
            throw ValidationError("layer depth t'' = " + std::to_string(c) + " is not a multiple of the depth step");
        SlabConfig s = setup.slab;
        s.dims[0] = static_cast<int>(std::round(steps)) + 1;
        LocalProblem p = make_slab_problem(s, c);
        const double dx = p.box.d[0];
        p.K.x_hi = std::floor((c - iv[j].t_lo) / dx + 1e-9) * dx;
        if (j + 1 < iv.size() && iv[j + 1].t_lo + w > c - p.K.x_lo + 1e-12)
            throw ValidationError("layer " + std::to_string(j + 1) +
                                  ": blend region [t_{j+1}', t_{j+1}' + width] leaves the recovered depth range");

        LayerResult lr;
        lr.index = static_cast<int>(j);
        lr.interval = iv[j];
        lr.problem = p;
        try {
            auto op = make_operator(p);
            XRayData d = setup.data(static_cast<int>(j), *op);
            GridField known_here;
            if (j > 0) {
                known_here = shift_to(known, p.box);
                const XRayData dk = xray_batch(op->metric(), known_here, op->rays());
                for (std::size_t i = 0; i < d.v.size(); ++i) d.v[i] -= dk.v[i];
            } else {
                known_here = GridField(p.box);
            }
            GridField target;
            const GridField* tp = nullptr;
            if (setup.truth) {
                target = setup.truth(p.box, c);
                if (j > 0)
                    for (std::size_t i = 0; i < p.box.size(); ++i) {
                        const double rho = c - p.box.node(i)[0];
                        target[i] *= 1.0 - layer_blend(rho, iv[j].t_lo, w);
                    }
                tp = &target;
            }
            LocalSolver solver(op, p.K, cfg);
            lr.report = solver.solve(d, tp);
            lr.report.c_used = c;
            for (std::size_t i = 0; i < p.box.size(); ++i) {
                double wgt = 1.0;
                if (j + 1 < iv.size()) wgt = layer_blend(c - p.box.node(i)[0], iv[j + 1].t_lo, w);
                known_here[i] += wgt * lr.report.f_hat[i];
            }
            known = std::move(known_here);
        } catch (const std::exception& e) {
            out.warnings.push_back("layer " + std::to_string(j + 1) + " failed: " + e.what() +
                                   "; cascade stopped with partial output");
            out.layers.push_back(std::move(lr));
            break;
        }
        const double res = lr.report.final_plain_residual;
        if (j == 0) first_residual = std::max(res, cfg.tol);
        else if (res > 5 * first_residual)
            out.warnings.push_back("layer " + std::to_string(j + 1) + " residual exceeds 5x the first layer's");
        out.layers.push_back(std::move(lr));
        out.f_hat = known;
        out.final_box = p.box;
        out.final_c = c;
        if (j + 1 == iv.size()) out.complete = true;
    }

    if (setup.truth && !out.layers.empty() && out.f_hat.box().size() > 0) {
        const GridField t = setup.truth(out.final_box, out.final_c);
        const SupportRegion& K = out.layers.back().problem.K;
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < t.box().size(); ++i) {
            const Vec3 z = t.box().node(i);
            if (z[0] < K.x_lo - 1e-12 || z[1] < K.y_lo[0] - 1e-12 || z[1] > K.y_hi[0] + 1e-12 ||
                z[2] < K.y_lo[1] - 1e-12 || z[2] > K.y_hi[1] + 1e-12)
                continue;
            num += (out.f_hat[i] - t[i]) * (out.f_hat[i] - t[i]);
            den += t[i] * t[i];
        }
        out.rel_l2_total = den > 0 ? std::sqrt(num / den) : std::sqrt(num);
    }
    return out;
}

}  // namespace georay
