#pragma once

#include "georay/setup.hpp"

#include <functional>

namespace georay {

// Depth interval (rho = R - r) handled by one layer.
struct LayerInterval {
    double t_lo = 0.0;
    double t_hi = 0.0;
};

std::vector<LayerInterval> parse_layer_intervals(const std::string& s);

// Layer j uses the slab chart with offset c_j = t_j'' and support prior
// rho >= t_j'. All layer grids share the depth step so fields transfer between
// layers by an exact node shift.
struct LayerSetup {
    SlabConfig slab;
    std::vector<LayerInterval> intervals;
    double d_rho = 0.0;        // 0: t_1'' / (dims_x - 1)
    double blend_width = 0.0;  // 0: two depth steps
    // Full data of layer j on the layer's ray grid.
    std::function<XRayData(int, const ConjugatedOp&)> data;
    // Optional synthetic truth sampled on a layer box (offset c).
    std::function<GridField(const GridBox&, double c)> truth;
};

// Synthetic setup: data and truth from a phantom given in depth coordinates.
LayerSetup synthetic_layer_setup(const SlabConfig& slab, const std::vector<LayerInterval>& intervals,
                                 const PhantomSpec& phantom);

struct LayerResult {
    int index = 0;
    LayerInterval interval;
    LocalProblem problem;
    ReconstructionReport report;  // rel_l2_on_K against this layer's target
};

struct LayerStripReport {
    std::vector<LayerResult> layers;
    GridField f_hat;     // blended sum on the last layer's grid
    GridBox final_box;
    double final_c = 0.0;
    bool complete = false;
    double rel_l2_total = std::numeric_limits<double>::quiet_NaN();  // over the union of the supports
    std::vector<std::string> warnings;
};

LayerStripReport layer_strip(const LayerSetup& setup, const SolveConfig& cfg);

// Blend weight of layer j: 1 for rho <= s, quintic step to 0 over [s, s + w].
double layer_blend(double rho, double s, double w);

}  // namespace georay
