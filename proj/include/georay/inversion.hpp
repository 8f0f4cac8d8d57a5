#pragma once

#include "georay/parametrix.hpp"
#include "georay/symbol.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace georay {

enum class SolveMethod { neumann_preconditioned, cgnr, dense_direct };
std::string to_string(SolveMethod m);
SolveMethod solve_method_from_string(const std::string& s);

struct SolveConfig {
    SolveMethod method = SolveMethod::neumann_preconditioned;
    int max_iter = 40;
    double tol = 1e-8;
    double taper_low = 0.05;
    std::vector<double> c_schedule{0.4, 0.2, 0.1, 0.05};
    int blocks = 1;
    double residual_warn = 1e-3;  // plain relative residual above which K is suspected too small
    double norm_r = 0.0;          // weight order r of the weighted norms
    SymbolScanSpec cert_scan{33, 33, 40.0, 1e-10};
};

// Everything defining the local problem at one offset c.
struct LocalProblem {
    double c = 0.2;
    MetricPtr metric;
    GridBox box;
    double x_floor = 0.05;
    RaySpec rays;
    CutoffSpec cutoff;
    double F = 0.4;
    SupportRegion K;
};

struct ReconstructionReport {
    GridField f_hat;
    std::string method;
    double rel_l2_on_K = std::numeric_limits<double>::quiet_NaN();
    double rel_weighted = std::numeric_limits<double>::quiet_NaN();
    // neumann: ||G r_k|| / ||G g||; cgnr: ||B^T r_k|| / ||B^T g||; dense: ||r|| / ||g||
    std::vector<double> residual_history;
    double final_plain_residual = 0.0;  // ||g - B f~|| / ||g||
    double c_used = 0.0;
    double stability_constant = std::numeric_limits<double>::quiet_NaN();  // ||f^||_w / ||If||
    bool stability_applicable = false;
    double stability_sc = std::numeric_limits<double>::quiet_NaN();  // ||f~||_{sc,0,r} / ||B f~||_{sc,1,r}
    double defect = std::numeric_limits<double>::quiet_NaN();        // ||Id - G B|| (neumann)
    int iterations = 0;
    bool converged = false;
    std::vector<std::string> warnings;
};

// Data norm sqrt(sum dV w_lambda w_omega (If)^2) over the ray grid.
double data_norm(const RayGrid& rg, const GridBox& box, const XRayData& d);

// Boundary-symbol ellipticity at the centre of K for the operator's cutoff and F.
EllipticityReport certify_ellipticity(const ConjugatedOp& op, const SupportRegion& K, const SymbolScanSpec& scan);

// Owns the discretized system for one operator and support region; builds the
// sparse matrix, certificate and parametrix on first use.
class LocalSolver {
public:
    LocalSolver(std::shared_ptr<const ConjugatedOp> op, const SupportRegion& K, const SolveConfig& cfg);

    const ConjugatedOp& op() const { return *op_; }
    const SupportRegion& K() const { return K_; }
    const SparseB& system();
    const EllipticityReport& certificate();
    void set_certificate(const EllipticityReport& r) { cert_ = r; }
    const Parametrix& parametrix();
    DefectEstimate defect();

    ReconstructionReport solve(const XRayData& data, const GridField* truth = nullptr);
    // Same, from a prepared right-hand side on rows (data already averaged and conjugated).
    ReconstructionReport solve_rhs(const std::vector<double>& g, double data_l2, const GridField* truth = nullptr);

private:
    std::shared_ptr<const ConjugatedOp> op_;
    SupportRegion K_;
    SolveConfig cfg_;
    std::optional<SparseB> S_;
    std::optional<EllipticityReport> cert_;
    std::optional<Parametrix> G_;
    std::optional<DefectEstimate> defect_;
};

std::shared_ptr<const ConjugatedOp> make_operator(const LocalProblem& p);

struct InjectivityReport {
    double sigma_min = 0.0;
    double sigma_max = 0.0;
    std::size_t n_cols = 0;
    bool ok = false;  // sigma_min > 1e-10 sigma_max
};
InjectivityReport injectivity_certificate(const ConjugatedOp& op, const SupportRegion& K, std::size_t max_cols = 20000);

struct SmallCEntry {
    double c = 0.0;
    bool skipped = false;
    double defect = std::numeric_limits<double>::quiet_NaN();
    std::string note;
};
struct SmallCReport {
    double c_star = std::numeric_limits<double>::quiet_NaN();
    bool found = false;
    std::vector<SmallCEntry> entries;
    std::string message;
};
// on_solver, when set, is called with each certified solver after its defect
// has been measured (lets callers reuse the assembled system).
SmallCReport small_c_search(const std::function<LocalProblem(double)>& make, const std::vector<double>& schedule,
                            const SolveConfig& cfg,
                            const std::function<void(const LocalProblem&, LocalSolver&)>& on_solver = {});

void write_report(const std::string& path, const ReconstructionReport& r);
void write_residual_csv(const std::string& path, const std::vector<double>& hist);

}  // namespace georay
