#include "georay/pipeline.hpp"
#include "georay/acceptance.hpp"
#include "georay/layer_strip.hpp"
#include "georay/setup.hpp"
#include "georay/simd.hpp"

#include <CLI11.hpp>
#include <omp.h>
#include <openssl/evp.h>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace georay {

namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "1.0.0";

std::string join(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ValidationError("cannot create output directory '" + dir + "': " + ec.message());
}

// Data for the local problem: read from input.data or synthesized from the phantom.
struct LocalData {
    XRayData data;
    GridField truth;
    bool synthetic = false;
};

LocalData local_data(const RunConfig& cfg, const SlabConfig& s, const LocalProblem& p, const ConjugatedOp& op) {
    LocalData ld;
    const std::string path = cfg.str("input.data");
    if (!path.empty()) {
        ld.data = read_xray(path);
        if (!ld.data.matches(op.rays()))
            throw ValidationError("data file '" + path + "' does not match the configured ray grid");
        return ld;
    }
    ld.truth = make_phantom(phantom_from_config(cfg, p.c), p.box, p.x_floor, p.c);
    ld.data = xray_batch(*data_metric(s, p), ld.truth, op.rays());
    ld.synthetic = true;
    return ld;
}

void check_paths(const RunConfig& cfg) {
    const std::string path = cfg.str("input.data");
    if (!path.empty() && !fs::exists(path)) throw ValidationError("config key 'input.data': file not found: " + path);
}

}  // namespace

std::string sha256_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ValidationError("cannot read for checksum: " + path);
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    std::vector<char> buf(1 << 16);
    while (is) {
        is.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        if (is.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(is.gcount()));
    }
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned len = 0;
    EVP_DigestFinal_ex(ctx, md, &len);
    EVP_MD_CTX_free(ctx);
    std::ostringstream os;
    for (unsigned i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
    return os.str();
}

void write_manifest(const std::string& dir, const CommandContext& ctx, const std::string& command,
                    const std::vector<std::string>& files) {
    std::ofstream os(join(dir, "manifest.txt"));
    if (!os) throw ValidationError("cannot write manifest in " + dir);
    os << "georay-manifest v1\n";
    os << "command = " << command << "\n";
    os << "version = " << kVersion << "\n";
    os << "simd = " << simd::name(simd::active()) << "\n";
    for (const auto& k : ctx.overridden) os << "env_override = " << k << "\n";
    os << "[config]\n" << ctx.cfg.serialize();
    os << "[files]\n";
    for (const auto& f : files) os << sha256_file(join(dir, f)) << "  " << f << "\n";
}

int cmd_forward(const CommandContext& ctx, std::ostream& log) {
    check_paths(ctx.cfg);
    const SlabConfig s = slab_from_config(ctx.cfg);
    const double c = ctx.cfg.real("chart.c");
    const LocalProblem p = make_slab_problem(s, c);
    const PhantomSpec ps = phantom_from_config(ctx.cfg, c);
    const GridField f = make_phantom(ps, p.box, p.x_floor, c);
    const RayGrid rg = make_ray_grid(p.box, p.x_floor, p.rays);
    const XRayData d = xray_batch(*data_metric(s, p), f, rg);
    ensure_dir(ctx.out_dir);
    write_field(join(ctx.out_dir, "phantom.field"), f);
    write_xray(join(ctx.out_dir, "data.xray"), d);
    write_manifest(ctx.out_dir, ctx, "forward", {"phantom.field", "data.xray"});
    log << "forward: " << d.v.size() << " rays (" << rg.n_base() << " base points) written to " << ctx.out_dir << "\n";
    return exit_ok;
}

int cmd_reconstruct(const CommandContext& ctx, std::ostream& log) {
    if (ctx.cfg.str("run.mode") == "layer") return cmd_layerstrip(ctx, log);
    if (ctx.cfg.str("run.mode") != "local")
        throw ValidationError("config key 'run.mode': expected local or layer, got '" + ctx.cfg.str("run.mode") + "'");
    check_paths(ctx.cfg);
    const SlabConfig s = slab_from_config(ctx.cfg);
    const SolveConfig sc = solve_from_config(ctx.cfg);
    double c = ctx.cfg.real("chart.c");
    if (ctx.cfg.boolean("chart.auto_c")) {
        const SmallCReport sr = small_c_search([&](double cc) { return make_slab_problem(s, cc); }, sc.c_schedule, sc);
        for (const auto& e : sr.entries)
            log << "small-c: c = " << e.c << (e.skipped ? " " + e.note : " defect " + std::to_string(e.defect)) << "\n";
        if (!sr.found) {
            log << "reconstruct: " << sr.message << "\n";
            return exit_failure;
        }
        c = sr.c_star;
        log << "small-c: c_star = " << c << "\n";
    }
    const LocalProblem p = make_slab_problem(s, c);
    auto op = make_operator(p);
    const LocalData ld = local_data(ctx.cfg, s, p, *op);
    LocalSolver solver(op, p.K, sc);
    ReconstructionReport rep = solver.solve(ld.data, ld.synthetic ? &ld.truth : nullptr);
    rep.c_used = c;
    ensure_dir(ctx.out_dir);
    write_field(join(ctx.out_dir, "f_hat.field"), rep.f_hat);
    write_report(join(ctx.out_dir, "report.txt"), rep);
    write_residual_csv(join(ctx.out_dir, "residuals.csv"), rep.residual_history);
    write_manifest(ctx.out_dir, ctx, "reconstruct", {"f_hat.field", "report.txt", "residuals.csv"});
    log << "reconstruct: c = " << c << ", " << rep.iterations << " iterations, rel_l2_on_K = " << rep.rel_l2_on_K
        << "\n";
    for (const auto& w : rep.warnings) log << "warning: " << w << "\n";
    return rep.converged ? exit_ok : exit_failure;
}

int cmd_symbol_scan(const CommandContext& ctx, std::ostream& log) {
    const SlabConfig s = slab_from_config(ctx.cfg);
    const double c = ctx.cfg.real("chart.c");
    double F = s.F_over_c * c;
    if (ctx.cfg.str("symbol.F") != "auto") F = ctx.cfg.real("symbol.F");
    if (!(F > 0)) throw ValidationError("config key 'symbol.F': F must be > 0");
    SymbolScanSpec sp;
    sp.n_xi = sp.n_eta = ctx.cfg.integer("symbol.n");
    if (sp.n_xi < 9 || sp.n_xi % 2 == 0) throw ValidationError("config key 'symbol.n': must be odd and >= 9");
    sp.half = ctx.cfg.real("symbol.half");
    if (!(sp.half > 0)) throw ValidationError("config key 'symbol.half': must be > 0");
    const MetricPtr m = slab_metric(s, c);
    const Mat2 Q = alpha_form(*m, Vec2::Zero());
    CutoffSpec cs = s.cutoff;
    cs.F = F;
    const SymbolGrid sg = boundary_symbol_fft(Vec2::Zero(), cs, F, Q, sp);
    const EllipticityReport r = ellipticity_scan(sg, sp.half);
    ensure_dir(ctx.out_dir);
    write_symbol_csv(join(ctx.out_dir, "symbol.csv"), sg);
    write_ellipticity_report(join(ctx.out_dir, "ellipticity.txt"), r);
    write_manifest(ctx.out_dir, ctx, "symbol-scan", {"symbol.csv", "ellipticity.txt"});
    log << "symbol-scan: F = " << F << ", c_min = " << r.c_min << ", peak = " << r.peak
        << (r.ok ? ", elliptic" : ", NOT elliptic") << "\n";
    return r.ok ? exit_ok : exit_failure;
}

int cmd_layerstrip(const CommandContext& ctx, std::ostream& log) {
    check_paths(ctx.cfg);
    const SlabConfig s = slab_from_config(ctx.cfg);
    const SolveConfig sc = solve_from_config(ctx.cfg);
    const auto iv = parse_layer_intervals(ctx.cfg.str("layer.intervals"));
    if (!ctx.cfg.str("input.data").empty())
        throw ValidationError("config key 'input.data': layer mode synthesizes per-layer data from the phantom");
    LayerSetup ls = synthetic_layer_setup(s, iv, phantom_from_config(ctx.cfg, iv.back().t_hi));
    ls.d_rho = ctx.cfg.real("layer.d_rho");
    ls.blend_width = ctx.cfg.real("layer.blend_width");
    const LayerStripReport rep = layer_strip(ls, sc);
    ensure_dir(ctx.out_dir);
    std::vector<std::string> files;
    for (const auto& L : rep.layers) {
        const std::string stem = "layer_" + std::to_string(L.index + 1);
        write_report(join(ctx.out_dir, stem + "_report.txt"), L.report);
        files.push_back(stem + "_report.txt");
        if (L.report.f_hat.box().size() > 0) {
            write_field(join(ctx.out_dir, stem + "_f_hat.field"), L.report.f_hat);
            files.push_back(stem + "_f_hat.field");
        }
        log << "layer " << L.index + 1 << " [" << L.interval.t_lo << ", " << L.interval.t_hi
            << "]: rel_l2_on_K = " << L.report.rel_l2_on_K << ", iterations = " << L.report.iterations << "\n";
    }
    {
        std::ofstream os(join(ctx.out_dir, "layers.txt"));
        os << std::setprecision(12) << "layers = " << rep.layers.size() << "\ncomplete = "
           << (rep.complete ? "true" : "false") << "\nfinal_c = " << rep.final_c << "\nrel_l2_total = "
           << rep.rel_l2_total << "\n";
        for (const auto& w : rep.warnings) os << "warning = " << w << "\n";
    }
    files.push_back("layers.txt");
    if (rep.f_hat.box().size() > 0) {
        write_field(join(ctx.out_dir, "f_hat.field"), rep.f_hat);
        files.push_back("f_hat.field");
    }
    write_manifest(ctx.out_dir, ctx, "layerstrip", files);
    for (const auto& w : rep.warnings) log << "warning: " << w << "\n";
    return rep.complete ? exit_ok : exit_failure;
}

int cmd_selftest(const CommandContext& ctx, std::ostream& log, const std::vector<int>& only) {
    const int failures = run_acceptance(ctx.cfg, log, only);
    log << (failures == 0 ? "selftest: all criteria passed" : "selftest: " + std::to_string(failures) + " failed")
        << "\n";
    return failures == 0 ? exit_ok : exit_failure;
}

int run_cli(int argc, char** argv) {
    CLI::App app{"georay: geodesic X-ray transform near a convex boundary, forward model and local inversion"};
    app.require_subcommand(1);
    std::string config_path, out_dir;
    int threads = 0;
    long seed = -1;
    bool list = false;
    std::vector<int> only;
    app.add_option("--config", config_path, "configuration file (key = value)");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--threads", threads, "worker thread cap")->check(CLI::NonNegativeNumber);
    app.add_option("--seed", seed, "seed (overrides run.seed)")->check(CLI::NonNegativeNumber);
    auto* fwd = app.add_subcommand("forward", "synthesize X-ray data from the configured phantom");
    auto* rec = app.add_subcommand("reconstruct", "invert data (or forward-then-invert a phantom)");
    auto* sym = app.add_subcommand("symbol-scan", "boundary symbol and ellipticity certificate");
    auto* lay = app.add_subcommand("layerstrip", "layer-stripping reconstruction");
    auto* st = app.add_subcommand("selftest", "run the acceptance suite");
    st->add_flag("--list", list, "list criteria without running them");
    st->add_option("--only", only, "run only these criterion ids");
    for (auto* sc : {fwd, rec, sym, lay, st}) sc->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? exit_ok : exit_usage;
    }

    if (st->parsed() && list) {
        list_criteria(std::cout);
        return exit_ok;
    }
    try {
        CommandContext ctx;
        if (!config_path.empty()) {
            if (!fs::exists(config_path)) throw ValidationError("config file not found: " + config_path);
            ctx.cfg = RunConfig::load(config_path);
        }
        ctx.overridden = ctx.cfg.apply_env_overrides();
        if (seed >= 0) ctx.cfg.set("run.seed", std::to_string(seed));
        if (!out_dir.empty()) ctx.cfg.set("output.dir", out_dir);
        ctx.out_dir = ctx.cfg.str("output.dir");
        if (threads > 0) omp_set_num_threads(threads);
        if (fwd->parsed()) return cmd_forward(ctx, std::cout);
        if (rec->parsed()) return cmd_reconstruct(ctx, std::cout);
        if (sym->parsed()) return cmd_symbol_scan(ctx, std::cout);
        if (lay->parsed()) return cmd_layerstrip(ctx, std::cout);
        return cmd_selftest(ctx, std::cout, only);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_failure;
    }
}

}  // namespace georay
