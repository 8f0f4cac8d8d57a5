#include "georay/config.hpp"
#include "georay/types.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace georay {

const std::vector<ConfigKey>& config_schema() {
    static const std::vector<ConfigKey> schema = {
        {"run.seed", "0", "seed for random probes and perturbation placement"},
        {"run.mode", "local", "reconstruct mode: local | layer"},
        {"output.dir", "georay_out", "output directory (overridden by --out)"},
        {"metric.kind", "euclidean", "euclidean | radial_herglotz (sound speed c0 + c1 r in a ball)"},
        {"metric.c0", "1", "sound speed at the centre"},
        {"metric.c1", "0.2", "radial gradient (ignored for euclidean)"},
        {"metric.R", "1", "ball radius"},
        {"metric.perturb_amplitude", "0", "relative conformal bump added to the metric for the data"},
        {"metric.perturb_width", "0.15", "width of the perturbation bump"},
        {"chart.epsilon", "0", "convexifying term of the artificial boundary (0 for the sphere chart)"},
        {"chart.c", "0.2", "offset of the artificial boundary"},
        {"chart.c_schedule", "0.4,0.2,0.1,0.05", "offsets tried by the small-c search"},
        {"chart.auto_c", "false", "reconstruct at c_star from the small-c search"},
        {"grid.dims", "16,16,16", "nodes in x, y1, y2"},
        {"grid.y_half", "0.5", "grid covers |y_k| <= y_half"},
        {"grid.x_floor", "0.25", "x_floor as a fraction of c"},
        {"support.x_hi", "0.9", "upper x of the support prior K as a fraction of c"},
        {"support.y_half", "0.25", "K covers |y_k| <= y_half"},
        {"ray.kappa", "1", "|lambda| <= kappa x"},
        {"ray.delta0", "0.5", "half-length of the curve parameter interval"},
        {"ray.h", "0.0078125", "integration step (<= delta0/16)"},
        {"ray.n_lambda", "9", "Gauss-Legendre nodes in lambda"},
        {"ray.n_omega", "16", "directions on the unit circle"},
        {"cutoff.mode", "constant_nu", "constant_nu | alpha_matched"},
        {"cutoff.nu", "0.0625", "Gaussian parameter for constant_nu"},
        {"cutoff.s_max", "4", "truncation point in units of sqrt(nu)"},
        {"cutoff.taper", "0.1", "taper fraction of the truncation interval"},
        {"cutoff.F_over_c", "2", "conjugation weight F as a multiple of c"},
        {"solve.method", "neumann_preconditioned", "neumann_preconditioned | cgnr | dense_direct"},
        {"solve.max_iter", "40", "iteration cap"},
        {"solve.tol", "1e-8", "relative residual tolerance"},
        {"solve.taper_low", "0.05", "singular value floor of the parametrix, fraction of the peak"},
        {"solve.blocks", "1", "frozen-kernel blocks per y axis"},
        {"solve.norm_r", "0", "weight order r of the reported weighted norms"},
        {"phantom.kind", "gaussian_bump", "zero | gaussian_bump | poly_bump | shell | two_shell | oscillatory"},
        {"phantom.amplitude", "1", "amplitude"},
        {"phantom.center_x", "0.55", "centre x as a fraction of c"},
        {"phantom.center_y", "0,0", "centre y"},
        {"phantom.sigma", "0.02", "gaussian width"},
        {"phantom.support", "0.06", "gaussian support radius"},
        {"phantom.radii", "0.3,0.15,0.15", "poly_bump radii; x as a fraction of c"},
        {"phantom.k", "4", "oscillatory frequency in y1"},
        {"phantom.rho_c1", "0.03", "outer shell depth"},
        {"phantom.rho_c2", "0.11", "inner shell depth"},
        {"phantom.rho_w", "0.015", "shell half-width in depth"},
        {"phantom.lateral", "0.22", "shell lateral window radius"},
        {"phantom.amplitude2", "1", "inner shell amplitude"},
        {"input.data", "", "X-ray data file; empty = synthesize from the phantom"},
        {"layer.intervals", "0:0.1,0.055:0.2", "depth intervals t':t'' of the layers, outermost first"},
        {"layer.d_rho", "0", "depth step; 0 = first layer depth / (dims_x - 1)"},
        {"layer.blend_width", "0", "blend width in depth; 0 = two depth steps"},
        {"symbol.n", "129", "symbol scan nodes per axis"},
        {"symbol.half", "40", "symbol scan half-width"},
        {"symbol.F", "auto", "F of the symbol scan; auto = cutoff.F_over_c * chart.c"},
    };
    return schema;
}

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

bool known_key(const std::string& k) {
    for (const auto& e : config_schema())
        if (k == e.key) return true;
    return false;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) out.push_back(trim(cur));
    return out;
}

double parse_real(const std::string& key, const std::string& v) {
    double out = 0.0;
    const char* b = v.data();
    const char* e = b + v.size();
    auto res = std::from_chars(b, e, out);
    if (v.empty() || res.ec != std::errc() || res.ptr != e)
        throw ValidationError("config key '" + key + "': expected a number, got '" + v + "'");
    return out;
}

}  // namespace

std::string env_override_name(const std::string& key) {
    std::string n = "GEORAY_OVERRIDE_";
    for (char ch : key) n += ch == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    return n;
}

RunConfig::RunConfig() {
    for (const auto& e : config_schema()) values_[e.key] = e.default_value;
}

RunConfig RunConfig::parse(const std::string& text, const std::string& origin) {
    RunConfig cfg;
    std::set<std::string> seen;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        const std::string where = origin + ":" + std::to_string(lineno);
        if (eq == std::string::npos) throw ValidationError(where + ": expected 'key = value'");
        const std::string k = trim(line.substr(0, eq));
        const std::string v = trim(line.substr(eq + 1));
        if (!known_key(k)) throw ValidationError(where + ": unknown config key '" + k + "'");
        if (!seen.insert(k).second) throw ValidationError(where + ": duplicate config key '" + k + "'");
        cfg.values_[k] = v;
    }
    return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ValidationError("cannot read config file: " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse(ss.str(), path);
}

std::string RunConfig::serialize() const {
    std::ostringstream os;
    for (const auto& e : config_schema()) os << e.key << " = " << values_.at(e.key) << "\n";
    return os.str();
}

std::vector<std::string> RunConfig::apply_env_overrides() {
    std::vector<std::string> hit;
    for (const auto& e : config_schema()) {
        if (const char* v = std::getenv(env_override_name(e.key).c_str())) {
            values_[e.key] = trim(v);
            hit.push_back(e.key);
        }
    }
    return hit;
}

void RunConfig::set(const std::string& key, const std::string& value) {
    if (!known_key(key)) throw ValidationError("unknown config key '" + key + "'");
    values_[key] = trim(value);
}

const std::string& RunConfig::raw(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ValidationError("unknown config key '" + key + "'");
    return it->second;
}

double RunConfig::real(const std::string& key) const { return parse_real(key, raw(key)); }

int RunConfig::integer(const std::string& key) const {
    const std::string& v = raw(key);
    int out = 0;
    auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || res.ec != std::errc() || res.ptr != v.data() + v.size())
        throw ValidationError("config key '" + key + "': expected an integer, got '" + v + "'");
    return out;
}

bool RunConfig::boolean(const std::string& key) const {
    const std::string& v = raw(key);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ValidationError("config key '" + key + "': expected true or false, got '" + v + "'");
}

std::vector<double> RunConfig::reals(const std::string& key) const {
    std::vector<double> out;
    for (const auto& p : split(raw(key), ',')) out.push_back(parse_real(key, p));
    return out;
}

std::vector<int> RunConfig::integers(const std::string& key) const {
    std::vector<int> out;
    for (const auto& p : split(raw(key), ',')) {
        const double d = parse_real(key, p);
        if (d != static_cast<int>(d)) throw ValidationError("config key '" + key + "': expected integers, got '" + p + "'");
        out.push_back(static_cast<int>(d));
    }
    return out;
}

}  // namespace georay
