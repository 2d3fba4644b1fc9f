#include "stressmkl/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "stressmkl/error.hpp"

namespace stressmkl {
namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
    double out = 0.0;
    const auto* end = v.data() + v.size();
    auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || ptr != end)
        throw Error(ErrorKind::InvalidParameter, key + ": expected a number, got '" + v + "'");
    return out;
}

long long to_int(const std::string& key, const std::string& v) {
    long long out = 0;
    const auto* end = v.data() + v.size();
    auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || ptr != end)
        throw Error(ErrorKind::InvalidParameter, key + ": expected an integer, got '" + v + "'");
    return out;
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw Error(ErrorKind::InvalidParameter, key + ": expected true or false, got '" + v + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_double(key, trim(item)));
    if (out.empty()) throw Error(ErrorKind::InvalidParameter, key + ": empty list");
    return out;
}

std::string fmt(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::string fmt_list(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + fmt(v[i]);
    return out;
}

struct Entry {
    std::function<void(PipelineConfig&, const std::string&, const std::string&)> set;
    std::function<std::string(const PipelineConfig&)> get;
};

#define NUM(name, field)                                                                                    \
    {name, {[](PipelineConfig& c, const std::string& k, const std::string& v) { c.field = to_double(k, v); }, \
            [](const PipelineConfig& c) { return fmt(c.field); }}}
#define INT(name, field)                                                                                          \
    {name, {[](PipelineConfig& c, const std::string& k, const std::string& v) {                                   \
                c.field = static_cast<decltype(c.field)>(to_int(k, v));                                           \
            },                                                                                                    \
            [](const PipelineConfig& c) { return std::to_string(c.field); }}}
#define BOOL(name, field)                                                                                   \
    {name, {[](PipelineConfig& c, const std::string& k, const std::string& v) { c.field = to_bool(k, v); },   \
            [](const PipelineConfig& c) { return std::string(c.field ? "true" : "false"); }}}
#define LIST(name, field)                                                                                   \
    {name, {[](PipelineConfig& c, const std::string& k, const std::string& v) { c.field = to_list(k, v); },   \
            [](const PipelineConfig& c) { return fmt_list(c.field); }}}

const std::vector<std::pair<std::string, Entry>>& table() {
    static const std::vector<std::pair<std::string, Entry>> t = {
        NUM("eda_cutoff_hz", preprocess.eda_cutoff_hz),
        NUM("max_gap_s", preprocess.max_gap_s),
        NUM("window_s", window_s),
        NUM("overlap", overlap),
        NUM("peak_slope_threshold", peaks.slope_threshold),
        NUM("peak_min_amplitude", peaks.min_amplitude),
        NUM("peak_smoothing_s", peaks.smoothing_s),
        NUM("score_low", score_thresholds.low),
        NUM("score_high", score_thresholds.high),
        BOOL("balance", balance),
        {"model", {[](PipelineConfig& c, const std::string&, const std::string& v) {
                       c.experiment.family = parse_model_family(v);
                   },
                   [](const PipelineConfig& c) { return to_string(c.experiment.family); }}},
        INT("tasks", experiment.tasks),
        {"kernel", {[](PipelineConfig& c, const std::string&, const std::string& v) {
                        c.experiment.kernel = parse_kernel_kind(v);
                    },
                    [](const PipelineConfig& c) { return to_string(c.experiment.kernel); }}},
        {"reg", {[](PipelineConfig& c, const std::string&, const std::string& v) {
                     c.experiment.reg = parse_regularizer(v);
                 },
                 [](const PipelineConfig& c) { return to_string(c.experiment.reg); }}},
        LIST("grid_C", experiment.grid.C),
        LIST("grid_nu", experiment.grid.nu),
        LIST("grid_gamma", experiment.grid.gamma),
        INT("n_outer", experiment.n_outer),
        INT("n_inner", experiment.n_inner),
        INT("seed", experiment.seed),
        BOOL("group_by_drive", experiment.group_by_drive),
        NUM("profile_gamma", experiment.clustering.gamma),
        INT("kmeans_restarts", experiment.clustering.kmeans.restarts),
        INT("kmeans_max_iters", experiment.clustering.kmeans.max_iters),
        {"omega_sign", {[](PipelineConfig& c, const std::string&, const std::string& v) {
                            c.experiment.mtmkl.omega_sign = parse_omega_sign(v);
                        },
                        [](const PipelineConfig& c) { return to_string(c.experiment.mtmkl.omega_sign); }}},
        NUM("step_size", experiment.mtmkl.step_size),
        INT("max_outer_iters", experiment.mtmkl.max_outer_iters),
        NUM("eta_tolerance", experiment.mtmkl.eta_tolerance),
        INT("max_step_halvings", experiment.mtmkl.max_step_halvings),
        BOOL("learn_eta", experiment.mtmkl.learn_eta),
        NUM("logreg_tolerance", experiment.logreg.tolerance),
        INT("logreg_max_iters", experiment.logreg.max_iters),
    };
    return t;
}

#undef NUM
#undef INT
#undef BOOL
#undef LIST

}  // namespace

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const auto& [name, entry] : table()) k.push_back(name);
        return k;
    }();
    return keys;
}

void apply_setting(PipelineConfig& cfg, const std::string& key, const std::string& value) {
    for (const auto& [name, entry] : table()) {
        if (name == key) {
            entry.set(cfg, key, value);
            return;
        }
    }
    throw Error(ErrorKind::InvalidParameter, "unknown config key '" + key + "'");
}

PipelineConfig parse_config(const std::string& text) {
    PipelineConfig cfg;
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorKind::InvalidParameter, "config line " + std::to_string(lineno) + ": expected key = value");
        apply_setting(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    if (!(cfg.overlap >= 0.0 && cfg.overlap < 1.0))
        throw Error(ErrorKind::InvalidParameter, "overlap must lie in [0, 1)");
    if (!(cfg.window_s > 0.0)) throw Error(ErrorKind::InvalidParameter, "window_s must be positive");
    return cfg;
}

PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot read config '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        return parse_config(buf.str());
    } catch (const Error& e) {
        rethrow_with_context(e, path);
    }
}

std::string to_text(const PipelineConfig& cfg) {
    std::string out;
    for (const auto& [name, entry] : table()) out += name + " = " + entry.get(cfg) + "\n";
    return out;
}

}  // namespace stressmkl
