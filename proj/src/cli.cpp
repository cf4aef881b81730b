#include "homtom/cli.hpp"

#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "nlohmann/json.hpp"

#include "homtom/kernels.hpp"
#include "homtom/observables.hpp"
#include "homtom/reconstruction.hpp"
#include "homtom/simd.hpp"
#include "homtom/special_functions.hpp"
#include "homtom/states.hpp"

namespace homtom {
namespace {

using nlohmann::json;

struct RunConfig {
    std::string command;
    std::string state_kind = "coherent";
    double mean_n = 0.0;
    double squeeze_r = 0.0;
    double squeeze_angle = 0.0;
    double alpha_phase = 0.0;
    int fock_n = 0;
    std::string eta_text;  // number, or comma list for sweep-eta
    std::string f_text;    // number, comma list, or a..b range for sweep-f
    int n_max = 47;
    long samples_per_phase = 1000;
    long n_samples = 100000;
    std::uint64_t seed = 0;
    std::string output;
    std::string format;  // csv | json; empty picks the per-command default
    int threads = 1;
    std::string isa = "auto";
    std::vector<std::string> track;  // element indexes as "n,m"
    double threshold = 1e-4;
    std::string input;  // dataset path for observable / mc-experiment
    std::string mode = "deterministic";
    bool keep_records = false;
    std::string kernel_m = "0..5";
    std::string kernel_d = "0..3";
    double x_max = 6.0;
    double x_step = 0.05;
};

// ---------- small parsers ----------

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& s) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &pos);
    } catch (...) {
        throw std::invalid_argument("not a number: '" + s + "'");
    }
    if (pos != s.size()) throw std::invalid_argument("not a number: '" + s + "'");
    return v;
}

long parse_long(const std::string& s) {
    std::size_t pos = 0;
    long v = 0;
    try {
        v = std::stol(s, &pos);
    } catch (...) {
        throw std::invalid_argument("not an integer: '" + s + "'");
    }
    if (pos != s.size()) throw std::invalid_argument("not an integer: '" + s + "'");
    return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto at = s.find(sep, start);
        out.push_back(trim(s.substr(start, at - start)));
        if (at == std::string::npos) break;
        start = at + 1;
    }
    return out;
}

// Accepts "32", "2,4,8" and "2..40".
std::vector<int> parse_int_list(const std::string& text) {
    const auto dots = text.find("..");
    std::vector<int> out;
    if (dots != std::string::npos) {
        const long lo = parse_long(trim(text.substr(0, dots)));
        const long hi = parse_long(trim(text.substr(dots + 2)));
        if (hi < lo) throw std::invalid_argument("empty range: '" + text + "'");
        for (long v = lo; v <= hi; ++v) out.push_back(static_cast<int>(v));
        return out;
    }
    for (const auto& tok : split(text, ','))
        out.push_back(static_cast<int>(parse_long(tok)));
    return out;
}

std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> out;
    for (const auto& tok : split(text, ',')) out.push_back(parse_double(tok));
    return out;
}

std::pair<int, int> parse_element(const std::string& text) {
    const auto at = text.find(',');
    if (at == std::string::npos)
        throw std::invalid_argument("element must be 'n,m': '" + text + "'");
    return {static_cast<int>(parse_long(trim(text.substr(0, at)))),
            static_cast<int>(parse_long(trim(text.substr(at + 1))))};
}

// ---------- config resolution ----------

StateSpec make_state(const RunConfig& cfg) {
    StateSpec s;
    if (cfg.state_kind == "vacuum") {
        if (cfg.mean_n != 0.0)
            throw std::invalid_argument("the vacuum state takes no --mean-n");
        s = StateSpec::vacuum();
    } else if (cfg.state_kind == "coherent") {
        s = StateSpec::coherent(cfg.mean_n, cfg.alpha_phase);
    } else if (cfg.state_kind == "squeezed") {
        s = StateSpec::squeezed(cfg.mean_n, cfg.squeeze_r, cfg.squeeze_angle,
                                cfg.alpha_phase);
    } else if (cfg.state_kind == "fock") {
        s = StateSpec::fock(cfg.fock_n);
    } else {
        throw std::invalid_argument("unknown state kind: '" + cfg.state_kind + "'");
    }
    s.validate();
    return s;
}

double eta_single(const RunConfig& cfg, const char* dflt) {
    const auto list = parse_double_list(cfg.eta_text.empty() ? dflt : cfg.eta_text);
    if (list.size() != 1)
        throw std::invalid_argument("this command takes a single --eta value");
    return list[0];
}

std::vector<double> eta_list(const RunConfig& cfg, const char* dflt) {
    auto list = parse_double_list(cfg.eta_text.empty() ? dflt : cfg.eta_text);
    if (list.empty()) throw std::invalid_argument("--eta list is empty");
    return list;
}

int f_single(const RunConfig& cfg, const char* dflt) {
    const auto list = parse_int_list(cfg.f_text.empty() ? dflt : cfg.f_text);
    if (list.size() != 1)
        throw std::invalid_argument("this command takes a single --f value");
    return list[0];
}

std::vector<int> f_list(const RunConfig& cfg, const char* dflt) {
    auto list = parse_int_list(cfg.f_text.empty() ? dflt : cfg.f_text);
    if (list.empty()) throw std::invalid_argument("--f list is empty");
    return list;
}

std::vector<std::pair<int, int>> track_list(const RunConfig& cfg) {
    std::vector<std::pair<int, int>> out;
    if (cfg.track.empty()) {
        for (auto [n, m] : {std::pair<int, int>{5, 5}, {10, 5}, {18, 5}})
            if (n <= cfg.n_max && m <= cfg.n_max) out.emplace_back(n, m);
        if (out.empty()) out.emplace_back(cfg.n_max, cfg.n_max);
        return out;
    }
    for (const auto& t : cfg.track) out.push_back(parse_element(t));
    for (const auto& [n, m] : out)
        if (n < 0 || m < 0 || n > cfg.n_max || m > cfg.n_max)
            throw std::invalid_argument("--track element exceeds --n-max");
    return out;
}

std::string format_of(const RunConfig& cfg, const char* dflt) {
    const std::string f = cfg.format.empty() ? dflt : cfg.format;
    if (f != "csv" && f != "json")
        throw std::invalid_argument("--format must be csv or json");
    return f;
}

ScanConfig scan_config(const RunConfig& cfg, int f) {
    ScanConfig sc;
    sc.f = f;
    sc.n_max = cfg.n_max;
    sc.threads = cfg.threads;
    return sc;
}

// ---------- output plumbing ----------

std::filesystem::path resolve_output(const RunConfig& cfg, const std::string& fallback) {
    std::filesystem::path p = cfg.output.empty() ? fallback : cfg.output;
    if (p.is_relative())
        if (const char* dir = std::getenv("HOMTOM_OUTPUT_DIR"); dir && *dir)
            p = std::filesystem::path(dir) / p;
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    return p;
}

std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream out(p);
    if (!out) throw std::runtime_error("cannot open output file: " + p.string());
    return out;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_json(const std::filesystem::path& p, const json& doc) {
    auto out = open_out(p);
    out << doc.dump(2) << "\n";
    if (!out) throw std::runtime_error("short write: " + p.string());
}

// Matrix table with a per-element complex value and one extra real column
// (epsilon for estimates, sigma for error matrices).
void write_matrix_csv(const std::filesystem::path& p, int n_max, const char* last_name,
                      const std::function<std::complex<double>(int, int)>& value,
                      const std::function<double(int, int)>& last) {
    auto out = open_out(p);
    out << "n,m,re,im," << last_name << "\n";
    for (int n = 0; n <= n_max; ++n)
        for (int m = 0; m <= n_max; ++m)
            out << n << "," << m << "," << fmt(value(n, m).real()) << ","
                << fmt(value(n, m).imag()) << "," << fmt(last(n, m)) << "\n";
    if (!out) throw std::runtime_error("short write: " + p.string());
}

json matrix_rows_json(int n_max, const char* last_name,
                      const std::function<std::complex<double>(int, int)>& value,
                      const std::function<double(int, int)>& last) {
    json rows = json::array();
    for (int n = 0; n <= n_max; ++n)
        for (int m = 0; m <= n_max; ++m)
            rows.push_back({{"n", n},
                            {"m", m},
                            {"re", value(n, m).real()},
                            {"im", value(n, m).imag()},
                            {last_name, last(n, m)}});
    return rows;
}

json state_json(const StateSpec& s) {
    const char* kind = s.kind == StateKind::coherent  ? "coherent"
                       : s.kind == StateKind::squeezed ? "squeezed"
                                                        : "fock";
    return {{"kind", kind},          {"mean_photons", s.mean_photons},
            {"squeeze_r", s.squeeze_r}, {"squeeze_angle", s.squeeze_angle},
            {"alpha_phase", s.alpha_phase}, {"fock_n", s.fock_n}};
}

std::filesystem::path sibling(const std::filesystem::path& p, const char* ext) {
    auto q = p;
    q.replace_extension(ext);
    return q;
}

// ---------- commands ----------

int cmd_kernel(const RunConfig& cfg) {
    const double eta = eta_single(cfg, "1.0");
    const auto ms = parse_int_list(cfg.kernel_m);
    const auto ds = parse_int_list(cfg.kernel_d);
    for (const int v : ms)
        if (v < 0) throw std::invalid_argument("--m indexes must be >= 0");
    for (const int v : ds)
        if (v < 0) throw std::invalid_argument("--d offsets must be >= 0");
    if (cfg.x_step <= 0.0) throw std::invalid_argument("--x-step must be > 0");
    if (cfg.x_max < 0.0) throw std::invalid_argument("--x-max must be >= 0");

    int need = 0;
    for (const int m : ms)
        for (const int d : ds) need = std::max(need, m + d);
    const auto spec = make_kernel_spec(eta, need);
    const int nx = static_cast<int>(std::floor(cfg.x_max / cfg.x_step + 1e-9)) + 1;

    const auto fmt_out = format_of(cfg, "csv");
    const auto path = resolve_output(cfg, std::string("kernel.") + fmt_out);
    double max_abs = 0.0;
    long rows = 0;

    json jrows = json::array();
    std::ofstream out;
    if (fmt_out == "csv") {
        out = open_out(path);
        out << "m,d,x,re,im\n";
    }
    for (const int m : ms)
        for (const int d : ds)
            for (int i = 0; i < nx; ++i) {
                const double x = i * cfg.x_step;
                const auto k = kernel_point(spec, m, d, x, 0.0);
                max_abs = std::max(max_abs, std::abs(k));
                ++rows;
                if (fmt_out == "csv")
                    out << m << "," << d << "," << fmt(x) << "," << fmt(k.real())
                        << "," << fmt(k.imag()) << "\n";
                else
                    jrows.push_back({{"m", m},
                                     {"d", d},
                                     {"x", x},
                                     {"re", k.real()},
                                     {"im", k.imag()}});
            }
    if (fmt_out == "csv") {
        if (!out) throw std::runtime_error("short write: " + path.string());
    } else {
        write_json(path, json{{"command", "kernel"},
                              {"eta", eta},
                              {"max_abs", max_abs},
                              {"values", jrows}});
    }
    std::printf("kernel: wrote %ld values to %s (eta=%s, max |K| = %s)\n", rows,
                path.string().c_str(), fmt(eta).c_str(), fmt(max_abs).c_str());
    return 0;
}

int cmd_reconstruct(const RunConfig& cfg) {
    const auto state = make_state(cfg);
    const double eta = eta_single(cfg, "1.0");
    const auto est = reconstruct(state, eta, scan_config(cfg, f_single(cfg, "32")));

    const json summary = {{"command", "reconstruct"},
                          {"state", state_json(state)},
                          {"eta", eta},
                          {"f", est.config.f},
                          {"n_max", cfg.n_max},
                          {"max_epsilon", est.max_deviation()},
                          {"max_quad_residual", est.max_quad_residual}};
    auto value = [&](int n, int m) { return est.elements(n, m); };
    auto eps = [&](int n, int m) { return est.deviation(n, m); };

    const auto fmt_out = format_of(cfg, "csv");
    const auto path = resolve_output(cfg, std::string("reconstruct.") + fmt_out);
    if (fmt_out == "csv") {
        write_matrix_csv(path, cfg.n_max, "epsilon", value, eps);
        auto doc = summary;
        write_json(sibling(path, ".summary.json"), doc);
    } else {
        auto doc = summary;
        doc["elements"] = matrix_rows_json(cfg.n_max, "epsilon", value, eps);
        write_json(path, doc);
    }
    std::printf("reconstruct: f=%d max epsilon = %s (quad residual %s) -> %s\n",
                est.config.f, fmt(est.max_deviation()).c_str(),
                fmt(est.max_quad_residual).c_str(), path.string().c_str());
    return 0;
}

int cmd_sweep_f(const RunConfig& cfg) {
    const auto state = make_state(cfg);
    const double eta = eta_single(cfg, "1.0");
    const auto fs = f_list(cfg, "2..40");
    const auto tracked = track_list(cfg);

    std::vector<std::vector<std::pair<int, double>>> curves;
    for (const auto& [n, m] : tracked)
        curves.push_back(deviation_curve(state, eta, n, m, fs, cfg.n_max, cfg.threads));

    std::optional<int> f0;
    for (std::size_t i = 0; i < fs.size() && !f0; ++i) {
        bool all_below = true;
        for (const auto& curve : curves)
            all_below = all_below && curve[i].second < cfg.threshold;
        if (all_below) f0 = fs[i];
    }

    json summary = {{"command", "sweep-f"}, {"state", state_json(state)},
                    {"eta", eta},           {"n_max", cfg.n_max},
                    {"threshold", cfg.threshold}};
    json jtracked = json::array();
    for (const auto& [n, m] : tracked) jtracked.push_back({{"n", n}, {"m", m}});
    summary["tracked"] = jtracked;
    summary["f0"] = f0 ? json(*f0) : json(nullptr);

    const auto fmt_out = format_of(cfg, "csv");
    const auto path = resolve_output(cfg, std::string("sweep_f.") + fmt_out);
    if (fmt_out == "csv") {
        auto out = open_out(path);
        out << "f";
        for (const auto& [n, m] : tracked) out << ",eps_" << n << "_" << m;
        out << "\n";
        for (std::size_t i = 0; i < fs.size(); ++i) {
            out << fs[i];
            for (const auto& curve : curves) out << "," << fmt(curve[i].second);
            out << "\n";
        }
        if (!out) throw std::runtime_error("short write: " + path.string());
        write_json(sibling(path, ".summary.json"), summary);
    } else {
        json jrows = json::array();
        for (std::size_t i = 0; i < fs.size(); ++i) {
            json row = {{"f", fs[i]}};
            json eps = json::array();
            for (const auto& curve : curves) eps.push_back(curve[i].second);
            row["epsilon"] = eps;
            jrows.push_back(row);
        }
        auto doc = summary;
        doc["rows"] = jrows;
        write_json(path, doc);
    }
    if (f0)
        std::printf("sweep-f: f0 = %d (tracked deviations < %s) -> %s\n", *f0,
                    fmt(cfg.threshold).c_str(), path.string().c_str());
    else
        std::printf("sweep-f: threshold %s not reached in the scanned range -> %s\n",
                    fmt(cfg.threshold).c_str(), path.string().c_str());
    return 0;
}

int cmd_sweep_eta(const RunConfig& cfg) {
    const auto state = make_state(cfg);
    const auto etas = eta_list(cfg, "1.0,0.99,0.97,0.95,0.9");
    const int f = f_single(cfg, "64");
    const auto tracked = track_list(cfg);

    std::vector<std::vector<double>> rows;
    for (const double eta : etas) {
        auto em = statistical_errors(state, eta, scan_config(cfg, f));
        std::vector<double> row;
        for (const auto& [n, m] : tracked) row.push_back(em.sigma(n, m));
        rows.push_back(std::move(row));
    }

    json summary = {{"command", "sweep-eta"}, {"state", state_json(state)},
                    {"f", f},                 {"n_max", cfg.n_max}};
    json jtracked = json::array();
    for (const auto& [n, m] : tracked) jtracked.push_back({{"n", n}, {"m", m}});
    summary["tracked"] = jtracked;
    summary["eta"] = etas;

    const auto fmt_out = format_of(cfg, "csv");
    const auto path = resolve_output(cfg, std::string("sweep_eta.") + fmt_out);
    if (fmt_out == "csv") {
        auto out = open_out(path);
        out << "eta";
        for (const auto& [n, m] : tracked) out << ",sigma_" << n << "_" << m;
        out << "\n";
        for (std::size_t i = 0; i < etas.size(); ++i) {
            out << fmt(etas[i]);
            for (const double v : rows[i]) out << "," << fmt(v);
            out << "\n";
        }
        if (!out) throw std::runtime_error("short write: " + path.string());
        write_json(sibling(path, ".summary.json"), summary);
    } else {
        json jrows = json::array();
        for (std::size_t i = 0; i < etas.size(); ++i)
            jrows.push_back({{"eta", etas[i]}, {"sigma", rows[i]}});
        auto doc = summary;
        doc["rows"] = jrows;
        write_json(path, doc);
    }
    const auto& [n0, m0] = tracked[0];
    std::printf("sweep-eta: sigma(%d,%d) spans %s -> %s across %zu efficiencies -> %s\n",
                n0, m0, fmt(rows.front()[0]).c_str(), fmt(rows.back()[0]).c_str(),
                etas.size(), path.string().c_str());
    return 0;
}

int cmd_stat_errors(const RunConfig& cfg) {
    const auto state = make_state(cfg);
    const double eta = eta_single(cfg, "1.0");
    const int f = f_single(cfg, "64");
    const auto em = statistical_errors(state, eta, scan_config(cfg, f));

    double max_sigma = 0.0;
    for (int n = 0; n <= cfg.n_max; ++n)
        for (int m = 0; m <= cfg.n_max; ++m) max_sigma = std::max(max_sigma, em.sigma(n, m));

    const json summary = {{"command", "stat-errors"},
                          {"state", state_json(state)},
                          {"eta", eta},
                          {"f", f},
                          {"n_max", cfg.n_max},
                          {"sigma_diag_last", em.sigma(cfg.n_max, cfg.n_max)},
                          {"max_sigma", max_sigma},
                          {"max_quad_residual", em.max_quad_residual},
                          {"n_data_scaling", em.n_data_scaling}};
    auto value = [&](int n, int m) {
        return std::complex<double>(em.re_sigma(n, m), em.im_sigma(n, m));
    };
    auto sig = [&](int n, int m) { return em.sigma(n, m); };

    const auto fmt_out = format_of(cfg, "csv");
    const auto path = resolve_output(cfg, std::string("stat_errors.") + fmt_out);
    if (fmt_out == "csv") {
        write_matrix_csv(path, cfg.n_max, "sigma", value, sig);
        write_json(sibling(path, ".summary.json"), summary);
    } else {
        auto doc = summary;
        doc["elements"] = matrix_rows_json(cfg.n_max, "sigma", value, sig);
        write_json(path, doc);
    }
    std::printf(
        "stat-errors: sigma(%d,%d) = %s; divide by sqrt(N) for N records -> %s\n",
        cfg.n_max, cfg.n_max, fmt(em.sigma(cfg.n_max, cfg.n_max)).c_str(),
        path.string().c_str());
    return 0;
}

int cmd_observable(const RunConfig& cfg) {
    ObservableSummary s;
    json source;
    if (!cfg.input.empty()) {
        s = measure_observables(read_dataset(cfg.input));
        source = {{"dataset", cfg.input}};
    } else if (cfg.mode == "deterministic") {
        s = measure_observables(make_state(cfg), eta_single(cfg, "1.0"));
        source = {{"state", state_json(make_state(cfg))}, {"mode", "deterministic"}};
    } else if (cfg.mode == "mc" || cfg.mode == "monte-carlo") {
        s = measure_observables_mc(make_state(cfg), eta_single(cfg, "1.0"),
                                   cfg.n_samples, cfg.seed);
        source = {{"state", state_json(make_state(cfg))},
                  {"mode", "mc"},
                  {"samples", cfg.n_samples},
                  {"seed", cfg.seed}};
    } else {
        throw std::invalid_argument("--mode must be deterministic or mc");
    }

    const auto fmt_out = format_of(cfg, "json");
    const auto path = resolve_output(cfg, std::string("observable.") + fmt_out);
    if (fmt_out == "json") {
        json doc = {{"command", "observable"}, {"mean", s.mean},
                    {"sigma", s.sigma},        {"variance", s.variance},
                    {"precision", s.precision}, {"std_error", s.std_error},
                    {"n_samples", s.n_samples}};
        doc["source"] = source;
        write_json(path, doc);
    } else {
        auto out = open_out(path);
        out << "mean,sigma,variance,precision,std_error,n_samples\n"
            << fmt(s.mean) << "," << fmt(s.sigma) << "," << fmt(s.variance) << ","
            << fmt(s.precision) << "," << fmt(s.std_error) << "," << s.n_samples
            << "\n";
        if (!out) throw std::runtime_error("short write: " + path.string());
    }
    std::printf(
        "observable: mean = %s sigma = %s variance = %s precision = %s -> %s\n",
        fmt(s.mean).c_str(), fmt(s.sigma).c_str(), fmt(s.variance).c_str(),
        fmt(s.precision).c_str(), path.string().c_str());
    return 0;
}

int cmd_mc_experiment(const RunConfig& cfg) {
    const auto fmt_out = format_of(cfg, "csv");

    if (!cfg.input.empty()) {
        const auto ds = read_dataset(cfg.input);
        const auto est = reconstruct_from_dataset(ds, cfg.n_max);
        auto value = [&](int n, int m) { return est.elements(n, m); };
        auto eps = [&](int n, int m) { return est.deviation(n, m); };
        const json summary = {{"command", "mc-experiment"},
                              {"dataset", cfg.input},
                              {"state", state_json(ds.state)},
                              {"eta", ds.eta},
                              {"f", ds.f},
                              {"n_records", ds.n_records},
                              {"n_max", cfg.n_max},
                              {"max_deviation", est.max_deviation()}};
        const auto path = resolve_output(cfg, std::string("mc_experiment.") + fmt_out);
        if (fmt_out == "csv") {
            write_matrix_csv(path, cfg.n_max, "epsilon", value, eps);
            write_json(sibling(path, ".summary.json"), summary);
        } else {
            auto doc = summary;
            doc["elements"] = matrix_rows_json(cfg.n_max, "epsilon", value, eps);
            write_json(path, doc);
        }
        std::printf("mc-experiment: N=%lld from %s, max |deviation| = %s -> %s\n",
                    ds.n_records, cfg.input.c_str(), fmt(est.max_deviation()).c_str(),
                    path.string().c_str());
        return 0;
    }

    const auto state = make_state(cfg);
    const double eta = eta_single(cfg, "1.0");
    auto sc = scan_config(cfg, f_single(cfg, "16"));
    sc.mode = ScanMode::monte_carlo;
    sc.samples_per_phase = cfg.samples_per_phase;
    const auto exp = mc_experiment(state, eta, sc, cfg.seed, cfg.keep_records);

    double max_se = 0.0;
    for (int n = 0; n <= cfg.n_max; ++n)
        for (int m = 0; m <= cfg.n_max; ++m)
            max_se = std::max(max_se, exp.std_error(n, m));

    json summary = {{"command", "mc-experiment"},
                    {"state", state_json(state)},
                    {"eta", eta},
                    {"f", sc.f},
                    {"samples_per_phase", cfg.samples_per_phase},
                    {"n_records", exp.n_records},
                    {"seed", exp.seed},
                    {"n_max", cfg.n_max},
                    {"max_deviation", exp.estimate.max_deviation()},
                    {"max_std_error", max_se}};

    auto value = [&](int n, int m) { return exp.estimate.elements(n, m); };
    auto eps = [&](int n, int m) { return exp.estimate.deviation(n, m); };
    auto se_value = [&](int n, int m) {
        return std::complex<double>(exp.std_error_re(n, m), exp.std_error_im(n, m));
    };
    auto se = [&](int n, int m) { return exp.std_error(n, m); };

    const auto path = resolve_output(cfg, std::string("mc_experiment.") + fmt_out);
    std::filesystem::path records_path;
    if (cfg.keep_records) {
        records_path = sibling(path, ".homodyne");
        write_dataset(exp.dataset, records_path.string());
        summary["records"] = records_path.string();
    }
    if (fmt_out == "csv") {
        write_matrix_csv(path, cfg.n_max, "epsilon", value, eps);
        write_matrix_csv(sibling(path, ".stderr.csv"), cfg.n_max, "sigma", se_value, se);
        write_json(sibling(path, ".summary.json"), summary);
    } else {
        auto doc = summary;
        doc["elements"] = matrix_rows_json(cfg.n_max, "epsilon", value, eps);
        doc["std_errors"] = matrix_rows_json(cfg.n_max, "sigma", se_value, se);
        write_json(path, doc);
    }
    std::printf("mc-experiment: N=%lld max |deviation| = %s max std error = %s -> %s\n",
                exp.n_records, fmt(exp.estimate.max_deviation()).c_str(),
                fmt(max_se).c_str(), path.string().c_str());
    return 0;
}

int cmd_verify(const RunConfig& cfg) {
    bool ok = true;

    const auto rep = verify_appendix_identities(3, 3);
    const bool id_ok = rep.pass(1e-5);
    ok = ok && id_ok;
    std::printf("identities (nu <= 3, d <= 3): max residual %s, seed residual %s [%s]\n",
                fmt(rep.max_residual).c_str(), fmt(rep.max_seed_residual).c_str(),
                id_ok ? "ok" : "FAIL");

    // Unit-efficiency kernel against the independent k-integral.
    {
        const auto spec = make_kernel_spec(1.0, 12);
        const auto oracle_spec = make_kernel_spec(1.0, 12, KernelMethod::quadrature_oracle);
        double worst = 0.0;
        for (auto [m, d, x] : {std::tuple<int, int, double>{0, 0, 0.5},
                               {3, 1, 2.0},
                               {5, 2, 1.25},
                               {8, 4, 0.75}}) {
            const auto a = kernel_point(spec, m, d, x, 0.0);
            const auto b = kernel_oracle(m, d, x, oracle_spec);
            worst = std::max(worst, std::abs(a - b));
        }
        ok = ok && worst < 1e-6;
        std::printf("kernel eta=1 vs integral oracle: worst |diff| %s [%s]\n",
                    fmt(worst).c_str(), worst < 1e-6 ? "ok" : "FAIL");
    }

    // Smeared kernel against the oracle at a fixed sample of points. Corners
    // whose kernel value overwhelms double precision are refused by both
    // routes (they throw); those draws are skipped deterministically.
    {
        std::mt19937_64 rng(12345);
        std::uniform_int_distribution<int> um(0, 10);
        std::uniform_int_distribution<int> ud(0, 6);
        std::uniform_real_distribution<double> ux(-3.0, 3.0);
        double worst = 0.0;
        int checked = 0, refused = 0;
        for (const double eta : {0.9, 0.8, 0.6}) {
            const auto spec = make_kernel_spec(eta, 20);
            int done = 0;
            for (int draws = 0; done < 4 && draws < 100; ++draws) {
                const int m = um(rng);
                const int d = ud(rng);
                const double x = ux(rng);
                try {
                    const auto a = kernel_point(spec, m, d, x, 0.0);
                    const auto b = kernel_oracle(m, d, x, spec);
                    worst = std::max(worst, std::abs(a - b));
                    ++done;
                    ++checked;
                } catch (const precision_loss&) {
                    ++refused;
                } catch (const quadrature_not_converged&) {
                    ++refused;
                }
            }
        }
        const bool k_ok = worst < 1e-6 && checked == 12;
        ok = ok && k_ok;
        std::printf(
            "kernel eta<1 vs integral oracle: %d points, worst |diff| %s, "
            "%d refused draws [%s]\n",
            checked, fmt(worst).c_str(), refused, k_ok ? "ok" : "FAIL");
    }

    if (!cfg.output.empty()) {
        write_json(resolve_output(cfg, "verify.json"),
                   json{{"command", "verify"}, {"pass", ok}});
    }
    std::printf("verify: %s\n", ok ? "PASS" : "FAIL");
    return ok ? 0 : 4;
}

// ---------- config file ----------

void apply_config_file(RunConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto text = trim(line);
        if (text.empty() || text[0] == '#') continue;
        const auto eq = text.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected key = value");
        const auto key = trim(text.substr(0, eq));
        const auto val = trim(text.substr(eq + 1));

        if (key == "command") cfg.command = val;
        else if (key == "state.kind") cfg.state_kind = val;
        else if (key == "state.mean_n") cfg.mean_n = parse_double(val);
        else if (key == "state.r") cfg.squeeze_r = parse_double(val);
        else if (key == "state.squeeze_angle") cfg.squeeze_angle = parse_double(val);
        else if (key == "state.alpha_phase") cfg.alpha_phase = parse_double(val);
        else if (key == "state.fock_n") cfg.fock_n = static_cast<int>(parse_long(val));
        else if (key == "eta") cfg.eta_text = val;
        else if (key == "f") cfg.f_text = val;
        else if (key == "n_max") cfg.n_max = static_cast<int>(parse_long(val));
        else if (key == "samples_per_phase") cfg.samples_per_phase = parse_long(val);
        else if (key == "samples") cfg.n_samples = parse_long(val);
        else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_long(val));
        else if (key == "output") cfg.output = val;
        else if (key == "format") cfg.format = val;
        else if (key == "threads") cfg.threads = static_cast<int>(parse_long(val));
        else if (key == "isa") cfg.isa = val;
        else if (key == "track") cfg.track = split(val, ';');
        else if (key == "threshold") cfg.threshold = parse_double(val);
        else if (key == "input") cfg.input = val;
        else if (key == "mode") cfg.mode = val;
        else if (key == "keep_records") cfg.keep_records = (val == "true" || val == "1");
        else if (key == "kernel.m") cfg.kernel_m = val;
        else if (key == "kernel.d") cfg.kernel_d = val;
        else if (key == "kernel.x_max") cfg.x_max = parse_double(val);
        else if (key == "kernel.x_step") cfg.x_step = parse_double(val);
        else
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": unknown key '" + key + "'");
    }
}

void add_options(CLI::App* a, RunConfig& cfg, std::string& config_path) {
    a->add_option("--state", cfg.state_kind,
                  "state kind: coherent, squeezed, fock, vacuum");
    a->add_option("--mean-n", cfg.mean_n, "mean photon number");
    a->add_option("--r", cfg.squeeze_r, "squeezing parameter r");
    a->add_option("--squeeze-angle", cfg.squeeze_angle,
                  "orientation of the squeezing ellipse");
    a->add_option("--alpha-phase", cfg.alpha_phase, "phase of the displacement");
    a->add_option("--fock-n", cfg.fock_n, "number-state index");
    a->add_option("--eta", cfg.eta_text,
                  "detector efficiency; comma list for sweep-eta");
    a->add_option("--f", cfg.f_text,
                  "scanning phases: value, comma list, or a..b range");
    a->add_option("--n-max", cfg.n_max, "density-matrix cutoff");
    a->add_option("--samples-per-phase", cfg.samples_per_phase,
                  "records per phase for mc-experiment");
    a->add_option("--samples", cfg.n_samples, "total records for observable --mode mc");
    a->add_option("--seed", cfg.seed, "random seed");
    a->add_option("--output", cfg.output,
                  "output path; relative paths land in HOMTOM_OUTPUT_DIR when set");
    a->add_option("--format", cfg.format, "output format: csv or json");
    a->add_option("--config", config_path,
                  "key = value config file; command-line flags override it");
    a->add_option("--threads", cfg.threads, "worker threads");
    a->add_option("--isa", cfg.isa, "simd backend: auto, avx2, scalar");
    a->add_option("--track", cfg.track,
                  "tracked element as n,m (repeatable; default 5,5 10,5 18,5)");
    a->add_option("--threshold", cfg.threshold, "deviation threshold for f0");
    a->add_option("--input", cfg.input, "read this homodyne dataset instead of sampling");
    a->add_option("--mode", cfg.mode, "observable mode: deterministic or mc");
    a->add_flag("--keep-records", cfg.keep_records,
                "write sampled records next to the estimate");
    a->add_option("--m", cfg.kernel_m, "kernel indexes m: value, list, or range");
    a->add_option("--d", cfg.kernel_d, "kernel offsets d: value, list, or range");
    a->add_option("--x-max", cfg.x_max, "kernel grid maximum x");
    a->add_option("--x-step", cfg.x_step, "kernel grid step");
}

int dispatch(const RunConfig& cfg) {
    simd::force_isa(cfg.isa);
    if (cfg.n_max < 0) throw std::invalid_argument("--n-max must be >= 0");
    if (cfg.threads < 1) throw std::invalid_argument("--threads must be >= 1");

    if (cfg.command == "kernel") return cmd_kernel(cfg);
    if (cfg.command == "reconstruct") return cmd_reconstruct(cfg);
    if (cfg.command == "sweep-f") return cmd_sweep_f(cfg);
    if (cfg.command == "sweep-eta") return cmd_sweep_eta(cfg);
    if (cfg.command == "stat-errors") return cmd_stat_errors(cfg);
    if (cfg.command == "observable") return cmd_observable(cfg);
    if (cfg.command == "mc-experiment") return cmd_mc_experiment(cfg);
    if (cfg.command == "verify") return cmd_verify(cfg);
    if (cfg.command.empty())
        throw std::invalid_argument(
            "no command given; pass a subcommand or 'command =' in the config file");
    throw std::invalid_argument("unknown command: '" + cfg.command + "'");
}

}  // namespace

int run_cli(int argc, char** argv) {
    try {
        RunConfig cfg;

        // The config file seeds the defaults, so it must be located before
        // CLI11 runs; flags then override whatever it set.
        std::string config_path;
        for (int i = 1; i < argc; ++i) {
            const std::string_view arg = argv[i];
            if (arg == "--config" && i + 1 < argc) config_path = argv[i + 1];
            else if (arg.rfind("--config=", 0) == 0) config_path = arg.substr(9);
        }
        if (!config_path.empty()) apply_config_file(cfg, config_path);

        CLI::App app{"homodyne tomography of single-mode radiation states"};
        app.require_subcommand(0, 1);
        std::string config_echo;  // consumed by the pre-scan above
        add_options(&app, cfg, config_echo);

        const struct {
            const char* name;
            const char* help;
        } commands[] = {
            {"kernel", "tabulate pattern-function values on an x grid"},
            {"reconstruct", "deterministic density-matrix scan at fixed f"},
            {"sweep-f", "deviation of tracked elements versus the phase count"},
            {"sweep-eta", "statistical errors of tracked elements versus efficiency"},
            {"stat-errors", "single-record error matrix sigma(n,m)"},
            {"observable", "homodyne the photon number and its precision"},
            {"mc-experiment", "simulate a homodyne data set and reconstruct from it"},
            {"verify", "internal cross-checks; exit 0 when all pass"},
        };
        for (const auto& c : commands) {
            auto* sub = app.add_subcommand(c.name, c.help);
            add_options(sub, cfg, config_echo);
            sub->callback([&cfg, name = c.name] { cfg.command = name; });
        }

        try {
            app.parse(argc, argv);
        } catch (const CLI::ParseError& e) {
            const int code = app.exit(e);
            return code == 0 ? 0 : 2;
        }
        return dispatch(cfg);
    } catch (const quadrature_not_converged& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    } catch (const precision_loss& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    } catch (const std::domain_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::out_of_range& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::runtime_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return 1;
    }
}

}  // namespace homtom
