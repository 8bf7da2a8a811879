#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <string>

#include "qrwave/cli.hpp"
#include "qrwave/errors.hpp"

namespace qrwave::cli {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_plain(const std::string& text) {
    if (text.empty()) throw std::invalid_argument("empty number");
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (end != text.c_str() + text.size()) throw std::invalid_argument("not a number: '" + text + "'");
    return v;
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::size_t parse_count(const std::string& text) {
    const double v = parse_plain(text);
    if (!(v >= 0.0) || v != std::floor(v) || v > 1e15) throw std::invalid_argument("not a non-negative integer: '" + text + "'");
    return static_cast<std::size_t>(v);
}

std::vector<double> parse_numbers(const std::string& text) {
    std::vector<double> out;
    for (const auto& item : split_list(text)) out.push_back(parse_number(item));
    return out;
}

bool parse_bool(const std::string& text) {
    if (text == "true" || text == "1" || text == "on") return true;
    if (text == "false" || text == "0" || text == "off") return false;
    throw std::invalid_argument("not a boolean: '" + text + "'");
}

template <typename E>
E parse_enum(const std::string& text, std::initializer_list<std::pair<const char*, E>> options) {
    std::string allowed;
    for (const auto& [name, value] : options) {
        if (text == name) return value;
        allowed += allowed.empty() ? name : std::string("|") + name;
    }
    throw std::invalid_argument("expected one of " + allowed + ", got '" + text + "'");
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"domain.L", [](RunConfig& c, const std::string& v) { c.L = parse_number(v); }},
        {"domain.n_modes", [](RunConfig& c, const std::string& v) { c.n_modes = parse_count(v); }},
        {"time.T", [](RunConfig& c, const std::string& v) { c.T = parse_number(v); }},
        {"time.count", [](RunConfig& c, const std::string& v) { c.time_count = parse_count(v); }},
        {"truth.kind",
         [](RunConfig& c, const std::string& v) {
             c.truth.kind = parse_enum<TruthKind>(v, {{"explicit", TruthKind::explicit_modes},
                                                      {"gevrey", TruthKind::gevrey_profile}});
         }},
        {"truth.modes",
         [](RunConfig& c, const std::string& v) {
             c.truth.modes.clear();
             for (const auto& item : split_list(v)) c.truth.modes.push_back(parse_count(item));
         }},
        {"truth.coeffs", [](RunConfig& c, const std::string& v) { c.truth.coeffs = parse_numbers(v); }},
        {"truth.amplitude", [](RunConfig& c, const std::string& v) { c.truth.amplitude = parse_number(v); }},
        {"truth.kappa", [](RunConfig& c, const std::string& v) { c.truth.kappa = parse_number(v); }},
        {"truth.power", [](RunConfig& c, const std::string& v) { c.truth.power = parse_number(v); }},
        {"truth.velocity",
         [](RunConfig& c, const std::string& v) {
             c.truth.velocity = parse_enum<TruthVelocity>(v, {{"zero", TruthVelocity::zero},
                                                              {"decaying", TruthVelocity::decaying}});
         }},
        {"noise.eps", [](RunConfig& c, const std::string& v) { c.noise_eps = parse_number(v); }},
        {"noise.mode",
         [](RunConfig& c, const std::string& v) {
             c.noise_mode = parse_enum<NoiseMode>(v, {{"h1l2", NoiseMode::h1l2}, {"l2only", NoiseMode::l2only}});
         }},
        {"noise.enabled", [](RunConfig& c, const std::string& v) { c.noise_enabled = parse_bool(v); }},
        {"reg.C0", [](RunConfig& c, const std::string& v) { c.C0 = parse_number(v); }},
        {"reg.C1", [](RunConfig& c, const std::string& v) { c.C1 = parse_number(v); }},
        {"reg.K", [](RunConfig& c, const std::string& v) { c.K = parse_number(v); }},
        {"reg.schedule",
         [](RunConfig& c, const std::string& v) {
             c.explicit_gamma = parse_enum<bool>(v, {{"holder", false}, {"explicit", true}});
         }},
        {"reg.gamma", [](RunConfig& c, const std::string& v) { c.gamma = parse_number(v); }},
        {"sweep.eps_grid", [](RunConfig& c, const std::string& v) { c.eps_grid = parse_numbers(v); }},
        {"sweep.times", [](RunConfig& c, const std::string& v) { c.times_of_interest = parse_numbers(v); }},
        {"sweep.kind",
         [](RunConfig& c, const std::string& v) {
             c.sweep_kind = parse_enum<SweepKind>(v, {{"holder", SweepKind::holder}, {"weak", SweepKind::weak}});
         }},
        {"run.seed",
         [](RunConfig& c, const std::string& v) {
             char* end = nullptr;
             c.seed = std::strtoull(v.c_str(), &end, 10);
             if (v.empty() || v[0] == '-' || end != v.c_str() + v.size()) {
                 throw std::invalid_argument("not an unsigned integer: '" + v + "'");
             }
         }},
        {"run.threads", [](RunConfig& c, const std::string& v) { c.threads = static_cast<unsigned>(parse_count(v)); }},
        {"verify.samples", [](RunConfig& c, const std::string& v) { c.verify.samples = parse_count(v); }},
        {"verify.gammas", [](RunConfig& c, const std::string& v) { c.verify.gammas = parse_numbers(v); }},
        {"verify.n_modes", [](RunConfig& c, const std::string& v) { c.verify.n_modes = parse_count(v); }},
        {"verify.sigma", [](RunConfig& c, const std::string& v) { c.verify.sigma = parse_number(v); }},
        {"verify.alpha", [](RunConfig& c, const std::string& v) { c.verify.alpha = parse_number(v); }},
        {"verify.oracle_gamma", [](RunConfig& c, const std::string& v) { c.verify.oracle_gamma = parse_number(v); }},
        {"verify.oracle_modes", [](RunConfig& c, const std::string& v) { c.verify.oracle_modes = parse_count(v); }},
        {"verify.dt", [](RunConfig& c, const std::string& v) { c.verify.dt = parse_number(v); }},
        {"verify.picard_iterations",
         [](RunConfig& c, const std::string& v) { c.verify.picard_iterations = parse_count(v); }},
        {"verify.picard_substeps", [](RunConfig& c, const std::string& v) { c.verify.picard_substeps = parse_count(v); }},
        {"verify.oracle_tolerance",
         [](RunConfig& c, const std::string& v) { c.verify.oracle_tolerance = parse_number(v); }},
        {"verify.energy_samples", [](RunConfig& c, const std::string& v) { c.verify.energy_samples = parse_count(v); }},
        {"demo.mode", [](RunConfig& c, const std::string& v) { c.demo.mode = parse_count(v); }},
        {"demo.eps", [](RunConfig& c, const std::string& v) { c.demo.eps = parse_number(v); }},
        {"demo.gamma", [](RunConfig& c, const std::string& v) { c.demo.gamma = parse_number(v); }},
    };
    return table;
}

std::string join(const std::vector<std::string>& lines) {
    std::string out;
    for (const auto& l : lines) out += "\n  " + l;
    return out;
}

}  // namespace

RunConfig::RunConfig() {
    verify.gammas = {std::exp(4.0), std::exp(8.0), 1e3};
    verify.oracle_gamma = std::exp(4.0);
    demo.gamma = std::exp(4.0);
}

double parse_number(const std::string& raw) {
    const std::string text = trim(raw);
    if (text.size() > 5 && text.rfind("exp(", 0) == 0 && text.back() == ')') {
        return std::exp(parse_plain(trim(text.substr(4, text.size() - 5))));
    }
    if (text.size() >= 2 && text.compare(text.size() - 2, 2, "pi") == 0) {
        std::string factor = trim(text.substr(0, text.size() - 2));
        if (!factor.empty() && factor.back() == '*') factor = trim(factor.substr(0, factor.size() - 1));
        return (factor.empty() ? 1.0 : parse_plain(factor)) * std::numbers::pi;
    }
    return parse_plain(text);
}

RunConfig parse_config(std::istream& in, const std::string& source) {
    RunConfig cfg;
    std::vector<std::string> problems;
    std::map<std::string, int> seen;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::string where = source + ":" + std::to_string(lineno) + ": ";
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            problems.push_back(where + "expected 'key = value'");
            continue;
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto it = setters().find(key);
        if (it == setters().end()) {
            problems.push_back(where + "unknown key '" + key + "'");
            continue;
        }
        if (seen[key]++ > 0) {
            problems.push_back(where + "duplicate key '" + key + "'");
            continue;
        }
        try {
            it->second(cfg, value);
        } catch (const std::exception& e) {
            problems.push_back(where + key + ": " + e.what());
        }
    }
    for (auto& v : config_violations(cfg)) problems.push_back(source + ": " + v);
    if (!problems.empty()) throw ConfigError("invalid configuration:" + join(problems));
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config file " + path.string());
    return parse_config(in, path.string());
}

std::vector<std::string> config_violations(const RunConfig& c) {
    std::vector<std::string> p;
    auto need = [&](bool ok, const std::string& msg) {
        if (!ok) p.push_back(msg);
    };
    need(c.L > 0.0 && std::isfinite(c.L), "domain.L must be positive");
    need(c.n_modes >= 1, "domain.n_modes must be >= 1");
    need(c.T > 0.0 && std::isfinite(c.T), "time.T must be positive");
    need(c.time_count >= 2, "time.count must be >= 2");
    if (c.truth.kind == TruthKind::explicit_modes) {
        need(c.truth.modes.size() == c.truth.coeffs.size(), "truth.modes and truth.coeffs must have equal length");
        for (std::size_t m : c.truth.modes) {
            need(m >= 1 && m <= c.n_modes, "truth.modes entry " + std::to_string(m) + " outside 1..domain.n_modes");
        }
        for (double x : c.truth.coeffs) need(std::isfinite(x), "truth.coeffs must be finite");
    } else {
        need(c.truth.kappa > 0.0, "truth.kappa must be positive");
        need(std::isfinite(c.truth.amplitude), "truth.amplitude must be finite");
        need(std::isfinite(c.truth.power), "truth.power must be finite");
    }
    need(c.noise_eps >= 0.0 && c.noise_eps < 1.0, "noise.eps must lie in [0, 1)");
    need(c.C0 > 0.0, "reg.C0 must be positive");
    need(c.C1 > 0.0, "reg.C1 must be positive");
    need(c.K > 0.0, "reg.K must be positive");
    if (c.explicit_gamma) {
        need(c.gamma >= 1.0 && std::isfinite(c.gamma), "reg.gamma must be finite and >= 1");
    }
    need(!c.eps_grid.empty(), "sweep.eps_grid must not be empty");
    for (double e : c.eps_grid) need(e > 0.0 && e < 1.0, "sweep.eps_grid entries must lie in (0, 1)");
    need(!c.times_of_interest.empty(), "sweep.times must not be empty");
    for (double t : c.times_of_interest) need(t >= 0.0 && t <= c.T, "sweep.times entries must lie in [0, time.T]");
    need(c.threads >= 1, "run.threads must be >= 1");
    need(c.verify.samples >= 1, "verify.samples must be >= 1");
    need(!c.verify.gammas.empty(), "verify.gammas must not be empty");
    for (double g : c.verify.gammas) need(std::isfinite(g) && g >= 1.0, "verify.gammas entries must be finite and >= 1");
    need(c.verify.n_modes >= 1, "verify.n_modes must be >= 1");
    need(c.verify.sigma > 0.0, "verify.sigma must be positive");
    need(c.verify.alpha >= 0.0, "verify.alpha must be non-negative");
    need(std::isfinite(c.verify.oracle_gamma) && c.verify.oracle_gamma >= 1.0, "verify.oracle_gamma must be >= 1");
    need(c.verify.oracle_modes >= 1, "verify.oracle_modes must be >= 1");
    need(c.verify.dt > 0.0, "verify.dt must be positive");
    need(c.verify.picard_iterations >= 1, "verify.picard_iterations must be >= 1");
    need(c.verify.picard_substeps >= 1, "verify.picard_substeps must be >= 1");
    need(c.verify.oracle_tolerance > 0.0, "verify.oracle_tolerance must be positive");
    need(c.verify.energy_samples >= 1, "verify.energy_samples must be >= 1");
    need(c.demo.mode >= 1, "demo.mode must be >= 1");
    need(c.demo.eps > 0.0, "demo.eps must be positive");
    need(std::isfinite(c.demo.gamma) && c.demo.gamma >= 1.0, "demo.gamma must be >= 1");
    return p;
}

void validate_config(const RunConfig& c) {
    const auto p = config_violations(c);
    if (!p.empty()) throw ConfigError("invalid configuration:" + join(p));
}

RegConfig make_reg_config(const RunConfig& c) {
    if (c.explicit_gamma) return RegConfig::with_gamma(c.gamma, c.noise_enabled ? c.noise_eps : 0.0, c.C0, c.C1, c.K);
    if (!(c.noise_eps > 0.0)) throw ConfigError("reg.schedule = holder needs noise.eps > 0; use reg.schedule = explicit");
    return RegConfig::holder_schedule(c.noise_eps, c.C0, c.C1, c.K);
}

SweepConfig make_sweep_config(const RunConfig& c) {
    SweepConfig s;
    s.basis = build_basis(c.L, c.n_modes);
    s.T = c.T;
    s.time_count = c.time_count;
    s.truth = c.truth;
    s.eps_grid = c.eps_grid;
    s.times_of_interest = c.times_of_interest;
    s.C0 = c.C0;
    s.C1 = c.C1;
    s.K = c.K;
    s.noise = c.noise_enabled;
    s.seed = c.seed;
    s.threads = c.threads;
    s.kind = c.sweep_kind;
    return s;
}

}  // namespace qrwave::cli
