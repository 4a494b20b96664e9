#include "heatpot/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "heatpot/errors.hpp"

namespace heatpot {

namespace {

std::string trim(const std::string& s) {
    auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (...) {
        throw ConfigError("bad numeric value for " + key + ": '" + v + "'");
    }
}

long to_long(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        long d = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (...) {
        throw ConfigError("bad integer value for " + key + ": '" + v + "'");
    }
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("bad boolean value for " + key + ": '" + v + "'");
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

} // namespace

RunConfig RunConfig::parse(const std::string& text) {
    RunConfig c;
    using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;
    static const std::map<std::string, std::map<std::string, Setter>> schema = {
        {"run",
         {
             {"problem", [](RunConfig& c, auto&, auto& v) { c.problem = v; }},
             {"scheme", [](RunConfig& c, auto&, auto& v) { c.scheme = v; }},
             {"dt", [](RunConfig& c, auto& k, auto& v) { c.dt = to_double(k, v); }},
             {"t_final", [](RunConfig& c, auto& k, auto& v) { c.t_final = to_double(k, v); }},
             {"eps", [](RunConfig& c, auto& k, auto& v) { c.eps = to_double(k, v); }},
             {"order", [](RunConfig& c, auto& k, auto& v) { c.order = static_cast<int>(to_long(k, v)); }},
             {"max_level", [](RunConfig& c, auto& k, auto& v) { c.max_level = static_cast<int>(to_long(k, v)); }},
             {"helmholtz_backend", [](RunConfig& c, auto&, auto& v) { c.helmholtz_backend = v; }},
             {"adapt_metric", [](RunConfig& c, auto&, auto& v) { c.adapt_metric = v; }},
             {"helmholtz_grid_cap", [](RunConfig& c, auto& k, auto& v) { c.helmholtz_grid_cap = static_cast<int>(to_long(k, v)); }},
             {"workers", [](RunConfig& c, auto& k, auto& v) { c.workers = static_cast<int>(to_long(k, v)); }},
             {"seed", [](RunConfig& c, auto& k, auto& v) { c.seed = static_cast<unsigned long>(to_long(k, v)); }},
         }},
        {"problem",
         {
             {"nu", [](RunConfig& c, auto& k, auto& v) { c.params.nu = to_double(k, v); }},
             {"diffusion", [](RunConfig& c, auto& k, auto& v) { c.params.diffusion = to_double(k, v); }},
             {"forcing_width", [](RunConfig& c, auto& k, auto& v) { c.params.forcing_width = to_double(k, v); }},
             {"gamma", [](RunConfig& c, auto& k, auto& v) { c.params.gray_scott.gamma = to_double(k, v); }},
             {"kappa", [](RunConfig& c, auto& k, auto& v) { c.params.gray_scott.kappa = to_double(k, v); }},
             {"du", [](RunConfig& c, auto& k, auto& v) { c.params.gray_scott.du = to_double(k, v); }},
             {"dv", [](RunConfig& c, auto& k, auto& v) { c.params.gray_scott.dv = to_double(k, v); }},
             {"rho", [](RunConfig& c, auto& k, auto& v) { c.params.rho = to_double(k, v); }},
             {"perturbation", [](RunConfig& c, auto& k, auto& v) { c.params.perturbation = to_double(k, v); }},
             {"orientation",
              [](RunConfig& c, auto& k, auto& v) {
                  if (v == "classical")
                      c.params.orientation = ShearOrientation::Classical;
                  else if (v == "paper-literal")
                      c.params.orientation = ShearOrientation::PaperLiteral;
                  else
                      throw ConfigError("bad value for " + k + ": '" + v + "'");
              }},
         }},
        {"output",
         {
             {"directory", [](RunConfig& c, auto&, auto& v) { c.output_dir = v; }},
             {"snapshot_every", [](RunConfig& c, auto& k, auto& v) { c.snapshot_every = static_cast<int>(to_long(k, v)); }},
             {"resample_resolution", [](RunConfig& c, auto& k, auto& v) { c.resample_resolution = static_cast<int>(to_long(k, v)); }},
             {"profile", [](RunConfig& c, auto& k, auto& v) { c.profile = to_bool(k, v); }},
         }},
    };

    std::istringstream is(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("line " + std::to_string(lineno) + ": bad section header");
            section = trim(line.substr(1, line.size() - 2));
            if (!schema.count(section))
                throw ConfigError("unknown section [" + section + "]");
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (section.empty()) throw ConfigError("key '" + key + "' outside any section");
        const auto& sec = schema.at(section);
        auto it = sec.find(key);
        if (it == sec.end()) throw ConfigError("unknown key '" + key + "' in [" + section + "]");
        it->second(c, key, value);
    }
    c.validate();
    return c;
}

RunConfig RunConfig::load_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return parse(ss.str());
}

std::string RunConfig::emit() const {
    std::ostringstream os;
    os << "[run]\n";
    os << "problem = " << problem << "\n";
    os << "scheme = " << scheme << "\n";
    os << "dt = " << fmt(dt) << "\n";
    os << "t_final = " << fmt(t_final) << "\n";
    os << "eps = " << fmt(eps) << "\n";
    os << "order = " << order << "\n";
    os << "max_level = " << max_level << "\n";
    os << "helmholtz_backend = " << helmholtz_backend << "\n";
    os << "adapt_metric = " << adapt_metric << "\n";
    os << "helmholtz_grid_cap = " << helmholtz_grid_cap << "\n";
    os << "workers = " << workers << "\n";
    os << "seed = " << seed << "\n";
    os << "\n[problem]\n";
    os << "nu = " << fmt(params.nu) << "\n";
    os << "diffusion = " << fmt(params.diffusion) << "\n";
    os << "forcing_width = " << fmt(params.forcing_width) << "\n";
    os << "gamma = " << fmt(params.gray_scott.gamma) << "\n";
    os << "kappa = " << fmt(params.gray_scott.kappa) << "\n";
    os << "du = " << fmt(params.gray_scott.du) << "\n";
    os << "dv = " << fmt(params.gray_scott.dv) << "\n";
    os << "rho = " << fmt(params.rho) << "\n";
    os << "perturbation = " << fmt(params.perturbation) << "\n";
    os << "orientation = "
       << (params.orientation == ShearOrientation::Classical ? "classical" : "paper-literal")
       << "\n";
    os << "\n[output]\n";
    os << "directory = " << output_dir << "\n";
    os << "snapshot_every = " << snapshot_every << "\n";
    os << "resample_resolution = " << resample_resolution << "\n";
    os << "profile = " << (profile ? "true" : "false") << "\n";
    return os.str();
}

void RunConfig::validate() const {
    if (dt <= 0.0) throw ConfigError("dt must be positive");
    if (t_final <= 0.0) throw ConfigError("t_final must be positive");
    if (eps < 1e-12 || eps > 1e-3) throw ConfigError("eps must lie in [1e-12, 1e-3]");
    if (order < 4 || order > 16) throw ConfigError("order must lie in [4, 16]");
    if (max_level < 1 || max_level > 16) throw ConfigError("max_level must lie in [1, 16]");
    if (helmholtz_backend != "spectral")
        throw ConfigError("unknown helmholtz backend: " + helmholtz_backend);
    if (adapt_metric != "l2grid" && adapt_metric != "tail")
        throw ConfigError("adapt_metric must be l2grid or tail");
    if (workers < 1) throw ConfigError("workers must be >= 1");
    (void)MultistepScheme::parse(scheme);
    (void)make_problem(problem, params);
}

StepperOptions RunConfig::stepper_options() const {
    StepperOptions o;
    o.dt = dt;
    o.eps = eps;
    o.K = order;
    o.max_level = max_level;
    o.helmholtz_grid_cap = helmholtz_grid_cap;
    o.adapt_l2_metric = adapt_metric == "l2grid";
    return o;
}

MultistepScheme RunConfig::make_scheme() const { return MultistepScheme::parse(scheme); }

std::unique_ptr<Problem> RunConfig::build_problem() const { return make_problem(problem, params); }

} // namespace heatpot
