#include "fhe/config.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "fhe/errors.hpp"

namespace fhe {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

double to_double(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config value for '" + key + "' is not a number: '" + v + "'");
    }
}

long to_long(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        long x = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config value for '" + key + "' is not an integer: '" + v + "'");
    }
}

}  // namespace

RunConfig RunConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return from_text(ss.str());
}

RunConfig RunConfig::from_text(const std::string& text) {
    RunConfig c;
    std::map<std::string, std::string> kv;
    std::string section;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[' && line.back() == ']') {
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line is not 'key = value': '" + line + "'");
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        kv[section.empty() ? key : section + "." + key] = val;
    }

    auto take = [&](const std::string& key) -> const std::string* {
        auto it = kv.find(key);
        if (it == kv.end()) return nullptr;
        return &it->second;
    };
    if (auto v = take("grid.fibre_n")) c.grid.fibre_n = static_cast<int>(to_long("fibre_n", *v));
    if (auto v = take("grid.base_kind")) {
        if (*v == "torus")
            c.grid.base_kind = BaseKind::Torus;
        else if (*v == "annulus")
            c.grid.base_kind = BaseKind::Annulus;
        else
            throw ConfigError("base_kind must be torus or annulus, got '" + *v + "'");
    }
    if (auto v = take("grid.base_n")) {
        std::istringstream bs(*v);
        if (!(bs >> c.grid.base_n0 >> c.grid.base_n1))
            throw ConfigError("base_n needs two integers, got '" + *v + "'");
    }
    if (auto v = take("grid.k")) c.grid.k = to_double("k", *v);

    if (auto v = take("run.preset")) c.preset = *v;
    if (auto v = take("run.custom_matrix")) c.custom_matrix = *v;
    if (auto v = take("run.initial")) c.initial = *v;
    if (auto v = take("run.init_amplitude")) c.init_amplitude = to_double("init_amplitude", *v);
    if (auto v = take("run.lambda")) c.lambda = to_double("lambda", *v);
    if (auto v = take("run.dt")) c.dt = to_double("dt", *v);
    if (auto v = take("run.t_end")) c.t_end = to_double("t_end", *v);
    if (auto v = take("run.tol")) c.tol = to_double("tol", *v);
    if (auto v = take("run.scheme")) c.scheme = *v;
    if (auto v = take("run.k_list")) {
        c.k_list.clear();
        std::istringstream ks(*v);
        double x;
        while (ks >> x) c.k_list.push_back(x);
        if (c.k_list.empty()) throw ConfigError("k_list is empty");
    }
    if (auto v = take("run.eps")) c.eps = to_double("eps", *v);
    if (auto v = take("run.eps_h")) c.eps_h = to_double("eps_h", *v);
    if (auto v = take("run.delta")) c.delta = to_double("delta", *v);
    if (auto v = take("run.seed")) c.seed = static_cast<uint64_t>(to_long("seed", *v));
    if (auto v = take("run.out")) c.out_dir = *v;
    if (auto v = take("run.holo_tol")) c.holo_tol = to_double("holo_tol", *v);
    c.validate();
    return c;
}

std::string RunConfig::to_text() const {
    std::ostringstream out;
    out.precision(17);
    out << "[grid]\n";
    out << "fibre_n = " << grid.fibre_n << "\n";
    out << "base_kind = " << (grid.base_kind == BaseKind::Torus ? "torus" : "annulus") << "\n";
    out << "base_n = " << grid.base_n0 << " " << grid.base_n1 << "\n";
    out << "k = " << grid.k << "\n";
    out << "\n[run]\n";
    out << "preset = " << preset << "\n";
    if (!custom_matrix.empty()) out << "custom_matrix = " << custom_matrix << "\n";
    out << "initial = " << initial << "\n";
    out << "init_amplitude = " << init_amplitude << "\n";
    out << "lambda = " << lambda << "\n";
    out << "dt = " << dt << "\n";
    out << "t_end = " << t_end << "\n";
    out << "tol = " << tol << "\n";
    out << "scheme = " << scheme << "\n";
    out << "k_list =";
    for (double k : k_list) out << " " << k;
    out << "\n";
    out << "eps = " << eps << "\n";
    out << "eps_h = " << eps_h << "\n";
    out << "delta = " << delta << "\n";
    out << "seed = " << seed << "\n";
    out << "out = " << out_dir << "\n";
    out << "holo_tol = " << holo_tol << "\n";
    return out.str();
}

void RunConfig::validate() const {
    if (lambda <= 0) throw ConfigError("lambda must be positive");
    if (tol <= 0) throw ConfigError("tol must be positive");
    if (t_end < 0) throw ConfigError("t_end must be nonnegative");
    if (dt < 0) throw ConfigError("dt must be nonnegative (0 = automatic)");
    if (scheme != "rk4" && scheme != "semi_implicit")
        throw ConfigError("scheme must be rk4 or semi_implicit, got '" + scheme + "'");
    for (double k : k_list)
        if (k <= 0) throw ConfigError("k_list entries must be positive");
    if (init_amplitude < 0 || init_amplitude > 1.0)
        throw ConfigError("init_amplitude must lie in [0, 1]");
}

}  // namespace fhe
