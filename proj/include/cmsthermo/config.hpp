#pragma once

// Experiment configuration: a strict TOML subset (sections, key = value,
// strings / numbers / booleans / flat arrays, # comments) with a JSON
// mirror accepted. Validation errors carry the failing field path.

#include <cctype>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "cmsthermo/graph.hpp"
#include "cmsthermo/potential.hpp"

namespace cms {

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& path, const std::string& what)
        : std::runtime_error(path + ": " + what) {}
};

namespace detail {

inline nlohmann::ordered_json parse_toml_value(const std::string& raw, const std::string& path) {
    std::string v = raw;
    auto trim = [](std::string& s) {
        while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.erase(s.begin());
        while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
    };
    trim(v);
    if (v.empty()) throw ConfigError(path, "empty value");
    if (v.front() == '"') {
        if (v.size() < 2 || v.back() != '"') throw ConfigError(path, "unterminated string");
        return v.substr(1, v.size() - 2);
    }
    if (v == "true") return true;
    if (v == "false") return false;
    if (v.front() == '[') {
        if (v.back() != ']') throw ConfigError(path, "unterminated array");
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        std::string inner = v.substr(1, v.size() - 2);
        std::string item;
        int depth = 0;
        for (char c : inner) {
            if (c == '[') ++depth;
            if (c == ']') --depth;
            if (c == ',' && depth == 0) {
                arr.push_back(parse_toml_value(item, path));
                item.clear();
            } else {
                item += c;
            }
        }
        trim(item);
        if (!item.empty()) arr.push_back(parse_toml_value(item, path));
        return arr;
    }
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument("trailing");
        if (d == static_cast<long long>(d) && v.find_first_of(".eE") == std::string::npos)
            return static_cast<long long>(d);
        return d;
    } catch (const std::exception&) {
        throw ConfigError(path, "unrecognized value '" + v + "'");
    }
}

}  // namespace detail

// Parses the TOML subset into the same shape as the JSON mirror:
// { section: { key: value } } plus top-level keys.
inline nlohmann::ordered_json parse_toml(const std::string& text) {
    nlohmann::ordered_json root = nlohmann::ordered_json::object();
    std::istringstream is(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        auto last = line.find_last_not_of(" \t\r");
        line = line.substr(first, last - first + 1);
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("line " + std::to_string(lineno), "bad section header");
            section = line.substr(1, line.size() - 2);
            if (!root.contains(section)) root[section] = nlohmann::ordered_json::object();
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno), "expected key = value");
        std::string key = line.substr(0, eq);
        while (!key.empty() && std::isspace(static_cast<unsigned char>(key.back()))) key.pop_back();
        const std::string path = section.empty() ? key : section + "." + key;
        auto value = detail::parse_toml_value(line.substr(eq + 1), path);
        if (section.empty()) root[key] = value;
        else root[section][key] = value;
    }
    return root;
}

// ---------------------------------------------------------------------

struct GraphDescriptor {
    std::string family = "renewal";
    std::vector<std::pair<Symbol, Symbol>> edges;  // for "finite"

    [[nodiscard]] CmsSpec to_spec() const {
        if (family == "full") return CmsSpec::full_shift();
        if (family == "renewal") return CmsSpec::renewal_shift();
        if (family == "star") return CmsSpec::star_shift();
        if (family == "golden") return CmsSpec::golden_mean();
        if (family == "finite") {
            if (edges.empty()) throw ConfigError("graph.edges", "finite family needs an edge list");
            return CmsSpec::finite(edges);
        }
        throw ConfigError("graph.family", "unknown family '" + family + "'");
    }
};

struct PotentialDescriptor {
    std::string kind = "zero";
    double value = 0.0;   // constant / scale parameter
    double shift = 0.0;
    Symbol symbol = 1;    // indicator
    double scale = 1.0;
    std::vector<std::tuple<Symbol, Symbol, double>> entries;  // table2
    double table_default = 0.0;

    [[nodiscard]] Potential to_potential() const {
        Potential p;
        if (kind == "zero") p = Potential::zero();
        else if (kind == "constant") p = Potential::constant(value);
        else if (kind == "indicator") p = Potential::indicator(symbol);
        else if (kind == "log_law") p = Potential::log_law(value, shift);
        else if (kind == "exp_law") p = Potential::exp_law(value, shift);
        else if (kind == "v") p = Potential::v_function();
        else if (kind == "one_minus_v") p = Potential::one_minus_v();
        else if (kind == "table2") {
            std::map<std::pair<Symbol, Symbol>, double> t;
            for (auto& [a, b, v] : entries) t[{a, b}] = v;
            const double dflt = table_default;
            double sup = dflt;
            for (auto& [k, v] : t) sup = std::max(sup, v);
            p = Potential::depth2(
                [t, dflt](Symbol a, Symbol b) {
                    auto it = t.find({a, b});
                    return it == t.end() ? dflt : it->second;
                },
                sup, "table2");
        } else {
            throw ConfigError("potential.kind", "unknown kind '" + kind + "'");
        }
        if (scale != 1.0) p = scale * p;
        return p;
    }
};

struct Schedules {
    std::vector<int> N = {10, 20, 40, 80, 160};
    std::vector<int> n = {200};     // n_max is the last entry
    std::vector<double> t = {1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1024};
    std::vector<int> q = {5, 10, 20};
    std::vector<int> M = {5, 10, 20};
    int prefix = 50;
    int census = 64;  // L for inducing
};

struct ExperimentConfig {
    std::string kind = "pressure";  // pressure | pinf | sinf | discriminant |
                                    // spr | beta | ztl | suspend | rome | semicont
    GraphDescriptor graph;
    PotentialDescriptor potential;
    std::optional<PotentialDescriptor> roof;
    Schedules schedules;
    Symbol base_symbol = 1;
    std::vector<Symbol> rome_set = {1};
    int rome_bound = 1;
    std::uint64_t seed = 1;
    bool emit_csv = true;

    void validate() const {
        const std::vector<std::string> kinds = {"pressure", "pinf",  "sinf",    "discriminant",
                                                "spr",      "beta",  "ztl",     "suspend",
                                                "rome",     "semicont"};
        if (std::find(kinds.begin(), kinds.end(), kind) == kinds.end())
            throw ConfigError("experiment.kind", "unknown kind '" + kind + "'");
        auto strictly_increasing = [](const auto& v) {
            for (std::size_t i = 1; i < v.size(); ++i)
                if (v[i] <= v[i - 1]) return false;
            return true;
        };
        if (schedules.N.empty() || !strictly_increasing(schedules.N))
            throw ConfigError("schedules.N", "must be nonempty and strictly increasing");
        if (schedules.n.empty() || !strictly_increasing(schedules.n))
            throw ConfigError("schedules.n", "must be nonempty and strictly increasing");
        if (!strictly_increasing(schedules.t))
            throw ConfigError("schedules.t", "must be strictly increasing");
        if (schedules.q.size() != schedules.M.size())
            throw ConfigError("schedules.q", "q and M schedules must pair up");
        if (kind == "suspend" && !roof.has_value())
            throw ConfigError("roof", "suspension experiments need a roof descriptor");
        if (schedules.prefix < 10) throw ConfigError("schedules.prefix", "prefix >= 10 required");
    }
};

namespace detail {

template <class T>
T get_or(const nlohmann::ordered_json& j, const std::string& key, T fallback,
         const std::string& path) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const std::exception&) {
        throw ConfigError(path + "." + key, "wrong type");
    }
}

inline PotentialDescriptor potential_from_json(const nlohmann::ordered_json& j,
                                               const std::string& path) {
    PotentialDescriptor d;
    d.kind = get_or<std::string>(j, "kind", "zero", path);
    d.value = get_or<double>(j, "value", 0.0, path);
    d.shift = get_or<double>(j, "shift", 0.0, path);
    d.symbol = get_or<int>(j, "symbol", 1, path);
    d.scale = get_or<double>(j, "scale", 1.0, path);
    d.table_default = get_or<double>(j, "default", 0.0, path);
    if (j.contains("entries")) {
        for (const auto& e : j.at("entries")) {
            if (!e.is_array() || e.size() != 3) throw ConfigError(path + ".entries", "need [a, b, value] triples");
            d.entries.emplace_back(e[0].get<int>(), e[1].get<int>(), e[2].get<double>());
        }
    }
    return d;
}

}  // namespace detail

inline ExperimentConfig config_from_json(const nlohmann::ordered_json& j) {
    ExperimentConfig c;
    if (j.contains("experiment")) {
        const auto& e = j.at("experiment");
        c.kind = detail::get_or<std::string>(e, "kind", "pressure", "experiment");
        c.base_symbol = detail::get_or<int>(e, "base_symbol", 1, "experiment");
        c.seed = detail::get_or<std::uint64_t>(e, "seed", 1, "experiment");
        c.emit_csv = detail::get_or<bool>(e, "csv", true, "experiment");
        if (e.contains("rome_set")) c.rome_set = e.at("rome_set").get<std::vector<int>>();
        c.rome_bound = detail::get_or<int>(e, "rome_bound", 1, "experiment");
    }
    if (j.contains("graph")) {
        const auto& g = j.at("graph");
        c.graph.family = detail::get_or<std::string>(g, "family", "renewal", "graph");
        if (g.contains("edges")) {
            for (const auto& e : g.at("edges")) {
                if (!e.is_array() || e.size() != 2) throw ConfigError("graph.edges", "need [a, b] pairs");
                c.graph.edges.emplace_back(e[0].get<int>(), e[1].get<int>());
            }
        }
    }
    if (j.contains("potential")) c.potential = detail::potential_from_json(j.at("potential"), "potential");
    if (j.contains("roof")) c.roof = detail::potential_from_json(j.at("roof"), "roof");
    if (j.contains("schedules")) {
        const auto& s = j.at("schedules");
        c.schedules.N = detail::get_or<std::vector<int>>(s, "N", c.schedules.N, "schedules");
        c.schedules.n = detail::get_or<std::vector<int>>(s, "n", c.schedules.n, "schedules");
        c.schedules.t = detail::get_or<std::vector<double>>(s, "t", c.schedules.t, "schedules");
        c.schedules.q = detail::get_or<std::vector<int>>(s, "q", c.schedules.q, "schedules");
        c.schedules.M = detail::get_or<std::vector<int>>(s, "M", c.schedules.M, "schedules");
        c.schedules.prefix = detail::get_or<int>(s, "prefix", c.schedules.prefix, "schedules");
        c.schedules.census = detail::get_or<int>(s, "census", c.schedules.census, "schedules");
    }
    c.validate();
    return c;
}

inline ExperimentConfig load_config(const std::string& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError(file, "cannot open");
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    // JSON mirror when the first significant character opens an object.
    for (char ch : text) {
        if (std::isspace(static_cast<unsigned char>(ch))) continue;
        if (ch == '{') return config_from_json(nlohmann::ordered_json::parse(text));
        break;
    }
    return config_from_json(parse_toml(text));
}

}  // namespace cms
