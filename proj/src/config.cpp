#include "confsafe/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace confsafe {

std::string format_double(double value) {
    if (std::isnan(value))
        return "nan";
    if (std::isinf(value))
        return value > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos)
        return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    try {
        size_t pos = 0;
        const double v = std::stod(t, &pos);
        if (pos != t.size())
            throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError(key, "invalid number '" + t + "' for key '" + key + "'");
    }
}

long long parse_int(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    try {
        size_t pos = 0;
        const long long v = std::stoll(t, &pos);
        if (pos != t.size())
            throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError(key, "invalid integer '" + t + "' for key '" + key + "'");
    }
}

std::uint64_t parse_u64(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    try {
        size_t pos = 0;
        if (!t.empty() && t[0] == '-')
            throw std::invalid_argument("negative");
        const unsigned long long v = std::stoull(t, &pos);
        if (pos != t.size())
            throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError(key, "invalid unsigned integer '" + t + "' for key '" + key + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    if (t == "true" || t == "1" || t == "yes")
        return true;
    if (t == "false" || t == "0" || t == "no")
        return false;
    throw ConfigError(key, "invalid boolean '" + t + "' for key '" + key + "'");
}

Vector parse_list(const std::string& key, const std::string& text) {
    std::vector<double> values;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
        values.push_back(parse_double(key, item));
    if (values.empty())
        throw ConfigError(key, "empty list for key '" + key + "'");
    return Eigen::Map<Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

std::string format_list(const Vector& v) {
    std::string out;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i)
            out += ", ";
        out += format_double(v(i));
    }
    return out;
}

SymmetricMatrix parse_matrix(const std::string& key, const std::string& text) {
    const Vector flat = parse_list(key, text);
    const auto n = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(flat.size()))));
    if (n * n != flat.size())
        throw ConfigError(key, "key '" + key + "' needs n*n row-major entries");
    Matrix m(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            m(i, j) = flat(i * n + j);
    if ((m - m.transpose()).cwiseAbs().maxCoeff() != 0.0)
        throw ConfigError(key, "matrix '" + key + "' must be symmetric");
    return SymmetricMatrix(m);
}

std::string format_matrix(const SymmetricMatrix& m) {
    Vector flat(m.dim() * m.dim());
    for (Eigen::Index i = 0; i < m.dim(); ++i)
        for (Eigen::Index j = 0; j < m.dim(); ++j)
            flat(i * m.dim() + j) = m(i, j);
    return format_list(flat);
}

struct KeySpec {
    ConfigKeyDoc doc;
    std::function<std::string(const EpisodeConfig&)> get;
    std::function<void(EpisodeConfig&, const std::string&)> set;
};

TheoryConstants& theory_of(EpisodeConfig& c) {
    if (!c.theory)
        c.theory = TheoryConstants{};
    return *c.theory;
}

KeySpec theory_key(const std::string& key, const std::string& desc, double TheoryConstants::*field) {
    return {{key, desc + " ('none' disables the advisory checks)", true},
            [field](const EpisodeConfig& c) { return c.theory ? format_double((*c.theory).*field) : "none"; },
            [key, field](EpisodeConfig& c, const std::string& v) {
                if (trim(v) == "none") {
                    c.theory.reset();
                    return;
                }
                theory_of(c).*field = parse_double(key, v);
            }};
}

KeySpec real_key(const std::string& key, const std::string& desc, bool artifact, double EpisodeConfig::*field) {
    return {{key, desc, artifact},
            [field](const EpisodeConfig& c) { return format_double(c.*field); },
            [key, field](EpisodeConfig& c, const std::string& v) { c.*field = parse_double(key, v); }};
}

const std::vector<KeySpec>& key_table() {
    static const std::vector<KeySpec> table = [] {
        std::vector<KeySpec> t;
        t.push_back({{"example", "second-order | unicycle", false},
                     [](const EpisodeConfig& c) { return to_string(c.example); },
                     [](EpisodeConfig&, const std::string&) {}});
        t.push_back({{"problem", "P1 (CLF-CBF with confidence) | P2 (nominal tracking with confidence)", false},
                     [](const EpisodeConfig& c) { return to_string(c.problem); },
                     [](EpisodeConfig& c, const std::string& v) {
                         try {
                             c.problem = parse_problem(trim(v));
                         } catch (const std::invalid_argument& e) {
                             throw ConfigError("problem", e.what());
                         }
                     }});
        t.push_back({{"x0", "initial true state, comma list", true},
                     [](const EpisodeConfig& c) { return format_list(c.x0); },
                     [](EpisodeConfig& c, const std::string& v) { c.x0 = parse_list("x0", v); }});
        t.push_back({{"xhat0", "initial estimate, comma list", true},
                     [](const EpisodeConfig& c) { return format_list(c.xhat0); },
                     [](EpisodeConfig& c, const std::string& v) { c.xhat0 = parse_list("xhat0", v); }});
        t.push_back(real_key("t_final", "episode length [s]", true, &EpisodeConfig::t_final));
        t.push_back(real_key("dt_int", "integration step [s]", true, &EpisodeConfig::dt_int));
        t.push_back({{"dt_ctrl", "control period [s], integer multiple of dt_int", true},
                     [](const EpisodeConfig& c) { return format_double(c.weights.dt_ctrl); },
                     [](EpisodeConfig& c, const std::string& v) { c.weights.dt_ctrl = parse_double("dt_ctrl", v); }});
        t.push_back({{"kappa", "observer kappa >= 0", true},
                     [](const EpisodeConfig& c) { return format_double(c.observer.kappa); },
                     [](EpisodeConfig& c, const std::string& v) { c.observer.kappa = parse_double("kappa", v); }});
        t.push_back({{"Q", "observer Q, row-major", true},
                     [](const EpisodeConfig& c) { return format_matrix(c.observer.Q); },
                     [](EpisodeConfig& c, const std::string& v) { c.observer.Q = parse_matrix("Q", v); }});
        t.push_back({{"R", "observer R, row-major", true},
                     [](const EpisodeConfig& c) { return format_matrix(c.observer.R); },
                     [](EpisodeConfig& c, const std::string& v) { c.observer.R = parse_matrix("R", v); }});
        t.push_back({{"P0", "initial uncertainty P(0), row-major", true},
                     [](const EpisodeConfig& c) { return format_matrix(c.observer.P0); },
                     [](EpisodeConfig& c, const std::string& v) { c.observer.P0 = parse_matrix("P0", v); }});
        t.push_back({{"c1", "confidence weight", false},
                     [](const EpisodeConfig& c) { return format_double(c.weights.c1); },
                     [](EpisodeConfig& c, const std::string& v) { c.weights.c1 = parse_double("c1", v); }});
        t.push_back({{"c2", "CLF relaxation weight (P1)", true},
                     [](const EpisodeConfig& c) { return format_double(c.weights.c2); },
                     [](EpisodeConfig& c, const std::string& v) { c.weights.c2 = parse_double("c2", v); }});
        t.push_back({{"metric", "min_eigenvalue | trace | log_determinant", false},
                     [](const EpisodeConfig& c) { return to_string(c.weights.metric); },
                     [](EpisodeConfig& c, const std::string& v) {
                         try {
                             c.weights.metric = parse_confidence_metric(trim(v));
                         } catch (const std::invalid_argument& e) {
                             throw ConfigError("metric", e.what());
                         }
                     }});
        t.push_back(real_key("gamma", "CLF rate", true, &EpisodeConfig::gamma));
        t.push_back(real_key("alpha", "CBF rate", true, &EpisodeConfig::alpha));
        t.push_back({{"goal_x", "unicycle goal x", false},
                     [](const EpisodeConfig& c) { return format_double(c.gains.goal_x); },
                     [](EpisodeConfig& c, const std::string& v) { c.gains.goal_x = parse_double("goal_x", v); }});
        t.push_back({{"goal_y", "unicycle goal y", false},
                     [](const EpisodeConfig& c) { return format_double(c.gains.goal_y); },
                     [](EpisodeConfig& c, const std::string& v) { c.gains.goal_y = parse_double("goal_y", v); }});
        t.push_back({{"d1", "unicycle nominal gain d1 > 0", true},
                     [](const EpisodeConfig& c) { return format_double(c.gains.d1); },
                     [](EpisodeConfig& c, const std::string& v) { c.gains.d1 = parse_double("d1", v); }});
        t.push_back({{"d2", "unicycle nominal gain d2 > 0", true},
                     [](const EpisodeConfig& c) { return format_double(c.gains.d2); },
                     [](EpisodeConfig& c, const std::string& v) { c.gains.d2 = parse_double("d2", v); }});
        t.push_back({{"d3", "unicycle nominal gain d3 > 0", true},
                     [](const EpisodeConfig& c) { return format_double(c.gains.d3); },
                     [](EpisodeConfig& c, const std::string& v) { c.gains.d3 = parse_double("d3", v); }});
        t.push_back({{"obstacle_x", "obstacle center x", false},
                     [](const EpisodeConfig& c) { return format_double(c.obstacle.x); },
                     [](EpisodeConfig& c, const std::string& v) { c.obstacle.x = parse_double("obstacle_x", v); }});
        t.push_back({{"obstacle_y", "obstacle center y", false},
                     [](const EpisodeConfig& c) { return format_double(c.obstacle.y); },
                     [](EpisodeConfig& c, const std::string& v) { c.obstacle.y = parse_double("obstacle_y", v); }});
        t.push_back({{"obstacle_r", "obstacle radius", false},
                     [](const EpisodeConfig& c) { return format_double(c.obstacle.radius); },
                     [](EpisodeConfig& c, const std::string& v) {
                         c.obstacle.radius = parse_double("obstacle_r", v);
                     }});
        t.push_back({{"u_min", "control box lower bounds", true},
                     [](const EpisodeConfig& c) { return format_list(c.sets.control_box.lo); },
                     [](EpisodeConfig& c, const std::string& v) { c.sets.control_box.lo = parse_list("u_min", v); }});
        t.push_back({{"u_max", "control box upper bounds", true},
                     [](const EpisodeConfig& c) { return format_list(c.sets.control_box.hi); },
                     [](EpisodeConfig& c, const std::string& v) { c.sets.control_box.hi = parse_list("u_max", v); }});
        t.push_back({{"x_min", "state box lower bounds", true},
                     [](const EpisodeConfig& c) { return format_list(c.sets.state_box.lo); },
                     [](EpisodeConfig& c, const std::string& v) { c.sets.state_box.lo = parse_list("x_min", v); }});
        t.push_back({{"x_max", "state box upper bounds", true},
                     [](const EpisodeConfig& c) { return format_list(c.sets.state_box.hi); },
                     [](EpisodeConfig& c, const std::string& v) { c.sets.state_box.hi = parse_list("x_max", v); }});
        t.push_back({{"disturbance_enabled", "inject one impulse disturbance", false},
                     [](const EpisodeConfig& c) { return std::string(c.disturbance.enabled ? "true" : "false"); },
                     [](EpisodeConfig& c, const std::string& v) {
                         c.disturbance.enabled = parse_bool("disturbance_enabled", v);
                     }});
        t.push_back({{"disturbance_time", "disturbance time [s]", false},
                     [](const EpisodeConfig& c) { return format_double(c.disturbance.time); },
                     [](EpisodeConfig& c, const std::string& v) {
                         c.disturbance.time = parse_double("disturbance_time", v);
                     }});
        t.push_back({{"disturbance_coordinate", "state index receiving the jump", false},
                     [](const EpisodeConfig& c) { return std::to_string(c.disturbance.coordinate); },
                     [](EpisodeConfig& c, const std::string& v) {
                         c.disturbance.coordinate = static_cast<int>(parse_int("disturbance_coordinate", v));
                     }});
        t.push_back({{"disturbance_min", "lower end of the uniform magnitude range", false},
                     [](const EpisodeConfig& c) { return format_double(c.disturbance.min); },
                     [](EpisodeConfig& c, const std::string& v) {
                         c.disturbance.min = parse_double("disturbance_min", v);
                     }});
        t.push_back({{"disturbance_max", "upper end of the uniform magnitude range", false},
                     [](const EpisodeConfig& c) { return format_double(c.disturbance.max); },
                     [](EpisodeConfig& c, const std::string& v) {
                         c.disturbance.max = parse_double("disturbance_max", v);
                     }});
        t.push_back({{"seed", "RNG seed for the disturbance draw", true},
                     [](const EpisodeConfig& c) { return std::to_string(c.seed); },
                     [](EpisodeConfig& c, const std::string& v) { c.seed = parse_u64("seed", v); }});
        t.push_back(real_key("stop_radius", "unicycle early stop: distance to goal", true,
                             &EpisodeConfig::stop_radius));
        t.push_back(real_key("stop_speed", "unicycle early stop: |v| bound", true, &EpisodeConfig::stop_speed));
        t.push_back(theory_key("theory_eta", "observer bound eta", &TheoryConstants::eta));
        t.push_back(theory_key("theory_theta", "observer bound rate theta", &TheoryConstants::theta));
        t.push_back(theory_key("theory_epsilon", "observer basin radius epsilon", &TheoryConstants::epsilon));
        t.push_back(theory_key("theory_K_h", "Lipschitz constant of h", &TheoryConstants::K_h));
        t.push_back({{"max_cuts", "cutting-plane budget per solve", true},
                     [](const EpisodeConfig& c) { return std::to_string(c.solver.max_cuts); },
                     [](EpisodeConfig& c, const std::string& v) {
                         c.solver.max_cuts = static_cast<int>(parse_int("max_cuts", v));
                     }});
        t.push_back({{"gap_tol", "cutting-plane optimality gap", true},
                     [](const EpisodeConfig& c) { return format_double(c.solver.gap_tol); },
                     [](EpisodeConfig& c, const std::string& v) { c.solver.gap_tol = parse_double("gap_tol", v); }});
        return t;
    }();
    return table;
}

}  // namespace

KeyValues parse_key_values(std::istream& in) {
    KeyValues out;
    std::map<std::string, int> seen;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("", "line " + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError("", "line " + std::to_string(lineno) + ": empty key");
        if (seen.count(key))
            throw ConfigError(key, "duplicate key '" + key + "' on line " + std::to_string(lineno));
        seen[key] = lineno;
        out.emplace_back(key, value);
    }
    return out;
}

EpisodeConfig default_config(Example example) {
    EpisodeConfig c;
    c.example = example;
    c.dt_int = 1e-3;
    c.weights.dt_ctrl = 1e-2;
    c.weights.c1 = 0.0;
    c.weights.metric = ConfidenceMetric::min_eigenvalue;
    c.observer.kappa = 0.1;
    c.alpha = 1.0;
    c.seed = 0;
    if (example == Example::second_order) {
        c.problem = Problem::p1;
        c.x0 = Vector{{-2.0, 0.5}};
        c.xhat0 = Vector{{-2.0, 1.0}};
        c.t_final = 10.0;
        c.gamma = 1.5;
        c.weights.c2 = 100.0;
        c.observer.Q = SymmetricMatrix::identity(2);
        c.observer.R = SymmetricMatrix(Matrix::Identity(1, 1));
        c.observer.P0 = SymmetricMatrix::identity(2);
        c.sets.state_box = {Vector{{-5.0, -5.0}}, Vector{{5.0, 5.0}}};
        c.sets.control_box = {Vector{{-50.0}}, Vector{{50.0}}};
        c.disturbance.enabled = false;
        c.disturbance.coordinate = 1;
    } else {
        c.problem = Problem::p2;
        c.x0 = Vector{{0.0, 0.0, 0.0}};
        c.xhat0 = Vector{{0.0, 0.0, 0.0}};
        c.t_final = 15.0;
        c.gamma = 1.0;
        c.weights.c2 = 100.0;
        c.observer.Q = SymmetricMatrix::identity(3);
        c.observer.R = SymmetricMatrix(0.1 * Matrix::Identity(2, 2));
        c.observer.P0 = SymmetricMatrix::identity(3);
        c.sets.state_box = {Vector{{-10.0, -10.0, -100.0}}, Vector{{20.0, 20.0, 100.0}}};
        c.sets.control_box = {Vector{{-20.0, -20.0}}, Vector{{20.0, 20.0}}};
        c.disturbance = {true, 1.0, 2, -0.5, 0.5};
    }
    return c;
}

void apply_key_values(EpisodeConfig& config, const KeyValues& entries) {
    const auto& table = key_table();
    for (const auto& [key, value] : entries) {
        const auto it = std::find_if(table.begin(), table.end(), [&](const KeySpec& s) { return s.doc.key == key; });
        if (it == table.end())
            throw ConfigError(key, "unknown config key '" + key + "'");
        it->set(config, value);
    }
}

EpisodeConfig resolve_config(const KeyValues& file_entries, const KeyValues& overrides,
                             std::optional<Example> example_override) {
    Example example = Example::second_order;
    for (const auto& [k, v] : file_entries)
        if (k == "example") {
            try {
                example = parse_example(v);
            } catch (const std::invalid_argument& e) {
                throw ConfigError("example", e.what());
            }
        }
    if (example_override)
        example = *example_override;

    EpisodeConfig config = default_config(example);
    apply_key_values(config, file_entries);
    apply_key_values(config, overrides);
    try {
        config.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError("", std::string("invalid configuration: ") + e.what());
    }
    return config;
}

EpisodeConfig load_config_file(const std::string& path, const KeyValues& overrides,
                               std::optional<Example> example_override) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("", "cannot read config file '" + path + "'");
    return resolve_config(parse_key_values(in), overrides, example_override);
}

std::string serialize_config(const EpisodeConfig& config) {
    std::string out;
    for (const auto& spec : key_table())
        out += spec.doc.key + " = " + spec.get(config) + "\n";
    return out;
}

std::string config_hash(const EpisodeConfig& config) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const unsigned char ch : serialize_config(config)) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

const std::vector<ConfigKeyDoc>& config_schema() {
    static const std::vector<ConfigKeyDoc> docs = [] {
        std::vector<ConfigKeyDoc> d;
        for (const auto& spec : key_table())
            d.push_back(spec.doc);
        return d;
    }();
    return docs;
}

}  // namespace confsafe
