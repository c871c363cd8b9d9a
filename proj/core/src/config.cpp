#include "ntdpc/config.hpp"

#include <json.hpp>

#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace ntdpc {

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ConfigError("config: " + path + ": " + what);
}

void reject_unknown(const json& j, const std::string& path, const std::set<std::string>& known) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!known.count(it.key())) fail(path + "." + it.key(), "unknown key");
    }
}

double get_number(const json& j, const std::string& path) {
    if (!j.is_number()) fail(path, "expected a number");
    return j.get<double>();
}

Index get_count(const json& j, const std::string& path) {
    if (!j.is_number_integer() || j.get<long long>() < 0) fail(path, "expected a non-negative integer");
    return static_cast<Index>(j.get<long long>());
}

Vector get_vector(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) fail(path, "expected a non-empty array of numbers");
    Vector v(static_cast<Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) fail(path + "[" + std::to_string(i) + "]", "expected a number");
        v(static_cast<Index>(i)) = j[i].get<double>();
    }
    return v;
}

Matrix get_matrix(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) fail(path, "expected a non-empty array of rows");
    const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
    if (cols == 0) fail(path, "expected nested arrays (matrix rows)");
    Matrix m(static_cast<Index>(j.size()), static_cast<Index>(cols));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_array() || j[i].size() != cols) fail(path, "ragged matrix rows");
        for (std::size_t c = 0; c < cols; ++c) {
            if (!j[i][c].is_number()) {
                fail(path + "[" + std::to_string(i) + "][" + std::to_string(c) + "]",
                     "expected a number");
            }
            m(static_cast<Index>(i), static_cast<Index>(c)) = j[i][c].get<double>();
        }
    }
    return m;
}

// Scalar weight w means w * I per sample; a matrix is taken verbatim.
Matrix get_weight(const json& j, const std::string& path, Index dim) {
    if (j.is_number()) {
        const double w = j.get<double>();
        if (w <= 0.0) fail(path, "weight must be positive");
        return w * Matrix::Identity(dim, dim);
    }
    Matrix m = get_matrix(j, path);
    if (m.rows() != dim || m.cols() != dim) fail(path, "weight dimension mismatch");
    return m;
}

json to_json_matrix(const Matrix& m) {
    json rows = json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Index c = 0; c < m.cols(); ++c) row.push_back(m(i, c));
        rows.push_back(row);
    }
    return rows;
}

json to_json_vector(const Vector& v) {
    json arr = json::array();
    for (Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

}  // namespace

std::string controller_name(ControllerKind k) {
    switch (k) {
        case ControllerKind::ntdpc: return "ntdpc";
        case ControllerKind::spc: return "spc";
        case ControllerKind::smmpc: return "smmpc";
    }
    return "unknown";
}

ControllerKind controller_from_name(const std::string& name) {
    if (name == "ntdpc") return ControllerKind::ntdpc;
    if (name == "spc") return ControllerKind::spc;
    if (name == "smmpc") return ControllerKind::smmpc;
    throw ConfigError("config: unknown controller '" + name + "' (expected ntdpc, spc or smmpc)");
}

ConfigFile parse_config_text(const std::string& text, const std::string& origin) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("config: " + origin + ": " + e.what());
    }
    if (!root.is_object()) throw ConfigError("config: " + origin + ": top level must be an object");

    reject_unknown(root, origin,
                   {"plant", "horizons", "data", "noise", "controllers", "weights", "constraints",
                    "references", "simulation", "monte_carlo", "sensitivity", "system_order",
                    "seed", "output_dir"});

    ConfigFile cfg;

    if (!root.contains("plant")) fail(origin + ".plant", "required");
    const json& plant = root["plant"];
    if (plant.is_string()) {
        if (plant.get<std::string>() != "boeing747") {
            fail(origin + ".plant", "unknown preset '" + plant.get<std::string>() + "'");
        }
        cfg.plant = boeing747_plant();
        cfg.plant_preset = "boeing747";
    } else if (plant.is_object()) {
        reject_unknown(plant, origin + ".plant", {"A", "B", "C", "Ts"});
        if (!plant.contains("A") || !plant.contains("B") || !plant.contains("C")) {
            fail(origin + ".plant", "literal plants need A, B and C");
        }
        cfg.plant.A = get_matrix(plant["A"], origin + ".plant.A");
        cfg.plant.B = get_matrix(plant["B"], origin + ".plant.B");
        cfg.plant.C = get_matrix(plant["C"], origin + ".plant.C");
        cfg.plant.Ts = plant.contains("Ts") ? get_number(plant["Ts"], origin + ".plant.Ts") : 1.0;
        try {
            cfg.plant.validate();
        } catch (const std::exception& e) {
            fail(origin + ".plant", e.what());
        }
    } else {
        fail(origin + ".plant", "expected a preset name or a matrix object");
    }
    const Index n_u = cfg.plant.n_u();
    const Index n_y = cfg.plant.n_y();

    if (root.contains("horizons")) {
        const json& h = root["horizons"];
        reject_unknown(h, origin + ".horizons", {"t_ini", "n_pred"});
        if (h.contains("t_ini")) cfg.t_ini = get_count(h["t_ini"], origin + ".horizons.t_ini");
        if (h.contains("n_pred")) cfg.n_pred = get_count(h["n_pred"], origin + ".horizons.n_pred");
    }
    if (root.contains("data")) {
        const json& d = root["data"];
        reject_unknown(d, origin + ".data", {"m_columns", "pe_amplitude"});
        if (d.contains("m_columns")) cfg.m_columns = get_count(d["m_columns"], origin + ".data.m_columns");
        if (d.contains("pe_amplitude")) {
            cfg.pe_amplitude = get_number(d["pe_amplitude"], origin + ".data.pe_amplitude");
            if (cfg.pe_amplitude <= 0.0) fail(origin + ".data.pe_amplitude", "must be positive");
        }
    }
    if (root.contains("noise")) {
        const json& n = root["noise"];
        reject_unknown(n, origin + ".noise", {"sigma2", "sigma"});
        if (n.contains("sigma2") && n.contains("sigma")) fail(origin + ".noise", "give sigma2 or sigma, not both");
        if (n.contains("sigma2")) {
            const double s2 = get_number(n["sigma2"], origin + ".noise.sigma2");
            if (s2 < 0.0) fail(origin + ".noise.sigma2", "variance must be non-negative");
            cfg.noise_sigma = s2 * Matrix::Identity(n_y, n_y);
        } else if (n.contains("sigma")) {
            cfg.noise_sigma = get_matrix(n["sigma"], origin + ".noise.sigma");
            if (cfg.noise_sigma.rows() != n_y || cfg.noise_sigma.cols() != n_y) {
                fail(origin + ".noise.sigma", "covariance must be n_y x n_y");
            }
        }
    }
    if (root.contains("controllers")) {
        const json& c = root["controllers"];
        if (!c.is_array() || c.empty()) fail(origin + ".controllers", "expected a non-empty array");
        cfg.controllers.clear();
        for (std::size_t i = 0; i < c.size(); ++i) {
            if (!c[i].is_string()) fail(origin + ".controllers", "entries must be strings");
            cfg.controllers.push_back(controller_from_name(c[i].get<std::string>()));
        }
    }

    cfg.weights.Q = Matrix::Identity(n_y, n_y);
    cfg.weights.R = 0.01 * Matrix::Identity(n_u, n_u);
    cfg.weights.Lambda_y = 1000.0 * Matrix::Identity(n_y, n_y);
    if (root.contains("weights")) {
        const json& w = root["weights"];
        reject_unknown(w, origin + ".weights", {"q", "r", "lambda_y"});
        if (w.contains("q")) cfg.weights.Q = get_weight(w["q"], origin + ".weights.q", n_y);
        if (w.contains("r")) cfg.weights.R = get_weight(w["r"], origin + ".weights.r", n_u);
        if (w.contains("lambda_y")) {
            cfg.weights.Lambda_y = get_weight(w["lambda_y"], origin + ".weights.lambda_y", n_y);
        }
    }

    const double inf = std::numeric_limits<double>::infinity();
    cfg.u_lo = Vector::Constant(n_u, -inf);
    cfg.u_hi = Vector::Constant(n_u, inf);
    cfg.y_lo = Vector::Constant(n_y, -inf);
    cfg.y_hi = Vector::Constant(n_y, inf);
    if (root.contains("constraints")) {
        const json& b = root["constraints"];
        reject_unknown(b, origin + ".constraints", {"u_min", "u_max", "y_min", "y_max"});
        auto read_box = [&](const char* key, Index dim, Vector& dst) {
            if (!b.contains(key)) return;
            dst = get_vector(b[key], origin + ".constraints." + key);
            if (dst.size() != dim) fail(origin + ".constraints." + key, "dimension mismatch");
        };
        read_box("u_min", n_u, cfg.u_lo);
        read_box("u_max", n_u, cfg.u_hi);
        read_box("y_min", n_y, cfg.y_lo);
        read_box("y_max", n_y, cfg.y_hi);
    }

    if (!root.contains("references")) fail(origin + ".references", "required");
    {
        const json& r = root["references"];
        reject_unknown(r, origin + ".references", {"r_y", "r_u"});
        if (!r.contains("r_y")) fail(origin + ".references.r_y", "required");
        cfg.r_y = get_vector(r["r_y"], origin + ".references.r_y");
        if (cfg.r_y.size() != n_y) fail(origin + ".references.r_y", "dimension mismatch");
        if (!r.contains("r_u") || (r["r_u"].is_string() && r["r_u"].get<std::string>() == "auto")) {
            try {
                cfg.r_u = steady_state_input(cfg.plant, cfg.r_y);
            } catch (const std::exception& e) {
                fail(origin + ".references.r_u", std::string("auto resolution failed: ") + e.what());
            }
        } else {
            cfg.r_u = get_vector(r["r_u"], origin + ".references.r_u");
            if (cfg.r_u.size() != n_u) fail(origin + ".references.r_u", "dimension mismatch");
        }
    }

    cfg.x0 = Vector::Zero(cfg.plant.n());
    if (root.contains("simulation")) {
        const json& s = root["simulation"];
        reject_unknown(s, origin + ".simulation", {"steps", "x0"});
        if (s.contains("steps")) cfg.steps = get_count(s["steps"], origin + ".simulation.steps");
        if (s.contains("x0")) {
            cfg.x0 = get_vector(s["x0"], origin + ".simulation.x0");
            if (cfg.x0.size() != cfg.plant.n()) fail(origin + ".simulation.x0", "dimension mismatch");
        }
    }
    if (root.contains("monte_carlo")) {
        const json& m = root["monte_carlo"];
        reject_unknown(m, origin + ".monte_carlo", {"runs"});
        if (m.contains("runs")) cfg.mc_runs = get_count(m["runs"], origin + ".monte_carlo.runs");
    }
    if (root.contains("sensitivity")) {
        const json& s = root["sensitivity"];
        reject_unknown(s, origin + ".sensitivity",
                       {"t_ini_grid", "sigma2_grid", "seeds_per_cell", "m_columns"});
        if (s.contains("t_ini_grid")) {
            Vector g = get_vector(s["t_ini_grid"], origin + ".sensitivity.t_ini_grid");
            cfg.sensitivity.t_ini_grid.clear();
            for (Index i = 0; i < g.size(); ++i) {
                cfg.sensitivity.t_ini_grid.push_back(static_cast<Index>(g(i)));
            }
        }
        if (s.contains("sigma2_grid")) {
            Vector g = get_vector(s["sigma2_grid"], origin + ".sensitivity.sigma2_grid");
            cfg.sensitivity.sigma2_grid.assign(g.data(), g.data() + g.size());
        }
        if (s.contains("seeds_per_cell")) {
            cfg.sensitivity.seeds_per_cell = get_count(s["seeds_per_cell"], origin + ".sensitivity.seeds_per_cell");
        }
        if (s.contains("m_columns")) {
            cfg.sensitivity.m_columns = get_count(s["m_columns"], origin + ".sensitivity.m_columns");
        }
    }
    if (root.contains("system_order")) {
        cfg.system_order = get_count(root["system_order"], origin + ".system_order");
    }
    if (root.contains("seed")) {
        if (!root["seed"].is_number_integer()) fail(origin + ".seed", "expected an integer");
        cfg.seed = root["seed"].get<std::uint64_t>();
    }
    if (root.contains("output_dir")) {
        if (!root["output_dir"].is_string()) fail(origin + ".output_dir", "expected a string");
        cfg.output_dir = root["output_dir"].get<std::string>();
    }
    return cfg;
}

ConfigFile parse_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("config: cannot open " + path.string());
    std::stringstream buf;
    buf << is.rdbuf();
    return parse_config_text(buf.str(), path.filename().string());
}

std::string resolved_config_json(const ConfigFile& cfg) {
    ordered_json root;
    if (!cfg.plant_preset.empty()) {
        root["plant"] = cfg.plant_preset;
    } else {
        ordered_json p;
        p["A"] = to_json_matrix(cfg.plant.A);
        p["B"] = to_json_matrix(cfg.plant.B);
        p["C"] = to_json_matrix(cfg.plant.C);
        p["Ts"] = cfg.plant.Ts;
        root["plant"] = p;
    }
    root["horizons"] = {{"t_ini", cfg.t_ini}, {"n_pred", cfg.n_pred}};
    root["data"] = {{"m_columns", cfg.m_columns}, {"pe_amplitude", cfg.pe_amplitude}};
    if (cfg.noise_sigma.size() > 0) {
        root["noise"] = {{"sigma", to_json_matrix(cfg.noise_sigma)}};
    }
    ordered_json ctl = ordered_json::array();
    for (ControllerKind k : cfg.controllers) ctl.push_back(controller_name(k));
    root["controllers"] = ctl;
    root["weights"] = {{"q", to_json_matrix(cfg.weights.Q)},
                       {"r", to_json_matrix(cfg.weights.R)},
                       {"lambda_y", to_json_matrix(cfg.weights.Lambda_y)}};
    ordered_json cons;
    auto box_json = [](const Vector& v) {
        ordered_json arr = ordered_json::array();
        for (Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
        return arr;
    };
    if (cfg.u_lo.allFinite()) cons["u_min"] = box_json(cfg.u_lo);
    if (cfg.u_hi.allFinite()) cons["u_max"] = box_json(cfg.u_hi);
    if (cfg.y_lo.allFinite()) cons["y_min"] = box_json(cfg.y_lo);
    if (cfg.y_hi.allFinite()) cons["y_max"] = box_json(cfg.y_hi);
    if (!cons.empty()) root["constraints"] = cons;
    root["references"] = {{"r_y", to_json_vector(cfg.r_y)}, {"r_u", to_json_vector(cfg.r_u)}};
    root["simulation"] = {{"steps", cfg.steps}, {"x0", to_json_vector(cfg.x0)}};
    root["monte_carlo"] = {{"runs", cfg.mc_runs}};
    ordered_json sens;
    ordered_json tg = ordered_json::array();
    for (Index t : cfg.sensitivity.t_ini_grid) tg.push_back(t);
    sens["t_ini_grid"] = tg;
    sens["sigma2_grid"] = cfg.sensitivity.sigma2_grid;
    sens["seeds_per_cell"] = cfg.sensitivity.seeds_per_cell;
    if (cfg.sensitivity.m_columns > 0) sens["m_columns"] = cfg.sensitivity.m_columns;
    root["sensitivity"] = sens;
    if (cfg.system_order > 0) root["system_order"] = cfg.system_order;
    root["seed"] = cfg.seed;
    root["output_dir"] = cfg.output_dir;
    return root.dump(2) + "\n";
}

Scenario make_scenario(const ConfigFile& cfg, ControllerKind controller) {
    Scenario s;
    s.plant = cfg.plant;
    s.controller = controller;
    s.T_ini = cfg.t_ini;
    s.N = cfg.n_pred;
    s.M = cfg.m_columns;
    s.noise_sigma = cfg.noise_sigma;
    s.r_y = cfg.r_y;
    s.r_u = cfg.r_u;
    s.u_lo = cfg.u_lo;
    s.u_hi = cfg.u_hi;
    s.y_lo = cfg.y_lo;
    s.y_hi = cfg.y_hi;
    s.weights = cfg.weights;
    s.steps = cfg.steps;
    s.seed = cfg.seed;
    s.pe_amplitude = cfg.pe_amplitude;
    s.x0 = cfg.x0;
    s.system_order = cfg.system_order;
    return s;
}

}  // namespace ntdpc
