#pragma once
// Plain-text run configuration: one `key = value` per line, '#' comments.
// Every key has a default; the effective configuration written by each
// command re-reads to the identical RunConfig.

#include <climits>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "lfc/error.hpp"
#include "lfc/forward.hpp"
#include "lfc/lattice.hpp"
#include "lfc/mesh_prior.hpp"
#include "lfc/profile_prior.hpp"
#include "lfc/sampler.hpp"

namespace lfc {

enum class PriorKind { Mesh, Profile };

struct RunConfig {
    int rows = 105;
    int cols = 51;
    PriorKind prior = PriorKind::Mesh;
    std::string prior_file;  // empty: built-in parameters
    int profile_sweeps = ProfileMrfPrior::kDefaultSweeps;
    int realisations = 4;

    ElasticClassStats stats;
    std::optional<Vec2> aki_near;  // empty: derived from the class means
    std::optional<Vec2> aki_far;
    double sd_near = 0.02;
    double sd_far = 0.02;
    ExpCorrelation noise_corr_v{0.0, 0};
    std::string wavelet_near_file;
    std::string wavelet_far_file;
    double wavelet_near_freq = 0.12;
    double wavelet_far_freq = 0.10;
    int wavelet_length = 25;

    SamplerConfig sampler{8, 5000, 1000, 5, 1, ScanOrder::Systematic, TailMode::Linearize, 0};
    bool tune = false;
    int chains = 1;

    std::vector<int> trace_columns{15, 30, 45};
    std::vector<Node> contact_seeds;  // empty: the top contact_top_k marginal nodes
    int contact_top_k = 4;
    int connectivity_draws = 1;
    int adjacency = 4;
    int hist_bins = 20;

    std::string out_dir = "out";
    std::string cube_file;   // empty: <out_dir>/cube.txt
    std::string stream_dir;  // empty: <out_dir>/samples

    GridDims dims() const { return GridDims(rows, cols); }
    std::string cube_path() const { return cube_file.empty() ? out_dir + "/cube.txt" : cube_file; }
    std::string stream_path() const { return stream_dir.empty() ? out_dir + "/samples" : stream_dir; }

    void validate() const {
        if (rows < 1 || cols < 1) throw ConfigError("rows and cols must be positive");
        if (profile_sweeps < 1) throw ConfigError("profile_sweeps must be positive");
        if (realisations < 1) throw ConfigError("realisations must be positive");
        if (chains < 1) throw ConfigError("chains must be positive");
        if (contact_top_k < 0) throw ConfigError("contact_top_k must be >= 0");
        if (connectivity_draws < 0) throw ConfigError("connectivity_draws must be >= 0");
        if (adjacency != 4 && adjacency != 8) throw ConfigError("adjacency must be 4 or 8");
        if (hist_bins < 1) throw ConfigError("hist_bins must be positive");
        sampler.validate();
    }

    // Checks that only matter when summarising a sample stream.
    void validate_analysis() const {
        for (int j : trace_columns) {
            if (j < 1 || j > cols) throw ConfigError("trace_columns: column " + std::to_string(j) + " outside lattice");
        }
        for (const Node& s : contact_seeds) {
            if (!contains(dims(), s)) throw ConfigError("contact_seeds: node outside lattice");
        }
    }
};

namespace config_detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    if (trim(s).empty()) return out;
    std::string item;
    std::istringstream is(s);
    while (std::getline(is, item, sep)) out.push_back(trim(item));
    return out;
}

inline double to_real(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size() || !std::isfinite(x)) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': expected a real number, got '" + v + "'");
    }
}

inline long long to_integer(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const long long x = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': expected an integer, got '" + v + "'");
    }
}

inline int to_int(const std::string& key, const std::string& v) {
    const long long x = to_integer(key, v);
    if (x < INT_MIN || x > INT_MAX) throw ConfigError("key '" + key + "': value out of range");
    return static_cast<int>(x);
}

inline std::vector<double> to_reals(const std::string& key, const std::string& v, std::size_t n) {
    const auto parts = split(v, ',');
    if (parts.size() != n) {
        throw ConfigError("key '" + key + "': expected " + std::to_string(n) + " comma-separated numbers");
    }
    std::vector<double> out;
    for (const auto& p : parts) out.push_back(to_real(key, p));
    return out;
}

inline std::string reals(std::initializer_list<double> xs) {
    std::string s;
    for (double x : xs) s += (s.empty() ? "" : ",") + format_real(x);
    return s;
}

inline bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("key '" + key + "': expected true or false");
}

struct KeySpec {
    std::string name;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

inline Mat2 to_cov(const std::string& key, const std::string& v) {
    const auto x = to_reals(key, v, 4);
    Mat2 m;
    m << x[0], x[1], x[2], x[3];
    return m;
}

inline const std::vector<KeySpec>& keys() {
    using R = RunConfig;
    static const std::vector<KeySpec> table = {
        {"rows", [](R& c, const std::string& v) { c.rows = to_int("rows", v); },
         [](const R& c) { return std::to_string(c.rows); }},
        {"cols", [](R& c, const std::string& v) { c.cols = to_int("cols", v); },
         [](const R& c) { return std::to_string(c.cols); }},
        {"prior",
         [](R& c, const std::string& v) {
             if (v == "mesh") c.prior = PriorKind::Mesh;
             else if (v == "profile") c.prior = PriorKind::Profile;
             else throw ConfigError("key 'prior': expected mesh or profile, got '" + v + "'");
         },
         [](const R& c) { return std::string(c.prior == PriorKind::Mesh ? "mesh" : "profile"); }},
        {"prior_file", [](R& c, const std::string& v) { c.prior_file = v; }, [](const R& c) { return c.prior_file; }},
        {"profile_sweeps", [](R& c, const std::string& v) { c.profile_sweeps = to_int("profile_sweeps", v); },
         [](const R& c) { return std::to_string(c.profile_sweeps); }},
        {"realisations", [](R& c, const std::string& v) { c.realisations = to_int("realisations", v); },
         [](const R& c) { return std::to_string(c.realisations); }},
        {"mu0",
         [](R& c, const std::string& v) {
             const auto x = to_reals("mu0", v, 2);
             c.stats.mu0 = Vec2(x[0], x[1]);
         },
         [](const R& c) { return reals({c.stats.mu0(0), c.stats.mu0(1)}); }},
        {"mu1",
         [](R& c, const std::string& v) {
             const auto x = to_reals("mu1", v, 2);
             c.stats.mu1 = Vec2(x[0], x[1]);
         },
         [](const R& c) { return reals({c.stats.mu1(0), c.stats.mu1(1)}); }},
        {"sigma0", [](R& c, const std::string& v) { c.stats.sigma0 = to_cov("sigma0", v); },
         [](const R& c) {
             const Mat2& s = c.stats.sigma0;
             return reals({s(0, 0), s(0, 1), s(1, 0), s(1, 1)});
         }},
        {"sigma1", [](R& c, const std::string& v) { c.stats.sigma1 = to_cov("sigma1", v); },
         [](const R& c) {
             const Mat2& s = c.stats.sigma1;
             return reals({s(0, 0), s(0, 1), s(1, 0), s(1, 1)});
         }},
        {"corr_v_range", [](R& c, const std::string& v) { c.stats.corr_v.range = to_real("corr_v_range", v); },
         [](const R& c) { return format_real(c.stats.corr_v.range); }},
        {"corr_v_support", [](R& c, const std::string& v) { c.stats.corr_v.support = to_int("corr_v_support", v); },
         [](const R& c) { return std::to_string(c.stats.corr_v.support); }},
        {"corr_h_range", [](R& c, const std::string& v) { c.stats.corr_h.range = to_real("corr_h_range", v); },
         [](const R& c) { return format_real(c.stats.corr_h.range); }},
        {"corr_h_support", [](R& c, const std::string& v) { c.stats.corr_h.support = to_int("corr_h_support", v); },
         [](const R& c) { return std::to_string(c.stats.corr_h.support); }},
        {"aki_near",
         [](R& c, const std::string& v) {
             const auto x = to_reals("aki_near", v, 2);
             c.aki_near = Vec2(x[0], x[1]);
         },
         [](const R& c) {
             const Mat2 a = default_aki(c.stats).coeffs;
             const Vec2 r = c.aki_near.value_or(Vec2(a(0, 0), a(0, 1)));
             return reals({r(0), r(1)});
         }},
        {"aki_far",
         [](R& c, const std::string& v) {
             const auto x = to_reals("aki_far", v, 2);
             c.aki_far = Vec2(x[0], x[1]);
         },
         [](const R& c) {
             const Mat2 a = default_aki(c.stats).coeffs;
             const Vec2 r = c.aki_far.value_or(Vec2(a(1, 0), a(1, 1)));
             return reals({r(0), r(1)});
         }},
        {"sd_near", [](R& c, const std::string& v) { c.sd_near = to_real("sd_near", v); },
         [](const R& c) { return format_real(c.sd_near); }},
        {"sd_far", [](R& c, const std::string& v) { c.sd_far = to_real("sd_far", v); },
         [](const R& c) { return format_real(c.sd_far); }},
        {"noise_corr_v_range", [](R& c, const std::string& v) { c.noise_corr_v.range = to_real("noise_corr_v_range", v); },
         [](const R& c) { return format_real(c.noise_corr_v.range); }},
        {"noise_corr_v_support",
         [](R& c, const std::string& v) { c.noise_corr_v.support = to_int("noise_corr_v_support", v); },
         [](const R& c) { return std::to_string(c.noise_corr_v.support); }},
        {"wavelet_near_file", [](R& c, const std::string& v) { c.wavelet_near_file = v; },
         [](const R& c) { return c.wavelet_near_file; }},
        {"wavelet_far_file", [](R& c, const std::string& v) { c.wavelet_far_file = v; },
         [](const R& c) { return c.wavelet_far_file; }},
        {"wavelet_near_freq", [](R& c, const std::string& v) { c.wavelet_near_freq = to_real("wavelet_near_freq", v); },
         [](const R& c) { return format_real(c.wavelet_near_freq); }},
        {"wavelet_far_freq", [](R& c, const std::string& v) { c.wavelet_far_freq = to_real("wavelet_far_freq", v); },
         [](const R& c) { return format_real(c.wavelet_far_freq); }},
        {"wavelet_length", [](R& c, const std::string& v) { c.wavelet_length = to_int("wavelet_length", v); },
         [](const R& c) { return std::to_string(c.wavelet_length); }},
        {"nu", [](R& c, const std::string& v) { c.sampler.nu = to_int("nu", v); },
         [](const R& c) { return std::to_string(c.sampler.nu); }},
        {"proposal_tail",
         [](R& c, const std::string& v) {
             if (v == "linearize") c.sampler.tail = TailMode::Linearize;
             else if (v == "drop") c.sampler.tail = TailMode::Drop;
             else throw ConfigError("key 'proposal_tail': expected linearize or drop, got '" + v + "'");
         },
         [](const R& c) { return std::string(c.sampler.tail == TailMode::Linearize ? "linearize" : "drop"); }},
        {"sweeps", [](R& c, const std::string& v) { c.sampler.sweeps = to_int("sweeps", v); },
         [](const R& c) { return std::to_string(c.sampler.sweeps); }},
        {"burn_in", [](R& c, const std::string& v) { c.sampler.burn_in = to_int("burn_in", v); },
         [](const R& c) { return std::to_string(c.sampler.burn_in); }},
        {"thin", [](R& c, const std::string& v) { c.sampler.thin = to_int("thin", v); },
         [](const R& c) { return std::to_string(c.sampler.thin); }},
        {"seed",
         [](R& c, const std::string& v) {
             const long long x = to_integer("seed", v);
             if (x < 0) throw ConfigError("key 'seed': must be >= 0");
             c.sampler.seed = static_cast<std::uint64_t>(x);
         },
         [](const R& c) { return std::to_string(c.sampler.seed); }},
        {"scan",
         [](R& c, const std::string& v) {
             if (v == "systematic") c.sampler.scan = ScanOrder::Systematic;
             else if (v == "random") c.sampler.scan = ScanOrder::RandomPermutation;
             else throw ConfigError("key 'scan': expected systematic or random, got '" + v + "'");
         },
         [](const R& c) { return std::string(c.sampler.scan == ScanOrder::Systematic ? "systematic" : "random"); }},
        {"audit_every", [](R& c, const std::string& v) { c.sampler.audit_every = to_int("audit_every", v); },
         [](const R& c) { return std::to_string(c.sampler.audit_every); }},
        {"tune", [](R& c, const std::string& v) { c.tune = to_bool("tune", v); },
         [](const R& c) { return std::string(c.tune ? "true" : "false"); }},
        {"chains", [](R& c, const std::string& v) { c.chains = to_int("chains", v); },
         [](const R& c) { return std::to_string(c.chains); }},
        {"trace_columns",
         [](R& c, const std::string& v) {
             c.trace_columns.clear();
             for (const auto& p : split(v, ',')) c.trace_columns.push_back(to_int("trace_columns", p));
         },
         [](const R& c) {
             std::string s;
             for (int j : c.trace_columns) s += (s.empty() ? "" : ",") + std::to_string(j);
             return s;
         }},
        {"contact_seeds",
         [](R& c, const std::string& v) {
             c.contact_seeds.clear();
             for (const auto& p : split(v, ';')) {
                 const auto ij = split(p, ',');
                 if (ij.size() != 2) throw ConfigError("key 'contact_seeds': expected 'i,j;i,j;...'");
                 c.contact_seeds.push_back({to_int("contact_seeds", ij[0]), to_int("contact_seeds", ij[1])});
             }
         },
         [](const R& c) {
             std::string s;
             for (const Node& n : c.contact_seeds) {
                 s += (s.empty() ? "" : ";") + std::to_string(n.i) + "," + std::to_string(n.j);
             }
             return s;
         }},
        {"contact_top_k", [](R& c, const std::string& v) { c.contact_top_k = to_int("contact_top_k", v); },
         [](const R& c) { return std::to_string(c.contact_top_k); }},
        {"connectivity_draws",
         [](R& c, const std::string& v) { c.connectivity_draws = to_int("connectivity_draws", v); },
         [](const R& c) { return std::to_string(c.connectivity_draws); }},
        {"adjacency", [](R& c, const std::string& v) { c.adjacency = to_int("adjacency", v); },
         [](const R& c) { return std::to_string(c.adjacency); }},
        {"hist_bins", [](R& c, const std::string& v) { c.hist_bins = to_int("hist_bins", v); },
         [](const R& c) { return std::to_string(c.hist_bins); }},
        {"out_dir", [](R& c, const std::string& v) { c.out_dir = v; }, [](const R& c) { return c.out_dir; }},
        {"cube_file", [](R& c, const std::string& v) { c.cube_file = v; }, [](const R& c) { return c.cube_file; }},
        {"stream_dir", [](R& c, const std::string& v) { c.stream_dir = v; }, [](const R& c) { return c.stream_dir; }},
    };
    return table;
}

}  // namespace config_detail

inline void set_key(RunConfig& cfg, const std::string& key, const std::string& value) {
    for (const auto& k : config_detail::keys()) {
        if (k.name == key) {
            k.set(cfg, value);
            return;
        }
    }
    throw ConfigError("unknown config key '" + key + "'");
}

// Applies "key=value" assignments (from a file or the command line).
inline void apply_assignment(RunConfig& cfg, const std::string& text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + text + "'");
    set_key(cfg, config_detail::trim(text.substr(0, eq)), config_detail::trim(text.substr(eq + 1)));
}

inline RunConfig read_config(std::istream& is, RunConfig cfg = {}) {
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
        if (config_detail::trim(line).empty()) continue;
        try {
            apply_assignment(cfg, line);
        } catch (const ConfigError& e) {
            throw ConfigError("config line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return cfg;
}

inline RunConfig read_config_file(const std::string& path, RunConfig cfg = {}) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file '" + path + "'");
    return read_config(is, std::move(cfg));
}

inline void write_config(std::ostream& os, const RunConfig& cfg) {
    for (const auto& k : config_detail::keys()) os << k.name << " = " << k.get(cfg) << '\n';
}

inline std::string config_value(const RunConfig& cfg, const std::string& key) {
    for (const auto& k : config_detail::keys()) {
        if (k.name == key) return k.get(cfg);
    }
    throw ConfigError("unknown config key '" + key + "'");
}

// ---- objects built from a configuration ----

inline ForwardModel build_forward_model(const RunConfig& cfg) {
    ForwardModel fm;
    fm.stats = cfg.stats;
    const Mat2 a = default_aki(cfg.stats).coeffs;
    const Vec2 near = cfg.aki_near.value_or(Vec2(a(0, 0), a(0, 1)));
    const Vec2 far = cfg.aki_far.value_or(Vec2(a(1, 0), a(1, 1)));
    fm.aki.coeffs << near(0), near(1), far(0), far(1);
    auto wavelet = [&](const std::string& file, double freq) {
        if (file.empty()) return ricker(freq, cfg.wavelet_length);
        std::ifstream is(file);
        if (!is) throw ConfigError("cannot open wavelet file '" + file + "'");
        return read_wavelet(is);
    };
    fm.near = wavelet(cfg.wavelet_near_file, cfg.wavelet_near_freq);
    fm.far = wavelet(cfg.wavelet_far_file, cfg.wavelet_far_freq);
    fm.noise.sd_near = cfg.sd_near;
    fm.noise.sd_far = cfg.sd_far;
    fm.noise.corr_v = cfg.noise_corr_v;
    fm.validate();
    return fm;
}

inline MeshPriorSpec build_mesh_spec(const RunConfig& cfg) {
    if (cfg.prior_file.empty()) return load_appendix_prior();
    std::ifstream is(cfg.prior_file);
    if (!is) throw ConfigError("cannot open prior file '" + cfg.prior_file + "'");
    return read_prior(is);
}

inline ProfileTransitionTable build_profile_table(const RunConfig& cfg) {
    if (cfg.prior_file.empty()) return load_table1();
    std::ifstream is(cfg.prior_file);
    if (!is) throw ConfigError("cannot open prior file '" + cfg.prior_file + "'");
    return read_transition_table(is);
}

}  // namespace lfc
