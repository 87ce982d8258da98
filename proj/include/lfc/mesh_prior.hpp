#pragma once
// Homogeneous binary Markov mesh prior.
//
// Each node, visited in row-major order, is Bernoulli with
//   logit p(x_ij = 1 | neighbours) = theta(active subset of tau),
// where theta(L) is the sum of the stored interaction parameters beta(l)
// over stored subsets l of L. Neighbours falling outside the lattice count
// as shale.

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "lfc/chain.hpp"
#include "lfc/error.hpp"
#include "lfc/lattice.hpp"

namespace lfc {

inline double logistic(double z) noexcept {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow.
inline double softplus(double z) noexcept {
    return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

// log p(v | theta) for a Bernoulli with logit theta.
inline double log_bernoulli_logit(std::uint8_t v, double theta) noexcept {
    return v ? -softplus(-theta) : -softplus(theta);
}

// Shortest round-trip decimal form of a double.
inline std::string format_real(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

struct Interaction {
    std::uint32_t mask = 0;  // bit k set <=> tau[k] belongs to lambda
    double beta = 0.0;
};

// The offsets of tau whose translated node is in-lattice and holds sand.
struct ActiveSubset {
    std::uint32_t mask = 0;
};

class MeshPriorSpec {
public:
    static constexpr std::size_t kMaxTau = 20;

    MeshPriorSpec() = default;
    MeshPriorSpec(std::vector<CellOffset> tau, std::vector<Interaction> interactions)
        : tau_(std::move(tau)), interactions_(std::move(interactions)) {
        validate();
        theta_table_.assign(std::size_t{1} << tau_.size(), 0.0);
        for (std::uint32_t a = 0; a < theta_table_.size(); ++a) theta_table_[a] = theta_by_scan(a);
    }

    const std::vector<CellOffset>& tau() const noexcept { return tau_; }
    const std::vector<Interaction>& interactions() const noexcept { return interactions_; }

    int tau_index(const CellOffset& o) const noexcept {
        for (std::size_t k = 0; k < tau_.size(); ++k) {
            if (tau_[k] == o) return static_cast<int>(k);
        }
        return -1;
    }

    std::vector<CellOffset> members(std::uint32_t mask) const {
        std::vector<CellOffset> out;
        for (std::size_t k = 0; k < tau_.size(); ++k) {
            if (mask >> k & 1u) out.push_back(tau_[k]);
        }
        return out;
    }

    // Sum of beta(l) over stored l contained in the active subset.
    double theta_by_scan(std::uint32_t active) const noexcept {
        double s = 0.0;
        for (const auto& it : interactions_) {
            if ((it.mask & ~active) == 0) s += it.beta;
        }
        return s;
    }
    // Cached lookup over all 2^|tau| subsets.
    double theta(std::uint32_t active) const noexcept { return theta_table_[active]; }

    std::optional<double> beta(std::uint32_t lambda) const noexcept {
        for (const auto& it : interactions_) {
            if (it.mask == lambda) return it.beta;
        }
        return std::nullopt;
    }

private:
    void validate() const {
        if (tau_.size() > kMaxTau) throw ConfigError("tau has more than 20 offsets");
        std::set<CellOffset> seen;
        for (const auto& t : tau_) {
            if (!(t.di < 0 || (t.di == 0 && t.dj < 0))) {
                throw ConfigError("tau offset (" + std::to_string(t.di) + "," + std::to_string(t.dj) +
                                  ") is not a predecessor offset");
            }
            if (!seen.insert(t).second) throw ConfigError("duplicate offset in tau");
        }
        const std::uint32_t full = tau_.empty() ? 0u : static_cast<std::uint32_t>((std::uint64_t{1} << tau_.size()) - 1);
        std::set<std::uint32_t> lambdas;
        bool has_empty = false;
        for (const auto& it : interactions_) {
            if ((it.mask & ~full) != 0) throw ConfigError("interaction refers to an offset outside tau");
            if (!std::isfinite(it.beta)) throw ConfigError("interaction parameter is not finite");
            if (!lambdas.insert(it.mask).second) throw ConfigError("duplicate interaction subset");
            has_empty |= it.mask == 0;
        }
        if (!has_empty) throw ConfigError("interaction list must contain the empty set");
    }

    std::vector<CellOffset> tau_;
    std::vector<Interaction> interactions_;
    std::vector<double> theta_table_;
};

// ---------------------------------------------------------------------------
// Parameter file
//
//   tau: (d1i,d1j) (d2i,d2j) ...
//   lambda: (..) (..) beta: <value>      one line per interaction
//
// "lambda:" followed directly by "beta:" is the empty set. '#' starts a comment.

namespace detail {

inline std::vector<CellOffset> parse_offsets(const std::string& text, int line_no) {
    std::vector<CellOffset> out;
    std::size_t pos = 0;
    while (true) {
        pos = text.find_first_not_of(" \t", pos);
        if (pos == std::string::npos) break;
        if (text[pos] != '(') throw ConfigError("prior file line " + std::to_string(line_no) + ": expected '('");
        const auto close = text.find(')', pos);
        if (close == std::string::npos) throw ConfigError("prior file line " + std::to_string(line_no) + ": missing ')'");
        const std::string inner = text.substr(pos + 1, close - pos - 1);
        const auto comma = inner.find(',');
        if (comma == std::string::npos) throw ConfigError("prior file line " + std::to_string(line_no) + ": missing ','");
        try {
            std::size_t used = 0;
            CellOffset o;
            const std::string a = inner.substr(0, comma), b = inner.substr(comma + 1);
            o.di = std::stoi(a, &used);
            o.dj = std::stoi(b, &used);
            out.push_back(o);
        } catch (const std::exception&) {
            throw ConfigError("prior file line " + std::to_string(line_no) + ": bad offset '" + inner + "'");
        }
        pos = close + 1;
    }
    return out;
}

}  // namespace detail

inline MeshPriorSpec read_prior(std::istream& is) {
    std::string line;
    int line_no = 0;
    std::vector<CellOffset> tau;
    bool have_tau = false;
    struct Raw {
        std::vector<CellOffset> lambda;
        double beta;
        int line;
    };
    std::vector<Raw> raw;
    while (std::getline(is, line)) {
        ++line_no;
        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        line = line.substr(first);
        if (line.rfind("tau:", 0) == 0) {
            if (have_tau) throw ConfigError("prior file: tau given twice");
            tau = detail::parse_offsets(line.substr(4), line_no);
            have_tau = true;
        } else if (line.rfind("lambda:", 0) == 0) {
            const auto b = line.find("beta:");
            if (b == std::string::npos) throw ConfigError("prior file line " + std::to_string(line_no) + ": missing beta");
            Raw r;
            r.lambda = detail::parse_offsets(line.substr(7, b - 7), line_no);
            r.line = line_no;
            try {
                std::size_t used = 0;
                const std::string v = line.substr(b + 5);
                r.beta = std::stod(v, &used);
                if (v.find_first_not_of(" \t\r", used) != std::string::npos) throw std::invalid_argument("trailing");
            } catch (const std::exception&) {
                throw ConfigError("prior file line " + std::to_string(line_no) + ": bad beta value");
            }
            raw.push_back(std::move(r));
        } else {
            throw ConfigError("prior file line " + std::to_string(line_no) + ": unrecognised entry");
        }
    }
    if (!have_tau) throw ConfigError("prior file: missing tau line");
    std::vector<Interaction> inter;
    for (const auto& r : raw) {
        Interaction it;
        it.beta = r.beta;
        for (const auto& o : r.lambda) {
            int k = -1;
            for (std::size_t q = 0; q < tau.size(); ++q) {
                if (tau[q] == o) k = static_cast<int>(q);
            }
            if (k < 0) throw ConfigError("prior file line " + std::to_string(r.line) + ": offset not in tau");
            if (it.mask >> k & 1u) throw ConfigError("prior file line " + std::to_string(r.line) + ": repeated offset");
            it.mask |= 1u << k;
        }
        inter.push_back(it);
    }
    return MeshPriorSpec(std::move(tau), std::move(inter));
}

inline std::string format_offset(const CellOffset& o) {
    return "(" + std::to_string(o.di) + "," + std::to_string(o.dj) + ")";
}

// Canonical text form: lambda members listed in tau order, betas in shortest
// round-trip notation.
inline void write_prior(std::ostream& os, const MeshPriorSpec& spec) {
    os << "tau:";
    for (const auto& t : spec.tau()) os << ' ' << format_offset(t);
    os << '\n';
    for (const auto& it : spec.interactions()) {
        os << "lambda:";
        for (const auto& o : spec.members(it.mask)) os << ' ' << format_offset(o);
        os << " beta: " << format_real(it.beta) << '\n';
    }
}

// Parameters fitted to the training image (31 interactions over 9 offsets).
inline MeshPriorSpec load_appendix_prior() {
    static const char* const text = R"(tau: (-1,0) (0,-1) (-1,2) (0,-2) (-3,-1) (0,-3) (-1,4) (0,-4) (-2,-4)
lambda: beta: -4.33884
lambda: (-1,0) beta: 3.27479
lambda: (0,-1) beta: 2.96595
lambda: (-1,0) (0,-1) beta: -0.460735
lambda: (-1,2) beta: 1.49237
lambda: (-1,2) (0,-1) beta: -1.10759
lambda: (0,-2) beta: 1.99035
lambda: (-3,-1) beta: -1.43573
lambda: (0,-3) beta: 3.06786
lambda: (-1,0) (0,-3) beta: -3.44258
lambda: (0,-3) (0,-1) beta: -2.03335
lambda: (-1,0) (0,-3) (0,-1) beta: 1.95605
lambda: (0,-3) (0,-2) beta: -1.02729
lambda: (-1,4) beta: 2.90431
lambda: (-1,0) (-1,4) beta: -3.42674
lambda: (-1,4) (0,-1) beta: -0.404195
lambda: (-1,2) (-1,4) beta: 0.268767
lambda: (-1,4) (0,-3) beta: -2.73426
lambda: (-1,0) (-1,4) (0,-3) beta: 2.96929
lambda: (-1,4) (0,-3) (0,-1) beta: 1.95346
lambda: (0,-4) beta: 2.1858
lambda: (-1,0) (0,-4) beta: -0.355664
lambda: (0,-4) (0,-2) beta: -1.61185
lambda: (0,-4) (0,-3) beta: -1.23267
lambda: (-1,0) (0,-4) (0,-3) beta: 0.606075
lambda: (0,-4) (0,-3) (0,-2) beta: 2.03717
lambda: (-1,4) (0,-4) beta: -4.01512
lambda: (-1,0) (-1,4) (0,-4) beta: 3.80173
lambda: (-1,4) (0,-4) (0,-3) beta: 2.6053
lambda: (-1,0) (-1,4) (0,-4) (0,-3) beta: -1.64379
lambda: (-2,-4) beta: -0.717159
)";
    std::istringstream is(text);
    return read_prior(is);
}

// ---------------------------------------------------------------------------
// Node-level quantities

inline ActiveSubset active_subset(const MeshPriorSpec& spec, const LfcField& field, const Node& v) {
    ActiveSubset a;
    const auto& tau = spec.tau();
    for (std::size_t k = 0; k < tau.size(); ++k) {
        if (field.value_or_shale(v.i + tau[k].di, v.j + tau[k].dj)) a.mask |= 1u << k;
    }
    return a;
}

inline double theta(const MeshPriorSpec& spec, const ActiveSubset& active) {
    return spec.theta_by_scan(active.mask);
}

// p(x_v = 1 | sequential neighbours of v).
inline double conditional_prob(const MeshPriorSpec& spec, const LfcField& field, const Node& v) {
    require_inside(field.dims(), v);
    return logistic(spec.theta(active_subset(spec, field, v).mask));
}

// Exact joint log-density: sum of log conditionals in row-major order.
inline double log_density(const MeshPriorSpec& spec, const LfcField& field) {
    double s = 0.0;
    for (int i = 1; i <= field.rows(); ++i) {
        for (int j = 1; j <= field.cols(); ++j) {
            const double th = spec.theta(active_subset(spec, field, {i, j}).mask);
            s += log_bernoulli_logit(field(i, j), th);
        }
    }
    return s;
}

template <class URBG>
LfcField simulate(const MeshPriorSpec& spec, const GridDims& dims, URBG& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    LfcField f(dims);
    for (int i = 1; i <= dims.rows; ++i) {
        for (int j = 1; j <= dims.cols; ++j) {
            const double p = logistic(spec.theta(active_subset(spec, f, {i, j}).mask));
            if (unif(rng) < p) f.set({i, j}, 1);
        }
    }
    return f;
}

inline LfcField simulate(const MeshPriorSpec& spec, const GridDims& dims, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return simulate(spec, dims, rng);
}

// Neighbourhood of the equivalent Markov random field, away from borders:
// tau, its reflection, and all pairwise differences of template offsets.
inline std::set<CellOffset> mrf_neighborhood(const MeshPriorSpec& spec) {
    std::set<CellOffset> out;
    const auto& tau = spec.tau();
    for (const auto& s : tau) {
        out.insert(s);
        out.insert(-s);
        for (const auto& t : tau) {
            if (!(s == t)) out.insert(s - t);
        }
    }
    out.erase(CellOffset{0, 0});
    return out;
}

// Order of the column conditional chain: the largest vertical extent of
// column variables that share one mesh factor.
inline int chain_order(const MeshPriorSpec& spec) {
    std::map<int, std::pair<int, int>> extent;  // dj -> (min di, max di)
    extent[0] = {0, 0};                          // the node itself
    for (const auto& t : spec.tau()) {
        auto [it, fresh] = extent.try_emplace(t.dj, t.di, t.di);
        if (!fresh) {
            it->second.first = std::min(it->second.first, t.di);
            it->second.second = std::max(it->second.second, t.di);
        }
    }
    int r = 0;
    for (const auto& [dj, mm] : extent) r = std::max(r, mm.second - mm.first);
    return r;
}

// ---------------------------------------------------------------------------
// Prior object used by the sampler.

class MarkovMeshPrior {
public:
    static constexpr bool kExactJoint = true;

    explicit MarkovMeshPrior(MeshPriorSpec spec) : spec_(std::move(spec)), order_(chain_order(spec_)) {
        std::set<int> djs;
        for (const auto& t : spec_.tau()) {
            if (t.dj != 0) djs.insert(t.dj);
        }
        // a factor at column l touches column j when l + dj = j
        for (int dj : djs) factor_column_shift_.push_back(-dj);
    }

    const MeshPriorSpec& spec() const noexcept { return spec_; }
    int order() const noexcept { return order_; }

    // Log-potential of p(column j | rest) as an order-r chain (j is 1-based).
    ChainPotential column_potential(const LfcField& field, int j) const {
        const GridDims& dims = field.dims();
        column_nodes(dims, j);
        const int m = dims.rows;
        ChainPotential phi(m, order_);
        const auto& tau = spec_.tau();

        std::vector<int> factor_cols{j};
        for (int s : factor_column_shift_) {
            const int l = j + s;
            if (l >= 1 && l <= dims.cols) factor_cols.push_back(l);
        }

        std::vector<std::pair<int, int>> var_bits;  // (tau bit, row of column j, 1-based)
        for (int l : factor_cols) {
            for (int k = 1; k <= m; ++k) {
                std::uint32_t base = 0;
                var_bits.clear();
                for (std::size_t q = 0; q < tau.size(); ++q) {
                    const int ri = k + tau[q].di, cj = l + tau[q].dj;
                    if (ri < 1 || ri > m || cj < 1 || cj > dims.cols) continue;
                    if (cj == j) {
                        var_bits.emplace_back(static_cast<int>(q), ri);
                    } else if (field(ri, cj)) {
                        base |= 1u << q;
                    }
                }
                const bool own_var = (l == j);
                if (!own_var && var_bits.empty()) continue;
                int hi = own_var ? k : 0;
                for (const auto& vb : var_bits) hi = std::max(hi, vb.second);
                const std::uint8_t own_fixed = own_var ? 0 : field(k, l);
                for (std::uint32_t w = 0; w < phi.windows(); ++w) {
                    std::uint32_t mask = base;
                    for (const auto& [bit, row] : var_bits) {
                        if (w >> (hi - row) & 1u) mask |= 1u << bit;
                    }
                    const std::uint8_t own = own_var ? static_cast<std::uint8_t>(w >> (hi - k) & 1u) : own_fixed;
                    phi.at(hi - 1, w) += log_bernoulli_logit(own, spec_.theta(mask));
                }
            }
        }
        return phi;
    }

    BinaryChain column_conditional(const LfcField& field, int j) const {
        return BinaryChain(column_potential(field, j));
    }

    double log_prior(const LfcField& field) const { return log_density(spec_, field); }

    // Change of log_prior when column j goes from `old_col` to `new_col`.
    double column_delta(const ChainPotential& phi, const std::vector<std::uint8_t>& old_col,
                        const std::vector<std::uint8_t>& new_col) const {
        return phi.evaluate(new_col) - phi.evaluate(old_col);
    }

    template <class URBG>
    LfcField sample(const GridDims& dims, URBG& rng) const {
        return simulate(spec_, dims, rng);
    }

private:
    MeshPriorSpec spec_;
    int order_ = 0;
    std::vector<int> factor_column_shift_;
};

// Exact p(column j | rest) for the mesh prior.
inline BinaryChain column_conditional(const MeshPriorSpec& spec, const LfcField& field, int j) {
    return MarkovMeshPrior(spec).column_conditional(field, j);
}

}  // namespace lfc
