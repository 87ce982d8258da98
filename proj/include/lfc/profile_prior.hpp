#pragma once
// Profile Markov random field prior.
//
// Given its two flanking columns, a column is a first-order Markov chain
// from the top down with transition p(x_ij | x_{i-1,j}, x_{i,j-1}, x_{i,j+1}).
// Positions outside the lattice (above row 1, left of column 1, right of
// column n) are treated as shale.
//
// The column conditionals are not in general those of a single joint
// distribution, so the prior is taken to be the stationary law of the
// systematic left-to-right column Gibbs sweep. log_prior() returns the
// column pseudo-log-likelihood sum_j log p(column j | flanks).

#include <array>
#include <cmath>
#include <cstdint>
#include <istream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "lfc/chain.hpp"
#include "lfc/error.hpp"
#include "lfc/lattice.hpp"

namespace lfc {

// Neighbour state in a transition lookup.
enum class Neighbor : std::uint8_t { Shale = 0, Sand = 1, Boundary = 2 };

inline Neighbor neighbor_of(std::uint8_t v) noexcept { return v ? Neighbor::Sand : Neighbor::Shale; }

struct ProfileTransitionTable {
    // p1[above][left][right] = p(x_ij = 1 | ...)
    std::array<std::array<std::array<double, 2>, 2>, 2> p1{};

    void validate() const {
        for (const auto& a : p1)
            for (const auto& l : a)
                for (double p : l) {
                    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("transition probability outside [0,1]");
                }
    }
};

inline ProfileTransitionTable load_table1() {
    ProfileTransitionTable t;
    t.p1[0][0][0] = 0.0123;
    t.p1[0][0][1] = 0.3461;
    t.p1[0][1][0] = 0.3461;
    t.p1[0][1][1] = 0.9575;
    t.p1[1][0][0] = 0.1661;
    t.p1[1][0][1] = 0.8944;
    t.p1[1][1][0] = 0.8944;
    t.p1[1][1][1] = 0.9972;
    return t;
}

// Override file: eight lines "a l r p1". Missing entries keep the defaults.
inline ProfileTransitionTable read_transition_table(std::istream& is) {
    ProfileTransitionTable t = load_table1();
    std::array<bool, 8> seen{};
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream ls(line);
        int a = -1, l = -1, r = -1;
        double p = -1;
        if (!(ls >> a >> l >> r >> p) || a < 0 || a > 1 || l < 0 || l > 1 || r < 0 || r > 1) {
            throw ConfigError("transition table line " + std::to_string(line_no) + ": expected 'a l r p1'");
        }
        if (seen[a * 4 + l * 2 + r]) throw ConfigError("transition table: duplicate entry");
        seen[a * 4 + l * 2 + r] = true;
        t.p1[a][l][r] = p;
    }
    t.validate();
    return t;
}

inline double transition_prob(const ProfileTransitionTable& t, Neighbor above, Neighbor left, Neighbor right) {
    auto idx = [](Neighbor v) { return v == Neighbor::Sand ? 1 : 0; };  // boundary -> shale
    return t.p1[idx(above)][idx(left)][idx(right)];
}

class ProfileMrfPrior {
public:
    static constexpr int kDefaultSweeps = 500;

    explicit ProfileMrfPrior(ProfileTransitionTable table = load_table1(), int sweeps = kDefaultSweeps)
        : table_(table), sweeps_(sweeps) {
        table_.validate();
        if (sweeps < 1) throw ConfigError("profile prior needs at least one sweep");
        for (int a = 0; a < 2; ++a)
            for (int l = 0; l < 2; ++l)
                for (int r = 0; r < 2; ++r) {
                    const double p = table_.p1[a][l][r];
                    log_p1_[a][l][r] = std::log(p);
                    log_p0_[a][l][r] = std::log1p(-p);
                }
    }

    const ProfileTransitionTable& table() const noexcept { return table_; }
    int order() const noexcept { return 1; }
    int sweeps() const noexcept { return sweeps_; }

    ChainPotential column_potential(const LfcField& field, int j) const {
        column_nodes(field.dims(), j);
        const int m = field.rows();
        ChainPotential phi(m, 1);
        for (int i = 1; i <= m; ++i) {
            const int l = field.value_or_shale(i, j - 1);
            const int r = field.value_or_shale(i, j + 1);
            // window bit 0: x_i, bit 1: x_{i-1} (padded with shale above row 1)
            for (std::uint32_t w = 0; w < 4; ++w) {
                const int a = static_cast<int>(w >> 1 & 1u);
                phi.at(i - 1, w) = (w & 1u) ? log_p1_[a][l][r] : log_p0_[a][l][r];
            }
        }
        return phi;
    }

    BinaryChain column_conditional(const LfcField& field, int j) const {
        return BinaryChain(column_potential(field, j));
    }

    double log_prior(const LfcField& field) const {
        double s = 0.0;
        for (int j = 1; j <= field.cols(); ++j) s += column_potential(field, j).evaluate(field.column(j));
        return s;
    }

    // Systematic column Gibbs sweeps from an all-shale start.
    template <class URBG>
    LfcField simulate(const GridDims& dims, int sweeps, URBG& rng) const {
        if (sweeps < 1) throw ConfigError("profile prior simulation needs at least one sweep");
        LfcField f(dims);
        for (int s = 0; s < sweeps; ++s) {
            for (int j = 1; j <= dims.cols; ++j) f.set_column(j, column_conditional(f, j).sample(rng));
        }
        return f;
    }

    template <class URBG>
    LfcField sample(const GridDims& dims, URBG& rng) const {
        return simulate(dims, sweeps_, rng);
    }

private:
    ProfileTransitionTable table_;
    int sweeps_ = kDefaultSweeps;
    double log_p1_[2][2][2]{};
    double log_p0_[2][2][2]{};
};

inline BinaryChain column_conditional(const ProfileTransitionTable& table, const LfcField& field, int j) {
    return ProfileMrfPrior(table).column_conditional(field, j);
}

inline LfcField simulate_prior(const ProfileTransitionTable& table, const GridDims& dims, int sweeps,
                               std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return ProfileMrfPrior(table).simulate(dims, sweeps, rng);
}

}  // namespace lfc
