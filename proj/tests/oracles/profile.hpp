#pragma once
// Profile prior (and posterior) as the stationary law of the systematic
// left-to-right column Gibbs sweep, found by power iteration on the full
// configuration space.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "mesh.hpp"
#include "tables.hpp"

namespace oracle {

// p(column j = c | flanks) as a product of first-order transitions; outside is shale.
inline double profile_column_prob(const ProfileTable& t, const std::vector<int>& x, int m, int n, int j, unsigned c) {
    double p = 1.0;
    int above = 0;
    for (int i = 1; i <= m; ++i) {
        const int v = (c >> (i - 1)) & 1u;
        const int l = j > 1 ? x[(i - 1) * n + (j - 2)] : 0;
        const int r = j < n ? x[(i - 1) * n + j] : 0;
        const double p1 = t.p1[above][l][r];
        p *= v ? p1 : 1.0 - p1;
        above = v;
    }
    return p;
}

// Stationary distribution of sweeps whose column-j kernel draws the column
// with weights proportional to column_weight(x with column j = c, c).
inline std::vector<double> sweep_stationary(
    int m, int n, const std::function<double(const std::vector<int>&, int, unsigned)>& column_weight,
    double tol = 1e-15, int max_sweeps = 200000) {
    if (m * n > 12) throw std::invalid_argument("enumeration limited to 12 nodes");
    const unsigned count = 1u << (m * n), cols = 1u << m;
    std::vector<double> pi(count, 0.0), next(count);
    pi[0] = 1.0;
    auto column_mask = [&](int j) {
        unsigned mask = 0;
        for (int i = 1; i <= m; ++i) mask |= 1u << ((i - 1) * n + (j - 1));
        return mask;
    };
    auto place = [&](unsigned base, int j, unsigned c) {
        for (int i = 1; i <= m; ++i) {
            if ((c >> (i - 1)) & 1u) base |= 1u << ((i - 1) * n + (j - 1));
        }
        return base;
    };
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        const std::vector<double> before = pi;
        for (int j = 1; j <= n; ++j) {
            const unsigned mask = column_mask(j);
            std::fill(next.begin(), next.end(), 0.0);
            for (unsigned base = 0; base < count; ++base) {
                if (base & mask) continue;
                double mass = 0.0;
                for (unsigned c = 0; c < cols; ++c) mass += pi[place(base, j, c)];
                if (mass == 0.0) continue;
                std::vector<double> w(cols);
                double z = 0.0;
                for (unsigned c = 0; c < cols; ++c) {
                    w[c] = column_weight(bits_of(place(base, j, c), m * n), j, c);
                    z += w[c];
                }
                for (unsigned c = 0; c < cols; ++c) next[place(base, j, c)] = mass * w[c] / z;
            }
            pi.swap(next);
        }
        double diff = 0.0;
        for (unsigned k = 0; k < count; ++k) diff += std::abs(pi[k] - before[k]);
        if (diff < tol) return pi;
    }
    throw std::runtime_error("power iteration did not converge");
}

inline std::vector<double> enumerate_profile_prior(const ProfileTable& t, int m, int n) {
    return sweep_stationary(m, n, [&](const std::vector<int>& x, int j, unsigned c) {
        return profile_column_prob(t, x, m, n, j, c);
    });
}

// Posterior: column kernels proportional to the prior column law times the likelihood.
inline std::vector<double> enumerate_profile_posterior(const ProfileTable& t, int m, int n,
                                                       const std::vector<double>& log_lik) {
    double top = -INFINITY;
    for (double v : log_lik) top = std::max(top, v);
    return sweep_stationary(m, n, [&](const std::vector<int>& x, int j, unsigned c) {
        unsigned k = 0;
        for (int q = 0; q < m * n; ++q) k |= static_cast<unsigned>(x[q]) << q;
        return profile_column_prob(t, x, m, n, j, c) * std::exp(log_lik[k] - top);
    });
}

// Normalized pointwise product of a prior table and exp(log_lik).
inline std::vector<double> pointwise_posterior(const std::vector<double>& prior, const std::vector<double>& log_lik) {
    double top = -INFINITY;
    for (double v : log_lik) top = std::max(top, v);
    std::vector<double> p(prior.size());
    double z = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) z += (p[k] = prior[k] * std::exp(log_lik[k] - top));
    for (double& v : p) v /= z;
    return p;
}

inline std::vector<double> node_marginals(const std::vector<double>& table, int nodes) {
    std::vector<double> out(nodes, 0.0);
    for (unsigned k = 0; k < table.size(); ++k)
        for (int q = 0; q < nodes; ++q) {
            if ((k >> q) & 1u) out[q] += table[k];
        }
    return out;
}

}  // namespace oracle
