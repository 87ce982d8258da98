#pragma once
// Glue between library types and the oracle's plain representations.

#include <cmath>
#include <cstdint>
#include <vector>

#include "lfc/forward.hpp"
#include "lfc/lattice.hpp"
#include "lfc/mesh_prior.hpp"
#include "lfc/profile_prior.hpp"
#include "oracles/gaussian.hpp"
#include "oracles/mesh.hpp"
#include "oracles/profile.hpp"
#include "oracles/tables.hpp"

namespace support {

inline std::vector<int> to_bits(const lfc::LfcField& f) {
    std::vector<int> x(f.size());
    for (std::size_t k = 0; k < f.size(); ++k) x[k] = f.raw(k);
    return x;
}

inline lfc::LfcField field_of(unsigned k, const lfc::GridDims& dims) {
    lfc::LfcField f(dims);
    for (std::size_t q = 0; q < dims.size(); ++q) f.set_raw(q, (k >> q) & 1u);
    return f;
}

inline unsigned code_of(const lfc::LfcField& f) {
    unsigned k = 0;
    for (std::size_t q = 0; q < f.size(); ++q) k |= static_cast<unsigned>(f.raw(q)) << q;
    return k;
}

inline oracle::ProfileTable profile_table(const lfc::ProfileTransitionTable& t) {
    oracle::ProfileTable o{};
    for (int a = 0; a < 2; ++a)
        for (int l = 0; l < 2; ++l)
            for (int r = 0; r < 2; ++r) o.p1[a][l][r] = t.p1[a][l][r];
    return o;
}

// Exponential correlation written out from its definition.
inline auto exp_corr(double range, int support) {
    return [range, support](int lag) {
        lag = lag < 0 ? -lag : lag;
        if (lag == 0) return 1.0;
        if (range <= 0.0 || (support > 0 && lag > support)) return 0.0;
        return std::exp(-lag / range);
    };
}

inline oracle::Model oracle_model(const lfc::ForwardModel& fm, const lfc::GridDims& dims) {
    oracle::Model md;
    md.m = dims.rows;
    md.n = dims.cols;
    for (int c = 0; c < 2; ++c) {
        md.mu[0][c] = fm.stats.mu0(c);
        md.mu[1][c] = fm.stats.mu1(c);
        for (int e = 0; e < 2; ++e) {
            md.sigma[0][c][e] = fm.stats.sigma0(c, e);
            md.sigma[1][c][e] = fm.stats.sigma1(c, e);
            md.aki[c][e] = fm.aki.coeffs(c, e);
        }
    }
    md.corr_v = exp_corr(fm.stats.corr_v.range, fm.stats.corr_v.support);
    md.corr_h = exp_corr(fm.stats.corr_h.range, fm.stats.corr_h.support);
    md.noise_corr_v = exp_corr(fm.noise.corr_v.range, fm.noise.corr_v.support);
    md.wavelet[0] = fm.near.samples;
    md.wavelet[1] = fm.far.samples;
    md.center[0] = fm.near.center;
    md.center[1] = fm.far.center;
    md.sd[0] = fm.noise.sd_near;
    md.sd[1] = fm.noise.sd_far;
    return md;
}

inline std::vector<double> cube_values(const lfc::SeismicCube& d) { return d.values; }

// Default statistics with short wavelets that fit tiny lattices (length <= 2m-1).
inline lfc::ForwardModel small_model(int rows, double sd = 0.02) {
    lfc::ForwardModel fm = lfc::default_forward_model();
    const int len = std::max(1, std::min(2 * rows - 1, 7) | 1);
    fm.near = lfc::ricker(0.2, len);
    fm.far = lfc::ricker(0.16, len);
    fm.noise.sd_near = sd;
    fm.noise.sd_far = sd;
    return fm;
}

// Log-likelihood of every configuration under the dense oracle.
inline std::vector<double> enumerate_log_lik(const lfc::ForwardModel& fm, const lfc::GridDims& dims,
                                             const lfc::SeismicCube& d) {
    const oracle::Model md = oracle_model(fm, dims);
    const int nodes = static_cast<int>(dims.size());
    std::vector<double> ll(1u << nodes);
    for (unsigned k = 0; k < ll.size(); ++k) ll[k] = oracle::dense_log_likelihood(md, oracle::bits_of(k, nodes), d.values);
    return ll;
}

// Monte Carlo standard error of a mean by batch means (falls back to iid).
inline double mc_se(const std::vector<double>& x) {
    const std::size_t n = x.size();
    double mu = 0.0;
    for (double v : x) mu += v;
    mu /= static_cast<double>(n);
    const std::size_t b = static_cast<std::size_t>(std::sqrt(static_cast<double>(n)));
    const std::size_t nb = b ? n / b : 0;
    if (nb >= 10) {
        double v = 0.0;
        for (std::size_t k = 0; k < nb; ++k) {
            double s = 0.0;
            for (std::size_t t = k * b; t < (k + 1) * b; ++t) s += x[t];
            s /= static_cast<double>(b);
            v += (s - mu) * (s - mu);
        }
        v /= static_cast<double>(nb - 1);
        return std::sqrt(v / static_cast<double>(nb));
    }
    double v = 0.0;
    for (double t : x) v += (t - mu) * (t - mu);
    return std::sqrt(v / static_cast<double>(n - 1) / static_cast<double>(n));
}

}  // namespace support
