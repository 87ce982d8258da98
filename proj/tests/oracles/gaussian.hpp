#pragma once
// Dense Gaussian reference: hand-written Cholesky, log-density, and the full
// mean/covariance of d | kappa assembled entry by entry from the model
// definitions in row-major node order (index 2*node + component).

#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace oracle {

using Matrix = std::vector<std::vector<double>>;

inline Matrix zeros(std::size_t r, std::size_t c) { return Matrix(r, std::vector<double>(c, 0.0)); }

// Lower-triangular L with A = L L^T.
inline Matrix cholesky(const Matrix& a) {
    const std::size_t n = a.size();
    Matrix l = zeros(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = a[i][j];
            for (std::size_t k = 0; k < j; ++k) s -= l[i][k] * l[j][k];
            if (i == j) {
                if (!(s > 0.0)) throw std::domain_error("matrix is not positive definite");
                l[i][i] = std::sqrt(s);
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    return l;
}

inline double dense_gaussian_logpdf(const std::vector<double>& mean, const Matrix& cov, const std::vector<double>& x) {
    const std::size_t n = mean.size();
    const Matrix l = cholesky(cov);
    std::vector<double> z(n);
    for (std::size_t i = 0; i < n; ++i) {  // forward substitution
        double s = x[i] - mean[i];
        for (std::size_t k = 0; k < i; ++k) s -= l[i][k] * z[k];
        z[i] = s / l[i][i];
    }
    double quad = 0.0, logdet = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        quad += z[i] * z[i];
        logdet += 2.0 * std::log(l[i][i]);
    }
    return -0.5 * (quad + logdet + static_cast<double>(n) * std::log(2.0 * std::numbers::pi));
}

struct Model {
    int m = 1, n = 1;
    double mu[2][2]{};        // mu[class][component]
    double sigma[2][2][2]{};  // sigma[class] covariance
    std::function<double(int)> corr_v, corr_h, noise_corr_v;
    double aki[2][2]{};  // rows near, far
    std::vector<double> wavelet[2];
    int center[2]{};
    double sd[2]{};
};

// Symmetric square root of a 2x2 PSD matrix.
inline void sqrt2(const double a[2][2], double out[2][2]) {
    const double det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    const double s = std::sqrt(std::max(det, 0.0));
    const double t = std::sqrt(a[0][0] + a[1][1] + 2.0 * s);
    if (t == 0.0) {
        out[0][0] = out[0][1] = out[1][0] = out[1][1] = 0.0;
        return;
    }
    out[0][0] = (a[0][0] + s) / t;
    out[1][1] = (a[1][1] + s) / t;
    out[0][1] = a[0][1] / t;
    out[1][0] = a[1][0] / t;
}

inline double tap(const Model& md, int comp, int offset) {
    const int k = md.center[comp] + offset;
    return (k >= 0 && k < static_cast<int>(md.wavelet[comp].size())) ? md.wavelet[comp][k] : 0.0;
}

// Coefficient of m(k, c) in d(i, c') within one column, rows 1-based.
inline double forward_coef(const Model& md, int i, int cp, int k, int c) {
    double g = tap(md, cp, i - k);                // contrast at row k
    if (k + 1 <= md.m) g -= tap(md, cp, i - k - 1);  // predecessor of row k + 1
    return g * md.aki[cp][c];
}

struct Moments {
    std::vector<double> mean;
    Matrix cov;
};

inline Moments dense_moments(const Model& md, const std::vector<int>& x) {
    const int m = md.m, n = md.n, dim = 2 * m * n;
    auto idx = [&](int i, int j, int c) { return 2 * ((i - 1) * n + (j - 1)) + c; };
    // elastic mean and covariance
    std::vector<double> mu_m(dim);
    Matrix cov_m = zeros(dim, dim);
    double root[2][2][2];
    sqrt2(md.sigma[0], root[0]);
    sqrt2(md.sigma[1], root[1]);
    for (int i = 1; i <= m; ++i)
        for (int j = 1; j <= n; ++j)
            for (int c = 0; c < 2; ++c) mu_m[idx(i, j, c)] = md.mu[x[(i - 1) * n + (j - 1)]][c];
    for (int i = 1; i <= m; ++i)
        for (int j = 1; j <= n; ++j)
            for (int a = 1; a <= m; ++a)
                for (int b = 1; b <= n; ++b) {
                    const double r = md.corr_v(i - a) * md.corr_h(j - b);
                    if (r == 0.0) continue;
                    const auto& sp = root[x[(i - 1) * n + (j - 1)]];
                    const auto& sq = root[x[(a - 1) * n + (b - 1)]];
                    for (int c = 0; c < 2; ++c)
                        for (int e = 0; e < 2; ++e) {
                            double s = 0.0;
                            for (int k = 0; k < 2; ++k) s += sp[c][k] * sq[e][k];
                            cov_m[idx(i, j, c)][idx(a, b, e)] = r * s;
                        }
                }
    // forward map, column-local
    Matrix g = zeros(dim, dim);
    for (int j = 1; j <= n; ++j)
        for (int i = 1; i <= m; ++i)
            for (int cp = 0; cp < 2; ++cp)
                for (int k = 1; k <= m; ++k)
                    for (int c = 0; c < 2; ++c) g[idx(i, j, cp)][idx(k, j, c)] = forward_coef(md, i, cp, k, c);
    Moments out;
    out.mean.assign(dim, 0.0);
    for (int p = 0; p < dim; ++p)
        for (int q = 0; q < dim; ++q) out.mean[p] += g[p][q] * mu_m[q];
    Matrix gc = zeros(dim, dim);
    for (int p = 0; p < dim; ++p)
        for (int q = 0; q < dim; ++q) {
            if (cov_m[p][q] == 0.0) continue;
            for (int r = 0; r < dim; ++r) gc[r][q] += g[r][p] * cov_m[p][q];
        }
    out.cov = zeros(dim, dim);
    for (int p = 0; p < dim; ++p)
        for (int q = 0; q < dim; ++q) {
            double s = 0.0;
            for (int r = 0; r < dim; ++r) s += gc[p][r] * g[q][r];
            out.cov[p][q] = s;
        }
    for (int j = 1; j <= n; ++j)
        for (int i = 1; i <= m; ++i)
            for (int a = 1; a <= m; ++a)
                for (int c = 0; c < 2; ++c) out.cov[idx(i, j, c)][idx(a, j, c)] += md.noise_corr_v(i - a) * md.sd[c] * md.sd[c];
    return out;
}

inline double dense_log_likelihood(const Model& md, const std::vector<int>& x, const std::vector<double>& d) {
    const Moments mo = dense_moments(md, x);
    return dense_gaussian_logpdf(mo.mean, mo.cov, d);
}

// "Same"-length convolution centred at `center`.
inline std::vector<double> direct_convolution(const std::vector<double>& trace, const std::vector<double>& w,
                                              int center) {
    const int len = static_cast<int>(trace.size());
    std::vector<double> out(len, 0.0);
    for (int i = 0; i < len; ++i)
        for (int k = 0; k < len; ++k) {
            const int t = center + i - k;
            if (t >= 0 && t < static_cast<int>(w.size())) out[i] += w[t] * trace[k];
        }
    return out;
}

}  // namespace oracle
