#pragma once
// Linearised convolutional forward model.
//
// Elastic parameters m_ij = (rho*vp, vp/vs) are Gaussian given the class
// field, with class means/covariances and a separable correlation
// corr_v(|di|) * corr_h(|dj|). Within each column the noiseless data are
// W A D m: vertical contrasts (D), a 2x2 weak-contrast reflectivity block
// per node (A), and "same"-mode convolution with the near and far wavelets
// (W). Gaussian noise is added per offset stack.
//
// Column vectors are stacked node by node, index 2*(i-1) + c with c = 0
// (near / rho*vp) and c = 1 (far / vp/vs).

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "lfc/error.hpp"
#include "lfc/lattice.hpp"
#include "lfc/rng.hpp"

namespace lfc {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

// Exponential correlation exp(-lag/range); range <= 0 means white. A
// positive support truncates to zero beyond that many lags.
struct ExpCorrelation {
    double range = 0.0;
    int support = 0;

    double operator()(int lag) const noexcept {
        lag = std::abs(lag);
        if (lag == 0) return 1.0;
        if (range <= 0.0) return 0.0;
        if (support > 0 && lag > support) return 0.0;
        return std::exp(-lag / range);
    }

    Eigen::MatrixXd matrix(int size) const {
        Eigen::MatrixXd c(size, size);
        for (int a = 0; a < size; ++a)
            for (int b = 0; b < size; ++b) c(a, b) = (*this)(a - b);
        return c;
    }
};

struct ElasticClassStats {
    Vec2 mu0{6960.0, 2.25};  // shale
    Vec2 mu1{5670.0, 1.80};  // oil sand
    Mat2 sigma0 = Vec2(180.0 * 180.0, 0.06 * 0.06).asDiagonal();
    Mat2 sigma1 = Vec2(180.0 * 180.0, 0.06 * 0.06).asDiagonal();
    ExpCorrelation corr_v{3.0, 12};
    ExpCorrelation corr_h{10.0, 0};

    const Vec2& mean(std::uint8_t cls) const noexcept { return cls ? mu1 : mu0; }
    const Mat2& cov(std::uint8_t cls) const noexcept { return cls ? sigma1 : sigma0; }
    bool class_independent() const noexcept { return sigma0 == sigma1; }
};

struct Wavelet {
    std::vector<double> samples{1.0};
    int center = 0;

    int length() const noexcept { return static_cast<int>(samples.size()); }
    // Tap for output row i and input row k ("same" mode).
    double tap(int i, int k) const noexcept {
        const int idx = center + i - k;
        return (idx >= 0 && idx < length()) ? samples[idx] : 0.0;
    }
    void validate() const {
        if (samples.empty()) throw ConfigError("wavelet has no samples");
        if (center < 0 || center >= length()) throw ConfigError("wavelet center outside sample range");
        for (double s : samples) {
            if (!std::isfinite(s)) throw ConfigError("wavelet sample is not finite");
        }
    }
};

// Rows map a contrast (d(rho*vp), d(vp/vs)) to the (near, far) reflection coefficients.
struct AkiCoeffBlock {
    Mat2 coeffs = Mat2::Identity();
};

struct NoiseModel {
    double sd_near = 0.02;
    double sd_far = 0.02;
    ExpCorrelation corr_v{0.0, 0};  // white by default
};

struct ForwardModel {
    ElasticClassStats stats;
    AkiCoeffBlock aki;
    Wavelet near;
    Wavelet far;
    NoiseModel noise;

    void validate() const {
        for (const Mat2* s : {&stats.sigma0, &stats.sigma1}) {
            if ((*s - s->transpose()).cwiseAbs().maxCoeff() > 1e-12 * s->cwiseAbs().maxCoeff())
                throw ConfigError("class covariance is not symmetric");
            Eigen::SelfAdjointEigenSolver<Mat2> es(*s);
            if (es.eigenvalues().minCoeff() < 0.0) throw ConfigError("class covariance is not positive semi-definite");
        }
        if (!(stats.mu0.allFinite() && stats.mu1.allFinite())) throw ConfigError("class means must be finite");
        if (!aki.coeffs.allFinite()) throw ConfigError("reflectivity coefficients must be finite");
        if (!(noise.sd_near >= 0.0 && noise.sd_far >= 0.0)) throw ConfigError("noise standard deviations must be >= 0");
        near.validate();
        far.validate();
    }
};

// Field of elastic 2-vectors, row-major nodes.
struct ElasticField {
    GridDims dims;
    std::vector<double> values;  // 2 per node

    ElasticField() = default;
    explicit ElasticField(GridDims d) : dims(d), values(d.size() * 2, 0.0) {}
    double& at(int i, int j, int c) noexcept { return values[2 * linear_index(dims, {i, j}) + c]; }
    double at(int i, int j, int c) const noexcept { return values[2 * linear_index(dims, {i, j}) + c]; }
    Eigen::VectorXd column(int j) const {
        Eigen::VectorXd v(2 * dims.rows);
        for (int i = 1; i <= dims.rows; ++i)
            for (int c = 0; c < 2; ++c) v(2 * (i - 1) + c) = at(i, j, c);
        return v;
    }
};

// Near/far amplitudes per node, row-major.
struct SeismicCube {
    GridDims dims;
    std::vector<double> values;  // 2 per node: near, far

    SeismicCube() = default;
    explicit SeismicCube(GridDims d) : dims(d), values(d.size() * 2, 0.0) {}
    double& at(int i, int j, int c) noexcept { return values[2 * linear_index(dims, {i, j}) + c]; }
    double at(int i, int j, int c) const noexcept { return values[2 * linear_index(dims, {i, j}) + c]; }
    Eigen::VectorXd column(int j) const {
        Eigen::VectorXd v(2 * dims.rows);
        for (int i = 1; i <= dims.rows; ++i)
            for (int c = 0; c < 2; ++c) v(2 * (i - 1) + c) = at(i, j, c);
        return v;
    }
    void set_column(int j, const Eigen::VectorXd& v) {
        for (int i = 1; i <= dims.rows; ++i)
            for (int c = 0; c < 2; ++c) at(i, j, c) = v(2 * (i - 1) + c);
    }
};

// ---------------------------------------------------------------------------
// Wavelets

// Ricker wavelet with peak frequency in cycles per sample, unit peak.
inline Wavelet ricker(double peak_frequency, int length) {
    if (length < 1 || length % 2 == 0) throw ConfigError("ricker length must be a positive odd integer");
    if (!(peak_frequency > 0.0 && peak_frequency < 0.5)) throw ConfigError("ricker peak frequency must be in (0, 0.5)");
    Wavelet w;
    w.center = (length - 1) / 2;
    w.samples.resize(length);
    const double a = std::numbers::pi * peak_frequency;
    for (int k = 0; k < length; ++k) {
        const double t = k - w.center;
        const double x = a * a * t * t;
        w.samples[k] = (1.0 - 2.0 * x) * std::exp(-x);
    }
    return w;
}

inline Wavelet delta_wavelet() { return Wavelet{{1.0}, 0}; }

// Wavelet file: "length center" then one sample per line.
inline Wavelet read_wavelet(std::istream& is) {
    int len = 0, center = -1;
    if (!(is >> len >> center) || len < 1) throw ConfigError("wavelet file: bad header");
    Wavelet w;
    w.center = center;
    w.samples.resize(len);
    for (auto& s : w.samples) {
        if (!(is >> s)) throw ConfigError("wavelet file: truncated");
    }
    w.validate();
    return w;
}

inline void write_wavelet(std::ostream& os, const Wavelet& w) {
    os << w.length() << ' ' << w.center << '\n' << std::setprecision(17);
    for (double s : w.samples) os << s << '\n';
}

// ---------------------------------------------------------------------------
// Defaults

// Weak-contrast two-term blocks: near (0.5/mean(rho*vp), -0.1), far (0.5/mean(rho*vp), -0.4).
inline AkiCoeffBlock default_aki(const ElasticClassStats& s) {
    const double a = 0.5 / (0.5 * (s.mu0(0) + s.mu1(0)));
    AkiCoeffBlock b;
    b.coeffs << a, -0.1, a, -0.4;
    return b;
}

inline ForwardModel default_forward_model() {
    ForwardModel fm;
    fm.aki = default_aki(fm.stats);
    fm.near = ricker(0.12, 25);
    fm.far = ricker(0.10, 25);
    return fm;
}

// ---------------------------------------------------------------------------
// Column operators (2m x 2m)

// Vertical first differences; row 1 keeps its value (zero predecessor).
inline Eigen::MatrixXd contrast_operator(int m) {
    if (m < 1) throw DomainError("contrast operator needs m >= 1");
    Eigen::MatrixXd d = Eigen::MatrixXd::Identity(2 * m, 2 * m);
    for (int i = 1; i < m; ++i)
        for (int c = 0; c < 2; ++c) d(2 * i + c, 2 * (i - 1) + c) = -1.0;
    return d;
}

inline Eigen::MatrixXd aki_operator(const AkiCoeffBlock& aki, int m) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2 * m, 2 * m);
    for (int i = 0; i < m; ++i) a.block<2, 2>(2 * i, 2 * i) = aki.coeffs;
    return a;
}

inline Eigen::MatrixXd convolution_operator(const Wavelet& near, const Wavelet& far, int m) {
    for (const Wavelet* w : {&near, &far}) {
        w->validate();
        if (w->length() > 2 * m - 1) {
            throw ConfigError("wavelet of length " + std::to_string(w->length()) + " is longer than 2m-1 = " +
                              std::to_string(2 * m - 1));
        }
    }
    Eigen::MatrixXd wm = Eigen::MatrixXd::Zero(2 * m, 2 * m);
    for (int i = 0; i < m; ++i)
        for (int k = 0; k < m; ++k) {
            wm(2 * i, 2 * k) = near.tap(i, k);
            wm(2 * i + 1, 2 * k + 1) = far.tap(i, k);
        }
    return wm;
}

// Composite column map T = W A D.
inline Eigen::MatrixXd column_operator(const ForwardModel& fm, int m) {
    return convolution_operator(fm.near, fm.far, m) * aki_operator(fm.aki, m) * contrast_operator(m);
}

// Per-column noise covariance: corr_v(|di|) * diag(sd_near^2, sd_far^2).
inline Eigen::MatrixXd noise_column_cov(const NoiseModel& nm, int m) {
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(2 * m, 2 * m);
    const double var[2] = {nm.sd_near * nm.sd_near, nm.sd_far * nm.sd_far};
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) {
            const double r = nm.corr_v(a - b);
            for (int c = 0; c < 2; ++c) s(2 * a + c, 2 * b + c) = r * var[c];
        }
    return s;
}

// Symmetric square root of a PSD 2x2 matrix.
inline Mat2 sqrt_psd(const Mat2& s) {
    Eigen::SelfAdjointEigenSolver<Mat2> es(s);
    const Vec2 ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

// Lower factor L with L L^T = C, allowing semi-definite C (white/degenerate cases).
inline Eigen::MatrixXd psd_factor(const Eigen::MatrixXd& c, const char* what) {
    Eigen::LLT<Eigen::MatrixXd> llt(c);
    if (llt.info() == Eigen::Success) return llt.matrixL();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c);
    if (es.eigenvalues().minCoeff() < -1e-10 * std::max(1.0, es.eigenvalues().maxCoeff())) {
        throw NumericError(std::string(what) + " is not positive semi-definite (min eigenvalue " +
                           std::to_string(es.eigenvalues().minCoeff()) + ")");
    }
    return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

// ---------------------------------------------------------------------------
// Synthesis

inline Eigen::VectorXd apply_contrast(const Eigen::VectorXd& col) { return contrast_operator(static_cast<int>(col.size() / 2)) * col; }

inline SeismicCube synthesize_mean(const ForwardModel& fm, const ElasticField& mfield) {
    const int m = mfield.dims.rows;
    const Eigen::MatrixXd t = column_operator(fm, m);
    SeismicCube out(mfield.dims);
    for (int j = 1; j <= mfield.dims.cols; ++j) out.set_column(j, t * mfield.column(j));
    return out;
}

// Class-mean elastic field for a given class field.
inline ElasticField class_mean_field(const ForwardModel& fm, const LfcField& kappa) {
    ElasticField mf(kappa.dims());
    for (int i = 1; i <= kappa.rows(); ++i)
        for (int j = 1; j <= kappa.cols(); ++j)
            for (int c = 0; c < 2; ++c) mf.at(i, j, c) = fm.stats.mean(kappa(i, j))(c);
    return mf;
}

// m | kappa. Column j draws its standard normals from stream (seed, 1, j).
inline ElasticField sample_elastic(const ForwardModel& fm, const LfcField& kappa, std::uint64_t seed) {
    const GridDims dims = kappa.dims();
    const int m = dims.rows, n = dims.cols;
    const Eigen::MatrixXd lv = psd_factor(fm.stats.corr_v.matrix(m), "vertical correlation");
    const Eigen::MatrixXd lh = psd_factor(fm.stats.corr_h.matrix(n), "horizontal correlation");
    Eigen::MatrixXd e0(m, n), e1(m, n);
    for (int j = 0; j < n; ++j) {
        Rng rng(derive_seed(seed, 1, static_cast<std::uint64_t>(j)));
        std::normal_distribution<double> normal(0.0, 1.0);
        for (int i = 0; i < m; ++i) {
            e0(i, j) = normal(rng);
            e1(i, j) = normal(rng);
        }
    }
    const Eigen::MatrixXd z0 = lv * e0 * lh.transpose();
    const Eigen::MatrixXd z1 = lv * e1 * lh.transpose();
    const Mat2 root[2] = {sqrt_psd(fm.stats.sigma0), sqrt_psd(fm.stats.sigma1)};
    ElasticField out(dims);
    for (int i = 1; i <= m; ++i)
        for (int j = 1; j <= n; ++j) {
            const std::uint8_t k = kappa(i, j);
            const Vec2 v = fm.stats.mean(k) + root[k] * Vec2(z0(i - 1, j - 1), z1(i - 1, j - 1));
            out.at(i, j, 0) = v(0);
            out.at(i, j, 1) = v(1);
        }
    return out;
}

// d = W A D m + noise, noise for column j from stream (seed, 2, j).
inline SeismicCube add_noise(const NoiseModel& nm, SeismicCube d, std::uint64_t seed) {
    const int m = d.dims.rows;
    const Eigen::MatrixXd l = psd_factor(noise_column_cov(nm, m), "noise covariance");
    for (int j = 1; j <= d.dims.cols; ++j) {
        Rng rng(derive_seed(seed, 2, static_cast<std::uint64_t>(j - 1)));
        std::normal_distribution<double> normal(0.0, 1.0);
        Eigen::VectorXd z(2 * m);
        for (int k = 0; k < 2 * m; ++k) z(k) = normal(rng);
        d.set_column(j, d.column(j) + l * z);
    }
    return d;
}

inline SeismicCube synthesize_data(const ForwardModel& fm, const LfcField& kappa, std::uint64_t seed,
                                   ElasticField* elastic_out = nullptr) {
    ElasticField mf = sample_elastic(fm, kappa, seed);
    SeismicCube d = add_noise(fm.noise, synthesize_mean(fm, mf), seed);
    if (elastic_out) *elastic_out = std::move(mf);
    return d;
}

// ---------------------------------------------------------------------------
// Files

// Seismic cube: "m n" then m*n lines "near far" in row-major node order.
inline void write_cube(std::ostream& os, const SeismicCube& d) {
    os << d.dims.rows << ' ' << d.dims.cols << '\n' << std::setprecision(17);
    for (std::size_t k = 0; k < d.dims.size(); ++k) os << d.values[2 * k] << ' ' << d.values[2 * k + 1] << '\n';
}

inline SeismicCube read_cube(std::istream& is) {
    int m = 0, n = 0;
    if (!(is >> m >> n) || m < 1 || n < 1) throw ConfigError("cube file: bad header");
    SeismicCube d(GridDims(m, n));
    for (auto& v : d.values) {
        if (!(is >> v)) throw ConfigError("cube file: truncated body");
        if (!std::isfinite(v)) throw ConfigError("cube file: non-finite value");
    }
    return d;
}

// Elastic field uses the same layout as the cube.
inline void write_elastic(std::ostream& os, const ElasticField& f) {
    os << f.dims.rows << ' ' << f.dims.cols << '\n' << std::setprecision(17);
    for (std::size_t k = 0; k < f.dims.size(); ++k) os << f.values[2 * k] << ' ' << f.values[2 * k + 1] << '\n';
}

}  // namespace lfc
