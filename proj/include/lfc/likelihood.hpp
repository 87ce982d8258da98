#pragma once
// Gaussian likelihood p(d | kappa) of the linearised forward model.
//
// With class-independent elastic covariance, Cov[d] does not depend on the
// class field:
//
//   Cov[d] = C_h (x) (T M T^T) + I_n (x) S,    M = C_v (x) Sigma,
//
// with columns as the outer Kronecker factor. Rotating columns with the
// eigenvectors U of C_h gives n independent blocks K_k = l_k T M T^T + S,
// so one evaluation costs O(n m^2) after an O(n m^3 + n^3) build.
//
// E[d | kappa] is linear in the class indicators: column j has mean
// b0 + G x_j, where column i of G is the data response to switching node i
// from shale to sand. For a column update the log-likelihood is therefore an
// exact quadratic pseudo-Boolean function of the column indicators.

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <string>
#include <vector>

#include "lfc/error.hpp"
#include "lfc/forward.hpp"
#include "lfc/lattice.hpp"

namespace lfc {

inline constexpr double kLog2Pi = 1.8378770664093454836;

// log-likelihood(x) = const + sum_i h_i x_i + sum_{i<k} Q_ik x_i x_k for the
// indicators x of one column, everything else fixed.
struct ColumnCoupling {
    int column = 0;        // 1-based
    Eigen::VectorXd h;     // unary terms
    Eigen::MatrixXd Q;     // symmetric, zero diagonal

    double evaluate(const std::vector<std::uint8_t>& x) const {
        double s = 0.0;
        const int m = static_cast<int>(h.size());
        for (int i = 0; i < m; ++i) {
            if (!x[i]) continue;
            s += h(i);
            for (int k = i + 1; k < m; ++k) {
                if (x[k]) s += Q(i, k);
            }
        }
        return s;
    }
};

// Largest |i-k| with a pairwise term above rel_tol * max|Q|.
inline int coupling_range(const Eigen::MatrixXd& q, double rel_tol = 1e-12) {
    const double scale = q.cwiseAbs().maxCoeff();
    if (scale == 0.0) return 0;
    int r = 0;
    for (int i = 0; i < q.rows(); ++i)
        for (int k = i + 1; k < q.cols(); ++k) {
            if (std::abs(q(i, k)) > rel_tol * scale) r = std::max(r, k - i);
        }
    return r;
}

class LikelihoodEngine;

// Residual bookkeeping for one chain.
struct ResidualState {
    LfcField kappa;
    Eigen::MatrixXd resid;    // 2m x n, d - E[d|kappa]
    Eigen::MatrixXd white;    // 2m x n, column k = K_k^{-1} (resid U)_k
    double quad = 0.0;        // resid^T Cov^{-1} resid
    double log_lik = 0.0;
};

class LikelihoodEngine {
public:
    LikelihoodEngine(const ForwardModel& fm, const GridDims& dims) : fm_(fm), dims_(dims) {
        fm_.validate();
        if (!fm_.stats.class_independent()) {
            throw UsageError("structured likelihood requires sigma0 == sigma1; use DenseLikelihood for class-dependent covariance");
        }
        const int m = dims.rows, n = dims.cols, mm = 2 * m;
        t_ = column_operator(fm_, m);
        Eigen::MatrixXd mcov(mm, mm);
        const Eigen::MatrixXd cv = fm_.stats.corr_v.matrix(m);
        for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b) mcov.block<2, 2>(2 * a, 2 * b) = cv(a, b) * fm_.stats.sigma0;
        signal_ = t_ * mcov * t_.transpose();
        noise_ = noise_column_cov(fm_.noise, m);

        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(fm_.stats.corr_h.matrix(n));
        if (es.info() != Eigen::Success) throw NumericError("horizontal correlation eigendecomposition failed");
        eig_h_ = es.eigenvalues();
        u_ = es.eigenvectors();
        if (eig_h_.minCoeff() < -1e-10) {
            throw NumericError("horizontal correlation is not positive semi-definite (eigenvalue " +
                               std::to_string(eig_h_.minCoeff()) + ")");
        }
        eig_h_ = eig_h_.cwiseMax(0.0);

        const Vec2 dmu = fm_.stats.mu1 - fm_.stats.mu0;
        g_ = Eigen::MatrixXd::Zero(mm, m);
        Eigen::VectorXd base(mm);
        for (int i = 0; i < m; ++i) {
            g_.col(i) = t_.middleCols(2 * i, 2) * dmu;
            base.segment<2>(2 * i) = fm_.stats.mu0;
        }
        b0_ = t_ * base;

        kinv_.resize(n);
        kinv_g_.resize(n);
        logdet_ = 0.0;
        for (int k = 0; k < n; ++k) {
            const Eigen::MatrixXd kk = eig_h_(k) * signal_ + noise_;
            Eigen::LLT<Eigen::MatrixXd> llt(kk);
            if (llt.info() != Eigen::Success) {
                throw NumericError("covariance block " + std::to_string(k) + " (horizontal eigenvalue " +
                                   std::to_string(eig_h_(k)) + ") is not positive definite");
            }
            const Eigen::MatrixXd l = llt.matrixL();
            logdet_ += 2.0 * l.diagonal().array().log().sum();
            kinv_[k] = llt.solve(Eigen::MatrixXd::Identity(mm, mm));
            kinv_g_[k] = kinv_[k] * g_;
        }
        pjj_.resize(n);
        hjj_.resize(n);
        for (int j = 0; j < n; ++j) {
            Eigen::MatrixXd p = Eigen::MatrixXd::Zero(mm, mm);
            for (int k = 0; k < n; ++k) p.noalias() += (u_(j, k) * u_(j, k)) * kinv_[k];
            pjj_[j] = p;
            hjj_[j] = g_.transpose() * p * g_;
        }
    }

    const GridDims& dims() const noexcept { return dims_; }
    const ForwardModel& forward_model() const noexcept { return fm_; }
    const Eigen::MatrixXd& column_operator_matrix() const noexcept { return t_; }
    const Eigen::MatrixXd& flip_response() const noexcept { return g_; }
    double log_det() const noexcept { return logdet_; }

    // E[d | kappa] for column j.
    Eigen::VectorXd column_mean(const LfcField& kappa, int j) const {
        Eigen::VectorXd mu = b0_;
        for (int i = 1; i <= dims_.rows; ++i) {
            if (kappa(i, j)) mu += g_.col(i - 1);
        }
        return mu;
    }

    SeismicCube mean(const LfcField& kappa) const {
        SeismicCube out(dims_);
        for (int j = 1; j <= dims_.cols; ++j) out.set_column(j, column_mean(kappa, j));
        return out;
    }

    // Dense Cov[d] in row-major node order (node, component); for tests and dumps.
    Eigen::MatrixXd dense_covariance() const {
        const int m = dims_.rows, n = dims_.cols;
        const Eigen::MatrixXd ch = fm_.stats.corr_h.matrix(n);
        Eigen::MatrixXd c = Eigen::MatrixXd::Zero(2 * m * n, 2 * m * n);
        for (int j = 0; j < n; ++j)
            for (int l = 0; l < n; ++l) {
                Eigen::MatrixXd blk = ch(j, l) * signal_;
                if (j == l) blk += noise_;
                for (int i = 0; i < m; ++i)
                    for (int k = 0; k < m; ++k)
                        c.block<2, 2>(2 * (i * n + j), 2 * (k * n + l)) = blk.block<2, 2>(2 * i, 2 * k);
            }
        return c;
    }

    ResidualState init_state(const LfcField& kappa, const SeismicCube& d) const {
        check_dims(kappa.dims(), d.dims);
        const int n = dims_.cols;
        ResidualState st;
        st.kappa = kappa;
        st.resid.resize(2 * dims_.rows, n);
        for (int j = 1; j <= n; ++j) st.resid.col(j - 1) = d.column(j) - column_mean(kappa, j);
        const Eigen::MatrixXd rot = st.resid * u_;
        st.white.resize(rot.rows(), n);
        st.quad = 0.0;
        for (int k = 0; k < n; ++k) {
            st.white.col(k) = kinv_[k] * rot.col(k);
            st.quad += rot.col(k).dot(st.white.col(k));
        }
        st.log_lik = -0.5 * (st.quad + logdet_ + static_cast<double>(2 * dims_.size()) * kLog2Pi);
        return st;
    }

    double log_likelihood(const LfcField& kappa, const SeismicCube& d) const { return init_state(kappa, d).log_lik; }

    // Exact change of log-likelihood when column j takes `new_col`.
    double delta(const ResidualState& st, int j, const std::vector<std::uint8_t>& new_col) const {
        const auto changed = changed_rows(st, j, new_col);
        if (changed.empty()) return 0.0;
        const Eigen::VectorXd delta_r = -sparse_times(g_, changed);
        const Eigen::VectorXd z = st.white * u_.row(j - 1).transpose();
        return -0.5 * (2.0 * delta_r.dot(z) + delta_r.dot(pjj_[j - 1] * delta_r));
    }

    // Moves the state to the new column values.
    void apply(ResidualState& st, int j, const std::vector<std::uint8_t>& new_col) const {
        const auto changed = changed_rows(st, j, new_col);
        if (changed.empty()) return;
        const double dl = delta(st, j, new_col);
        st.resid.col(j - 1) -= sparse_times(g_, changed);
        for (int k = 0; k < dims_.cols; ++k) st.white.col(k).noalias() -= u_(j - 1, k) * sparse_times(kinv_g_[k], changed);
        st.log_lik += dl;
        st.quad = -2.0 * st.log_lik - logdet_ - static_cast<double>(2 * dims_.size()) * kLog2Pi;
        st.kappa.set_column(j, new_col);
    }

    std::pair<double, ResidualState> delta_log_likelihood(const ResidualState& st, int j,
                                                          const std::vector<std::uint8_t>& new_col) const {
        ResidualState next = st;
        const double dl = delta(st, j, new_col);
        apply(next, j, new_col);
        return {dl, std::move(next)};
    }

    // Quadratic pseudo-Boolean form of the log-likelihood in column j.
    ColumnCoupling column_coupling(const ResidualState& st, int j) const {
        column_nodes(dims_, j);
        const int m = dims_.rows;
        const Eigen::VectorXd z = st.white * u_.row(j - 1).transpose();
        const Eigen::MatrixXd& h = hjj_[j - 1];
        Eigen::VectorXd xc(m);
        for (int i = 0; i < m; ++i) xc(i) = st.kappa(i + 1, j);
        ColumnCoupling cc;
        cc.column = j;
        cc.h = g_.transpose() * z + h * xc - 0.5 * h.diagonal();
        cc.Q = -h;
        cc.Q.diagonal().setZero();
        return cc;
    }

    // Throws InternalError when the cached value has drifted from a fresh evaluation.
    void audit(const ResidualState& st, const SeismicCube& d, double rel_tol = 1e-8) const {
        const double fresh = log_likelihood(st.kappa, d);
        if (std::abs(fresh - st.log_lik) > rel_tol * std::max(1.0, std::abs(fresh))) {
            throw InternalError("cached log-likelihood " + std::to_string(st.log_lik) + " differs from fresh value " +
                                std::to_string(fresh));
        }
    }

    // Debug output: horizontal eigenvalues and per-block log-determinants.
    void dump_factors(const std::string& path) const {
        std::ofstream os(path);
        os << "k,eigenvalue,logdet\n" << std::setprecision(17);
        for (int k = 0; k < dims_.cols; ++k) {
            Eigen::LLT<Eigen::MatrixXd> llt(eig_h_(k) * signal_ + noise_);
            const Eigen::MatrixXd l = llt.matrixL();
            os << k << ',' << eig_h_(k) << ',' << 2.0 * l.diagonal().array().log().sum() << '\n';
        }
    }

private:
    void check_dims(const GridDims& a, const GridDims& b) const {
        if (!(a == dims_) || !(b == dims_)) throw UsageError("field or data dimensions do not match the likelihood");
    }

    // (row, +1 or -1) for each entry of column j that differs from new_col.
    std::vector<std::pair<int, double>> changed_rows(const ResidualState& st, int j,
                                                     const std::vector<std::uint8_t>& new_col) const {
        column_nodes(dims_, j);
        if (static_cast<int>(new_col.size()) != dims_.rows) throw DomainError("column length mismatch");
        std::vector<std::pair<int, double>> out;
        for (int i = 0; i < dims_.rows; ++i) {
            const int d = static_cast<int>(new_col[i] != 0) - static_cast<int>(st.kappa(i + 1, j));
            if (d != 0) out.emplace_back(i, static_cast<double>(d));
        }
        return out;
    }

    static Eigen::VectorXd sparse_times(const Eigen::MatrixXd& a, const std::vector<std::pair<int, double>>& dx) {
        Eigen::VectorXd y = Eigen::VectorXd::Zero(a.rows());
        for (const auto& [i, v] : dx) y.noalias() += v * a.col(i);
        return y;
    }

    ForwardModel fm_;
    GridDims dims_;
    Eigen::MatrixXd t_;        // column operator W A D
    Eigen::MatrixXd signal_;   // T M T^T
    Eigen::MatrixXd noise_;    // S
    Eigen::VectorXd eig_h_;
    Eigen::MatrixXd u_;
    Eigen::MatrixXd g_;        // 2m x m flip responses
    Eigen::VectorXd b0_;       // all-shale column mean
    std::vector<Eigen::MatrixXd> kinv_;
    std::vector<Eigen::MatrixXd> kinv_g_;
    std::vector<Eigen::MatrixXd> pjj_;  // column diagonal blocks of Cov^{-1}
    std::vector<Eigen::MatrixXd> hjj_;  // G^T P_jj G
    double logdet_ = 0.0;
};

// ---------------------------------------------------------------------------
// Class-dependent covariance, evaluated densely.
//
// Cov(m_ij, m_kl) = corr_v corr_h * R_{kappa_ij} R_{kappa_kl}, R the symmetric
// square root of the class covariance. O((2mn)^3) per evaluation.

class DenseLikelihood {
public:
    DenseLikelihood(const ForwardModel& fm, const GridDims& dims) : fm_(fm), dims_(dims) {
        fm_.validate();
        if (2 * dims.size() > 4000) throw ConfigError("dense likelihood limited to 2000 lattice nodes");
        t_ = column_operator(fm_, dims.rows);
        noise_ = noise_column_cov(fm_.noise, dims.rows);
        root_[0] = sqrt_psd(fm_.stats.sigma0);
        root_[1] = sqrt_psd(fm_.stats.sigma1);
    }

    const GridDims& dims() const noexcept { return dims_; }

    // Mean and covariance in column-major stacking (column, row, component).
    std::pair<Eigen::VectorXd, Eigen::MatrixXd> moments(const LfcField& kappa) const {
        const int m = dims_.rows, n = dims_.cols, mm = 2 * m;
        const Eigen::MatrixXd cv = fm_.stats.corr_v.matrix(m);
        const Eigen::MatrixXd ch = fm_.stats.corr_h.matrix(n);
        Eigen::MatrixXd covm(mm * n, mm * n);
        Eigen::VectorXd mu(mm * n);
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < m; ++i) {
                const std::uint8_t a = kappa(i + 1, j + 1);
                mu.segment<2>(j * mm + 2 * i) = fm_.stats.mean(a);
                for (int l = 0; l < n; ++l)
                    for (int k = 0; k < m; ++k) {
                        const std::uint8_t b = kappa(k + 1, l + 1);
                        covm.block<2, 2>(j * mm + 2 * i, l * mm + 2 * k) = cv(i, k) * ch(j, l) * root_[a] * root_[b];
                    }
            }
        Eigen::MatrixXd tf = Eigen::MatrixXd::Zero(mm * n, mm * n);
        for (int j = 0; j < n; ++j) tf.block(j * mm, j * mm, mm, mm) = t_;
        Eigen::MatrixXd cov = tf * covm * tf.transpose();
        for (int j = 0; j < n; ++j) cov.block(j * mm, j * mm, mm, mm) += noise_;
        return {tf * mu, cov};
    }

    double log_likelihood(const LfcField& kappa, const SeismicCube& d) const {
        if (!(kappa.dims() == dims_) || !(d.dims == dims_)) throw UsageError("dimension mismatch");
        auto [mu, cov] = moments(kappa);
        Eigen::VectorXd y(mu.size());
        for (int j = 1; j <= dims_.cols; ++j) y.segment(2 * dims_.rows * (j - 1), 2 * dims_.rows) = d.column(j);
        Eigen::LLT<Eigen::MatrixXd> llt(cov);
        if (llt.info() != Eigen::Success) throw NumericError("class-dependent data covariance is not positive definite");
        const Eigen::VectorXd r = y - mu;
        const Eigen::VectorXd w = llt.matrixL().solve(r);
        const Eigen::MatrixXd l = llt.matrixL();
        const double logdet = 2.0 * l.diagonal().array().log().sum();
        return -0.5 * (w.squaredNorm() + logdet + static_cast<double>(r.size()) * kLog2Pi);
    }

private:
    ForwardModel fm_;
    GridDims dims_;
    Eigen::MatrixXd t_;
    Eigen::MatrixXd noise_;
    Mat2 root_[2];
};

// ---------------------------------------------------------------------------
// Likelihood adaptors used by the sampler. Each provides init / coupling /
// exact delta / apply / value / audit over its own State type.

struct StructuredLikelihood {
    using State = ResidualState;
    const LikelihoodEngine* engine;
    const SeismicCube* data;

    State init(const LfcField& kappa) const { return engine->init_state(kappa, *data); }
    ColumnCoupling coupling(const State& st, int j) const { return engine->column_coupling(st, j); }
    double delta(const State& st, int j, const std::vector<std::uint8_t>& col) const { return engine->delta(st, j, col); }
    void apply(State& st, int j, const std::vector<std::uint8_t>& col) const { engine->apply(st, j, col); }
    double value(const State& st) const { return st.log_lik; }
    void audit(const State& st) const { engine->audit(st, *data); }
};

// Infinite-noise limit: the data carry no information.
struct FlatLikelihood {
    struct State {
        LfcField kappa;
    };
    State init(const LfcField& kappa) const { return {kappa}; }
    ColumnCoupling coupling(const State& st, int j) const {
        ColumnCoupling cc;
        cc.column = j;
        cc.h = Eigen::VectorXd::Zero(st.kappa.rows());
        cc.Q = Eigen::MatrixXd::Zero(st.kappa.rows(), st.kappa.rows());
        return cc;
    }
    double delta(const State&, int, const std::vector<std::uint8_t>&) const { return 0.0; }
    void apply(State& st, int j, const std::vector<std::uint8_t>& col) const { st.kappa.set_column(j, col); }
    double value(const State&) const { return 0.0; }
    void audit(const State&) const {}
};

// Class-dependent covariance: proposals from a structured engine built with
// the pooled covariance, acceptance from the exact dense density.
struct HeteroscedasticLikelihood {
    struct State {
        ResidualState pooled;
        double log_lik = 0.0;
    };
    const LikelihoodEngine* pooled;
    const DenseLikelihood* exact;
    const SeismicCube* data;

    State init(const LfcField& kappa) const {
        return {pooled->init_state(kappa, *data), exact->log_likelihood(kappa, *data)};
    }
    ColumnCoupling coupling(const State& st, int j) const { return pooled->column_coupling(st.pooled, j); }
    double delta(const State& st, int j, const std::vector<std::uint8_t>& col) const {
        LfcField next = st.pooled.kappa;
        next.set_column(j, col);
        return exact->log_likelihood(next, *data) - st.log_lik;
    }
    void apply(State& st, int j, const std::vector<std::uint8_t>& col) const {
        st.log_lik += delta(st, j, col);
        pooled->apply(st.pooled, j, col);
    }
    double value(const State& st) const { return st.log_lik; }
    void audit(const State& st) const {
        const double fresh = exact->log_likelihood(st.pooled.kappa, *data);
        if (std::abs(fresh - st.log_lik) > 1e-8 * std::max(1.0, std::abs(fresh))) {
            throw InternalError("cached class-dependent log-likelihood drifted");
        }
    }
};

inline ForwardModel pooled_model(ForwardModel fm) {
    const Mat2 avg = 0.5 * (fm.stats.sigma0 + fm.stats.sigma1);
    fm.stats.sigma0 = avg;
    fm.stats.sigma1 = avg;
    return fm;
}

}  // namespace lfc
