#pragma once
// Higher-order binary Markov chains down a lattice column.
//
// A ChainPotential of order r assigns every row i a log-potential over the
// window (x[i-r], ..., x[i]); the unnormalized log-density of a column is the
// sum of those potentials. BinaryChain is the normalized form obtained by a
// backward pass: per row and per r-bit history the probability of a 1, plus
// the log normalizing constant. Rows above the column top are padded with 0,
// and potentials must not depend on padded positions.
//
// Window bit convention: bit b of a window holds x[i-b] (bit 0 is the row
// itself). A history for row i holds x[i-1-b] in bit b, so the window is
// (history << 1) | x[i].

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "lfc/error.hpp"

namespace lfc {

// Maximum number of table entries (rows * 2^(order+1)) a chain may allocate.
inline constexpr std::size_t kChainTableBudget = std::size_t{1} << 25;

inline double log_add_exp(double a, double b) noexcept {
    if (a < b) std::swap(a, b);
    if (b == -INFINITY) return a;
    return a + std::log1p(std::exp(b - a));
}

class ChainPotential {
public:
    ChainPotential() = default;
    ChainPotential(int rows, int order) : rows_(rows), order_(order) {
        if (rows < 1) throw DomainError("chain needs at least one row");
        if (order < 0) throw DomainError("chain order must be non-negative");
        if (order > 30 || static_cast<std::size_t>(rows) * (std::size_t{1} << (order + 1)) > kChainTableBudget) {
            throw ConfigError("chain of order " + std::to_string(order) + " over " + std::to_string(rows) +
                              " rows exceeds the memory budget; use a smaller nu");
        }
        table_.assign(static_cast<std::size_t>(rows) * windows(), 0.0);
    }

    int rows() const noexcept { return rows_; }
    int order() const noexcept { return order_; }
    std::uint32_t windows() const noexcept { return std::uint32_t{1} << (order_ + 1); }

    double& at(int row, std::uint32_t window) noexcept { return table_[row * std::size_t{windows()} + window]; }
    double at(int row, std::uint32_t window) const noexcept {
        return table_[row * std::size_t{windows()} + window];
    }
    const double* row_data(int row) const noexcept { return table_.data() + row * std::size_t{windows()}; }

    // coef * x[row]
    void add_unary(int row, double coef) noexcept {
        for (std::uint32_t w = 1; w < windows(); w += 2) at(row, w) += coef;
    }
    // coef * x[row] * x[row - lag]
    void add_pair(int row, int lag, double coef) {
        if (lag < 1 || lag > order_) throw DomainError("pair lag outside chain order");
        if (row - lag < 0) return;
        const std::uint32_t both = 1u | (1u << lag);
        // supersets of `both`, in increasing order
        for (std::uint32_t w = both; w < windows(); w = (w + 1) | both) at(row, w) += coef;
    }

    // Same potential viewed as a chain of a larger order.
    ChainPotential lifted(int new_order) const {
        if (new_order < order_) throw DomainError("cannot lower chain order");
        ChainPotential out(rows_, new_order);
        const std::uint32_t mask = windows() - 1;
        for (int i = 0; i < rows_; ++i) {
            for (std::uint32_t w = 0; w < out.windows(); ++w) out.at(i, w) = at(i, w & mask);
        }
        return out;
    }

    // Window of row i for a full column configuration, padding with 0 above.
    std::uint32_t window_of(const std::vector<std::uint8_t>& x, int i) const noexcept {
        std::uint32_t w = 0;
        for (int b = 0; b <= order_ && i - b >= 0; ++b) w |= static_cast<std::uint32_t>(x[i - b] & 1u) << b;
        return w;
    }

    // Unnormalized log-density of a column configuration.
    double evaluate(const std::vector<std::uint8_t>& x) const {
        if (static_cast<int>(x.size()) != rows_) throw DomainError("configuration length mismatch");
        double s = 0.0;
        for (int i = 0; i < rows_; ++i) s += at(i, window_of(x, i));
        return s;
    }

private:
    int rows_ = 0;
    int order_ = 0;
    std::vector<double> table_;
};

class BinaryChain {
public:
    BinaryChain() = default;

    explicit BinaryChain(const ChainPotential& phi) : rows_(phi.rows()), order_(phi.order()) {
        const std::uint32_t histories = std::uint32_t{1} << order_;
        const std::uint32_t mask = histories - 1;
        log_p1_.assign(static_cast<std::size_t>(rows_) * histories, 0.0);
        log_p0_.assign(static_cast<std::size_t>(rows_) * histories, 0.0);

        // next[s] = log sum over rows i..m-1 given history s for row i
        std::vector<double> next(histories, 0.0), cur(histories, 0.0);
        for (int i = rows_ - 1; i >= 0; --i) {
            const double* row = phi.row_data(i);
            double* lp1 = log_p1_.data() + static_cast<std::size_t>(i) * histories;
            double* lp0 = log_p0_.data() + static_cast<std::size_t>(i) * histories;
            for (std::uint32_t s = 0; s < histories; ++s) {
                const std::uint32_t w0 = s << 1, w1 = w0 | 1u;
                const double a0 = row[w0] + next[w0 & mask];
                const double a1 = row[w1] + next[w1 & mask];
                const double tot = log_add_exp(a0, a1);
                cur[s] = tot;
                if (tot == -INFINITY) {  // unreachable history
                    lp0[s] = 0.0;
                    lp1[s] = -INFINITY;
                } else {
                    lp0[s] = a0 - tot;
                    lp1[s] = a1 - tot;
                }
            }
            std::swap(next, cur);
        }
        log_norm_ = next[0];
        if (!std::isfinite(log_norm_)) throw NumericError("column chain normalizer is not finite");
    }

    int rows() const noexcept { return rows_; }
    int order() const noexcept { return order_; }
    double log_normalizer() const noexcept { return log_norm_; }

    double prob_one(int row, std::uint32_t history) const noexcept {
        return std::exp(log_p1_[static_cast<std::size_t>(row) * (std::size_t{1} << order_) + history]);
    }

    double log_prob(const std::vector<std::uint8_t>& x) const {
        if (static_cast<int>(x.size()) != rows_) throw DomainError("configuration length mismatch");
        const std::uint32_t mask = (std::uint32_t{1} << order_) - 1;
        const std::size_t histories = std::size_t{1} << order_;
        std::uint32_t s = 0;
        double lp = 0.0;
        for (int i = 0; i < rows_; ++i) {
            const std::size_t k = static_cast<std::size_t>(i) * histories + s;
            lp += x[i] ? log_p1_[k] : log_p0_[k];
            s = ((s << 1) | (x[i] & 1u)) & mask;
        }
        return lp;
    }

    // Draws a configuration; returns its log-probability through `log_q`.
    template <class URBG>
    std::vector<std::uint8_t> sample(URBG& rng, double* log_q = nullptr) const {
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        const std::uint32_t mask = (std::uint32_t{1} << order_) - 1;
        const std::size_t histories = std::size_t{1} << order_;
        std::vector<std::uint8_t> x(rows_);
        std::uint32_t s = 0;
        double lp = 0.0;
        for (int i = 0; i < rows_; ++i) {
            const std::size_t k = static_cast<std::size_t>(i) * histories + s;
            const double u = unif(rng);
            const std::uint8_t v = u < std::exp(log_p1_[k]) ? 1 : 0;
            lp += v ? log_p1_[k] : log_p0_[k];
            x[i] = v;
            s = ((s << 1) | v) & mask;
        }
        if (log_q) *log_q = lp;
        return x;
    }

private:
    int rows_ = 0;
    int order_ = 0;
    std::vector<double> log_p1_;
    std::vector<double> log_p0_;
    double log_norm_ = 0.0;
};

}  // namespace lfc
