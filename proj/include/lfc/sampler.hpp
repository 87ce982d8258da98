#pragma once
// Column-block Metropolis-Hastings for p(kappa | d).
//
// Each update proposes a whole column from p*_nu: the exact prior column
// conditional plus the likelihood's unary terms and those pairwise terms
// whose rows are at most nu apart. p*_nu is a binary Markov chain of order
// max(prior order, nu) and is sampled exactly; the MH ratio uses the exact
// prior and likelihood, so the truncation only affects efficiency.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "lfc/chain.hpp"
#include "lfc/error.hpp"
#include "lfc/lattice.hpp"
#include "lfc/likelihood.hpp"
#include "lfc/rng.hpp"

namespace lfc {

enum class ScanOrder { Systematic, RandomPermutation };

// Treatment of likelihood couplings beyond lag nu in the proposal.
//   Drop:      discarded.
//   Linearize: Q_ik x_i x_k is replaced by its first-order expansion around
//              an anchor column (the current state for the forward move, the
//              proposed state for the reverse density). The proposal then
//              depends on the current state, so the MH ratio uses a second
//              chain built around the proposal.
enum class TailMode { Drop, Linearize };

struct SamplerConfig {
    int nu = 4;
    int sweeps = 1000;
    int burn_in = 200;
    int thin = 1;
    std::uint64_t seed = 1;
    ScanOrder scan = ScanOrder::Systematic;
    TailMode tail = TailMode::Drop;
    int audit_every = 0;  // sweeps between cache audits, 0 = never

    void validate() const {
        if (nu < 0) throw ConfigError("nu must be >= 0");
        if (thin < 1) throw ConfigError("thin must be >= 1");
        if (burn_in < 0) throw ConfigError("burn_in must be >= 0");
        if (!(sweeps > burn_in)) throw ConfigError("sweeps must exceed burn_in");
    }
};

// Concept-style requirements on priors and likelihoods used below.
template <class P>
concept ColumnPrior = requires(const P& p, const LfcField& f, int j, Rng& rng) {
    { p.column_potential(f, j) } -> std::same_as<ChainPotential>;
    { p.log_prior(f) } -> std::convertible_to<double>;
    { p.sample(f.dims(), rng) } -> std::same_as<LfcField>;
    { p.order() } -> std::convertible_to<int>;
};

template <class L>
concept ColumnLikelihood = requires(const L& l, typename L::State& st, const LfcField& f, int j,
                                    const std::vector<std::uint8_t>& col) {
    { l.init(f) } -> std::same_as<typename L::State>;
    { l.coupling(st, j) } -> std::same_as<ColumnCoupling>;
    { l.delta(st, j, col) } -> std::convertible_to<double>;
    l.apply(st, j, col);
    { l.value(st) } -> std::convertible_to<double>;
};

// p*_nu for one column.
struct ProposalChain {
    ChainPotential potential;
    BinaryChain chain;

    int order() const noexcept { return chain.order(); }
    template <class URBG>
    std::vector<std::uint8_t> sample(URBG& rng, double* log_q) const {
        return chain.sample(rng, log_q);
    }
    double log_q(const std::vector<std::uint8_t>& x) const { return chain.log_prob(x); }
};

inline int proposal_order(int prior_order, int nu, int m) { return std::max(prior_order, std::min(nu, m - 1)); }

// `anchor`, when given, linearizes the couplings beyond lag nu around it.
inline ProposalChain build_proposal(const ChainPotential& prior_column, const ColumnCoupling& coupling, int nu,
                                    const std::vector<std::uint8_t>* anchor = nullptr) {
    if (nu < 0) throw ConfigError("nu must be >= 0");
    const int m = prior_column.rows();
    if (coupling.h.size() != m) throw DomainError("coupling and prior column lengths differ");
    if (anchor && static_cast<int>(anchor->size()) != m) throw DomainError("anchor column length mismatch");
    const int order = proposal_order(prior_column.order(), nu, m);
    if (static_cast<double>(m) * std::ldexp(1.0, order + 1) > static_cast<double>(kChainTableBudget)) {
        throw ConfigError("proposal chain of order " + std::to_string(order) +
                          " exceeds the table budget; use a smaller nu");
    }
    ChainPotential phi = prior_column.lifted(order);
    for (int i = 0; i < m; ++i) {
        double u = coupling.h(i);
        if (anchor) {
            for (int k = 0; k < m; ++k) {
                if (std::abs(i - k) > nu && (*anchor)[k]) u += coupling.Q(i, k);
            }
        }
        phi.add_unary(i, u);
        for (int lag = 1; lag <= std::min(nu, i); ++lag) {
            const double q = coupling.Q(i - lag, i);
            if (q != 0.0) phi.add_pair(i, lag, q);
        }
    }
    BinaryChain chain(phi);
    return {std::move(phi), std::move(chain)};
}

template <class Likelihood>
struct ChainState {
    LfcField kappa;
    double log_prior = 0.0;
    typename Likelihood::State lik;
    long iteration = 0;  // column updates performed
    std::vector<long> proposed;  // per column
    std::vector<long> accepted;
};

template <class Prior, class Likelihood>
ChainState<Likelihood> make_state(const Prior& prior, const Likelihood& lik, LfcField kappa) {
    ChainState<Likelihood> st;
    st.log_prior = prior.log_prior(kappa);
    st.lik = lik.init(kappa);
    st.proposed.assign(kappa.cols(), 0);
    st.accepted.assign(kappa.cols(), 0);
    st.kappa = std::move(kappa);
    return st;
}

struct UpdateResult {
    bool accepted = false;
    double log_alpha = 0.0;
};

// Priors whose log_prior is an exact joint log-density (flagged by a static
// kExactJoint member) update it by the column potential difference; others
// are recomputed.
template <class Prior>
inline constexpr bool kExactJointPrior = requires { requires Prior::kExactJoint; };

template <class Prior, class Likelihood, class URBG>
UpdateResult mh_column_update(ChainState<Likelihood>& st, int j, const Prior& prior, const Likelihood& lik,
                              int nu, URBG& rng, TailMode tail = TailMode::Drop) {
    const ChainPotential prior_col = prior.column_potential(st.kappa, j);
    const ColumnCoupling cc = lik.coupling(st.lik, j);
    const std::vector<std::uint8_t> old_col = st.kappa.column(j);
    const bool linearize = tail == TailMode::Linearize;
    const ProposalChain prop = build_proposal(prior_col, cc, nu, linearize ? &old_col : nullptr);

    double log_q_new = 0.0;
    std::vector<std::uint8_t> new_col = prop.sample(rng, &log_q_new);
    double log_q_old = 0.0;
    if (linearize && new_col != old_col) {
        log_q_old = build_proposal(prior_col, cc, nu, &new_col).log_q(old_col);
    } else {
        log_q_old = prop.log_q(old_col);
    }

    const double d_prior = prior_col.evaluate(new_col) - prior_col.evaluate(old_col);
    const double d_lik = lik.delta(st.lik, j, new_col);
    UpdateResult res;
    res.log_alpha = d_prior + d_lik + log_q_old - log_q_new;

    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double u = unif(rng);
    ++st.iteration;
    ++st.proposed[j - 1];
    if (res.log_alpha >= 0.0 || std::log(u) < res.log_alpha) {
        res.accepted = true;
        ++st.accepted[j - 1];
        if (new_col != old_col) {
            lik.apply(st.lik, j, new_col);
            st.kappa.set_column(j, new_col);
            if constexpr (kExactJointPrior<Prior>) {
                st.log_prior += d_prior;
            } else {
                st.log_prior = prior.log_prior(st.kappa);
            }
        }
    }
    return res;
}

struct TraceRow {
    long sweep = 0;
    double log_prior = 0.0;
    double log_lik = 0.0;
    double acceptance = 0.0;  // fraction of column updates accepted in this sweep
};

struct RunDiagnostics {
    std::vector<TraceRow> trace;
    std::vector<double> column_acceptance;  // per column, over all sweeps
    double mean_acceptance = 0.0;
    double geweke_z = 0.0;  // first 10% vs last 50% of post burn-in log-posterior
};

// Batch-means estimate of the variance of the mean of a correlated series.
inline double batch_means_variance(const std::vector<double>& x) {
    const std::size_t n = x.size();
    if (n < 4) return 0.0;
    const std::size_t b = std::max<std::size_t>(2, static_cast<std::size_t>(std::sqrt(static_cast<double>(n))));
    const std::size_t nb = n / b;
    if (nb < 2) return 0.0;
    std::vector<double> means(nb);
    for (std::size_t k = 0; k < nb; ++k) {
        means[k] = std::accumulate(x.begin() + k * b, x.begin() + (k + 1) * b, 0.0) / static_cast<double>(b);
    }
    const double mu = std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(nb);
    double v = 0.0;
    for (double m : means) v += (m - mu) * (m - mu);
    v /= static_cast<double>(nb - 1);
    return v / static_cast<double>(nb);
}

inline double geweke_z(const std::vector<double>& x, double first = 0.1, double last = 0.5) {
    const std::size_t n = x.size();
    const std::size_t na = static_cast<std::size_t>(first * n), nb = static_cast<std::size_t>(last * n);
    if (na < 4 || nb < 4) return 0.0;
    const std::vector<double> a(x.begin(), x.begin() + na), b(x.end() - nb, x.end());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / na;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / nb;
    const double v = batch_means_variance(a) + batch_means_variance(b);
    if (v <= 0.0) return ma == mb ? 0.0 : INFINITY;
    return (ma - mb) / std::sqrt(v);
}

// Runs one chain. `on_sample(sweep, field)` receives every thin-th post
// burn-in field. The chain starts from a prior draw.
template <class Prior, class Likelihood>
RunDiagnostics run(const SamplerConfig& cfg, const Prior& prior, const Likelihood& lik, const GridDims& dims,
                   const std::function<void(long, const LfcField&)>& on_sample, const LfcField* initial = nullptr) {
    cfg.validate();
    Rng init_rng(derive_seed(cfg.seed, 10));
    Rng rng(derive_seed(cfg.seed, 11));
    ChainState<Likelihood> st = make_state(prior, lik, initial ? *initial : prior.sample(dims, init_rng));

    RunDiagnostics diag;
    std::vector<int> order(dims.cols);
    std::iota(order.begin(), order.end(), 1);
    for (long sweep = 1; sweep <= cfg.sweeps; ++sweep) {
        if (cfg.scan == ScanOrder::RandomPermutation) std::shuffle(order.begin(), order.end(), rng);
        int acc = 0;
        for (int j : order) acc += mh_column_update(st, j, prior, lik, cfg.nu, rng, cfg.tail).accepted ? 1 : 0;
        if (cfg.audit_every > 0 && sweep % cfg.audit_every == 0) {
            lik.audit(st.lik);
            const double fresh = prior.log_prior(st.kappa);
            if (std::abs(fresh - st.log_prior) > 1e-8 * std::max(1.0, std::abs(fresh))) {
                throw InternalError("cached log-prior drifted from a fresh evaluation");
            }
        }
        diag.trace.push_back({sweep, st.log_prior, lik.value(st.lik), static_cast<double>(acc) / dims.cols});
        if (sweep > cfg.burn_in && (sweep - cfg.burn_in) % cfg.thin == 0 && on_sample) on_sample(sweep, st.kappa);
    }
    diag.column_acceptance.resize(dims.cols);
    long acc_all = 0, prop_all = 0;
    for (int j = 0; j < dims.cols; ++j) {
        diag.column_acceptance[j] = st.proposed[j] ? static_cast<double>(st.accepted[j]) / st.proposed[j] : 0.0;
        acc_all += st.accepted[j];
        prop_all += st.proposed[j];
    }
    diag.mean_acceptance = prop_all ? static_cast<double>(acc_all) / prop_all : 0.0;
    std::vector<double> post;
    for (const auto& row : diag.trace) {
        if (row.sweep > cfg.burn_in) post.push_back(row.log_prior + row.log_lik);
    }
    diag.geweke_z = geweke_z(post);
    return diag;
}

struct TuneRow {
    int nu = 0;
    double mean_acceptance = 0.0;
};

// Short preliminary runs over candidate nu values. The selected nu is the
// smallest reaching `target` mean acceptance, else the best one.
template <class Prior, class Likelihood>
std::pair<int, std::vector<TuneRow>> tune_nu(const SamplerConfig& base, const Prior& prior, const Likelihood& lik,
                                              const GridDims& dims, const std::vector<int>& candidates = {2, 4, 6, 8},
                                              int sweeps = 40, double target = 0.3) {
    std::vector<TuneRow> rows;
    int chosen = -1, best = candidates.empty() ? base.nu : candidates.front();
    double best_acc = -1.0;
    for (int nu : candidates) {
        SamplerConfig cfg = base;
        cfg.nu = nu;
        cfg.sweeps = sweeps;
        cfg.burn_in = sweeps / 2;
        cfg.thin = 1;
        const RunDiagnostics d = run(cfg, prior, lik, dims, nullptr);
        rows.push_back({nu, d.mean_acceptance});
        if (chosen < 0 && d.mean_acceptance >= target) chosen = nu;
        if (d.mean_acceptance > best_acc) {
            best_acc = d.mean_acceptance;
            best = nu;
        }
    }
    return {chosen >= 0 ? chosen : best, rows};
}

}  // namespace lfc
