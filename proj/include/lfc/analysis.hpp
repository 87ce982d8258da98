#pragma once
// Posterior summaries over a stream of sampled fields.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <iomanip>
#include <ostream>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "lfc/error.hpp"
#include "lfc/lattice.hpp"
#include "lfc/rng.hpp"

namespace lfc {

struct MarginalMap {
    GridDims dims{1, 1};
    std::vector<double> p;  // row-major, sand probability

    double operator()(int i, int j) const { return p[linear_index(dims, {i, j})]; }
    double& operator()(int i, int j) { return p[linear_index(dims, {i, j})]; }
};

inline void require_homogeneous(const std::vector<LfcField>& samples) {
    if (samples.empty()) throw UsageError("empty sample stream");
    for (const auto& s : samples) {
        if (s.dims() != samples.front().dims()) throw UsageError("sample stream has mixed lattice sizes");
    }
}

inline MarginalMap marginal_map(const std::vector<LfcField>& samples) {
    require_homogeneous(samples);
    MarginalMap mm{samples.front().dims(), std::vector<double>(samples.front().size(), 0.0)};
    for (const auto& s : samples) {
        for (std::size_t k = 0; k < mm.p.size(); ++k) mm.p[k] += s.raw(k);
    }
    for (double& v : mm.p) v /= static_cast<double>(samples.size());
    return mm;
}

// Rounds the marginals; p = 0.5 goes to shale.
inline LfcField mode_map(const MarginalMap& mm) {
    LfcField f(mm.dims);
    for (std::size_t k = 0; k < mm.p.size(); ++k) f.set_raw(k, mm.p[k] > 0.5 ? 1 : 0);
    return f;
}

enum class Adjacency { Four, Eight };

// Sand nodes connected to `seed` through sand nodes, in BFS order.
inline std::vector<Node> connected_component(const LfcField& field, Node seed, Adjacency adj = Adjacency::Four) {
    require_inside(field.dims(), seed);
    std::vector<Node> out;
    if (!field(seed.i, seed.j)) return out;
    std::vector<std::uint8_t> seen(field.size(), 0);
    std::deque<Node> queue{seed};
    seen[linear_index(field.dims(), seed)] = 1;
    static const int d4[4][2] = {{-1, 0}, {1, 0}, {0, -1}, {0, 1}};
    static const int d8[8][2] = {{-1, 0}, {1, 0}, {0, -1}, {0, 1}, {-1, -1}, {-1, 1}, {1, -1}, {1, 1}};
    const int nd = adj == Adjacency::Four ? 4 : 8;
    const auto& dirs = adj == Adjacency::Four ? d4 : d8;
    while (!queue.empty()) {
        const Node u = queue.front();
        queue.pop_front();
        out.push_back(u);
        for (int k = 0; k < nd; ++k) {
            const Node v{u.i + dirs[k][0], u.j + dirs[k][1]};
            if (!contains(field.dims(), v) || !field(v.i, v.j)) continue;
            auto& s = seen[linear_index(field.dims(), v)];
            if (!s) {
                s = 1;
                queue.push_back(v);
            }
        }
    }
    return out;
}

// Component label per node (0 for shale) and component sizes (index = label).
inline std::pair<std::vector<int>, std::vector<int>> label_components(const LfcField& field,
                                                                       Adjacency adj = Adjacency::Four) {
    std::vector<int> label(field.size(), 0);
    std::vector<int> sizes{0};
    for (int i = 1; i <= field.rows(); ++i)
        for (int j = 1; j <= field.cols(); ++j) {
            if (!field(i, j) || label[linear_index(field.dims(), {i, j})]) continue;
            const int id = static_cast<int>(sizes.size());
            const auto comp = connected_component(field, {i, j}, adj);
            for (const Node& n : comp) label[linear_index(field.dims(), n)] = id;
            sizes.push_back(static_cast<int>(comp.size()));
        }
    return {label, sizes};
}

inline MarginalMap contact_probability_map(const std::vector<LfcField>& samples, Node seed,
                                           Adjacency adj = Adjacency::Four) {
    require_homogeneous(samples);
    MarginalMap mm{samples.front().dims(), std::vector<double>(samples.front().size(), 0.0)};
    for (const auto& s : samples) {
        for (const Node& n : connected_component(s, seed, adj)) mm.p[linear_index(mm.dims, n)] += 1.0;
    }
    for (double& v : mm.p) v /= static_cast<double>(samples.size());
    return mm;
}

struct ConnectivityCurve {
    std::vector<std::pair<int, double>> points;  // (eta, p), eta = 0, 1, ...
    long pairs = 0;                              // (sample, draw) pairs used
    long skipped = 0;                            // samples without sand
};

// p(eta) = fraction of random sand nodes connected to at least eta other sand
// nodes. draws_per_sample = 0 uses every sand node of every sample.
inline ConnectivityCurve connectivity_curve(const std::vector<LfcField>& samples, std::uint64_t seed,
                                            int draws_per_sample = 1, Adjacency adj = Adjacency::Four) {
    require_homogeneous(samples);
    if (draws_per_sample < 0) throw UsageError("draws_per_sample must be >= 0");
    Rng rng(derive_seed(seed, 20));
    std::vector<int> others;  // component size - 1 per draw
    ConnectivityCurve cc;
    for (const auto& s : samples) {
        const auto [label, sizes] = label_components(s, adj);
        std::vector<std::size_t> sand;
        for (std::size_t k = 0; k < label.size(); ++k) {
            if (label[k]) sand.push_back(k);
        }
        if (sand.empty()) {
            ++cc.skipped;
            continue;
        }
        if (draws_per_sample == 0) {
            for (std::size_t k : sand) others.push_back(sizes[label[k]] - 1);
        } else {
            std::uniform_int_distribution<std::size_t> pick(0, sand.size() - 1);
            for (int d = 0; d < draws_per_sample; ++d) others.push_back(sizes[label[sand[pick(rng)]]] - 1);
        }
    }
    cc.pairs = static_cast<long>(others.size());
    if (others.empty()) return cc;
    const int max_eta = *std::max_element(others.begin(), others.end()) + 1;
    std::vector<long> count(max_eta + 1, 0);
    for (int o : others) ++count[o];
    long at_least = cc.pairs;
    for (int eta = 0; eta <= max_eta; ++eta) {
        cc.points.emplace_back(eta, static_cast<double>(at_least) / static_cast<double>(cc.pairs));
        at_least -= count[eta];
    }
    return cc;
}

// Curve value at eta (0 beyond the last point).
inline double curve_at(const ConnectivityCurve& cc, int eta) {
    if (eta < 0) return 1.0;
    if (eta < static_cast<int>(cc.points.size())) return cc.points[eta].second;
    return 0.0;
}

// Equal-width bins on [0,1]; the last bin is closed.
inline std::vector<long> histogram(const std::vector<double>& values, int bins = 20) {
    if (bins < 1) throw UsageError("histogram needs at least one bin");
    std::vector<long> h(bins, 0);
    for (double v : values) {
        const int b = std::clamp(static_cast<int>(std::floor(v * bins)), 0, bins - 1);
        ++h[b];
    }
    return h;
}

// Fraction of values in [0, 0.05) or (0.95, 1].
inline double outer_mass(const std::vector<double>& values) {
    if (values.empty()) return 0.0;
    long n = 0;
    for (double v : values) n += (v < 0.05 || v > 0.95) ? 1 : 0;
    return static_cast<double>(n) / static_cast<double>(values.size());
}

// Nodes with the k largest marginals, ties broken by row-major order.
inline std::vector<Node> top_marginal_nodes(const MarginalMap& mm, int k) {
    std::vector<std::size_t> idx(mm.p.size());
    for (std::size_t q = 0; q < idx.size(); ++q) idx[q] = q;
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return mm.p[a] > mm.p[b]; });
    std::vector<Node> out;
    for (int q = 0; q < k && q < static_cast<int>(idx.size()); ++q) out.push_back(node_at(mm.dims, idx[q]));
    return out;
}

// ---- writers ----

inline void write_map_csv(std::ostream& os, const MarginalMap& mm) {
    os << std::setprecision(17);
    for (int i = 1; i <= mm.dims.rows; ++i) {
        for (int j = 1; j <= mm.dims.cols; ++j) os << (j > 1 ? "," : "") << mm(i, j);
        os << '\n';
    }
}

// Plain (P2) greymap, probabilities scaled to 0..255.
inline void write_map_pgm(std::ostream& os, const MarginalMap& mm) {
    os << "P2\n" << mm.dims.cols << ' ' << mm.dims.rows << "\n255\n";
    for (int i = 1; i <= mm.dims.rows; ++i) {
        for (int j = 1; j <= mm.dims.cols; ++j) {
            os << (j > 1 ? " " : "") << static_cast<int>(std::lround(std::clamp(mm(i, j), 0.0, 1.0) * 255.0));
        }
        os << '\n';
    }
}

inline void write_curve_csv(std::ostream& os, const ConnectivityCurve& cc) {
    os << "eta,p\n" << std::setprecision(17);
    for (const auto& [eta, p] : cc.points) os << eta << ',' << p << '\n';
}

inline void write_histogram_csv(std::ostream& os, const std::vector<long>& h) {
    const int bins = static_cast<int>(h.size());
    os << "lo,hi,count\n" << std::setprecision(17);
    for (int b = 0; b < bins; ++b) {
        os << static_cast<double>(b) / bins << ',' << static_cast<double>(b + 1) / bins << ',' << h[b] << '\n';
    }
}

// Per-sample indicator profile of column j: one row per sample, one value per row.
inline void write_trace_csv(std::ostream& os, const std::vector<LfcField>& samples, int j) {
    require_homogeneous(samples);
    column_nodes(samples.front().dims(), j);
    const int m = samples.front().rows();
    os << "sample";
    for (int i = 1; i <= m; ++i) os << ",i" << i;
    os << '\n';
    for (std::size_t s = 0; s < samples.size(); ++s) {
        os << s;
        for (int i = 1; i <= m; ++i) os << ',' << static_cast<int>(samples[s](i, j));
        os << '\n';
    }
}

}  // namespace lfc
