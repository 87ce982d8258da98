#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "lfc/chain.hpp"
#include "lfc/lattice.hpp"

using namespace lfc;

TEST(Lattice, DimensionsMustBePositive) {
    EXPECT_THROW(GridDims(0, 3), DomainError);
    EXPECT_THROW(GridDims(3, -1), DomainError);
    EXPECT_EQ(GridDims(105, 51).size(), 5355u);
}

TEST(Lattice, RowMajorIndexRoundTrip) {
    const GridDims d(4, 7);
    EXPECT_EQ(linear_index(d, {1, 1}), 0u);
    EXPECT_EQ(linear_index(d, {2, 1}), 7u);
    EXPECT_EQ(linear_index(d, {4, 7}), 27u);
    for (std::size_t k = 0; k < d.size(); ++k) EXPECT_EQ(linear_index(d, node_at(d, k)), k);
}

TEST(Lattice, PredecessorsAreEarlierNodes) {
    const GridDims d(3, 3);
    EXPECT_TRUE(predecessor_set(d, {1, 1}).empty());
    const auto p = predecessor_set(d, {2, 2});
    ASSERT_EQ(p.size(), 4u);
    EXPECT_EQ(p.back(), (Node{2, 1}));
    EXPECT_THROW(predecessor_set(d, {4, 1}), DomainError);
}

TEST(Lattice, TemplateTranslationClipsToLattice) {
    const GridDims d(5, 5);
    const std::vector<CellOffset> tau{{-1, 0}, {0, -1}, {-1, 2}};
    EXPECT_TRUE(translate_template(tau, {1, 1}, d).empty());
    const auto u = translate_template(tau, {2, 4}, d);
    ASSERT_EQ(u.size(), 2u);
    EXPECT_EQ(u[0], (Node{1, 4}));
    EXPECT_EQ(u[1], (Node{2, 3}));
}

TEST(Lattice, FieldAccessAndBounds) {
    LfcField f(GridDims(2, 3));
    f.set({2, 3}, 1);
    EXPECT_EQ(f(2, 3), 1);
    EXPECT_EQ(f.raw(5), 1);
    EXPECT_EQ(f.value_or_shale(0, 1), 0);
    EXPECT_EQ(f.value_or_shale(2, 4), 0);
    EXPECT_THROW(f.at({3, 1}), DomainError);
    EXPECT_THROW(f.set({1, 1}, 2), DomainError);
    EXPECT_THROW(LfcField(GridDims(2, 2), std::vector<std::uint8_t>{0, 1, 0}), DomainError);
    EXPECT_THROW(f.column(4), DomainError);
    f.set_column(1, {1, 1});
    EXPECT_EQ(f.count_sand(), 3u);
}

TEST(Lattice, FieldFileRoundTrip) {
    LfcField f(GridDims(3, 4));
    f.set({1, 2}, 1);
    f.set({3, 4}, 1);
    std::istringstream is(to_string(f));
    EXPECT_EQ(read_field(is), f);
    std::istringstream bad("2 2\n0 1\n1 3\n");
    EXPECT_THROW(read_field(bad), ConfigError);
    std::istringstream truncated("2 2\n0 1\n");
    EXPECT_THROW(read_field(truncated), ConfigError);
}

namespace {

ChainPotential random_potential(int rows, int order, std::mt19937_64& rng) {
    std::normal_distribution<double> z(0.0, 1.5);
    ChainPotential phi(rows, order);
    for (int i = 0; i < rows; ++i)
        for (std::uint32_t w = 0; w < phi.windows(); ++w) phi.at(i, w) = z(rng);
    return phi;
}

std::vector<std::uint8_t> column_of(unsigned k, int rows) {
    std::vector<std::uint8_t> x(rows);
    for (int i = 0; i < rows; ++i) x[i] = (k >> i) & 1u;
    return x;
}

}  // namespace

class ChainBruteForce : public ::testing::TestWithParam<int> {};

TEST_P(ChainBruteForce, LogProbMatchesNormalizedEnumeration) {
    const int order = GetParam(), rows = 8;
    std::mt19937_64 rng(100 + order);
    const ChainPotential phi = random_potential(rows, order, rng);
    const BinaryChain chain(phi);
    double z = 0.0;
    std::vector<double> w(1u << rows);
    for (unsigned k = 0; k < w.size(); ++k) z += (w[k] = std::exp(phi.evaluate(column_of(k, rows))));
    EXPECT_NEAR(chain.log_normalizer(), std::log(z), 1e-10);
    for (unsigned k = 0; k < w.size(); ++k) EXPECT_NEAR(chain.log_prob(column_of(k, rows)), std::log(w[k] / z), 1e-10);
}

INSTANTIATE_TEST_SUITE_P(Orders, ChainBruteForce, ::testing::Range(0, 8));

TEST(Chain, SamplerFrequenciesMatchLaw) {
    const int rows = 4;
    std::mt19937_64 rng(7);
    const ChainPotential phi = random_potential(rows, 2, rng);
    const BinaryChain chain(phi);
    std::vector<long> hits(1u << rows, 0);
    const int draws = 200000;
    for (int t = 0; t < draws; ++t) {
        double lq = 0.0;
        const auto x = chain.sample(rng, &lq);
        EXPECT_NEAR(lq, chain.log_prob(x), 1e-12);
        unsigned k = 0;
        for (int i = 0; i < rows; ++i) k |= static_cast<unsigned>(x[i]) << i;
        ++hits[k];
    }
    for (unsigned k = 0; k < hits.size(); ++k) {
        const double p = std::exp(chain.log_prob(column_of(k, rows)));
        const double se = std::sqrt(p * (1 - p) / draws);
        EXPECT_NEAR(static_cast<double>(hits[k]) / draws, p, 5 * se + 1e-4);
    }
}

TEST(Chain, PairAndUnaryTermsEvaluate) {
    ChainPotential phi(5, 3);
    phi.add_unary(2, 0.7);
    phi.add_pair(4, 3, -1.25);
    phi.add_pair(1, 2, 9.0);  // reaches above row 0: ignored
    EXPECT_DOUBLE_EQ(phi.evaluate({0, 0, 1, 0, 0}), 0.7);
    EXPECT_DOUBLE_EQ(phi.evaluate({0, 1, 1, 0, 1}), 0.7 - 1.25);
    EXPECT_DOUBLE_EQ(phi.evaluate({1, 1, 0, 0, 1}), -1.25);
    EXPECT_THROW(phi.add_pair(4, 4, 1.0), DomainError);
}

TEST(Chain, LiftingPreservesTheLaw) {
    std::mt19937_64 rng(3);
    const ChainPotential phi = random_potential(6, 1, rng);
    const ChainPotential big = phi.lifted(4);
    for (unsigned k = 0; k < 64; ++k) EXPECT_DOUBLE_EQ(phi.evaluate(column_of(k, 6)), big.evaluate(column_of(k, 6)));
    EXPECT_THROW(phi.lifted(0), DomainError);
}

TEST(Chain, ImpossibleStatesHaveZeroProbability) {
    ChainPotential phi(3, 1);
    for (int i = 0; i < 3; ++i) phi.at(i, 1) = -INFINITY;  // x_i = 1 forbidden after a 0
    phi.at(0, 3) = -INFINITY;
    const BinaryChain chain(phi);
    EXPECT_NEAR(chain.log_prob({0, 0, 0}), 0.0, 1e-12);
    EXPECT_EQ(chain.log_prob({0, 1, 0}), -INFINITY);
}

TEST(Chain, TableBudgetIsEnforced) { EXPECT_THROW(ChainPotential(200, 28), ConfigError); }
